//! Machine-readable failures and exit codes.

use std::path::Path;

use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_TOLERANCE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub code: String,
    pub message: String,
    pub exit: i32,
}

pub type Outcome<T> = std::result::Result<T, Failure>;

impl Failure {
    pub fn config(message: impl Into<String>) -> Self {
        Failure { code: "config".into(), message: message.into(), exit: EXIT_USAGE }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        Failure {
            code: "io".into(),
            message: format!("{}: {err}", path.display()),
            exit: EXIT_USAGE,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&serde_json::json!({ "error": self })).expect("failure serializes")
    }
}

impl From<siolab::Error> for Failure {
    fn from(e: siolab::Error) -> Self {
        use siolab::Error::*;
        let exit = match e {
            NonConvergence { .. } | UnreliableEstimate { .. } | Resolution(_) | Shrink { .. } => EXIT_NONCONVERGENCE,
            _ => EXIT_USAGE,
        };
        Failure { code: e.code().into(), message: e.to_string(), exit }
    }
}
