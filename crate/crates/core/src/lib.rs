//! Numerical laboratory for singular integral operators on discrete measures:
//! mollifying Schur multipliers, restricted and operator norms, separated
//! dyadic partitions, truncations, and two-weight Muckenhoupt constants.
//!
//! Everything is generic over the scalar type ([`Real`], implemented for
//! `f32` and `f64`). The aliases below fix `f64`, which the command line
//! tool uses throughout.

pub mod error;
pub mod forms;
pub mod kernels;
pub mod measure;
pub mod muckenhoupt;
pub mod mollifiers;
pub mod scalar;
pub mod smooth;
pub mod splitter;
pub mod truncation;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Measure = measure::DiscreteMeasure<f64>;
pub type Kernel = kernels::KernelSpec<f64>;
pub type Matrix = kernels::KernelMatrix<f64>;
pub type Mollifier = mollifiers::Mollifier<f64>;
pub type Multiplier = mollifiers::Multiplier<f64>;

pub type Measure32 = measure::DiscreteMeasure<f32>;
pub type Kernel32 = kernels::KernelSpec<f32>;
pub type Matrix32 = kernels::KernelMatrix<f32>;
