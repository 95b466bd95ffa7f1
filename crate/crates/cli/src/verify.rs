//! Re-checks a report from the files alone: witnesses are re-evaluated,
//! never searched for again.

use serde::Serialize;
use serde_json::{json, Value};

use siolab::forms::{Factor2Report, NormEstimate};
use siolab::kernels::{materialize, materialize_masked};
use siolab::mollifiers::{fit_slope, schur_bound, MomentReport, SchurBound};
use siolab::muckenhoupt::{MuckenhouptReport, NecessityReport};
use siolab::splitter::{verify_partition, PartitionCheck, SeparatedPartition};
use siolab::truncation::TruncationReport;
use siolab::Measure;

use crate::commands::{effective_kernel, generated_measures, read_partition, sample_rho, Report, Run};
use crate::config::{parse_mollifier, ExperimentConfig};
use crate::fail::{Failure, Outcome};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

fn check(name: &str, ok: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), ok, detail: detail.into() }
}

fn field<T: serde::de::DeserializeOwned>(v: &Value, path: &[&str]) -> Outcome<T> {
    let mut cur = v;
    for key in path {
        cur = cur
            .get(key)
            .ok_or_else(|| Failure::config(format!("report lacks {}", path.join("."))))?;
    }
    serde_json::from_value(cur.clone()).map_err(|e| Failure::config(format!("report field {}: {e}", path.join("."))))
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()) + 1e-12
}

/// Relative agreement demanded between a stored norm and its re-evaluated witness.
const WITNESS_TOL: f64 = 1e-8;

fn witness_check(name: &str, est: &NormEstimate<f64>, again: f64) -> Check {
    check(
        name,
        close(est.value, again, WITNESS_TOL),
        format!("stored {} re-evaluated {again}", est.value),
    )
}

fn measures(cfg: &ExperimentConfig) -> Outcome<(Measure, Measure)> {
    let run = Run::build(cfg)?;
    Ok((run.mu, run.nu))
}

fn verify_inner(command: &str, cfg: &ExperimentConfig, result: &Value, passed: bool) -> Outcome<Vec<Check>> {
    let mut out = Vec::new();
    match command {
        "schur-bound" => {
            let stored: SchurBound = field(result, &["bound"])?;
            let m = parse_mollifier(cfg.mollifier.as_deref().unwrap_or_default(), cfg.dimension.unwrap_or(1))?;
            let again = schur_bound(&m, stored.grid)?;
            out.push(check("bound", again.bound == stored.bound, format!("{} vs {}", stored.bound, again.bound)));
        }
        "moment-order" => {
            let r: MomentReport = field(result, &["report"])?;
            let slope = fit_slope(&r.samples);
            out.push(check("slope", close(slope, r.fitted_slope, 1e-12), format!("{slope}")));
            let name: String = field(result, &["rho"])?;
            let rho = sample_rho(&name)?;
            let mass = rho.values.iter().sum::<f64>() * rho.spacing;
            out.push(check("mass", close(mass, r.mass, 1e-12), format!("{mass}")));
        }
        "restricted-norm" => {
            let est: NormEstimate<f64> = field(result, &["estimate"])?;
            let (mu, nu) = measures(cfg)?;
            let m = materialize_masked(&effective_kernel(cfg)?, &mu, &nu)?;
            out.push(witness_check("witness", &est, est.reevaluate(&m, &mu, &nu)));
        }
        "opnorm" => {
            let est: NormEstimate<f64> = field(result, &["estimate"])?;
            let (mu, nu) = measures(cfg)?;
            let m = materialize(&effective_kernel(cfg)?, &mu, &nu, None)?;
            out.push(witness_check("witness", &est, est.reevaluate(&m, &mu, &nu)));
        }
        "factor2" => {
            let r: Factor2Report<f64> = field(result, &["report"])?;
            let (mu, nu) = measures(cfg)?;
            let k = effective_kernel(cfg)?;
            let masked = materialize_masked(&k, &mu, &nu)?;
            let full = materialize(&k, &mu, &nu, None)?;
            out.push(witness_check("restricted_witness", &r.restricted, r.restricted.reevaluate(&masked, &mu, &nu)));
            out.push(witness_check("operator_witness", &r.operator, r.operator.reevaluate(&full, &mu, &nu)));
            let holds = r.operator.value <= 2.0 * r.restricted.value * (1.0 + 1e-9) + 1e-12;
            out.push(check("factor2", holds && holds == r.holds, format!("ratio {:?}", r.ratio)));
        }
        "split" | "split-verify" => {
            let stored: PartitionCheck = field(result, &["check"])?;
            let part: SeparatedPartition<f64> = if command == "split" {
                field(result, &["partition"])?
            } else {
                read_partition(cfg.input.as_deref().unwrap_or_default())?
            };
            let again = verify_partition(&part);
            out.push(check("partition", again.passed(), format!("{again:?}")));
            out.push(check("stored_check", again == stored, "stored check matches"));
        }
        "truncate-compare" => {
            let r: TruncationReport = field(result, &["report"])?;
            for c in &r.comparisons {
                let name = format!("eps={}", c.eps);
                let ok = c.split_mismatches == 0
                    && c.psi_dominated
                    && c.norm_truncated <= c.norm_smooth + c.norm_psi_part + 1e-9 * c.norm_truncated.max(1.0)
                    && c.triangle_holds;
                out.push(check(&name, ok, format!("{c:?}")));
            }
        }
        "muckenhoupt" => {
            let r: MuckenhouptReport<f64> = field(result, &["report"])?;
            let (mu, nu) = measures(cfg)?;
            let again = r.reevaluate(&mu, &nu);
            out.push(check("witness_ball", close(again, r.constant, 1e-12), format!("{} vs {again}", r.constant)));
        }
        "necessity" => {
            let r: NecessityReport = field(result, &["report"])?;
            for e in &r.results {
                let ok = e.violations == 0 && e.balls.iter().all(|b| b.measured >= b.lower_chain * (1.0 - 1e-12));
                out.push(check(&format!("eps={}", e.eps), ok, format!("{} pairs", e.pairs_checked)));
            }
        }
        "generate-measure" => {
            let stored: Vec<siolab::measure::MeasureFile<f64>> = field(result, &["measures"])?;
            let again = generated_measures(cfg)?;
            let same = serde_json::to_string(&stored).ok() == serde_json::to_string(&again).ok();
            out.push(check("regenerated", same, format!("{} measure(s)", stored.len())));
            for (i, f) in stored.into_iter().enumerate() {
                let ok = Measure::from_file(f).is_ok();
                out.push(check(&format!("measure_{i}"), ok, "valid measure file"));
            }
        }
        other => return Err(Failure::config(format!("cannot verify reports of {other:?}"))),
    }
    out.push(check("stored_passed", passed, "report recorded passed = true"));
    Ok(out)
}

pub fn verify_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let input = cfg.input.as_deref().ok_or_else(|| Failure::config("missing input report"))?;
    let text = std::fs::read_to_string(input).map_err(|e| Failure::io(std::path::Path::new(input), e))?;
    let report: Value = serde_json::from_str(&text).map_err(|e| Failure::config(format!("{input}: {e}")))?;
    let command: String = field(&report, &["command"])?;
    let inner: ExperimentConfig = field(&report, &["config"])?;
    let passed: bool = field(&report, &["passed"])?;
    let result = report.get("result").cloned().unwrap_or(Value::Null);
    let checks = verify_inner(&command, &inner, &result, passed)?;
    Ok(Report {
        command: "verify".into(),
        config: cfg.clone(),
        passed: checks.iter().all(|c| c.ok),
        result: json!({ "verified_command": command, "checks": checks }),
        table: None,
    })
}
