//! One function per subcommand. Each returns a [`Report`]; nothing here
//! writes files.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use siolab::forms::{
    factor2_check, operator_norm_p, operator_norm_p2, restricted_norm_exact, restricted_norm_heuristic, NormOptions,
    SolverOptions,
};
use siolab::kernels::materialize;
use siolab::measure::MeasureFile;
use siolab::mollifiers::{moment_order, scale, schur_bound, GriddedFunction, MomentTolerances};
use siolab::muckenhoupt::{ap_alpha_constant, necessity_experiment, BallScan, NecessityOptions};
use siolab::splitter::{atom_aware_partition, build_partition, verify_partition, SeparatedPartition, DEFAULT_TAU};
use siolab::truncation::compare_truncations;
use siolab::{Kernel, Measure};

use crate::config::{parse_mollifier, ExperimentConfig, MeasureSpec};
use crate::fail::{Failure, Outcome};

/// Rows of an optional CSV side table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub config: ExperimentConfig,
    /// Every built-in tolerance check of the command held.
    pub passed: bool,
    pub result: Value,
    #[serde(skip)]
    pub table: Option<Table>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values serialize")
}

fn fmt(x: f64) -> String {
    format!("{x}")
}

/// Measures and derived seeds of one run. The generator is consumed in a
/// fixed order: `mu`, `nu`, then the solver and search seeds.
pub struct Run {
    pub mu: Measure,
    pub nu: Measure,
    pub solver: SolverOptions,
    pub norm: NormOptions,
    pub search_seed: u64,
}

impl Run {
    pub fn build(cfg: &ExperimentConfig) -> Outcome<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mu = cfg.require_mu()?.build(&mut rng)?;
        let nu = match &cfg.nu {
            Some(spec) => spec.build(&mut rng)?,
            None => mu.clone(),
        };
        let solver = SolverOptions { seed: rng.next_u64(), ..SolverOptions::default() };
        let mut norm = NormOptions { solver, seed: rng.next_u64(), ..NormOptions::default() };
        if let Some(t) = cfg.trials {
            norm.trials = t;
        }
        let search_seed = rng.next_u64();
        Ok(Run { mu, nu, solver, norm, search_seed })
    }
}

/// The kernel, times `M_eps` when a mollifier and an `eps` are configured.
pub fn effective_kernel(cfg: &ExperimentConfig) -> Outcome<Kernel> {
    let k = cfg.require_kernel()?;
    match (&cfg.mollifier, cfg.eps.first()) {
        (Some(m), Some(&eps)) => {
            let m = parse_mollifier(m, k.dimension)?;
            Ok(scale(&m, eps)?.apply(&k)?)
        }
        (Some(_), None) => Err(Failure::config("a mollifier needs an eps")),
        _ => Ok(k),
    }
}

pub fn schur_bound_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let name = cfg.mollifier.as_deref().ok_or_else(|| Failure::config("missing mollifier"))?;
    let dimension = cfg.dimension.unwrap_or(1);
    let m = parse_mollifier(name, dimension)?;
    let grid = cfg.wiener_grid(dimension, m.scale);
    let b = schur_bound(&m, grid)?;
    Ok(Report {
        command: "schur-bound".into(),
        config: cfg.clone(),
        passed: true,
        result: json!({ "mollifier": m.name, "dimension": dimension, "bound": to_value(&b) }),
        table: None,
    })
}

/// Sampled densities: `gaussian` (standard normal) and `exponential`
/// (one-sided `e^{-x}` on `x > 0`).
pub fn sample_rho(name: &str) -> Outcome<GriddedFunction<f64>> {
    let g = match name {
        "gaussian" => GriddedFunction::sample(vec![-20.0], 1e-2, 4000, |x: &[f64]| {
            (-x[0] * x[0] / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })?,
        "exponential" => {
            let h = 1e-3;
            GriddedFunction::sample(vec![0.5 * h], h, 40_000, |x: &[f64]| (-x[0]).exp())?
        }
        other => return Err(Failure::config(format!("unknown density {other:?}"))),
    };
    Ok(g)
}

pub fn moment_order_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let name = cfg.rho.as_deref().unwrap_or("gaussian");
    let rho = sample_rho(name)?;
    let r = moment_order(&rho, cfg.order.unwrap_or(2), MomentTolerances::default())?;
    Ok(Report {
        command: "moment-order".into(),
        config: cfg.clone(),
        passed: r.consistent,
        result: json!({ "rho": name, "report": to_value(&r) }),
        table: None,
    })
}

pub fn restricted_norm_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let k = effective_kernel(cfg)?;
    let run = Run::build(cfg)?;
    let points = run.mu.len() + run.nu.len();
    let mode = match cfg.mode.as_deref() {
        Some("exact") => "exact",
        Some("heuristic") => "heuristic",
        None if points <= run.norm.cap => "exact",
        None => "heuristic",
        Some(other) => return Err(Failure::config(format!("mode must be exact or heuristic, got {other:?}"))),
    };
    let est = if mode == "exact" {
        restricted_norm_exact(&k, &run.mu, &run.nu, cfg.p(), &run.norm)?
    } else {
        restricted_norm_heuristic(&k, &run.mu, &run.nu, cfg.p(), &run.norm)?
    };
    Ok(Report {
        command: "restricted-norm".into(),
        config: cfg.clone(),
        passed: true,
        result: json!({ "mode": mode, "kernel": k.name, "estimate": to_value(&est) }),
        table: None,
    })
}

pub fn opnorm_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let k = effective_kernel(cfg)?;
    let run = Run::build(cfg)?;
    let m = materialize(&k, &run.mu, &run.nu, None)?;
    let p = cfg.p();
    let est = if p == 2.0 {
        operator_norm_p2(&m, &run.mu, &run.nu, &run.solver)?
    } else {
        operator_norm_p(&m, &run.mu, &run.nu, p, &run.solver)?
    };
    Ok(Report {
        command: "opnorm".into(),
        config: cfg.clone(),
        passed: true,
        result: json!({ "kernel": k.name, "estimate": to_value(&est) }),
        table: None,
    })
}

pub fn factor2_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let k = effective_kernel(cfg)?;
    let run = Run::build(cfg)?;
    let r = factor2_check(&k, &run.mu, &run.nu, cfg.p(), &run.norm)?;
    Ok(Report {
        command: "factor2".into(),
        config: cfg.clone(),
        passed: r.holds,
        result: json!({ "kernel": k.name, "report": to_value(&r) }),
        table: None,
    })
}

fn balance_table(part: &SeparatedPartition<f64>) -> Table {
    let mut t = Table::new(&["cube", "mass", "e1", "e2", "deviation_e1", "deviation_e2"]);
    for row in &part.balance {
        let cube: Vec<String> = row.cube.iter().map(|c| c.to_string()).collect();
        t.rows.push(vec![
            cube.join(";"),
            fmt(row.mass),
            fmt(row.e1),
            fmt(row.e2),
            fmt(row.deviation[0]),
            fmt(row.deviation[1]),
        ]);
    }
    t
}

pub fn split_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let run = Run::build(cfg)?;
    let level = cfg.level.unwrap_or(3);
    let tau = cfg.tau.unwrap_or(DEFAULT_TAU);
    let part = match cfg.nu {
        Some(_) => atom_aware_partition(&run.mu, &run.nu, level, tau)?,
        None => build_partition(&run.mu, level, tau)?,
    };
    let check = verify_partition(&part);
    Ok(Report {
        command: "split".into(),
        config: cfg.clone(),
        passed: check.passed(),
        table: Some(balance_table(&part)),
        result: json!({ "partition": to_value(&part), "check": to_value(&check) }),
    })
}

/// A partition from a `split` report or a bare partition file.
pub fn read_partition(path: &str) -> Outcome<SeparatedPartition<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::io(std::path::Path::new(path), e))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| Failure::config(format!("{path}: {e}")))?;
    let inner = v.get("result").and_then(|r| r.get("partition")).cloned().unwrap_or(v);
    serde_json::from_value(inner).map_err(|e| Failure::config(format!("{path}: not a partition: {e}")))
}

pub fn split_verify_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let input = cfg.input.as_deref().ok_or_else(|| Failure::config("missing input partition file"))?;
    let part = read_partition(input)?;
    let check = verify_partition(&part);
    Ok(Report {
        command: "split-verify".into(),
        config: cfg.clone(),
        passed: check.passed(),
        result: json!({ "level": part.level, "check": to_value(&check) }),
        table: None,
    })
}

fn require_eps(cfg: &ExperimentConfig) -> Outcome<Vec<f64>> {
    if cfg.eps.is_empty() {
        return Err(Failure::config("missing eps grid"));
    }
    Ok(cfg.eps.clone())
}

pub fn truncate_compare_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let k = cfg.require_kernel()?;
    let run = Run::build(cfg)?;
    let eps = require_eps(cfg)?;
    let r = compare_truncations(&k, &run.mu, &run.nu, &eps, cfg.delta.unwrap_or(0.1), &run.solver)?;
    let passed = r
        .comparisons
        .iter()
        .all(|c| c.split_mismatches == 0 && c.psi_dominated && c.triangle_holds && c.bound_holds != Some(false));
    let mut t = Table::new(&[
        "eps",
        "norm_truncated",
        "norm_smooth",
        "norm_psi_part",
        "norm_sectorial",
        "sectorial_bound",
        "annulus_pairs",
        "split_mismatches",
    ]);
    let opt = |x: Option<f64>| x.map(fmt).unwrap_or_default();
    for c in &r.comparisons {
        t.rows.push(vec![
            fmt(c.eps),
            fmt(c.norm_truncated),
            fmt(c.norm_smooth),
            fmt(c.norm_psi_part),
            opt(c.norm_sectorial),
            opt(c.sectorial_bound),
            c.annulus_pairs.to_string(),
            c.split_mismatches.to_string(),
        ]);
    }
    Ok(Report {
        command: "truncate-compare".into(),
        config: cfg.clone(),
        passed,
        result: json!({ "kernel": k.name, "report": to_value(&r) }),
        table: Some(t),
    })
}

pub fn ball_scan(cfg: &ExperimentConfig, mu: &Measure, nu: &Measure) -> Outcome<BallScan<f64>> {
    let mut scan = BallScan::default_for(mu, nu);
    if let Some(r) = &cfg.radii {
        if !(r.min > 0.0 && r.max >= r.min && r.ratio > 1.0) {
            return Err(Failure::config("radii need 0 < min <= max and ratio > 1"));
        }
        scan.radii.clear();
        let mut x = r.min;
        while x <= r.max * (1.0 + 1e-12) {
            scan.radii.push(x);
            x *= r.ratio;
        }
    }
    Ok(scan)
}

pub fn muckenhoupt_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let run = Run::build(cfg)?;
    let scan = ball_scan(cfg, &run.mu, &run.nu)?;
    let r = ap_alpha_constant(&run.mu, &run.nu, cfg.p(), cfg.alpha.unwrap_or(1.0), &scan)?;
    Ok(Report {
        command: "muckenhoupt".into(),
        config: cfg.clone(),
        passed: true,
        result: json!({
            "header": "balls are open; diam B = 2 * radius",
            "report": to_value(&r),
        }),
        table: None,
    })
}

pub fn necessity_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let k = cfg.require_kernel()?;
    let run = Run::build(cfg)?;
    let eps = require_eps(cfg)?;
    let alpha = cfg
        .alpha
        .or_else(|| k.profile.as_ref().map(|p| p.degree))
        .ok_or_else(|| Failure::config("missing alpha"))?;
    let restricted = match cfg.mode.as_deref() {
        None | Some("full") => true,
        Some("pointwise") => false,
        Some(other) => return Err(Failure::config(format!("mode must be full or pointwise, got {other:?}"))),
    };
    let opts = NecessityOptions {
        centers: None,
        pairs_per_ball: cfg.pairs.unwrap_or(1000),
        seed: run.search_seed,
        norm: run.norm,
        restricted,
    };
    let r = necessity_experiment(&k, &run.mu, &run.nu, cfg.p(), alpha, &eps, &opts)?;
    let passed = r.results.iter().all(|e| e.violations == 0 && e.balls.iter().all(|b| b.chain_holds));
    let mut t = Table::new(&[
        "eps", "center", "mu_mass", "nu_mass", "pairs", "violations", "min_ratio", "ap_value", "measured", "lower_chain",
    ]);
    for e in &r.results {
        for b in &e.balls {
            let c: Vec<String> = b.center.iter().map(|x| fmt(*x)).collect();
            t.rows.push(vec![
                fmt(e.eps),
                c.join(";"),
                fmt(b.mu_mass),
                fmt(b.nu_mass),
                b.pairs_checked.to_string(),
                b.violations.to_string(),
                b.min_ratio.map(fmt).unwrap_or_default(),
                fmt(b.ap_value),
                fmt(b.measured),
                fmt(b.lower_chain),
            ]);
        }
    }
    Ok(Report {
        command: "necessity".into(),
        config: cfg.clone(),
        passed,
        result: json!({ "kernel": k.name, "header": "ball values use the radius eps", "report": to_value(&r) }),
        table: Some(t),
    })
}

/// Measures described by the config, as files. An `interleaved_grids` spec
/// for `mu` alone yields both grids.
pub fn generated_measures(cfg: &ExperimentConfig) -> Outcome<Vec<MeasureFile<f64>>> {
    let mut cfg = cfg.clone();
    if cfg.nu.is_none() {
        if let Some(MeasureSpec::InterleavedGrids { dimension, lo, hi, h, .. }) = cfg.mu.clone() {
            cfg.mu = Some(MeasureSpec::InterleavedGrids { dimension, lo, hi, h, part: 0 });
            cfg.nu = Some(MeasureSpec::InterleavedGrids { dimension, lo, hi, h, part: 1 });
        }
    }
    let run = Run::build(&cfg)?;
    let mut out = vec![run.mu.to_file()];
    if cfg.nu.is_some() {
        out.push(run.nu.to_file());
    }
    Ok(out)
}

pub fn generate_measure_cmd(cfg: &ExperimentConfig) -> Outcome<Report> {
    let files = generated_measures(cfg)?;
    let summary: Vec<Value> = files
        .iter()
        .map(|f| json!({ "points": f.points.len(), "total_mass": f.weights.iter().sum::<f64>() }))
        .collect();
    Ok(Report {
        command: "generate-measure".into(),
        config: cfg.clone(),
        passed: true,
        result: json!({ "summary": summary, "measures": to_value(&files) }),
        table: None,
    })
}
