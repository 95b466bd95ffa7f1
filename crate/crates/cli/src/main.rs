//! `siolab`: reproducible experiment runner.
//!
//! Every subcommand reads an optional JSON config (`--config`), overlays the
//! flags given on the command line, runs, and writes a JSON report that
//! carries the resolved config. Exit codes: 0 ok, 1 a tolerance check
//! failed, 2 usage or input error, 3 numerical non-convergence.

mod commands;
mod config;
mod fail;
mod verify;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{Map, Value};

use commands::Report;
use config::{finish, normalize_measures, read_config, ExperimentConfig, MeasureSpec, RadiiConfig};
use fail::{Failure, Outcome, EXIT_OK, EXIT_TOLERANCE, EXIT_USAGE};

#[derive(Parser, Debug)]
#[command(name = "siolab", version, about = "Experiments on singular integral operators over discrete measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Certified Schur multiplier bound of a mollifier
    SchurBound(Flags),
    /// Vanishing order of 1 - rho_hat from the moments of rho
    MomentOrder(Flags),
    /// Restricted norm (exact enumeration or heuristic)
    RestrictedNorm(Flags),
    /// Operator norm on L^p
    Opnorm(Flags),
    /// Operator norm against twice the restricted norm
    Factor2(Flags),
    /// Separated partition of a measure
    Split(Flags),
    /// Re-check a partition file
    SplitVerify(Flags),
    /// Hard truncations against smooth ones
    TruncateCompare(Flags),
    /// Two-weight A_p^alpha constant
    Muckenhoupt(Flags),
    /// Lower-bound chain for homogeneous kernels
    Necessity(Flags),
    /// Write measures from a generator
    GenerateMeasure(Flags),
    /// Re-verify a report from its files
    Verify(Flags),
}

#[derive(clap::Args, Debug, Default)]
struct Flags {
    /// Mollifier for schur-bound; input file for split-verify and verify
    target: Option<String>,
    /// JSON config file; flags override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// hilbert | cauchy | ahlfors_beurling | riesz:alpha=A,n=N | constant:c=C,n=N | exp_decay:n=N
    #[arg(long)]
    kernel: Option<String>,
    /// gaussian | complex_shift | identity | annulus:delta=D | power:base=gaussian,k=K
    #[arg(long)]
    mollifier: Option<String>,
    /// Measure: a file (path or path#k) or kind:key=value,... with kind one of
    /// lebesgue_grid, random_atoms, interleaved_grids, ball_uniform
    #[arg(long, alias = "measure")]
    mu: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated list
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    level: Option<u32>,
    #[arg(long)]
    tau: Option<f64>,
    /// restricted-norm: exact | heuristic; necessity: full | pointwise
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    dimension: Option<usize>,
    /// moment-order density: gaussian | exponential
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    order: Option<u32>,
    #[arg(long)]
    grid_half_width: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    /// min,max[,ratio]
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Sampled pairs per ball in the necessity experiment
    #[arg(long)]
    pairs: Option<usize>,
    /// Random cuts tried by the restricted-norm heuristic
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    input: Option<String>,
    /// Report path (stdout if absent)
    #[arg(long)]
    output: Option<String>,
    /// CSV table path, for commands with tabular output
    #[arg(long)]
    csv: Option<String>,
}

fn put<T: serde::Serialize>(map: &mut Map<String, Value>, key: &str, v: &Option<T>) {
    if let Some(v) = v {
        map.insert(key.into(), serde_json::to_value(v).expect("flag serializes"));
    }
}

fn resolve(name: &str, flags: &Flags) -> Outcome<ExperimentConfig> {
    let mut value = match &flags.config {
        Some(path) => read_config(path)?,
        None => Value::Object(Map::new()),
    };
    let map = value.as_object_mut().expect("config is an object");
    if let Some(Value::String(c)) = map.get("command") {
        if c != name {
            return Err(Failure::config(format!("config is for {c:?}, invoked as {name:?}")));
        }
    }
    map.insert("command".into(), Value::String(name.into()));
    if let Some(t) = &flags.target {
        let key = match name {
            "schur-bound" => "mollifier",
            "split-verify" | "verify" => "input",
            _ => return Err(Failure::config(format!("{name} takes no positional argument"))),
        };
        map.insert(key.into(), Value::String(t.clone()));
    }
    put(map, "seed", &flags.seed);
    put(map, "kernel", &flags.kernel);
    put(map, "mollifier", &flags.mollifier);
    for (key, text) in [("mu", &flags.mu), ("nu", &flags.nu)] {
        if let Some(t) = text {
            map.insert(key.into(), serde_json::to_value(MeasureSpec::parse(t)?).expect("spec serializes"));
        }
    }
    put(map, "p", &flags.p);
    put(map, "alpha", &flags.alpha);
    put(map, "eps", &flags.eps);
    put(map, "delta", &flags.delta);
    put(map, "level", &flags.level);
    put(map, "tau", &flags.tau);
    put(map, "mode", &flags.mode);
    put(map, "dimension", &flags.dimension);
    put(map, "rho", &flags.rho);
    put(map, "order", &flags.order);
    put(map, "pairs", &flags.pairs);
    put(map, "trials", &flags.trials);
    put(map, "input", &flags.input);
    put(map, "output", &flags.output);
    put(map, "csv", &flags.csv);
    if flags.grid_half_width.is_some() || flags.grid_points.is_some() {
        let grid = map.entry("grid").or_insert_with(|| Value::Object(Map::new()));
        let g = grid.as_object_mut().ok_or_else(|| Failure::config("grid must be an object"))?;
        put(g, "half_width", &flags.grid_half_width);
        put(g, "points", &flags.grid_points);
    }
    if let Some(r) = &flags.radii {
        let radii = match r.as_slice() {
            [min, max] => RadiiConfig { min: *min, max: *max, ratio: std::f64::consts::SQRT_2 },
            [min, max, ratio] => RadiiConfig { min: *min, max: *max, ratio: *ratio },
            _ => return Err(Failure::config("radii takes min,max[,ratio]")),
        };
        map.insert("radii".into(), serde_json::to_value(radii).expect("radii serialize"));
    }
    normalize_measures(&mut value)?;
    finish(value)
}

fn dispatch(name: &str, cfg: &ExperimentConfig) -> Outcome<Report> {
    match name {
        "schur-bound" => commands::schur_bound_cmd(cfg),
        "moment-order" => commands::moment_order_cmd(cfg),
        "restricted-norm" => commands::restricted_norm_cmd(cfg),
        "opnorm" => commands::opnorm_cmd(cfg),
        "factor2" => commands::factor2_cmd(cfg),
        "split" => commands::split_cmd(cfg),
        "split-verify" => commands::split_verify_cmd(cfg),
        "truncate-compare" => commands::truncate_compare_cmd(cfg),
        "muckenhoupt" => commands::muckenhoupt_cmd(cfg),
        "necessity" => commands::necessity_cmd(cfg),
        "generate-measure" => commands::generate_measure_cmd(cfg),
        "verify" => verify::verify_cmd(cfg),
        other => Err(Failure::config(format!("unknown command {other:?}"))),
    }
}

fn write_file(path: &str, text: &str) -> Outcome<()> {
    fs::write(path, text).map_err(|e| Failure::io(Path::new(path), e))
}

fn emit(report: &Report) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    match &report.config.output {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    if let (Some(path), Some(table)) = (&report.config.csv, &report.table) {
        let mut w = csv::Writer::from_path(path).map_err(|e| Failure::config(format!("{path}: {e}")))?;
        let csv_err = |e: csv::Error| Failure::config(format!("{path}: {e}"));
        w.write_record(&table.header).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Failure::io(Path::new(path), e))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome<i32> {
    let (name, flags) = match &cli.command {
        Command::SchurBound(f) => ("schur-bound", f),
        Command::MomentOrder(f) => ("moment-order", f),
        Command::RestrictedNorm(f) => ("restricted-norm", f),
        Command::Opnorm(f) => ("opnorm", f),
        Command::Factor2(f) => ("factor2", f),
        Command::Split(f) => ("split", f),
        Command::SplitVerify(f) => ("split-verify", f),
        Command::TruncateCompare(f) => ("truncate-compare", f),
        Command::Muckenhoupt(f) => ("muckenhoupt", f),
        Command::Necessity(f) => ("necessity", f),
        Command::GenerateMeasure(f) => ("generate-measure", f),
        Command::Verify(f) => ("verify", f),
    };
    let cfg = resolve(name, flags)?;
    let report = dispatch(name, &cfg)?;
    emit(&report)?;
    Ok(if report.passed { EXIT_OK } else { EXIT_TOLERANCE })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help, --version
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let f = Failure { code: "usage".into(), message: e.to_string().trim_end().into(), exit: EXIT_USAGE };
            eprintln!("{}", f.to_json());
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.exit as u8)
        }
    }
}
