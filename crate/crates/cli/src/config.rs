//! Experiment configuration: JSON file merged with command-line flags.

use std::fs;
use std::path::Path;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use siolab::kernels::{make_ahlfors_beurling, make_cauchy, make_hilbert, make_riesz_generalized, KernelSpec};
use siolab::measure::generators::{ball_uniform, interleaved_grids, lebesgue_grid, random_atoms};
use siolab::mollifiers::{
    complex_shift_mollifier, gaussian_mollifier, identity_mollifier, multiplier_power, smooth_annulus_mollifier,
    WienerGrid,
};
use siolab::{Kernel, Measure};

use crate::fail::{Failure, Outcome};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
}

/// Geometric radius grid for ball scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    pub min: f64,
    pub max: f64,
    #[serde(default = "sqrt2")]
    pub ratio: f64,
}

fn sqrt2() -> f64 {
    std::f64::consts::SQRT_2
}

/// Measure source. In flags and config files a string form is also accepted:
/// `kind:key=value,...` for generators (vectors separated by `;`), otherwise
/// a file path, optionally `path#k` to pick the `k`-th measure of a
/// `generate-measure` report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    File {
        path: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
    },
    LebesgueGrid {
        dimension: usize,
        lo: f64,
        hi: f64,
        h: f64,
    },
    RandomAtoms {
        n: usize,
        dimension: usize,
        #[serde(default)]
        lo: f64,
        #[serde(default = "one")]
        hi: f64,
    },
    /// `part` 0 gives cell centers, 1 cell corners.
    InterleavedGrids {
        dimension: usize,
        lo: f64,
        hi: f64,
        h: f64,
        #[serde(default)]
        part: usize,
    },
    BallUniform {
        center: Vec<f64>,
        radius: f64,
        h: f64,
        #[serde(default = "one")]
        mass: f64,
    },
}

fn one() -> f64 {
    1.0
}

const GENERATORS: [&str; 4] = ["lebesgue_grid", "random_atoms", "interleaved_grids", "ball_uniform"];

fn parse_scalar(v: &str) -> Value {
    if v.contains(';') {
        return Value::Array(v.split(';').map(parse_scalar).collect());
    }
    if let Ok(i) = v.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(x) = v.parse::<f64>() {
        return Value::from(x);
    }
    Value::String(v.to_string())
}

/// `name:key=value,key=value` into the name and a JSON object.
pub fn parse_keyed(text: &str) -> Outcome<(String, Map<String, Value>)> {
    let (name, rest) = match text.split_once(':') {
        Some((n, r)) => (n.trim(), r),
        None => (text.trim(), ""),
    };
    let mut map = Map::new();
    for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("expected key=value in {text:?}, got {item:?}")))?;
        map.insert(k.trim().to_string(), parse_scalar(v.trim()));
    }
    Ok((name.to_string(), map))
}

impl MeasureSpec {
    pub fn parse(text: &str) -> Outcome<Self> {
        let head = text.split(':').next().unwrap_or("");
        if GENERATORS.contains(&head) {
            let (name, mut map) = parse_keyed(text)?;
            if let Some(Value::Number(c)) = map.get("center").cloned() {
                map.insert("center".into(), Value::Array(vec![Value::Number(c)]));
            }
            map.insert("kind".into(), Value::String(name));
            return serde_json::from_value(Value::Object(map))
                .map_err(|e| Failure::config(format!("measure {text:?}: {e}")));
        }
        let (path, index) = match text.rsplit_once('#') {
            Some((p, i)) => (
                p.to_string(),
                Some(i.parse().map_err(|_| Failure::config(format!("bad measure index in {text:?}")))?),
            ),
            None => (text.to_string(), None),
        };
        Ok(MeasureSpec::File { path, index })
    }

    /// Ambient dimension, when known without building the measure.
    pub fn dimension(&self) -> Option<usize> {
        match self {
            MeasureSpec::File { .. } => None,
            MeasureSpec::LebesgueGrid { dimension, .. }
            | MeasureSpec::RandomAtoms { dimension, .. }
            | MeasureSpec::InterleavedGrids { dimension, .. } => Some(*dimension),
            MeasureSpec::BallUniform { center, .. } => Some(center.len()),
        }
    }

    /// Builds the measure; random generators draw from the run's generator.
    pub fn build(&self, rng: &mut ChaCha8Rng) -> Outcome<Measure> {
        Ok(match self {
            MeasureSpec::File { path, index } => load_measure(Path::new(path), *index)?,
            MeasureSpec::LebesgueGrid { dimension, lo, hi, h } => lebesgue_grid(*dimension, *lo, *hi, *h)?,
            MeasureSpec::RandomAtoms { n, dimension, lo, hi } => random_atoms(*n, *dimension, *lo, *hi, rng)?,
            MeasureSpec::InterleavedGrids { dimension, lo, hi, h, part } => {
                let (a, b) = interleaved_grids(*dimension, *lo, *hi, *h)?;
                match part {
                    0 => a,
                    1 => b,
                    _ => return Err(Failure::config("interleaved_grids part must be 0 or 1")),
                }
            }
            MeasureSpec::BallUniform { center, radius, h, mass } => ball_uniform(center, *radius, *h, *mass)?,
        })
    }
}

fn load_measure(path: &Path, index: Option<usize>) -> Outcome<Measure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    let entry = match value.get("result").and_then(|r| r.get("measures")) {
        Some(Value::Array(list)) => {
            let i = index.unwrap_or(0);
            if index.is_none() && list.len() != 1 {
                return Err(Failure::config(format!(
                    "{} holds {} measures; select one with #k",
                    path.display(),
                    list.len()
                )));
            }
            list.get(i)
                .cloned()
                .ok_or_else(|| Failure::config(format!("{} has no measure #{i}", path.display())))?
        }
        _ => value,
    };
    let file = serde_json::from_value(entry).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    Ok(Measure::from_file(file)?)
}

/// Fully resolved experiment configuration; embedded in every report.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mollifier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<MeasureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<MeasureSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub eps: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<RadiiConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<String>,
}

/// Reads a config file, with measure specs allowed in string form.
pub fn read_config(path: &Path) -> Outcome<Value> {
    let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
    let mut value: Value =
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    if !value.is_object() {
        return Err(Failure::config(format!("{}: config must be a JSON object", path.display())));
    }
    normalize_measures(&mut value)?;
    Ok(value)
}

pub fn normalize_measures(value: &mut Value) -> Outcome<()> {
    for key in ["mu", "nu"] {
        if let Some(Value::String(s)) = value.get(key).cloned() {
            value[key] = serde_json::to_value(MeasureSpec::parse(&s)?).expect("measure spec serializes");
        }
    }
    Ok(())
}

pub fn finish(value: Value) -> Outcome<ExperimentConfig> {
    serde_json::from_value(value).map_err(|e| Failure::config(format!("config: {e}")))
}

impl ExperimentConfig {
    pub fn p(&self) -> f64 {
        self.p.unwrap_or(2.0)
    }

    pub fn require_kernel(&self) -> Outcome<Kernel> {
        let name = self.kernel.as_deref().ok_or_else(|| Failure::config("missing kernel"))?;
        let from_measure = self.mu.as_ref().and_then(MeasureSpec::dimension);
        parse_kernel(name, self.dimension.or(from_measure))
    }

    pub fn require_mu(&self) -> Outcome<&MeasureSpec> {
        self.mu.as_ref().ok_or_else(|| Failure::config("missing measure mu"))
    }

    pub fn wiener_grid(&self, dimension: usize, scale: f64) -> Option<WienerGrid> {
        let g = self.grid.as_ref()?;
        let d = WienerGrid::default_for(dimension, scale);
        Some(WienerGrid {
            half_width: g.half_width.unwrap_or(d.half_width),
            points: g.points.unwrap_or(d.points),
        })
    }
}

fn get_f64(map: &Map<String, Value>, key: &str) -> Outcome<Option<f64>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Failure::config(format!("{key} must be a number"))),
    }
}

fn get_usize(map: &Map<String, Value>, key: &str) -> Outcome<Option<usize>> {
    match map.get(key) {
        None => Ok(None),
        Some(v) => v
            .as_u64()
            .map(|x| Some(x as usize))
            .ok_or_else(|| Failure::config(format!("{key} must be a nonnegative integer"))),
    }
}

fn no_extra(map: &Map<String, Value>, allowed: &[&str], what: &str) -> Outcome<()> {
    match map.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Failure::config(format!("unknown parameter {k:?} for {what}"))),
        None => Ok(()),
    }
}

/// `hilbert | cauchy | ahlfors_beurling | riesz:alpha=..,n=.. | constant:c=..,n=..`
/// and the bounded test kernel `exp_decay:n=..` (`e^{-|s-t|}`).
pub fn parse_kernel(text: &str, dimension: Option<usize>) -> Outcome<Kernel> {
    let (name, map) = parse_keyed(text)?;
    let k = match name.as_str() {
        "hilbert" => {
            no_extra(&map, &[], "hilbert")?;
            make_hilbert()
        }
        "cauchy" => {
            no_extra(&map, &[], "cauchy")?;
            make_cauchy()
        }
        "ahlfors_beurling" => {
            no_extra(&map, &[], "ahlfors_beurling")?;
            make_ahlfors_beurling()
        }
        "riesz" => {
            no_extra(&map, &["alpha", "n"], "riesz")?;
            let alpha = get_f64(&map, "alpha")?.ok_or_else(|| Failure::config("riesz needs alpha"))?;
            let n = get_usize(&map, "n")?.or(dimension).unwrap_or(2);
            make_riesz_generalized(alpha, n)?
        }
        "constant" => {
            no_extra(&map, &["c", "n"], "constant")?;
            let c = get_f64(&map, "c")?.unwrap_or(1.0);
            KernelSpec::constant(get_usize(&map, "n")?.or(dimension).unwrap_or(1), c)
        }
        "exp_decay" => {
            no_extra(&map, &["n"], "exp_decay")?;
            let n = get_usize(&map, "n")?.or(dimension).unwrap_or(1);
            KernelSpec::bounded("exp_decay", n, |s: &[f64], t: &[f64]| (-siolab::scalar::dist(s, t)).exp())
        }
        other => return Err(Failure::config(format!("unknown kernel {other:?}"))),
    };
    Ok(k)
}

/// `gaussian | complex_shift | identity | annulus:delta=.. | power:base=..,k=..`
/// (`base` is `gaussian` or `annulus`, with `delta` for the latter).
pub fn parse_mollifier(text: &str, dimension: usize) -> Outcome<siolab::Mollifier> {
    let (name, map) = parse_keyed(text)?;
    let m = match name.as_str() {
        "gaussian" => {
            no_extra(&map, &[], "gaussian")?;
            gaussian_mollifier(dimension)?
        }
        "complex_shift" => {
            no_extra(&map, &[], "complex_shift")?;
            if dimension != 1 {
                return Err(Failure::config("complex_shift lives on the line"));
            }
            complex_shift_mollifier()
        }
        "identity" => {
            no_extra(&map, &[], "identity")?;
            identity_mollifier(dimension)?
        }
        "annulus" => {
            no_extra(&map, &["delta"], "annulus")?;
            smooth_annulus_mollifier(get_f64(&map, "delta")?.unwrap_or(0.1), dimension)?
        }
        "power" => {
            no_extra(&map, &["base", "k", "delta"], "power")?;
            let k = get_usize(&map, "k")?.ok_or_else(|| Failure::config("power needs k"))? as u32;
            let base = match map.get("base").and_then(Value::as_str).unwrap_or("gaussian") {
                "gaussian" => gaussian_mollifier(dimension)?,
                "annulus" => smooth_annulus_mollifier(get_f64(&map, "delta")?.unwrap_or(0.1), dimension)?,
                other => return Err(Failure::config(format!("unknown power base {other:?}"))),
            };
            multiplier_power(&base, k)?
        }
        other => return Err(Failure::config(format!("unknown mollifier {other:?}"))),
    };
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_strings() {
        assert_eq!(
            MeasureSpec::parse("lebesgue_grid:dimension=1,lo=0,hi=1,h=0.015625").unwrap(),
            MeasureSpec::LebesgueGrid { dimension: 1, lo: 0.0, hi: 1.0, h: 0.015625 }
        );
        assert_eq!(
            MeasureSpec::parse("ball_uniform:center=0;0,radius=0.25,h=0.05").unwrap(),
            MeasureSpec::BallUniform { center: vec![0.0, 0.0], radius: 0.25, h: 0.05, mass: 1.0 }
        );
        assert_eq!(
            MeasureSpec::parse("out/m.json#1").unwrap(),
            MeasureSpec::File { path: "out/m.json".into(), index: Some(1) }
        );
        assert!(MeasureSpec::parse("lebesgue_grid:dimension=1,lo=0").is_err());
    }

    #[test]
    fn kernel_and_mollifier_strings() {
        assert_eq!(parse_kernel("riesz:alpha=0.5,n=3", None).unwrap().dimension, 3);
        assert!(parse_kernel("riesz:beta=1", None).is_err());
        assert!(parse_kernel("nope", None).is_err());
        assert!(parse_mollifier("power:base=gaussian,k=2", 1).unwrap().power_of.is_some());
        assert!(parse_mollifier("complex_shift", 2).is_err());
    }
}
