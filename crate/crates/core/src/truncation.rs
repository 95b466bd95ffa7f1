//! Hard truncations `1_{|s-t| > eps} K`, sectorial multipliers, and the
//! comparison between hard and smooth truncations.
//!
//! With `m` the smooth annulus profile (0 below `1 - delta`, 1 from 1 on)
//! the kernel splits as
//!
//! ```text
//! m(|s-t|/eps) K = 1_{|s-t| > eps} K + psi(|s-t|/eps) K,   psi = m - 1_{(1, inf)},
//! ```
//!
//! and `psi` lives on `[1 - delta, 1]`. The truncation ball is closed, so the
//! indicator is taken on the open half-line.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{operator_norm_p2, SolverOptions};
use crate::kernels::{materialize, materialize_masked, Diagonal, KernelMatrix, KernelSpec, SphereFn, ValueKind};
use crate::measure::{common_atoms, DiscreteMeasure};
use crate::mollifiers::{scale, smooth_annulus_mollifier, wiener_norm, Multiplier, WienerGrid};
use crate::scalar::{dist, dot, norm2, Real};
use crate::smooth::Bump;

fn check_eps<T: Real>(eps: T) -> Result<()> {
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    Ok(())
}

/// `K` on `|s - t| > eps`, zero on the closed ball.
pub fn truncate<T: Real>(k: &KernelSpec<T>, eps: T) -> Result<KernelSpec<T>> {
    check_eps(eps)?;
    let inner = k.evaluator().clone();
    let mut out = KernelSpec::new(
        format!("{}|>{}", k.name, eps),
        k.dimension,
        k.values,
        k.order,
        move |s, t, o| {
            if dist(s, t) > eps {
                inner(s, t, o);
            } else {
                o.iter_mut().for_each(|v| *v = T::zero());
            }
        },
    );
    out.diagonal = Diagonal::Fixed(vec![T::zero(); k.value_dim()]);
    out.profile = None;
    Ok(out)
}

/// Smooth annulus multiplier `m(|t - s| / eps)`.
pub fn annulus_multiplier<T: Real>(dimension: usize, eps: T, delta: T) -> Result<Multiplier<T>> {
    scale(&smooth_annulus_mollifier(delta, dimension)?, eps)
}

/// `psi(|s-t|/eps) K(s, t)` with `psi = m - 1_{(1, inf)}`.
pub fn psi_part<T: Real>(k: &KernelSpec<T>, eps: T, delta: T) -> Result<KernelSpec<T>> {
    check_eps(eps)?;
    let mult = annulus_multiplier(k.dimension, eps, delta)?;
    let inner = k.evaluator().clone();
    let mut out = KernelSpec::new(
        format!("psi[{};eps={eps},delta={delta}]", k.name),
        k.dimension,
        k.values,
        k.order,
        move |s, t, o| {
            let m = mult.eval(s, t).re;
            let c = if dist(s, t) > eps { m - T::one() } else { m };
            inner(s, t, o);
            o.iter_mut().for_each(|v| *v = *v * c);
        },
    );
    out.diagonal = Diagonal::Fixed(vec![T::zero(); k.value_dim()]);
    Ok(out)
}

/// `psi(x)` for a radius `x = |s - t| / eps`.
pub fn psi<T: Real>(x: T, delta: T) -> Result<T> {
    let m = smooth_annulus_mollifier(delta, 1)?.eval(&[x]).re;
    Ok(if x > T::one() { m - T::one() } else { m })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SectorialityReport<T> {
    pub kappa_achieved: T,
    /// Unit direction `x0`.
    pub direction: Vec<T>,
    pub min_ratio: T,
    pub target: T,
    pub sectorial: bool,
    /// Samples with ratio below the target.
    pub offending_samples: Vec<usize>,
    /// Zero samples, left out.
    pub skipped: Vec<usize>,
}

fn min_ratio(units: &[Vec<f64>], x: &[f64]) -> (f64, usize) {
    units
        .iter()
        .enumerate()
        .map(|(i, u)| (u.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(), i))
        .fold((f64::INFINITY, 0), |a, b| if b.0 < a.0 { b } else { a })
}

fn unit(v: &mut [f64]) -> bool {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
        true
    } else {
        false
    }
}

/// Best direction on the circle: bisector of the shortest arc containing
/// every sample.
fn circle_optimum(units: &[Vec<f64>]) -> Vec<f64> {
    let mut ang: Vec<f64> = units.iter().map(|u| u[1].atan2(u[0])).collect();
    ang.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
    let n = ang.len();
    let tau = 2.0 * std::f64::consts::PI;
    let mut gap = ang[0] + tau - ang[n - 1];
    let mut start = ang[0];
    for w in ang.windows(2) {
        if w[1] - w[0] > gap {
            gap = w[1] - w[0];
            start = w[1];
        }
    }
    let mid = start + (tau - gap) / 2.0;
    vec![mid.cos(), mid.sin()]
}

fn search_direction(units: &[Vec<f64>]) -> Vec<f64> {
    let m = units[0].len();
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    let mut mean = vec![0.0; m];
    for u in units {
        mean.iter_mut().zip(u).for_each(|(a, b)| *a += b);
    }
    if !unit(&mut mean) {
        mean = units[0].clone();
    }
    candidates.push(mean.clone());
    // projected subgradient ascent on x -> min_i <u_i, x>
    let mut x = mean;
    let mut best = x.clone();
    let mut best_val = min_ratio(units, &x).0;
    for step in 0..200 {
        let (_, i) = min_ratio(units, &x);
        let g = &units[i];
        let gx: f64 = g.iter().zip(&x).map(|(a, b)| a * b).sum();
        let eta = 0.5 / ((step + 1) as f64).sqrt();
        let mut next: Vec<f64> = x.iter().zip(g).map(|(&xi, &gi)| xi + eta * (gi - gx * xi)).collect();
        if !unit(&mut next) {
            break;
        }
        x = next;
        let v = min_ratio(units, &x).0;
        if v > best_val {
            best_val = v;
            best = x.clone();
        }
    }
    candidates.push(best);
    match m {
        1 => {
            candidates.push(vec![1.0]);
            candidates.push(vec![-1.0]);
        }
        2 => candidates.push(circle_optimum(units)),
        _ => {}
    }
    candidates
        .into_iter()
        .map(|c| (min_ratio(units, &c).0, c))
        .fold((f64::NEG_INFINITY, Vec::new()), |a, b| if b.0 > a.0 { b } else { a })
        .1
}

/// Largest `kappa` with `<F(s), x0> >= kappa |F(s)|` on the samples, either
/// for the given `x0` or for a searched one.
pub fn sectoriality_check<T: Real>(samples: &[Vec<T>], x0: Option<&[T]>, kappa: T) -> Result<SectorialityReport<T>> {
    if samples.is_empty() {
        return Err(Error::Input("no samples".into()));
    }
    let m = samples[0].len();
    if m == 0 || samples.iter().any(|s| s.len() != m) {
        return Err(Error::Input("samples must share a positive length".into()));
    }
    let mut skipped = Vec::new();
    let mut kept = Vec::new();
    for (i, s) in samples.iter().enumerate() {
        if norm2(s) == T::zero() {
            skipped.push(i);
        } else {
            kept.push(i);
        }
    }
    if kept.is_empty() {
        return Err(Error::Input("every sample is zero".into()));
    }
    let direction: Vec<T> = match x0 {
        Some(x) => {
            if x.len() != m {
                return Err(Error::Input("direction has the wrong length".into()));
            }
            let n = norm2(x);
            if n == T::zero() {
                return Err(Error::Input("direction is zero".into()));
            }
            x.iter().map(|&v| v / n).collect()
        }
        None => {
            let units: Vec<Vec<f64>> = kept
                .iter()
                .map(|&i| {
                    let mut u: Vec<f64> = samples[i].iter().map(|v| v.to_f64_lossy()).collect();
                    unit(&mut u);
                    u
                })
                .collect();
            search_direction(&units).into_iter().map(T::of).collect()
        }
    };
    let ratios: Vec<(usize, T)> = kept
        .iter()
        .map(|&i| (i, dot(&samples[i], &direction) / norm2(&samples[i])))
        .collect();
    let min = ratios.iter().map(|r| r.1).fold(T::infinity(), |a, b| a.min(b));
    let offending = ratios.iter().filter(|r| r.1 < kappa).map(|r| r.0).collect();
    Ok(SectorialityReport {
        kappa_achieved: min,
        direction,
        min_ratio: min,
        target: kappa,
        sectorial: min >= kappa,
        offending_samples: offending,
        skipped,
    })
}

/// Deterministic points on the unit sphere of `R^N`.
pub fn sphere_samples<T: Real>(dimension: usize, count: usize) -> Vec<Vec<T>> {
    match dimension {
        0 => Vec::new(),
        1 => vec![vec![T::one()], vec![-T::one()]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![T::of(a.cos()), T::of(a.sin())]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5fe2e);
            let normal = rand_distr_normal;
            (0..count)
                .map(|_| {
                    let mut v: Vec<f64> = (0..dimension).map(|_| normal(&mut rng)).collect();
                    unit(&mut v);
                    v.into_iter().map(T::of).collect()
                })
                .collect()
        }
    }
}

fn rand_distr_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let v: f64 = rng.gen();
    (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos()
}

const SPHERE_SAMPLES: usize = 4096;

/// `M_r(s, t) = C phi(|s-t|/r) B^T((t-s)/|t-s|)` for a kernel
/// `K_1(x) = A(|x|) B(x/|x|)`, with `C = max 1/|B|` over the sphere.
#[derive(Clone)]
pub struct SectorialMultiplier<T> {
    pub c: T,
    pub r: T,
    pub bump: Bump,
    pub dimension: usize,
    /// Components of `B`.
    pub components: usize,
    angular: SphereFn<T>,
}

impl<T: Real> std::fmt::Debug for SectorialMultiplier<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SectorialMultiplier")
            .field("c", &self.c)
            .field("r", &self.r)
            .field("bump", &self.bump)
            .field("dimension", &self.dimension)
            .field("components", &self.components)
            .finish()
    }
}

pub fn build_sectorial_multiplier<T: Real>(k: &KernelSpec<T>, r: T) -> Result<SectorialMultiplier<T>> {
    check_eps(r)?;
    let profile = k
        .profile
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("kernel {} has no A(|x|) B(x/|x|) profile", k.name)))?;
    let comps = k.value_dim();
    let mut out = vec![T::zero(); comps];
    let mut min = T::infinity();
    for th in sphere_samples::<T>(k.dimension, SPHERE_SAMPLES) {
        (profile.angular)(&th, &mut out);
        min = min.min(norm2(&out));
    }
    if !(min > T::of(1e-8)) {
        return Err(Error::NotSectorializable(format!(
            "|B| drops to {min} on the sphere"
        )));
    }
    Ok(SectorialMultiplier {
        c: min.recip(),
        r,
        bump: Bump::sectorial(),
        dimension: k.dimension,
        components: comps,
        angular: profile.angular.clone(),
    })
}

impl<T: Real> SectorialMultiplier<T> {
    pub fn with_scale(&self, r: T) -> Result<Self> {
        check_eps(r)?;
        Ok(SectorialMultiplier { r, ..self.clone() })
    }

    /// `m(x) = C phi(|x|) B^T(x/|x|)`.
    pub fn profile_into(&self, x: &[T], out: &mut [T]) {
        let rr = norm2(x);
        let phi = if rr == T::zero() { T::zero() } else { self.bump.eval(rr) };
        if phi == T::zero() {
            out.iter_mut().for_each(|v| *v = T::zero());
            return;
        }
        let th: Vec<T> = x.iter().map(|&v| v / rr).collect();
        (self.angular)(&th, out);
        out.iter_mut().for_each(|v| *v *= self.c * phi);
    }

    pub fn eval(&self, s: &[T], t: &[T]) -> Vec<T> {
        let x: Vec<T> = t.iter().zip(s).map(|(&a, &b)| (a - b) / self.r).collect();
        let mut out = vec![T::zero(); self.components];
        self.profile_into(&x, &mut out);
        out
    }

    /// Scalar kernel `<M_r(s, t), K(s, t)>`.
    pub fn apply(&self, k: &KernelSpec<T>) -> Result<KernelSpec<T>> {
        if k.dimension != self.dimension || k.value_dim() != self.components {
            return Err(Error::Input("multiplier does not match the kernel shape".into()));
        }
        let inner = k.evaluator().clone();
        let me = self.clone();
        let comps = self.components;
        let mut out = KernelSpec::new(
            format!("<M_sect;r={}, {}>", self.r, k.name),
            k.dimension,
            ValueKind::Real(1),
            k.order,
            move |s, t, o| {
                let m = me.eval(s, t);
                if m.iter().all(|&v| v == T::zero()) {
                    o[0] = T::zero();
                    return;
                }
                let mut kv = vec![T::zero(); comps];
                inner(s, t, &mut kv);
                o[0] = dot(&m, &kv);
            },
        );
        out.diagonal = Diagonal::Fixed(vec![T::zero()]);
        Ok(out)
    }

    /// Sum over components of the Wiener norms of `m_k`; bounds the Schur
    /// norm of the pairing `K -> <M_r, K>` for every `r`.
    pub fn schur_bound(&self, grid: Option<WienerGrid>) -> Result<(f64, f64)> {
        let grid = grid.unwrap_or_else(|| WienerGrid::default_for(self.dimension, 1.0));
        let mut total = 0.0;
        let mut err = 0.0;
        for c in 0..self.components {
            let me = self.clone();
            let f = move |x: &[T]| {
                let mut out = vec![T::zero(); me.components];
                me.profile_into(x, &mut out);
                num_complex::Complex::new(out[c], T::zero())
            };
            let est = wiener_norm(f, self.dimension, grid)?;
            total += est.value;
            err += est.error_estimate;
        }
        Ok((total, err))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationComparison {
    pub eps: f64,
    pub norm_truncated: f64,
    pub norm_smooth: f64,
    pub norm_psi_part: f64,
    /// Norm of `<M_eps K, x0>` (absent without a sectorial profile).
    pub norm_sectorial: Option<f64>,
    /// Min over annulus pairs of `<M_eps K, x0> - kappa |K|`.
    pub domination_margin: Option<f64>,
    pub annulus_pairs: usize,
    /// Entries where hard + psi differs from smooth.
    pub split_mismatches: usize,
    /// `|psi K| <= chi |K|` at every entry.
    pub psi_dominated: bool,
    pub triangle_holds: bool,
    /// `norm_smooth + norm_sectorial / kappa`.
    pub sectorial_bound: Option<f64>,
    pub bound_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub delta: f64,
    pub kappa: f64,
    /// Sectorial constant `C` and the Schur bound of the sectorial pairing.
    pub sectorial_c: Option<f64>,
    pub sectorial_schur: Option<f64>,
    pub sectorial_schur_error: Option<f64>,
    /// Operator norm of `K` itself, when finite on the supports.
    pub norm_full: Option<f64>,
    pub comparisons: Vec<TruncationComparison>,
}

fn entry_norm<T: Real>(v: &[T]) -> f64 {
    norm2(v).to_f64_lossy()
}

#[allow(clippy::too_many_arguments)]
fn compare_one<T: Real>(
    k: &KernelSpec<T>,
    full: &KernelMatrix<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    eps: T,
    delta: T,
    sect: Option<&SectorialMultiplier<T>>,
    opts: &SolverOptions,
) -> Result<TruncationComparison> {
    let hard = materialize(&truncate(k, eps)?, mu, nu, None)?;
    let smooth = materialize(k, mu, nu, Some(&annulus_multiplier(k.dimension, eps, delta)?))?;
    let psi = materialize(&psi_part(k, eps, delta)?, mu, nu, None)?;
    let norm_truncated = operator_norm_p2(&hard, mu, nu, opts)?.value.to_f64_lossy();
    let norm_smooth = operator_norm_p2(&smooth, mu, nu, opts)?.value.to_f64_lossy();
    let norm_psi_part = operator_norm_p2(&psi, mu, nu, opts)?.value.to_f64_lossy();
    let split_mismatches = hard
        .entries()
        .iter()
        .zip(psi.entries())
        .zip(smooth.entries())
        .filter(|((&a, &b), &c)| a + b != c)
        .count();
    let lo = T::one() - delta;
    let mut psi_dominated = true;
    for i in 0..full.rows {
        for j in 0..full.cols {
            let x = dist(nu.point(i), mu.point(j)) / eps;
            let chi = if x >= lo && x <= T::one() { 1.0 } else { 0.0 };
            if entry_norm(psi.entry(i, j)) > chi * entry_norm(full.entry(i, j)) {
                psi_dominated = false;
            }
        }
    }
    let (mut norm_sectorial, mut domination_margin, mut sectorial_bound, mut bound_holds) = (None, None, None, None);
    let mut annulus_pairs = 0;
    if let Some(sm) = sect {
        let sk = sm.with_scale(eps)?.apply(k)?;
        let smat = materialize(&sk, mu, nu, None)?;
        let ns = operator_norm_p2(&smat, mu, nu, opts)?.value.to_f64_lossy();
        let mut margin = f64::INFINITY;
        for i in 0..full.rows {
            for j in 0..full.cols {
                let x = dist(nu.point(i), mu.point(j)) / eps;
                if x >= lo && x <= T::one() {
                    annulus_pairs += 1;
                    let m = smat.entry(i, j)[0].to_f64_lossy() - entry_norm(full.entry(i, j));
                    margin = margin.min(m);
                }
            }
        }
        norm_sectorial = Some(ns);
        domination_margin = (annulus_pairs > 0).then_some(margin);
        let b = norm_smooth + ns;
        sectorial_bound = Some(b);
        bound_holds = Some(norm_truncated <= b * (1.0 + 1e-9) + 1e-12);
    }
    Ok(TruncationComparison {
        eps: eps.to_f64_lossy(),
        norm_truncated,
        norm_smooth,
        norm_psi_part,
        norm_sectorial,
        domination_margin,
        annulus_pairs,
        split_mismatches,
        psi_dominated,
        triangle_holds: norm_truncated <= norm_smooth + norm_psi_part + 1e-9,
        sectorial_bound,
        bound_holds,
    })
}

/// Hard vs smooth truncations of `K` at each `eps` (p = 2).
pub fn compare_truncations<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    eps_list: &[T],
    delta: T,
    opts: &SolverOptions,
) -> Result<TruncationReport> {
    let shared = common_atoms(mu, nu);
    if !shared.is_empty() {
        return Err(Error::CommonAtoms {
            points: shared
                .into_iter()
                .map(|p| p.0.into_iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        });
    }
    if eps_list.is_empty() {
        return Err(Error::Input("empty eps list".into()));
    }
    for &e in eps_list {
        check_eps(e)?;
    }
    let sect = match build_sectorial_multiplier(k, T::one()) {
        Ok(s) => Some(s),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let full = materialize_masked(k, mu, nu)?;
    let norm_full = if full.coincident.is_empty() {
        Some(operator_norm_p2(&full, mu, nu, opts)?.value.to_f64_lossy())
    } else {
        None
    };
    let (schur, schur_err) = match &sect {
        Some(s) if k.dimension <= 2 => {
            let (a, b) = s.schur_bound(None)?;
            (Some(a), Some(b))
        }
        _ => (None, None),
    };
    let comparisons: Result<Vec<TruncationComparison>> = eps_list
        .par_iter()
        .map(|&e| compare_one(k, &full, mu, nu, e, delta, sect.as_ref(), opts))
        .collect();
    Ok(TruncationReport {
        delta: delta.to_f64_lossy(),
        kappa: 1.0,
        sectorial_c: sect.as_ref().map(|s| s.c.to_f64_lossy()),
        sectorial_schur: schur,
        sectorial_schur_error: schur_err,
        norm_full,
        comparisons: comparisons?,
    })
}

/// Annulus samples `M_eps K (s, t)` with `(1-delta) eps <= |s-t| <= eps`,
/// `s` at the origin.
pub fn annulus_samples<T: Real>(
    k: &KernelSpec<T>,
    sm: &SectorialMultiplier<T>,
    eps: T,
    delta: T,
    count: usize,
    seed: u64,
) -> Result<Vec<(Vec<T>, Vec<T>)>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sk = sm.with_scale(eps)?.apply(k)?;
    let s = vec![T::zero(); k.dimension];
    let dirs = sphere_samples::<T>(k.dimension, count.max(2));
    let lo = (T::one() - delta).to_f64_lossy();
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let r = T::of(rng.gen_range(lo..=1.0)) * eps;
        let t: Vec<T> = dirs[i % dirs.len()].iter().map(|&v| v * r).collect();
        let kv = k.evaluate(&s, &t)?;
        let mv = sk.evaluate(&s, &t)?;
        out.push((mv, kv));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_ahlfors_beurling, make_cauchy, make_hilbert, make_riesz_generalized};
    use crate::measure::generators::interleaved_grids;
    use std::f64::consts::PI;
    use std::sync::Arc;

    #[test]
    fn truncate_boundary_and_value() {
        let h = make_hilbert::<f64>();
        let t = truncate(&h, 1.0).unwrap();
        assert_eq!(t.evaluate(&[0.0], &[1.0]).unwrap()[0], 0.0);
        assert_eq!(t.evaluate(&[0.0], &[0.5]).unwrap()[0], 0.0);
        assert_eq!(t.evaluate(&[0.0], &[0.0]).unwrap()[0], 0.0);
        let v = t.evaluate(&[0.0], &[1.5]).unwrap()[0];
        assert!((v + 2.0 / (3.0 * PI)).abs() < 1e-15);
        assert!(truncate(&h, 0.0).is_err());
    }

    #[test]
    fn small_eps_is_untruncated() {
        let (mu, nu) = interleaved_grids(1, 0.0, 1.0, 0.125).unwrap();
        let h = make_hilbert::<f64>();
        let a = materialize(&h, &mu, &nu, None).unwrap();
        let b = materialize(&truncate(&h, 1e-3).unwrap(), &mu, &nu, None).unwrap();
        assert_eq!(a.entries(), b.entries());
    }

    #[test]
    fn sectoriality_closed_forms() {
        let r = sectoriality_check(&vec![vec![1.0f64, 0.0]; 3], None, 1.0).unwrap();
        assert!((r.kappa_achieved - 1.0).abs() < 1e-12);
        assert!((r.direction[0] - 1.0).abs() < 1e-12);
        let r = sectoriality_check(&[vec![1.0, 0.0], vec![0.0, 1.0]], None, 0.5).unwrap();
        assert!((r.kappa_achieved - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((r.direction[0] - r.direction[1]).abs() < 1e-12);
        let r = sectoriality_check(&[vec![1.0, 0.0], vec![-1.0, 0.0]], None, 0.1).unwrap();
        assert!(r.kappa_achieved <= 1e-12 && !r.sectorial);
        let r = sectoriality_check(&[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]], None, 0.0).unwrap();
        assert!((r.kappa_achieved - 1.0 / 3f64.sqrt()).abs() < 1e-3);
        let n: f64 = r.direction.iter().map(|v| v * v).sum::<f64>();
        assert!((n - 1.0).abs() < 1e-12);
        let r = sectoriality_check(&[vec![0.0, 0.0], vec![2.0, 0.0]], Some(&[1.0, 0.0]), 1.0).unwrap();
        assert_eq!(r.skipped, vec![0]);
        assert!(sectoriality_check::<f64>(&[], None, 1.0).is_err());
    }

    #[test]
    fn circle_search_matches_arc_bisector() {
        // samples on an arc of half-width 1 rad around angle 2
        let s: Vec<Vec<f64>> = (0..21)
            .map(|k| {
                let a = 1.0 + k as f64 * 0.1;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let r = sectoriality_check(&s, None, 0.0).unwrap();
        assert!((r.kappa_achieved - 1f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn sectorial_domination_catalog() {
        let kernels: Vec<KernelSpec<f64>> = vec![
            make_riesz_generalized(0.5, 2).unwrap(),
            make_riesz_generalized(1.0, 3).unwrap(),
            make_cauchy(),
            make_ahlfors_beurling(),
            make_hilbert(),
        ];
        for k in kernels {
            let sm = build_sectorial_multiplier(&k, 1.0).unwrap();
            assert!((sm.c - 1.0).abs() < 1e-12, "{}", k.name);
            for eps in [0.25, 1.0, 3.0] {
                let samples = annulus_samples(&k, &sm, eps, 0.1, 500, 3).unwrap();
                let vals: Vec<Vec<f64>> = samples.iter().map(|s| s.0.clone()).collect();
                let rep = sectoriality_check(&vals, Some(&[1.0]), 1.0 - 1e-9).unwrap();
                assert!(rep.sectorial, "{}", k.name);
                for (m, kv) in &samples {
                    assert!(m[0] >= norm2(kv) * (1.0 - 1e-12));
                }
            }
        }
    }

    #[test]
    fn vanishing_profile_rejected() {
        let mut k = make_riesz_generalized(1.0, 2).unwrap();
        let p = k.profile.as_mut().unwrap();
        p.angular = Arc::new(|th: &[f64], out: &mut [f64]| {
            out[0] = th[0];
            out[1] = 0.0;
        });
        assert!(matches!(build_sectorial_multiplier(&k, 1.0), Err(Error::NotSectorializable(_))));
    }

    #[test]
    fn psi_support() {
        for k in 0..=2000 {
            let x = k as f64 / 1000.0;
            let v = psi(x, 0.1).unwrap();
            let chi = if (0.9..=1.0).contains(&x) { 1.0 } else { 0.0 };
            assert!(v.abs() <= chi);
        }
        assert_eq!(psi(1.0, 0.1).unwrap(), 1.0);
    }

    #[test]
    fn compare_hilbert_split_identity() {
        let (mu, nu) = interleaved_grids(1, 0.0, 1.0, 1.0 / 64.0).unwrap();
        let h = make_hilbert::<f64>();
        let eps = [0.02, 0.05, 0.1, 0.3];
        let rep = compare_truncations(&h, &mu, &nu, &eps, 0.1, &SolverOptions::default()).unwrap();
        for c in &rep.comparisons {
            assert_eq!(c.split_mismatches, 0);
            assert!(c.psi_dominated && c.triangle_holds);
            assert!(c.domination_margin.map_or(true, |m| m >= -1e-12));
            assert_eq!(c.bound_holds, Some(true));
        }
        assert!(rep.comparisons.iter().any(|c| c.annulus_pairs > 0));
        let tiny = compare_truncations(&h, &mu, &nu, &[1e-4], 0.1, &SolverOptions::default()).unwrap();
        let c = &tiny.comparisons[0];
        assert_eq!(c.norm_psi_part, 0.0);
        assert!((c.norm_truncated - rep.norm_full.unwrap()).abs() < 1e-9 * c.norm_truncated);
        let z = KernelSpec::constant(1, 0.0);
        let rz = compare_truncations(&z, &mu, &nu, &[0.1], 0.1, &SolverOptions::default()).unwrap();
        assert_eq!(rz.comparisons[0].norm_truncated, 0.0);
        assert_eq!(rz.comparisons[0].norm_smooth, 0.0);
    }

    #[test]
    fn common_atoms_rejected() {
        let a = DiscreteMeasure::atoms(1, vec![vec![0.0]], vec![1.0]).unwrap();
        let h = make_hilbert::<f64>();
        assert!(matches!(
            compare_truncations(&h, &a, &a, &[0.1], 0.1, &SolverOptions::default()),
            Err(Error::CommonAtoms { .. })
        ));
    }
}
