//! Two-weight `A_p^alpha` constants over scanned balls, and the necessity
//! experiment for homogeneous convolution kernels.
//!
//! Balls are open, `diam B = 2 r`, so the scanned quantity is
//! `(2r)^{-alpha} mu(B)^{1/p'} nu(B)^{1/p}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{restricted_norm_heuristic, NormOptions};
use crate::kernels::{ConvolutionProfile, Diagonal, KernelSpec, ValueKind};
use crate::measure::DiscreteMeasure;
use crate::mollifiers::{wiener_norm, WienerGrid};
use crate::scalar::{dist, dot, lex_cmp, norm2, Real};
use crate::smooth::Bump;
use crate::truncation::sphere_samples;

fn check_p<T: Real>(p: T) -> Result<()> {
    if !(p > T::one() && p.is_finite()) {
        return Err(Error::Parameter(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

/// Centers and radii to scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BallScan<T> {
    pub centers: Vec<Vec<T>>,
    pub radii: Vec<T>,
}

fn support_union<T: Real>(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Vec<Vec<T>> {
    let mut pts: Vec<Vec<T>> = mu.points().chain(nu.points()).map(|p| p.to_vec()).collect();
    pts.sort_by(|a, b| lex_cmp(a, b));
    pts.dedup();
    pts
}

impl<T: Real> BallScan<T> {
    /// Support points of `mu + nu` and midpoints to each point's nearest
    /// neighbour as centers; radii geometric with ratio `sqrt 2` from the
    /// smallest pairwise distance up to the support diameter.
    pub fn default_for(mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Self {
        let pts = support_union(mu, nu);
        if pts.len() < 2 {
            return BallScan {
                centers: pts,
                radii: vec![T::one()],
            };
        }
        let nearest: Vec<(usize, T, T)> = (0..pts.len())
            .into_par_iter()
            .map(|i| {
                let mut best = (i, T::infinity());
                let mut far = T::zero();
                for (j, q) in pts.iter().enumerate() {
                    if j != i {
                        let d = dist(&pts[i], q);
                        if d < best.1 {
                            best = (j, d);
                        }
                        far = far.max(d);
                    }
                }
                (best.0, best.1, far)
            })
            .collect();
        let min = nearest.iter().map(|n| n.1).fold(T::infinity(), |a, b| a.min(b));
        let diam = nearest.iter().map(|n| n.2).fold(T::zero(), |a, b| a.max(b));
        let mut centers = pts.clone();
        for (i, &(j, _, _)) in nearest.iter().enumerate() {
            if i < j || nearest[j].0 != i {
                centers.push(pts[i].iter().zip(&pts[j]).map(|(&a, &b)| (a + b) / T::of(2.0)).collect());
            }
        }
        centers.sort_by(|a, b| lex_cmp(a, b));
        centers.dedup();
        let mut radii = Vec::new();
        let mut r = min;
        let step = T::of(std::f64::consts::SQRT_2);
        while r <= diam * step {
            radii.push(r);
            r *= step;
        }
        BallScan { centers, radii }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MuckenhouptReport<T> {
    pub constant: T,
    pub witness_center: Vec<T>,
    pub witness_radius: T,
    pub witness_mu: T,
    pub witness_nu: T,
    pub p: T,
    pub alpha: T,
    pub centers: usize,
    pub radii: Vec<T>,
    /// Always `"diam = 2 * radius"`.
    pub convention: String,
}

/// `(2r)^{-alpha} m^{1/p'} n^{1/p}`.
pub fn ball_value<T: Real>(radius: T, mu_mass: T, nu_mass: T, p: T, alpha: T) -> T {
    if mu_mass == T::zero() || nu_mass == T::zero() {
        return T::zero();
    }
    let q = p / (p - T::one());
    (T::of(2.0) * radius).powf(-alpha) * mu_mass.powf(q.recip()) * nu_mass.powf(p.recip())
}

impl<T: Real> MuckenhouptReport<T> {
    /// Value at the witness ball, from the measures alone.
    pub fn reevaluate(&self, mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> T {
        let m = mu.mass_in_ball(&self.witness_center, self.witness_radius);
        let n = nu.mass_in_ball(&self.witness_center, self.witness_radius);
        ball_value(self.witness_radius, m, n, self.p, self.alpha)
    }
}

/// Sorted distances from `c` with prefix sums of the weights.
fn radial_profile<T: Real>(m: &DiscreteMeasure<T>, c: &[T]) -> (Vec<T>, Vec<T>) {
    let mut d: Vec<(T, T)> = m.points().zip(m.weights()).map(|(x, &w)| (dist(x, c), w)).collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite distances"));
    let mut acc = T::zero();
    let mut prefix = Vec::with_capacity(d.len() + 1);
    prefix.push(T::zero());
    for &(_, w) in &d {
        acc += w;
        prefix.push(acc);
    }
    (d.into_iter().map(|x| x.0).collect(), prefix)
}

fn open_mass<T: Real>(profile: &(Vec<T>, Vec<T>), r: T) -> T {
    let k = profile.0.partition_point(|&d| d < r);
    profile.1[k]
}

/// Max of `(diam B)^{-alpha} mu(B)^{1/p'} nu(B)^{1/p}` over the scanned open
/// balls. Ties go to the first center, then the smallest radius.
pub fn ap_alpha_constant<T: Real>(
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    alpha: T,
    scan: &BallScan<T>,
) -> Result<MuckenhouptReport<T>> {
    check_p(p)?;
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::Parameter(format!("alpha must be positive, got {alpha}")));
    }
    if scan.centers.is_empty() || scan.radii.is_empty() {
        return Err(Error::Input("empty ball scan".into()));
    }
    if scan.radii.iter().any(|&r| !(r > T::zero() && r.is_finite())) {
        return Err(Error::Input("scan radii must be positive".into()));
    }
    if scan.centers.iter().any(|c| c.len() != mu.dimension()) || mu.dimension() != nu.dimension() {
        return Err(Error::Input("scan and measure dimensions differ".into()));
    }
    let per_center: Vec<(T, usize, usize, T, T)> = scan
        .centers
        .par_iter()
        .enumerate()
        .map(|(ci, c)| {
            let pm = radial_profile(mu, c);
            let pn = radial_profile(nu, c);
            let mut best = (T::neg_infinity(), ci, 0, T::zero(), T::zero());
            for (ri, &r) in scan.radii.iter().enumerate() {
                let (m, n) = (open_mass(&pm, r), open_mass(&pn, r));
                let v = ball_value(r, m, n, p, alpha);
                if v > best.0 {
                    best = (v, ci, ri, m, n);
                }
            }
            best
        })
        .collect();
    let best = per_center
        .into_iter()
        .fold(None::<(T, usize, usize, T, T)>, |a, b| match a {
            Some(a) if a.0 >= b.0 => Some(a),
            _ => Some(b),
        })
        .expect("nonempty scan");
    Ok(MuckenhouptReport {
        constant: best.0,
        witness_center: scan.centers[best.1].clone(),
        witness_radius: scan.radii[best.2],
        witness_mu: best.3,
        witness_nu: best.4,
        p,
        alpha,
        centers: scan.centers.len(),
        radii: scan.radii.clone(),
        convention: "diam = 2 * radius".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub degree: f64,
    pub samples: usize,
    /// Max of `|B(cx) - c^d B(x)| / |c^d B(x)|`.
    pub max_deviation: f64,
    pub worst: Option<(f64, Vec<f64>)>,
}

/// Checks `B(c x) = c^d B(x)` on random `c in [1/8, 8]` and `x` in the cube
/// `[-2, 2]^N`.
pub fn homogeneity_check<T: Real>(
    b: impl Fn(&[T], &mut [T]),
    components: usize,
    dimension: usize,
    degree: T,
    samples: usize,
    seed: u64,
) -> HomogeneityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bx = vec![T::zero(); components];
    let mut bcx = vec![T::zero(); components];
    let mut report = HomogeneityReport {
        degree: degree.to_f64_lossy(),
        samples: 0,
        max_deviation: 0.0,
        worst: None,
    };
    for _ in 0..samples {
        let x: Vec<T> = (0..dimension).map(|_| T::of(rng.gen_range(-2.0..2.0))).collect();
        let c = T::of(2f64.powf(rng.gen_range(-3.0..3.0)));
        b(&x, &mut bx);
        let cx: Vec<T> = x.iter().map(|&v| v * c).collect();
        b(&cx, &mut bcx);
        let scale = c.powf(degree);
        let expected: Vec<T> = bx.iter().map(|&v| v * scale).collect();
        let denom = norm2(&expected);
        if denom == T::zero() {
            continue;
        }
        let diff: Vec<T> = bcx.iter().zip(&expected).map(|(&a, &e)| a - e).collect();
        let dev = (norm2(&diff) / denom).to_f64_lossy();
        report.samples += 1;
        if dev > report.max_deviation || report.worst.is_none() {
            report.max_deviation = report.max_deviation.max(dev);
            if dev >= report.max_deviation {
                report.worst = Some((c.to_f64_lossy(), x.iter().map(|v| v.to_f64_lossy()).collect()));
            }
        }
    }
    report
}

#[derive(Clone, Debug, PartialEq)]
pub struct NecessityOptions<T> {
    /// Ball centers; `None` uses up to 16 support points of `mu` plus the
    /// support point nearest to the barycenter of `mu`.
    pub centers: Option<Vec<Vec<T>>>,
    pub pairs_per_ball: usize,
    pub seed: u64,
    pub norm: NormOptions,
    /// Compute the restricted-norm estimate of `K` and the `A_p^alpha` constant.
    pub restricted: bool,
}

impl<T: Real> Default for NecessityOptions<T> {
    fn default() -> Self {
        NecessityOptions {
            centers: None,
            pairs_per_ball: 1000,
            seed: 0,
            norm: NormOptions::default(),
            restricted: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallResult {
    pub center: Vec<f64>,
    pub mu_mass: f64,
    pub nu_mass: f64,
    pub pairs_checked: usize,
    pub violations: usize,
    /// Min of `K_eps(s, t) / (C' eps^{-alpha})` over the checked pairs.
    pub min_ratio: Option<f64>,
    /// `eps^{-alpha} mu(B)^{1/p'} nu(B)^{1/p}` (radius convention).
    pub ap_value: f64,
    /// `||T_eps 1_B||_{L^p(nu|B)} / mu(B)^{1/p}`, a lower bound on `||T_eps||`.
    pub measured: f64,
    /// `C' eps^{-alpha} (sum_s nu_s (mu(B) - mu{s})^p)^{1/p} / mu(B)^{1/p}`.
    pub lower_chain: f64,
    pub chain_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsResult {
    pub eps: f64,
    pub bound: f64,
    pub balls: Vec<BallResult>,
    pub violations: usize,
    pub pairs_checked: usize,
    pub max_ap_value: f64,
    pub max_measured: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NecessityReport {
    pub p: f64,
    pub alpha: f64,
    pub degree: f64,
    /// `inf |B|` on the unit sphere.
    pub sphere_inf: f64,
    /// `C' = C^2 2^{d - alpha}`.
    pub c_prime: f64,
    /// Sum of the Wiener norms of the components of `m(x) = B(x) phi(|x|)`.
    pub schur_bound: Option<f64>,
    pub schur_error: Option<f64>,
    pub results: Vec<EpsResult>,
    pub restricted_norm: Option<f64>,
    pub ap_constant: Option<f64>,
    /// `restricted_norm / ap_constant`.
    pub ratio: Option<f64>,
    /// `2 * schur_bound * restricted_norm`, an upper bound on `||T_eps||`
    /// when `mu`, `nu` have no common atoms.
    pub upper_bound: Option<f64>,
}

fn hypothesis_check<T: Real>(profile: &ConvolutionProfile<T>, alpha: T) -> Result<()> {
    let d = profile.degree;
    let mut k = -40;
    while k <= 40 {
        let r = T::of(2f64.powf(k as f64 / 4.0));
        let a = profile.homogeneous_radial(r);
        let need = r.powf(-d - alpha);
        if !(a >= need * (T::one() - T::of(1e-12))) {
            return Err(Error::Hypothesis(format!(
                "A(r) = {a} < r^(-d-alpha) = {need} at r = {r}"
            )));
        }
        k += 1;
    }
    Ok(())
}

/// Scalar kernel `K_eps(s, t) = m((t-s)/eps)^T K(s, t)` with
/// `m(x) = B_hom(x) phi(|x|)`.
pub fn necessity_kernel<T: Real>(k: &KernelSpec<T>, eps: T) -> Result<KernelSpec<T>> {
    let profile = k
        .profile
        .clone()
        .ok_or_else(|| Error::Unsupported(format!("kernel {} has no convolution profile", k.name)))?;
    if !(eps > T::zero()) {
        return Err(Error::Parameter("eps must be positive".into()));
    }
    let inner = k.evaluator().clone();
    let comps = k.value_dim();
    let bump = Bump::necessity();
    let mut out = KernelSpec::new(
        format!("necessity[{};eps={eps}]", k.name),
        k.dimension,
        ValueKind::Real(1),
        k.order,
        move |s, t, o| {
            let x: Vec<T> = t.iter().zip(s).map(|(&a, &b)| (a - b) / eps).collect();
            let phi = bump.eval(norm2(&x));
            if phi == T::zero() {
                o[0] = T::zero();
                return;
            }
            let mut m = vec![T::zero(); comps];
            profile.homogeneous_angular(&x, &mut m);
            let mut kv = vec![T::zero(); comps];
            inner(s, t, &mut kv);
            o[0] = dot(&m, &kv) * phi;
        },
    );
    out.diagonal = Diagonal::Singular;
    Ok(out)
}

fn default_centers<T: Real>(mu: &DiscreteMeasure<T>) -> Vec<Vec<T>> {
    let n = mu.len();
    if n == 0 {
        return Vec::new();
    }
    let stride = n.div_ceil(16).max(1);
    let mut centers: Vec<Vec<T>> = (0..n).step_by(stride).map(|i| mu.point(i).to_vec()).collect();
    let total = mu.total_mass();
    let mut bary = vec![T::zero(); mu.dimension()];
    for (x, &w) in mu.points().zip(mu.weights()) {
        bary.iter_mut().zip(x).for_each(|(b, &v)| *b += v * w / total);
    }
    let near = (0..n)
        .min_by(|&a, &b| dist(mu.point(a), &bary).partial_cmp(&dist(mu.point(b), &bary)).expect("finite"))
        .expect("nonempty");
    centers.push(mu.point(near).to_vec());
    centers
}

#[allow(clippy::too_many_arguments)]
fn run_ball<T: Real>(
    ke: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    center: &[T],
    eps: T,
    bound: T,
    p: T,
    alpha: T,
    c_prime: T,
    opts_pairs: usize,
    seed: u64,
) -> Result<BallResult> {
    let im: Vec<usize> = (0..mu.len()).filter(|&j| dist(mu.point(j), center) < eps).collect();
    let inn: Vec<usize> = (0..nu.len()).filter(|&i| dist(nu.point(i), center) < eps).collect();
    let mu_b: T = im.iter().map(|&j| mu.weight(j)).sum();
    let nu_b: T = inn.iter().map(|&i| nu.weight(i)).sum();
    let q = p / (p - T::one());
    let ap_value = if mu_b > T::zero() && nu_b > T::zero() {
        eps.powf(-alpha) * mu_b.powf(q.recip()) * nu_b.powf(p.recip())
    } else {
        T::zero()
    };
    // T_eps 1_B on nu|B, coincident points left out
    let mut out = [T::zero()];
    let mut rows = Vec::with_capacity(inn.len());
    let mut lower_sum = T::zero();
    let mut all_pairs = Vec::new();
    for &i in &inn {
        let s = nu.point(i);
        let mut acc = T::zero();
        let mut own = T::zero();
        for &j in &im {
            let t = mu.point(j);
            if s == t {
                own += mu.weight(j);
                continue;
            }
            ke.evaluate_into(s, t, &mut out)?;
            acc += out[0] * mu.weight(j);
            all_pairs.push((i, j, out[0]));
        }
        rows.push(acc);
        lower_sum += nu.weight(i) * (mu_b - own).powf(p);
    }
    let measured_num: T = rows
        .iter()
        .zip(&inn)
        .map(|(&v, &i)| nu.weight(i) * v.max(T::zero()).powf(p))
        .sum::<T>()
        .powf(p.recip());
    let (measured, lower_chain) = if mu_b > T::zero() {
        let den = mu_b.powf(p.recip());
        (measured_num / den, c_prime * eps.powf(-alpha) * lower_sum.powf(p.recip()) / den)
    } else {
        (T::zero(), T::zero())
    };
    let checked: Vec<(usize, usize, T)> = if all_pairs.len() <= opts_pairs {
        all_pairs
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..opts_pairs).map(|_| all_pairs[rng.gen_range(0..all_pairs.len())]).collect()
    };
    let tol = T::one() - T::of(1e-12);
    let mut violations = 0;
    let mut min_ratio: Option<f64> = None;
    for &(i, j, v) in &checked {
        if dist(nu.point(i), mu.point(j)) > T::of(2.0) * eps {
            continue;
        }
        let r = (v / bound).to_f64_lossy();
        min_ratio = Some(min_ratio.map_or(r, |m| m.min(r)));
        if !(v >= bound * tol) {
            violations += 1;
        }
    }
    Ok(BallResult {
        center: center.iter().map(|v| v.to_f64_lossy()).collect(),
        mu_mass: mu_b.to_f64_lossy(),
        nu_mass: nu_b.to_f64_lossy(),
        pairs_checked: checked.len(),
        violations,
        min_ratio,
        ap_value: ap_value.to_f64_lossy(),
        measured: measured.to_f64_lossy(),
        lower_chain: lower_chain.to_f64_lossy(),
        chain_holds: measured >= lower_chain * tol,
    })
}

/// Runs the lower-bound side of the necessity argument at each `eps` and,
/// optionally, compares the restricted norm of `K` with the `A_p^alpha`
/// constant.
pub fn necessity_experiment<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    alpha: T,
    eps_list: &[T],
    opts: &NecessityOptions<T>,
) -> Result<NecessityReport> {
    check_p(p)?;
    let profile = k
        .profile
        .as_ref()
        .ok_or_else(|| Error::Unsupported(format!("kernel {} has no convolution profile", k.name)))?;
    let d = profile.degree;
    if !(alpha >= d) {
        return Err(Error::Parameter(format!("need alpha >= d, got alpha={alpha}, d={d}")));
    }
    hypothesis_check(profile, alpha)?;
    if eps_list.is_empty() || eps_list.iter().any(|&e| !(e > T::zero())) {
        return Err(Error::Input("eps list must be nonempty and positive".into()));
    }
    let comps = k.value_dim();
    let mut b = vec![T::zero(); comps];
    let mut inf = T::infinity();
    for th in sphere_samples::<T>(k.dimension, 4096) {
        (profile.angular)(&th, &mut b);
        inf = inf.min(norm2(&b));
    }
    if !(inf > T::zero()) {
        return Err(Error::Hypothesis("B vanishes on the unit sphere".into()));
    }
    let c_prime = inf * inf * T::of(2.0).powf(d - alpha);
    let (schur_bound, schur_error) = if k.dimension <= 2 {
        let bump = Bump::necessity();
        let grid = WienerGrid::default_for(k.dimension, 1.0);
        let mut total = 0.0;
        let mut err = 0.0;
        for c in 0..comps {
            let pr = profile.clone();
            let f = move |x: &[T]| {
                let phi = bump.eval(norm2(x));
                let mut out = vec![T::zero(); comps];
                if phi > T::zero() && norm2(x) > T::zero() {
                    pr.homogeneous_angular(x, &mut out);
                }
                num_complex::Complex::new(out[c] * phi, T::zero())
            };
            let est = wiener_norm(f, k.dimension, grid)?;
            total += est.value;
            err += est.error_estimate;
        }
        (Some(total), Some(err))
    } else {
        (None, None)
    };
    let centers = opts.centers.clone().unwrap_or_else(|| default_centers(mu));
    let mut results = Vec::with_capacity(eps_list.len());
    for (ei, &eps) in eps_list.iter().enumerate() {
        let ke = necessity_kernel(k, eps)?;
        let bound = c_prime * eps.powf(-alpha);
        let balls: Result<Vec<BallResult>> = centers
            .par_iter()
            .enumerate()
            .map(|(ci, c)| {
                let seed = opts.seed ^ ((ei as u64) << 32) ^ ci as u64;
                run_ball(&ke, mu, nu, c, eps, bound, p, alpha, c_prime, opts.pairs_per_ball, seed)
            })
            .collect();
        let balls = balls?;
        results.push(EpsResult {
            eps: eps.to_f64_lossy(),
            bound: bound.to_f64_lossy(),
            violations: balls.iter().map(|b| b.violations).sum(),
            pairs_checked: balls.iter().map(|b| b.pairs_checked).sum(),
            max_ap_value: balls.iter().map(|b| b.ap_value).fold(0.0, f64::max),
            max_measured: balls.iter().map(|b| b.measured).fold(0.0, f64::max),
            balls,
        });
    }
    let (restricted_norm, ap_constant) = if opts.restricted {
        let r = restricted_norm_heuristic(k, mu, nu, p, &opts.norm)?.value.to_f64_lossy();
        let scan = BallScan::default_for(mu, nu);
        let a = ap_alpha_constant(mu, nu, p, alpha, &scan)?.constant.to_f64_lossy();
        (Some(r), Some(a))
    } else {
        (None, None)
    };
    let ratio = match (restricted_norm, ap_constant) {
        (Some(r), Some(a)) if a > 0.0 => Some(r / a),
        _ => None,
    };
    let upper_bound = match (schur_bound, restricted_norm) {
        (Some(s), Some(r)) => Some(2.0 * s * r),
        _ => None,
    };
    Ok(NecessityReport {
        p: p.to_f64_lossy(),
        alpha: alpha.to_f64_lossy(),
        degree: d.to_f64_lossy(),
        sphere_inf: inf.to_f64_lossy(),
        c_prime: c_prime.to_f64_lossy(),
        schur_bound,
        schur_error,
        results,
        restricted_norm,
        ap_constant,
        ratio,
        upper_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{make_cauchy, make_riesz_generalized};
    use crate::measure::generators::{ball_uniform, lebesgue_grid};

    #[test]
    fn lebesgue_unit_interval() {
        let h = 2f64.powi(-8);
        let m = lebesgue_grid(1, 0.0, 1.0, h).unwrap();
        let scan = BallScan::default_for(&m, &m);
        let r = ap_alpha_constant(&m, &m, 2.0, 1.0, &scan).unwrap();
        // interior ball of radius r has mass 2r: value (2r)^{-1} 2r = 1,
        // up to one cell, i.e. h / 2r
        assert!(r.constant >= 1.0 - 1e-12 && r.constant <= 1.5, "{}", r.constant);
        let coarse = BallScan {
            centers: scan.centers.clone(),
            radii: scan.radii.iter().copied().filter(|&x| x >= 8.0 * h).collect(),
        };
        let c = ap_alpha_constant(&m, &m, 2.0, 1.0, &coarse).unwrap();
        assert!((c.constant - 1.0).abs() <= h / (2.0 * c.witness_radius) + 1e-12, "{}", c.constant);
        assert!((r.reevaluate(&m, &m) - r.constant).abs() <= 1e-12 * r.constant);
        // quadrature oracle on a ball well above the grid scale
        let big = BallScan { centers: vec![vec![0.5]], radii: vec![0.25] };
        let v = ap_alpha_constant(&m, &m, 2.0, 1.0, &big).unwrap().constant;
        assert!((v - 1.0).abs() < h / 0.25);
    }

    #[test]
    fn trivial_cases() {
        let a = DiscreteMeasure::atoms(1, vec![vec![0.0]], vec![1.0]).unwrap();
        let scan = BallScan { centers: vec![vec![0.0]], radii: vec![1.0] };
        for alpha in [0.5, 1.0, 2.0] {
            let r = ap_alpha_constant(&a, &a, 2.0, alpha, &scan).unwrap();
            assert!((r.constant - 2f64.powf(-alpha)).abs() < 1e-15);
        }
        let z = DiscreteMeasure::<f64>::empty(1);
        assert_eq!(ap_alpha_constant(&a, &z, 2.0, 1.0, &scan).unwrap().constant, 0.0);
        let empty = BallScan::<f64> { centers: vec![], radii: vec![1.0] };
        assert!(ap_alpha_constant(&a, &a, 2.0, 1.0, &empty).is_err());
        assert!(ap_alpha_constant(&a, &a, 1.0, 1.0, &scan).is_err());
    }

    #[test]
    fn homogeneity_examples() {
        let id = |x: &[f64], o: &mut [f64]| o.copy_from_slice(x);
        assert!(homogeneity_check(id, 2, 2, 1.0, 200, 1).max_deviation < 1e-14);
        let one = |_: &[f64], o: &mut [f64]| o[0] = 1.0;
        assert_eq!(homogeneity_check(one, 1, 2, 0.0, 200, 1).max_deviation, 0.0);
        let unit = |x: &[f64], o: &mut [f64]| {
            let n = norm2(x);
            o.iter_mut().zip(x).for_each(|(a, &b)| *a = b / n);
        };
        let r = homogeneity_check(unit, 2, 2, 1.0, 200, 1);
        let (c, _) = r.worst.clone().unwrap();
        assert!((r.max_deviation - (1.0 / c - 1.0).abs()).abs() < 1e-12);
        assert!(r.max_deviation > 0.5);
    }

    #[test]
    fn necessity_cauchy_disk() {
        let mu = ball_uniform(&[0.0, 0.0], 0.25, 0.25 / 5.0, 1.0).unwrap();
        let opts = NecessityOptions {
            centers: Some(vec![vec![0.0, 0.0]]),
            restricted: false,
            ..NecessityOptions::default()
        };
        let rep = necessity_experiment(&make_cauchy(), &mu, &mu, 2.0, 1.0, &[0.25, 0.125], &opts).unwrap();
        assert!((rep.c_prime - 1.0).abs() < 1e-12);
        for e in &rep.results {
            assert_eq!(e.violations, 0);
            assert!(e.pairs_checked > 0);
            assert!(e.balls.iter().all(|b| b.chain_holds));
        }
        let s = rep.schur_bound.unwrap();
        assert!(s.is_finite() && s > 0.0);
    }

    #[test]
    fn necessity_riesz_pointwise() {
        // Riesz alpha = d = 1 in the plane: K_eps = |x|^{-1} eps^{-1} |x| = 1/eps inside 2 eps
        let k = make_riesz_generalized(1.0, 2).unwrap();
        let mu = ball_uniform(&[0.0, 0.0], 1.0, 0.05, 1.0).unwrap();
        let opts = NecessityOptions {
            centers: Some(vec![vec![0.0, 0.0], vec![0.5, 0.0]]),
            restricted: false,
            ..NecessityOptions::default()
        };
        let rep = necessity_experiment(&k, &mu, &mu, 2.0, 1.0, &[0.3], &opts).unwrap();
        assert_eq!(rep.results[0].violations, 0);
        assert!(rep.results[0].balls.iter().all(|b| b.pairs_checked == 1000));
    }

    #[test]
    fn necessity_preconditions() {
        let mu = ball_uniform(&[0.0, 0.0], 1.0, 0.25, 1.0).unwrap();
        let opts = NecessityOptions::default();
        // alpha < d
        assert!(matches!(
            necessity_experiment(&make_cauchy(), &mu, &mu, 2.0, 0.5, &[0.5], &opts),
            Err(Error::Parameter(_))
        ));
        // A(r) = r^{-1.5} r^{-1} misses r^{-1-2} for large r
        let k = make_riesz_generalized(1.5, 2).unwrap();
        assert!(matches!(
            necessity_experiment(&k, &mu, &mu, 2.0, 2.0, &[0.5], &opts),
            Err(Error::Hypothesis(_))
        ));
    }
}
