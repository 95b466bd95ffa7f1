//! Restricted bilinear forms, restricted norms and operator norms on
//! discrete measures, and the factor-2 comparison between them.
//!
//! On finite supports two sets are separated exactly when they share no
//! point, so the restricted norm only has to decide, for each point that
//! lies in both supports, which side it goes to. Block norms are monotone
//! in the blocks, so the supremum is attained at one of those `2^c`
//! assignments.

pub mod linalg;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{materialize, materialize_masked, Diagonal, KernelMatrix, KernelSpec, ValueKind};
use crate::measure::{common_atoms, DiscreteMeasure};
use crate::scalar::{dist, norm2, Real};
use crate::splitter::{SeparatedPartition, Side};

pub use linalg::{lp_norm, ratio, SolverOptions};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct BilinearFormResult<T> {
    /// One component per kernel value component.
    pub value: Vec<T>,
    /// Distance between the supports of `f` and `g` (infinite if either is empty).
    pub separation: T,
}

/// `sum_i sum_j K(s_i, t_j) f(t_j) g(s_i) mu_j nu_i` for scalar `f`, `g`.
pub fn bilinear_form<T: Real>(
    k: &KernelSpec<T>,
    f: &[T],
    g: &[T],
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
) -> Result<BilinearFormResult<T>> {
    if f.len() != mu.len() || g.len() != nu.len() {
        return Err(Error::Input("f and g must have one value per support point".into()));
    }
    if mu.dimension() != k.dimension || nu.dimension() != k.dimension {
        return Err(Error::Input("kernel and measure dimensions differ".into()));
    }
    let fs: Vec<usize> = (0..mu.len()).filter(|&j| f[j] != T::zero()).collect();
    let gs: Vec<usize> = (0..nu.len()).filter(|&i| g[i] != T::zero()).collect();
    let mut separation = T::infinity();
    let mut closest = None;
    for &i in &gs {
        for &j in &fs {
            let d = dist(nu.point(i), mu.point(j));
            if d < separation {
                separation = d;
                closest = Some((i, j));
            }
        }
    }
    if separation == T::zero() && k.diagonal == Diagonal::Singular {
        let (i, j) = closest.expect("zero distance implies a pair");
        return Err(Error::Separation {
            s: nu.point(i).iter().map(|v| v.to_f64_lossy()).collect(),
            t: mu.point(j).iter().map(|v| v.to_f64_lossy()).collect(),
        });
    }
    let m = k.value_dim();
    let partial: Result<Vec<Vec<T>>> = gs
        .par_iter()
        .map(|&i| {
            let mut acc = vec![T::zero(); m];
            let mut out = vec![T::zero(); m];
            for &j in &fs {
                k.evaluate_into(nu.point(i), mu.point(j), &mut out)?;
                let c = f[j] * mu.weight(j);
                acc.iter_mut().zip(&out).for_each(|(a, &v)| *a += v * c);
            }
            let c = g[i] * nu.weight(i);
            Ok(acc.into_iter().map(|v| v * c).collect())
        })
        .collect();
    let mut value = vec![T::zero(); m];
    for row in partial? {
        value.iter_mut().zip(row).for_each(|(a, v)| *a += v);
    }
    Ok(BilinearFormResult { value, separation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    RestrictedExact,
    RestrictedHeuristic,
    OperatorExactP2,
    OperatorLowerP,
}

/// `f` on `supp mu` and `g` on `supp nu`, blockwise (`in` and `out`
/// components per point). Zero outside the witness supports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Witness<T> {
    pub f: Vec<T>,
    pub g: Vec<T>,
    pub f_support: Vec<usize>,
    pub g_support: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct NormEstimate<T> {
    pub value: T,
    pub kind: NormKind,
    pub p: T,
    pub witness: Witness<T>,
    pub iterations: usize,
}

impl<T: Real> NormEstimate<T> {
    /// Recomputes `|<T f, g>| / (||f||_p ||g||_{p'})` from the witness.
    pub fn reevaluate(&self, k: &KernelMatrix<T>, mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> T {
        ratio(k, mu.weights(), nu.weights(), &self.witness.f, &self.witness.g, self.p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    pub solver: SolverOptions,
    /// Largest `|supp mu| + |supp nu|` accepted by the exact enumeration.
    pub cap: usize,
    /// Random cuts tried by the heuristic.
    pub trials: usize,
    /// Rounds of best-single-flip ascent in the heuristic.
    pub ascent_rounds: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            solver: SolverOptions::default(),
            cap: 24,
            trials: 64,
            ascent_rounds: 8,
            seed: 0,
        }
    }
}

fn check_p<T: Real>(p: T) -> Result<()> {
    if !(p > T::one() && p.is_finite()) {
        return Err(Error::Parameter(format!("p must lie in (1, inf), got {p}")));
    }
    Ok(())
}

fn check_shape<T: Real>(k: &KernelMatrix<T>, mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<()> {
    if k.cols != mu.len() || k.rows != nu.len() {
        return Err(Error::Input(format!(
            "matrix is {}x{} but measures have {} and {} points",
            k.rows,
            k.cols,
            nu.len(),
            mu.len()
        )));
    }
    Ok(())
}

struct Block<T> {
    value: T,
    f: Vec<T>,
    g: Vec<T>,
    iterations: usize,
}

/// Norm of the block on `rows x cols`, with witness vectors on the block.
fn block_norm<T: Real>(
    k: &KernelMatrix<T>,
    mu: &[T],
    nu: &[T],
    rows: &[usize],
    cols: &[usize],
    p: T,
    opts: &SolverOptions,
) -> Result<Block<T>> {
    let (bo, bi) = k.block_shape();
    let sub = k.submatrix(rows, cols);
    let mw: Vec<T> = cols.iter().map(|&j| mu[j]).collect();
    let nw: Vec<T> = rows.iter().map(|&i| nu[i]).collect();
    if p == T::of(2.0) {
        let b = sub.weighted_dense(&mw, &nw);
        let s = linalg::top_singular(&b, rows.len() * bo, cols.len() * bi, opts)?;
        let f = s.right.iter().enumerate().map(|(a, &v)| v / mw[a / bi].sqrt()).collect();
        let g = s.left.iter().enumerate().map(|(a, &v)| v / nw[a / bo].sqrt()).collect();
        Ok(Block { value: s.value, f, g, iterations: s.iterations })
    } else {
        let r = linalg::p_norm(&sub, &mw, &nw, p, opts)?;
        Ok(Block { value: r.value, f: r.f, g: r.g, iterations: r.iterations })
    }
}

fn expand<T: Real>(v: &[T], keep: &[usize], comps: usize, points: usize) -> Vec<T> {
    let mut out = vec![T::zero(); points * comps];
    for (a, &idx) in keep.iter().enumerate() {
        out[idx * comps..(idx + 1) * comps].copy_from_slice(&v[a * comps..(a + 1) * comps]);
    }
    out
}

fn estimate<T: Real>(k: &KernelMatrix<T>, b: Block<T>, rows: Vec<usize>, cols: Vec<usize>, kind: NormKind, p: T) -> NormEstimate<T> {
    let (bo, bi) = k.block_shape();
    NormEstimate {
        value: b.value,
        kind,
        p,
        witness: Witness {
            f: expand(&b.f, &cols, bi, k.cols),
            g: expand(&b.g, &rows, bo, k.rows),
            f_support: cols,
            g_support: rows,
        },
        iterations: b.iterations,
    }
}

fn require_unmasked<T: Real>(k: &KernelMatrix<T>) -> Result<()> {
    if k.masked {
        if let Some(&(row, col)) = k.coincident.first() {
            return Err(Error::DiagonalSingularity { row, col });
        }
    }
    Ok(())
}

/// Exact `L^2(mu) -> L^2(nu)` norm (largest singular value of
/// `diag(sqrt nu) K diag(sqrt mu)`).
pub fn operator_norm_p2<T: Real>(
    k: &KernelMatrix<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    opts: &SolverOptions,
) -> Result<NormEstimate<T>> {
    check_shape(k, mu, nu)?;
    require_unmasked(k)?;
    let rows: Vec<usize> = (0..k.rows).collect();
    let cols: Vec<usize> = (0..k.cols).collect();
    let b = block_norm(k, mu.weights(), nu.weights(), &rows, &cols, T::of(2.0), opts)?;
    Ok(estimate(k, b, rows, cols, NormKind::OperatorExactP2, T::of(2.0)))
}

/// Certified lower bound on the `L^p(mu) -> L^p(nu)` norm.
pub fn operator_norm_p<T: Real>(
    k: &KernelMatrix<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    opts: &SolverOptions,
) -> Result<NormEstimate<T>> {
    check_p(p)?;
    check_shape(k, mu, nu)?;
    require_unmasked(k)?;
    let r = linalg::p_norm(k, mu.weights(), nu.weights(), p, opts)?;
    let rows: Vec<usize> = (0..k.rows).collect();
    let cols: Vec<usize> = (0..k.cols).collect();
    let b = Block { value: r.value, f: r.f, g: r.g, iterations: r.iterations };
    Ok(estimate(k, b, rows, cols, NormKind::OperatorLowerP, p))
}

/// `side[c] == true` sends coincident pair `c` to the `g` side.
fn assignment_blocks<T: Real>(k: &KernelMatrix<T>, side: &[bool]) -> (Vec<usize>, Vec<usize>) {
    let mut drop_row = vec![false; k.rows];
    let mut drop_col = vec![false; k.cols];
    for (&(i, j), &to_g) in k.coincident.iter().zip(side) {
        if to_g {
            drop_col[j] = true;
        } else {
            drop_row[i] = true;
        }
    }
    (
        (0..k.rows).filter(|&i| !drop_row[i]).collect(),
        (0..k.cols).filter(|&j| !drop_col[j]).collect(),
    )
}

fn evaluate_assignment<T: Real>(
    k: &KernelMatrix<T>,
    mu: &[T],
    nu: &[T],
    side: &[bool],
    p: T,
    opts: &SolverOptions,
) -> Result<(Block<T>, Vec<usize>, Vec<usize>)> {
    let (rows, cols) = assignment_blocks(k, side);
    let b = block_norm(k, mu, nu, &rows, &cols, p, opts)?;
    Ok((b, rows, cols))
}

fn mask_bits(mask: u64, c: usize) -> Vec<bool> {
    (0..c).map(|b| mask >> b & 1 == 1).collect()
}

/// Restricted norm by enumerating every side assignment of the shared
/// support points. `k` must record its coincident pairs (use
/// [`materialize_masked`]).
pub fn restricted_norm_exact_matrix<T: Real>(
    k: &KernelMatrix<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    opts: &NormOptions,
) -> Result<NormEstimate<T>> {
    check_p(p)?;
    check_shape(k, mu, nu)?;
    let points = mu.len() + nu.len();
    if points > opts.cap {
        return Err(Error::CapExceeded { points, cap: opts.cap });
    }
    let c = k.coincident.len();
    let results: Vec<Result<(Block<T>, Vec<usize>, Vec<usize>)>> = (0..1u64 << c)
        .into_par_iter()
        .map(|mask| evaluate_assignment(k, mu.weights(), nu.weights(), &mask_bits(mask, c), p, &opts.solver))
        .collect();
    let mut best: Option<(Block<T>, Vec<usize>, Vec<usize>)> = None;
    for r in results {
        let r = r?;
        if best.as_ref().map_or(true, |b| r.0.value > b.0.value) {
            best = Some(r);
        }
    }
    let (b, rows, cols) = best.expect("at least one assignment");
    Ok(estimate(k, b, rows, cols, NormKind::RestrictedExact, p))
}

/// Exact restricted norm of `K` on small measures (at most `opts.cap`
/// support points in total).
pub fn restricted_norm_exact<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    opts: &NormOptions,
) -> Result<NormEstimate<T>> {
    let points = mu.len() + nu.len();
    if points > opts.cap {
        return Err(Error::CapExceeded { points, cap: opts.cap });
    }
    let m = materialize_masked(k, mu, nu)?;
    restricted_norm_exact_matrix(&m, mu, nu, p, opts)
}

fn random_cut(shared: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Vec<bool> {
    let n = shared.len();
    let dim = shared[0].len();
    let flip = rng.gen::<bool>();
    let side: Vec<bool> = if rng.gen::<bool>() {
        let mut u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        u.iter_mut().for_each(|x| *x /= nu);
        let proj: Vec<f64> = shared.iter().map(|x| x.iter().zip(&u).map(|(a, b)| a * b).sum()).collect();
        let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let thr = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        proj.iter().map(|&v| v > thr).collect()
    } else {
        let c = &shared[rng.gen_range(0..n)];
        let d: Vec<f64> = shared
            .iter()
            .map(|x| x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect();
        let far = d.iter().cloned().fold(0.0, f64::max);
        let r = if far > 0.0 { rng.gen_range(0.0..far) } else { 0.0 };
        d.iter().map(|&v| v <= r).collect()
    };
    side.into_iter().map(|s| s ^ flip).collect()
}

/// Lower bound on the restricted norm from random hyperplane and ball cuts
/// of the shared support points, refined by single-flip ascent.
pub fn restricted_norm_heuristic_matrix<T: Real>(
    k: &KernelMatrix<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    opts: &NormOptions,
) -> Result<NormEstimate<T>> {
    check_p(p)?;
    check_shape(k, mu, nu)?;
    let c = k.coincident.len();
    let (mw, nw) = (mu.weights(), nu.weights());
    if c == 0 {
        let (b, rows, cols) = evaluate_assignment(k, mw, nw, &[], p, &opts.solver)?;
        return Ok(estimate(k, b, rows, cols, NormKind::RestrictedHeuristic, p));
    }
    let shared: Vec<Vec<f64>> = k
        .coincident
        .iter()
        .map(|&(i, _)| nu.point(i).iter().map(|v| v.to_f64_lossy()).collect())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut candidates: Vec<Vec<bool>> = vec![vec![false; c], vec![true; c]];
    for _ in 0..opts.trials {
        candidates.push(random_cut(&shared, &mut rng));
    }
    let scored: Vec<Result<T>> = candidates
        .par_iter()
        .map(|side| evaluate_assignment(k, mw, nw, side, p, &opts.solver).map(|r| r.0.value))
        .collect();
    let mut best_idx = 0;
    let mut best_val = T::neg_infinity();
    for (i, v) in scored.into_iter().enumerate() {
        let v = v?;
        if v > best_val {
            best_val = v;
            best_idx = i;
        }
    }
    let mut side = candidates.swap_remove(best_idx);
    let mut order: Vec<usize> = (0..c).collect();
    order.shuffle(&mut rng);
    for _ in 0..opts.ascent_rounds {
        let flips: Vec<Result<(usize, T)>> = order
            .par_iter()
            .map(|&a| {
                let mut s = side.clone();
                s[a] = !s[a];
                evaluate_assignment(k, mw, nw, &s, p, &opts.solver).map(|r| (a, r.0.value))
            })
            .collect();
        let mut gain: Option<(usize, T)> = None;
        for f in flips {
            let (a, v) = f?;
            let threshold = gain.map_or(best_val * (T::one() + T::of(1e-12)), |g| g.1);
            if v > threshold {
                gain = Some((a, v));
            }
        }
        match gain {
            Some((a, v)) => {
                side[a] = !side[a];
                best_val = v;
            }
            None => break,
        }
    }
    let (b, rows, cols) = evaluate_assignment(k, mw, nw, &side, p, &opts.solver)?;
    Ok(estimate(k, b, rows, cols, NormKind::RestrictedHeuristic, p))
}

pub fn restricted_norm_heuristic<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    opts: &NormOptions,
) -> Result<NormEstimate<T>> {
    let m = materialize_masked(k, mu, nu)?;
    restricted_norm_heuristic_matrix(&m, mu, nu, p, opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Factor2Report<T> {
    pub restricted: NormEstimate<T>,
    pub operator: NormEstimate<T>,
    /// `operator / restricted`; absent when the restricted norm is 0.
    pub ratio: Option<T>,
    /// `operator <= 2 restricted` up to floating tolerance.
    pub holds: bool,
}

/// Compares the operator norm with the restricted norm for measures
/// without common atoms.
pub fn factor2_check<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    p: T,
    opts: &NormOptions,
) -> Result<Factor2Report<T>> {
    check_p(p)?;
    let shared = common_atoms(mu, nu);
    if !shared.is_empty() {
        return Err(Error::CommonAtoms {
            points: shared
                .into_iter()
                .map(|pt| pt.0.into_iter().map(|v| v.to_f64_lossy()).collect())
                .collect(),
        });
    }
    let full = materialize(k, mu, nu, None)?;
    let operator = if p == T::of(2.0) {
        operator_norm_p2(&full, mu, nu, &opts.solver)?
    } else {
        operator_norm_p(&full, mu, nu, p, &opts.solver)?
    };
    let mut masked = materialize_masked(k, mu, nu)?;
    if masked.coincident.is_empty() {
        masked = full;
    }
    let restricted = if mu.len() + nu.len() <= opts.cap {
        restricted_norm_exact_matrix(&masked, mu, nu, p, opts)?
    } else {
        restricted_norm_heuristic_matrix(&masked, mu, nu, p, opts)?
    };
    let tol = T::of(1e-12) + T::of(1e-9) * operator.value;
    let holds = operator.value <= T::of(2.0) * restricted.value + tol;
    let ratio = if restricted.value > T::zero() {
        Some(operator.value / restricted.value)
    } else {
        None
    };
    Ok(Factor2Report { restricted, operator, ratio, holds })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionLevel {
    pub level: u32,
    /// `<T P1 f, P2 g>`.
    pub pairing: f64,
    /// `<T f, g> / 4`.
    pub quarter: f64,
    pub deviation: f64,
    /// `deviation / (||f||_2 ||g||_2)`.
    pub relative_deviation: f64,
    /// `||P1 f||_p / ||f||_p`.
    pub norm_ratio: f64,
    pub norm_target: f64,
    pub norm_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionReport {
    pub p: f64,
    pub levels: Vec<ProjectionLevel>,
    /// Least-squares slope of `log2(relative_deviation)` against `-level`.
    pub decay_exponent: Option<f64>,
}

fn pairing<T: Real>(k: &KernelSpec<T>, sigma: &DiscreteMeasure<T>, f: &[T], g: &[T]) -> Result<f64> {
    let fs: Vec<usize> = (0..sigma.len()).filter(|&j| f[j] != T::zero()).collect();
    let rows: Result<Vec<f64>> = (0..sigma.len())
        .into_par_iter()
        .filter(|&i| g[i] != T::zero())
        .map(|i| {
            let mut out = [T::zero()];
            let mut acc = 0.0;
            for &j in &fs {
                k.evaluate_into(sigma.point(i), sigma.point(j), &mut out)
                    .map_err(|_| Error::DiagonalSingularity { row: i, col: j })?;
                acc += (out[0] * f[j] * sigma.weight(j)).to_f64_lossy();
            }
            Ok(acc * (g[i] * sigma.weight(i)).to_f64_lossy())
        })
        .collect();
    Ok(rows?.iter().sum())
}

/// Deviation of `<T P1_n f, P2_n g>` from `<T f, g>/4` and of
/// `||P1_n f||_p` from `2^{-1/p} ||f||_p` across partition levels, where
/// `P^k_n` multiplies by the indicator of `E^k_n`.
pub fn projection_convergence_test<T: Real>(
    k: &KernelSpec<T>,
    sigma: &DiscreteMeasure<T>,
    f: &[T],
    g: &[T],
    partitions: &[SeparatedPartition<T>],
    p: T,
) -> Result<ProjectionReport> {
    check_p(p)?;
    if k.values != ValueKind::Real(1) {
        return Err(Error::Unsupported("projection test needs a scalar kernel".into()));
    }
    if f.len() != sigma.len() || g.len() != sigma.len() {
        return Err(Error::Input("f and g must have one value per support point".into()));
    }
    let w = sigma.weights();
    let full = pairing(k, sigma, f, g)?;
    let nf = lp_norm(f, 1, w, p).to_f64_lossy();
    let nf2 = lp_norm(f, 1, w, T::of(2.0)).to_f64_lossy();
    let ng2 = lp_norm(g, 1, w, T::of(2.0)).to_f64_lossy();
    let target = 2f64.powf(-1.0 / p.to_f64_lossy());
    let mut levels = Vec::with_capacity(partitions.len());
    for part in partitions {
        let sides: Vec<Option<Side>> = sigma.points().map(|x| part.side_of(x)).collect();
        let pf: Vec<T> = f
            .iter()
            .zip(&sides)
            .map(|(&v, s)| if *s == Some(Side::E1) { v } else { T::zero() })
            .collect();
        let pg: Vec<T> = g
            .iter()
            .zip(&sides)
            .map(|(&v, s)| if *s == Some(Side::E2) { v } else { T::zero() })
            .collect();
        let pr = pairing(k, sigma, &pf, &pg)?;
        let quarter = full / 4.0;
        let deviation = (pr - quarter).abs();
        let ratio = if nf > 0.0 { lp_norm(&pf, 1, w, p).to_f64_lossy() / nf } else { 0.0 };
        levels.push(ProjectionLevel {
            level: part.level,
            pairing: pr,
            quarter,
            deviation,
            relative_deviation: deviation / (nf2 * ng2).max(f64::MIN_POSITIVE),
            norm_ratio: ratio,
            norm_target: target,
            norm_deviation: (ratio - target).abs(),
        });
    }
    let pts: Vec<(f64, f64)> = levels
        .iter()
        .filter(|l| l.relative_deviation > 0.0)
        .map(|l| (l.level as f64, l.relative_deviation.log2()))
        .collect();
    let decay_exponent = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let den: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        Some(-num / den)
    } else {
        None
    };
    Ok(ProjectionReport {
        p: p.to_f64_lossy(),
        levels,
        decay_exponent,
    })
}

/// Euclidean length of every block of a witness vector.
pub fn pointwise_magnitudes<T: Real>(v: &[T], comps: usize) -> Vec<T> {
    v.chunks_exact(comps).map(norm2).collect()
}
