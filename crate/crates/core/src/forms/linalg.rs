//! Dense operator-norm solvers on weighted spaces.
//!
//! An operator `T : L^p(mu; R^in) -> L^p(nu; R^out)` is stored as a
//! [`KernelMatrix`] plus the two weight vectors. Pointwise values are
//! measured with the Euclidean norm.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::KernelMatrix;
use crate::scalar::{dot, norm2, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target for the top singular pair.
    pub tol: f64,
    pub max_restarts: usize,
    /// Krylov dimension per restart.
    pub krylov: usize,
    /// Restarts of the nonlinear power method for `p != 2`.
    pub seeds: usize,
    pub max_p_iterations: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-10,
            max_restarts: 500,
            krylov: 40,
            seeds: 16,
            max_p_iterations: 2000,
            seed: 0x5eed,
        }
    }
}

/// Top singular triple of a dense row-major matrix.
#[derive(Clone, Debug)]
pub struct Singular<T> {
    pub value: T,
    /// Right vector (unit).
    pub right: Vec<T>,
    /// Left vector (unit), `B right / value`.
    pub left: Vec<T>,
    pub iterations: usize,
}

fn matvec<T: Real>(b: &[T], rows: usize, cols: usize, x: &[T], out: &mut [T]) {
    if rows * cols >= 1 << 16 {
        out.par_iter_mut().enumerate().for_each(|(i, o)| *o = dot(&b[i * cols..(i + 1) * cols], x));
    } else {
        for (i, o) in out.iter_mut().enumerate() {
            *o = dot(&b[i * cols..(i + 1) * cols], x);
        }
    }
}

fn matvec_t<T: Real>(b: &[T], rows: usize, cols: usize, y: &[T], out: &mut [T]) {
    out.iter_mut().for_each(|v| *v = T::zero());
    for i in 0..rows {
        let yi = y[i];
        if yi == T::zero() {
            continue;
        }
        for (o, &v) in out.iter_mut().zip(&b[i * cols..(i + 1) * cols]) {
            *o += v * yi;
        }
    }
}

fn normalize<T: Real>(v: &mut [T]) -> T {
    let n = norm2(v);
    if n > T::zero() {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// Largest singular value of `B` via restarted Lanczos on `B^T B` with full
/// reorthogonalization: a Krylov-accelerated power iteration.
pub fn top_singular<T: Real>(b: &[T], rows: usize, cols: usize, opts: &SolverOptions) -> Result<Singular<T>> {
    if rows == 0 || cols == 0 || b.iter().all(|&v| v == T::zero()) {
        return Ok(Singular {
            value: T::zero(),
            right: unit(cols),
            left: unit(rows),
            iterations: 0,
        });
    }
    let tol = T::solver_tol(opts.tol);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut start: Vec<T> = (0..cols).map(|_| T::of(rng.gen_range(0.5..1.5))).collect();
    normalize(&mut start);
    let kdim = opts.krylov.max(2).min(cols);
    let mut tmp = vec![T::zero(); rows];
    let apply_g = |x: &[T], tmp: &mut Vec<T>, out: &mut Vec<T>| {
        matvec(b, rows, cols, x, tmp);
        matvec_t(b, rows, cols, tmp, out);
    };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    for _ in 0..opts.max_restarts {
        let mut basis: Vec<Vec<T>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let mut w = vec![T::zero(); cols];
        let mut exhausted = false;
        for j in 0..kdim {
            apply_g(&basis[j], &mut tmp, &mut w);
            iterations += 1;
            let a = dot(&basis[j], &w);
            alpha.push(a.to_f64_lossy());
            for _ in 0..2 {
                for v in &basis {
                    let c = dot(v, &w);
                    w.iter_mut().zip(v).for_each(|(x, &y)| *x -= c * y);
                }
            }
            let bnorm = norm2(&w);
            if j + 1 == kdim {
                beta.push(bnorm.to_f64_lossy());
                break;
            }
            if bnorm <= T::epsilon() * T::of(16.0) * a.abs().max(T::min_positive_value()) {
                exhausted = true;
                beta.push(0.0);
                break;
            }
            beta.push(bnorm.to_f64_lossy());
            basis.push(w.iter().map(|&x| x / bnorm).collect());
        }
        let k = alpha.len();
        let mut tri = DMatrix::<f64>::zeros(k, k);
        for i in 0..k {
            tri[(i, i)] = alpha[i];
            if i + 1 < k {
                tri[(i, i + 1)] = beta[i];
                tri[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(tri);
        let (top, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let y = eig.eigenvectors.column(top);
        let mut x = vec![T::zero(); cols];
        for (i, v) in basis.iter().enumerate().take(k) {
            let c = T::of(y[i]);
            x.iter_mut().zip(v).for_each(|(a, &b)| *a += c * b);
        }
        normalize(&mut x);
        let mut gx = vec![T::zero(); cols];
        apply_g(&x, &mut tmp, &mut gx);
        let theta = dot(&x, &gx);
        let r: Vec<T> = gx.iter().zip(&x).map(|(&g, &v)| g - theta * v).collect();
        residual = (norm2(&r) / theta.abs().max(T::min_positive_value())).to_f64_lossy();
        start = x;
        if residual <= tol.to_f64_lossy() || exhausted || kdim == cols && k == cols {
            let mut left = vec![T::zero(); rows];
            matvec(b, rows, cols, &start, &mut left);
            let value = normalize(&mut left);
            return Ok(Singular {
                value,
                right: start,
                left,
                iterations,
            });
        }
    }
    Err(Error::NonConvergence { iterations, residual })
}

fn unit<T: Real>(n: usize) -> Vec<T> {
    let mut v = vec![T::zero(); n];
    if n > 0 {
        v[0] = T::one();
    }
    v
}

/// Pointwise Euclidean magnitudes of a block vector.
fn magnitudes<T: Real>(v: &[T], comps: usize) -> Vec<T> {
    v.chunks_exact(comps).map(norm2).collect()
}

/// `(sum_j |v_j|^p w_j)^{1/p}` with `|v_j|` the Euclidean norm of block `j`.
pub fn lp_norm<T: Real>(v: &[T], comps: usize, w: &[T], p: T) -> T {
    let s: T = magnitudes(v, comps)
        .iter()
        .zip(w)
        .map(|(&m, &wi)| if m == T::zero() { T::zero() } else { m.powf(p) * wi })
        .sum();
    s.powf(p.recip())
}

/// Duality map `v -> |v|^{q-2} v` applied blockwise.
fn duality<T: Real>(v: &[T], comps: usize, q: T) -> Vec<T> {
    let mut out = v.to_vec();
    for blk in out.chunks_exact_mut(comps) {
        let m = norm2(blk);
        let c = if m == T::zero() { T::zero() } else { m.powf(q - T::of(2.0)) };
        blk.iter_mut().for_each(|x| *x *= c);
    }
    out
}

/// Result of the nonlinear power method.
#[derive(Clone, Debug)]
pub struct PNorm<T> {
    pub value: T,
    pub f: Vec<T>,
    pub g: Vec<T>,
    pub iterations: usize,
}

/// Value `|<T f, g>| / (||f||_p ||g||_{p'})`.
pub fn ratio<T: Real>(k: &KernelMatrix<T>, mu: &[T], nu: &[T], f: &[T], g: &[T], p: T) -> T {
    let (bo, bi) = k.block_shape();
    let tf = k.apply(f, mu);
    let pairing: T = tf
        .chunks_exact(bo)
        .zip(g.chunks_exact(bo))
        .zip(nu)
        .map(|((a, b), &w)| dot(a, b) * w)
        .sum();
    let q = p / (p - T::one());
    let nf = lp_norm(f, bi, mu, p);
    let ng = lp_norm(g, bo, nu, q);
    if nf == T::zero() || ng == T::zero() {
        return T::zero();
    }
    pairing.abs() / (nf * ng)
}

fn boyd_run<T: Real>(
    k: &KernelMatrix<T>,
    mu: &[T],
    nu: &[T],
    p: T,
    mut f: Vec<T>,
    max_iter: usize,
) -> PNorm<T> {
    let (bo, bi) = k.block_shape();
    let q = p / (p - T::one());
    let mut best = PNorm {
        value: T::zero(),
        f: f.clone(),
        g: vec![T::zero(); k.rows * bo],
        iterations: 0,
    };
    let stall = T::of(1e-14);
    let mut flat = 0;
    for it in 0..max_iter {
        let nf = lp_norm(&f, bi, mu, p);
        if nf == T::zero() {
            break;
        }
        f.iter_mut().for_each(|x| *x /= nf);
        let y = k.apply(&f, mu);
        let ny = lp_norm(&y, bo, nu, p);
        if ny == T::zero() {
            break;
        }
        let mut g = duality(&y, bo, p);
        let ng = lp_norm(&g, bo, nu, q);
        g.iter_mut().for_each(|x| *x /= ng);
        if ny > best.value {
            if ny - best.value <= stall * ny {
                flat += 1;
            } else {
                flat = 0;
            }
            best = PNorm {
                value: ny,
                f: f.clone(),
                g: g.clone(),
                iterations: it + 1,
            };
        } else {
            flat += 1;
        }
        if flat >= 5 {
            break;
        }
        let z = k.apply_adjoint(&g, nu);
        f = duality(&z, bi, q);
    }
    best
}

/// Lower bound on the `L^p(mu) -> L^p(nu)` norm: best of several runs of the
/// nonlinear power method (top `p = 2` vector, positive vector, random
/// signs). Ties go to the earlier seed.
pub fn p_norm<T: Real>(
    k: &KernelMatrix<T>,
    mu: &[T],
    nu: &[T],
    p: T,
    opts: &SolverOptions,
) -> Result<PNorm<T>> {
    if !(p > T::one() && p.is_finite()) {
        return Err(Error::Parameter(format!("p must lie in (1, inf), got {p}")));
    }
    let (bo, bi) = k.block_shape();
    let n = k.cols * bi;
    if n == 0 || k.rows == 0 {
        return Ok(PNorm {
            value: T::zero(),
            f: vec![T::zero(); n],
            g: vec![T::zero(); k.rows * bo],
            iterations: 0,
        });
    }
    let b = k.weighted_dense(mu, nu);
    let top = top_singular(&b, k.rows * bo, n, opts)?;
    let mut starts: Vec<Vec<T>> = Vec::with_capacity(opts.seeds.max(2));
    starts.push(
        top.right
            .iter()
            .enumerate()
            .map(|(i, &v)| v / mu[i / bi].sqrt())
            .collect(),
    );
    starts.push(vec![T::one(); n]);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x9e37_79b9);
    while starts.len() < opts.seeds.max(2) {
        starts.push((0..n).map(|_| if rng.gen::<bool>() { T::one() } else { -T::one() }).collect());
    }
    let runs: Vec<PNorm<T>> = starts
        .into_par_iter()
        .map(|f| boyd_run(k, mu, nu, p, f, opts.max_p_iterations))
        .collect();
    let mut best = runs[0].clone();
    for r in runs.into_iter().skip(1) {
        if r.value > best.value {
            best = r;
        }
    }
    Ok(best)
}
