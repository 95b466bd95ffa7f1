//! Singular kernels, their materialization on discrete supports, and the
//! classical catalog (Hilbert, Cauchy, generalized Riesz, Ahlfors-Beurling).
//!
//! Values are real vectors. A [`ValueKind::Complex`] kernel stores `(re, im)`
//! and acts on `(Re f, Im f)` by the matching 2x2 real block; a
//! [`ValueKind::Real`] kernel with `m` components maps scalar functions to
//! `R^m`-valued ones.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::mollifiers::Multiplier;
use crate::scalar::{dist, norm2, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueKind {
    Real(usize),
    Complex,
}

impl ValueKind {
    /// Number of stored real components.
    pub fn len(self) -> usize {
        match self {
            ValueKind::Real(m) => m,
            ValueKind::Complex => 2,
        }
    }

    /// `(output components, input components)` of one matrix block.
    pub fn block_shape(self) -> (usize, usize) {
        match self {
            ValueKind::Real(m) => (m, 1),
            ValueKind::Complex => (2, 2),
        }
    }

    /// Writes the real block of a stored value, row-major.
    pub fn block<T: Real>(self, v: &[T], out: &mut [T]) {
        match self {
            ValueKind::Real(_) => out.copy_from_slice(v),
            ValueKind::Complex => {
                out[0] = v[0];
                out[1] = -v[1];
                out[2] = v[1];
                out[3] = v[0];
            }
        }
    }
}

pub type PairFn<T> = Arc<dyn Fn(&[T], &[T], &mut [T]) + Send + Sync>;
pub type RadialFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type SphereFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// `K_1(x) = A(|x|) B(x/|x|)`. With `degree = d` the same kernel reads
/// `A(|x|) |x|^{-d} * (|x|^d B(x/|x|))`, the homogeneous form used by the
/// necessity experiment.
#[derive(Clone)]
pub struct ConvolutionProfile<T> {
    pub radial: RadialFn<T>,
    pub angular: SphereFn<T>,
    pub degree: T,
}

impl<T: Real> ConvolutionProfile<T> {
    pub fn eval(&self, x: &[T], out: &mut [T]) {
        let r = norm2(x);
        let theta: Vec<T> = x.iter().map(|&v| v / r).collect();
        (self.angular)(&theta, out);
        let a = (self.radial)(r);
        out.iter_mut().for_each(|v| *v *= a);
    }

    /// Radial factor of the homogeneous reading, `A(r) r^{-d}`.
    pub fn homogeneous_radial(&self, r: T) -> T {
        (self.radial)(r) * r.powf(-self.degree)
    }

    /// Homogeneous factor `B_hom(x) = |x|^d B(x/|x|)`.
    pub fn homogeneous_angular(&self, x: &[T], out: &mut [T]) {
        let r = norm2(x);
        let theta: Vec<T> = x.iter().map(|&v| v / r).collect();
        (self.angular)(&theta, out);
        let c = r.powf(self.degree);
        out.iter_mut().for_each(|v| *v *= c);
    }
}

/// How a kernel is evaluated at `s == t`.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagonal<T> {
    /// Singular on the diagonal; coincident points are an error.
    Singular,
    /// The evaluator itself is finite there.
    Evaluate,
    /// Fixed value, e.g. zero after multiplying by a vanishing multiplier.
    Fixed(Vec<T>),
}

/// A (possibly vector valued) kernel `K(s, t)` on `R^N`.
#[derive(Clone)]
pub struct KernelSpec<T> {
    pub name: String,
    pub dimension: usize,
    pub values: ValueKind,
    pub order: T,
    eval: PairFn<T>,
    pub diagonal: Diagonal<T>,
    pub profile: Option<ConvolutionProfile<T>>,
}

impl<T: Real> fmt::Debug for KernelSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSpec")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("values", &self.values)
            .field("order", &self.order)
            .field("diagonal", &self.diagonal)
            .field("profile", &self.profile.is_some())
            .finish()
    }
}

impl<T: Real> KernelSpec<T> {
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        values: ValueKind,
        order: T,
        eval: impl Fn(&[T], &[T], &mut [T]) + Send + Sync + 'static,
    ) -> Self {
        KernelSpec {
            name: name.into(),
            dimension,
            values,
            order,
            eval: Arc::new(eval),
            diagonal: Diagonal::Singular,
            profile: None,
        }
    }

    /// Convolution kernel `K(s, t) = K_1(t - s)` given by a profile.
    pub fn from_profile(
        name: impl Into<String>,
        dimension: usize,
        values: ValueKind,
        order: T,
        profile: ConvolutionProfile<T>,
    ) -> Self {
        let p = profile.clone();
        let mut k = Self::new(name, dimension, values, order, move |s, t, out| {
            let x: Vec<T> = t.iter().zip(s).map(|(&a, &b)| a - b).collect();
            p.eval(&x, out);
        });
        k.profile = Some(profile);
        k
    }

    /// Scalar kernel that is finite everywhere, including the diagonal.
    pub fn bounded(
        name: impl Into<String>,
        dimension: usize,
        eval: impl Fn(&[T], &[T]) -> T + Send + Sync + 'static,
    ) -> Self {
        let mut k = Self::new(name, dimension, ValueKind::Real(1), T::zero(), move |s, t, out| {
            out[0] = eval(s, t)
        });
        k.diagonal = Diagonal::Evaluate;
        k
    }

    /// Constant scalar kernel.
    pub fn constant(dimension: usize, c: T) -> Self {
        Self::bounded("constant", dimension, move |_, _| c)
    }

    pub fn value_dim(&self) -> usize {
        self.values.len()
    }

    /// Raw evaluator, without the diagonal policy.
    pub fn evaluator(&self) -> &PairFn<T> {
        &self.eval
    }

    pub fn evaluate_into(&self, s: &[T], t: &[T], out: &mut [T]) -> Result<()> {
        if s == t {
            match &self.diagonal {
                Diagonal::Evaluate => (self.eval)(s, t, out),
                Diagonal::Fixed(d) => out.copy_from_slice(d),
                Diagonal::Singular => {
                    return Err(Error::DiagonalSingularity { row: 0, col: 0 });
                }
            }
        } else {
            (self.eval)(s, t, out);
        }
        Ok(())
    }

    /// `K(s, t)` for `s != t` (or on the diagonal when a policy is set).
    pub fn evaluate(&self, s: &[T], t: &[T]) -> Result<Vec<T>> {
        let mut out = vec![T::zero(); self.value_dim()];
        self.evaluate_into(s, t, &mut out)?;
        Ok(out)
    }

    pub fn is_finite_on_diagonal(&self) -> bool {
        self.diagonal != Diagonal::Singular
    }

    /// Same kernel with a fixed value on `s == t`.
    pub fn with_diagonal(mut self, value: Vec<T>) -> Result<Self> {
        if value.len() != self.value_dim() {
            return Err(Error::Input("diagonal value has wrong length".into()));
        }
        self.diagonal = Diagonal::Fixed(value);
        Ok(self)
    }

    /// Pointwise scalar multiple.
    pub fn scaled(&self, c: T) -> Self {
        let inner = self.eval.clone();
        let mut k = self.clone();
        k.name = format!("{}*{}", c, self.name);
        k.eval = Arc::new(move |s, t, out| {
            inner(s, t, out);
            out.iter_mut().for_each(|v| *v *= c);
        });
        if let Diagonal::Fixed(d) = &self.diagonal {
            k.diagonal = Diagonal::Fixed(d.iter().map(|&v| v * c).collect());
        }
        if let Some(p) = &self.profile {
            let r = p.radial.clone();
            k.profile = Some(ConvolutionProfile {
                radial: Arc::new(move |x| r(x) * c),
                angular: p.angular.clone(),
                degree: p.degree,
            });
        }
        k
    }
}

/// `K(s, t) = 1 / (pi (s - t))` on the line.
pub fn make_hilbert<T: Real>() -> KernelSpec<T> {
    let mut k = KernelSpec::new("hilbert", 1, ValueKind::Real(1), T::one(), |s, t, out| {
        out[0] = (T::PI() * (s[0] - t[0])).recip();
    });
    // K_1(x) = -1/(pi x) with x = t - s
    k.profile = Some(ConvolutionProfile {
        radial: Arc::new(|r: T| (T::PI() * r).recip()),
        angular: Arc::new(|th: &[T], out: &mut [T]| out[0] = -th[0]),
        degree: T::one(),
    });
    k
}

/// `K_1(z) = 1/z = conj(z) / |z|^2` on the plane.
pub fn make_cauchy<T: Real>() -> KernelSpec<T> {
    let profile = ConvolutionProfile {
        radial: Arc::new(|r: T| r.recip()),
        angular: Arc::new(|th: &[T], out: &mut [T]| {
            out[0] = th[0];
            out[1] = -th[1];
        }),
        degree: T::one(),
    };
    KernelSpec::from_profile("cauchy", 2, ValueKind::Complex, T::one(), profile)
}

/// `K_1(x) = x / |x|^{alpha + 1}` on `R^N`, order `alpha`.
pub fn make_riesz_generalized<T: Real>(alpha: T, dimension: usize) -> Result<KernelSpec<T>> {
    if !(alpha > T::zero()) || !alpha.is_finite() {
        return Err(Error::Parameter(format!("riesz alpha must be positive, got {alpha}")));
    }
    if dimension == 0 {
        return Err(Error::Parameter("riesz dimension must be positive".into()));
    }
    let profile = ConvolutionProfile {
        radial: Arc::new(move |r: T| r.powf(-alpha)),
        angular: Arc::new(|th: &[T], out: &mut [T]| out.copy_from_slice(th)),
        degree: T::one(),
    };
    Ok(KernelSpec::from_profile(
        format!("riesz(alpha={alpha},n={dimension})"),
        dimension,
        ValueKind::Real(dimension),
        alpha,
        profile,
    ))
}

/// `K_1(z) = 1/z^2 = conj(z)^2 / |z|^4` on the plane.
pub fn make_ahlfors_beurling<T: Real>() -> KernelSpec<T> {
    let profile = ConvolutionProfile {
        radial: Arc::new(|r: T| (r * r).recip()),
        angular: Arc::new(|th: &[T], out: &mut [T]| {
            out[0] = th[0] * th[0] - th[1] * th[1];
            out[1] = -(th[0] + th[0]) * th[1];
        }),
        degree: T::of(2.0),
    };
    KernelSpec::from_profile("ahlfors_beurling", 2, ValueKind::Complex, T::of(2.0), profile)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderReport {
    /// Empirical sup of `|K(s,t)| |s-t|^d`.
    pub sup: f64,
    /// Indices of sample pairs where the tilde kernel exceeds the cap.
    pub offending: Vec<usize>,
    /// Pairs with `s == t`, which are skipped.
    pub skipped: Vec<usize>,
}

/// Near-diagonal sup of `|K(s,t)| |s-t|^d` over the sample pairs.
pub fn order_check<T: Real>(k: &KernelSpec<T>, samples: &[(Vec<T>, Vec<T>)], cap: f64) -> OrderReport {
    let mut report = OrderReport {
        sup: 0.0,
        offending: Vec::new(),
        skipped: Vec::new(),
    };
    let mut out = vec![T::zero(); k.value_dim()];
    for (i, (s, t)) in samples.iter().enumerate() {
        let r = dist(s, t);
        if r == T::zero() {
            report.skipped.push(i);
            continue;
        }
        (k.eval)(s, t, &mut out);
        let v = (norm2(&out) * r.powf(k.order)).to_f64_lossy();
        if v > report.sup || v.is_nan() {
            report.sup = v;
        }
        if !(v <= cap) {
            report.offending.push(i);
        }
    }
    report
}

/// `min(K, R)` for a scalar nonnegative kernel; the diagonal becomes `R`.
pub fn clamp<T: Real>(k: &KernelSpec<T>, r: T) -> Result<KernelSpec<T>> {
    if k.values != ValueKind::Real(1) {
        return Err(Error::Unsupported("clamp needs a scalar kernel".into()));
    }
    if !(r > T::zero()) {
        return Err(Error::Parameter("clamp level must be positive".into()));
    }
    if r == T::infinity() {
        return Ok(k.clone());
    }
    let inner = k.eval.clone();
    let mut out = KernelSpec::new(format!("clamp({},{r})", k.name), k.dimension, k.values, k.order, move |s, t, o| {
        inner(s, t, o);
        o[0] = o[0].min(r);
    });
    out.diagonal = match &k.diagonal {
        Diagonal::Evaluate => Diagonal::Evaluate,
        Diagonal::Fixed(d) => Diagonal::Fixed(vec![d[0].min(r)]),
        Diagonal::Singular => Diagonal::Fixed(vec![r]),
    };
    Ok(out)
}

/// Dense kernel values on `supp nu x supp mu` (rows are `s_i`, columns `t_j`).
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub values: ValueKind,
    entries: Vec<T>,
    /// `(row, col)` pairs whose support points coincide. When present in a
    /// masked materialization their entries are zero and must not be used.
    pub coincident: Vec<(usize, usize)>,
    pub masked: bool,
}

impl<T: Real> KernelMatrix<T> {
    /// Matrix from raw entries (`rows * cols * values.len()`, row-major).
    pub fn from_entries(rows: usize, cols: usize, values: ValueKind, entries: Vec<T>) -> Result<Self> {
        if entries.len() != rows * cols * values.len() {
            return Err(Error::Input(format!(
                "expected {} entries, got {}",
                rows * cols * values.len(),
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("kernel matrix has non-finite entries".into()));
        }
        Ok(KernelMatrix {
            rows,
            cols,
            values,
            entries,
            coincident: Vec::new(),
            masked: false,
        })
    }

    /// Scalar matrix from a row-major array.
    pub fn scalar(rows: usize, cols: usize, entries: Vec<T>) -> Result<Self> {
        Self::from_entries(rows, cols, ValueKind::Real(1), entries)
    }

    pub fn entry(&self, i: usize, j: usize) -> &[T] {
        let m = self.values.len();
        let at = (i * self.cols + j) * m;
        &self.entries[at..at + m]
    }

    pub fn entries(&self) -> &[T] {
        &self.entries
    }

    pub fn block_shape(&self) -> (usize, usize) {
        self.values.block_shape()
    }

    /// Entrywise `a * self + b * other` (same shape and coincidence mask).
    pub fn combine(&self, a: T, other: &Self, b: T) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols || self.values != other.values {
            return Err(Error::Input("kernel matrix shapes differ".into()));
        }
        let mut out = self.clone();
        for (x, &y) in out.entries.iter_mut().zip(&other.entries) {
            *x = a * *x + b * y;
        }
        for c in &other.coincident {
            if !out.coincident.contains(c) {
                out.coincident.push(*c);
            }
        }
        out.coincident.sort_unstable();
        out.masked |= other.masked;
        Ok(out)
    }

    pub fn map_entries(&self, mut f: impl FnMut(usize, usize, &mut [T])) -> Self {
        let mut out = self.clone();
        let m = self.values.len();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let at = (i * self.cols + j) * m;
                f(i, j, &mut out.entries[at..at + m]);
            }
        }
        out
    }

    /// Restriction to the given rows and columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let m = self.values.len();
        let mut entries = Vec::with_capacity(rows.len() * cols.len() * m);
        for &i in rows {
            for &j in cols {
                entries.extend_from_slice(self.entry(i, j));
            }
        }
        let coincident = self
            .coincident
            .iter()
            .filter_map(|&(i, j)| {
                let a = rows.iter().position(|&r| r == i)?;
                let b = cols.iter().position(|&c| c == j)?;
                Some((a, b))
            })
            .collect();
        KernelMatrix {
            rows: rows.len(),
            cols: cols.len(),
            values: self.values,
            entries,
            coincident,
            masked: self.masked,
        }
    }

    /// Dense real matrix `diag(sqrt nu) K diag(sqrt mu)` of size
    /// `(rows*out) x (cols*in)`, row-major. This is the matrix of
    /// `T : L^2(mu) -> L^2(nu)` in orthonormal coordinates.
    pub fn weighted_dense(&self, mu: &[T], nu: &[T]) -> Vec<T> {
        let (bo, bi) = self.block_shape();
        let width = self.cols * bi;
        let mut out = vec![T::zero(); self.rows * bo * width];
        let mut blk = vec![T::zero(); bo * bi];
        for i in 0..self.rows {
            let si = nu[i].sqrt();
            for j in 0..self.cols {
                let sj = mu[j].sqrt();
                self.values.block(self.entry(i, j), &mut blk);
                for a in 0..bo {
                    for b in 0..bi {
                        out[(i * bo + a) * width + j * bi + b] = si * blk[a * bi + b] * sj;
                    }
                }
            }
        }
        out
    }

    /// `(T f)_i = sum_j K_ij f_j mu_j`; `f` has `cols * in` components.
    pub fn apply(&self, f: &[T], mu: &[T]) -> Vec<T> {
        let (bo, bi) = self.block_shape();
        let mut out = vec![T::zero(); self.rows * bo];
        let mut blk = vec![T::zero(); bo * bi];
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.values.block(self.entry(i, j), &mut blk);
                for a in 0..bo {
                    let mut acc = T::zero();
                    for b in 0..bi {
                        acc += blk[a * bi + b] * f[j * bi + b];
                    }
                    out[i * bo + a] += acc * mu[j];
                }
            }
        }
        out
    }

    /// `(T^* g)_j = sum_i K_ij^T g_i nu_i`, the adjoint for the pairing
    /// `<T f, g> = sum_i (T f)_i . g_i nu_i`.
    pub fn apply_adjoint(&self, g: &[T], nu: &[T]) -> Vec<T> {
        let (bo, bi) = self.block_shape();
        let mut out = vec![T::zero(); self.cols * bi];
        let mut blk = vec![T::zero(); bo * bi];
        for i in 0..self.rows {
            for j in 0..self.cols {
                self.values.block(self.entry(i, j), &mut blk);
                for b in 0..bi {
                    let mut acc = T::zero();
                    for a in 0..bo {
                        acc += blk[a * bi + b] * g[i * bo + a];
                    }
                    out[j * bi + b] += acc * nu[i];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

fn check_dims<T: Real>(k: &KernelSpec<T>, mu: &DiscreteMeasure<T>, nu: &DiscreteMeasure<T>) -> Result<()> {
    if mu.dimension() != k.dimension || nu.dimension() != k.dimension {
        return Err(Error::Input(format!(
            "kernel acts on R^{} but measures live in R^{} and R^{}",
            k.dimension,
            mu.dimension(),
            nu.dimension()
        )));
    }
    Ok(())
}

fn fill<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    mask: bool,
) -> Result<KernelMatrix<T>> {
    check_dims(k, mu, nu)?;
    let m = k.value_dim();
    let cols = mu.len();
    let rows: Vec<(Vec<T>, Vec<usize>)> = (0..nu.len())
        .into_par_iter()
        .map(|i| {
            let s = nu.point(i);
            let mut row = vec![T::zero(); cols * m];
            let mut hits = Vec::new();
            for j in 0..cols {
                let t = mu.point(j);
                let out = &mut row[j * m..(j + 1) * m];
                if s == t {
                    hits.push(j);
                    match &k.diagonal {
                        _ if mask => {}
                        Diagonal::Evaluate => (k.eval)(s, t, out),
                        Diagonal::Fixed(d) => out.copy_from_slice(d),
                        Diagonal::Singular => {}
                    }
                } else {
                    (k.eval)(s, t, out);
                }
            }
            (row, hits)
        })
        .collect();
    let mut entries = Vec::with_capacity(nu.len() * cols * m);
    let mut coincident = Vec::new();
    for (i, (row, hits)) in rows.into_iter().enumerate() {
        if !mask && k.diagonal == Diagonal::Singular {
            if let Some(&j) = hits.first() {
                return Err(Error::DiagonalSingularity { row: i, col: j });
            }
        }
        entries.extend(row);
        coincident.extend(hits.into_iter().map(|j| (i, j)));
    }
    if let Some(pos) = entries.iter().position(|v| !v.is_finite()) {
        let i = pos / (cols * m);
        let j = (pos / m) % cols;
        return Err(Error::Input(format!(
            "kernel {} is not finite at row {i}, col {j}",
            k.name
        )));
    }
    Ok(KernelMatrix {
        rows: nu.len(),
        cols,
        values: k.values,
        entries,
        coincident,
        masked: mask,
    })
}

/// Dense matrix of `K` (times the multiplier, if given) on `supp nu x supp mu`.
///
/// Coincident support points need a kernel that is finite on the diagonal,
/// which a multiplier vanishing at the origin provides.
pub fn materialize<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
    multiplier: Option<&Multiplier<T>>,
) -> Result<KernelMatrix<T>> {
    match multiplier {
        Some(m) => fill(&m.apply(k)?, mu, nu, false),
        None => fill(k, mu, nu, false),
    }
}

/// Like [`materialize`] but coincident entries are zero-filled and listed in
/// `coincident` instead of raising an error. Used by restricted norms, which
/// never pair a point with itself.
pub fn materialize_masked<T: Real>(
    k: &KernelSpec<T>,
    mu: &DiscreteMeasure<T>,
    nu: &DiscreteMeasure<T>,
) -> Result<KernelMatrix<T>> {
    fill(k, mu, nu, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn rand_point(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| r.gen_range(-3.0..3.0)).collect()
    }

    #[test]
    fn hilbert_values() {
        let h = make_hilbert::<f64>();
        assert_eq!(h.evaluate(&[1.0], &[0.0]).unwrap()[0], 1.0 / std::f64::consts::PI);
        assert_eq!(h.evaluate(&[0.0], &[1.0]).unwrap()[0], -1.0 / std::f64::consts::PI);
        let mut r = rng();
        for _ in 0..100 {
            let (s, t) = (r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0));
            let v = h.evaluate(&[s], &[t]).unwrap()[0] * (s - t);
            assert!((v - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        }
    }

    #[test]
    fn cauchy_values() {
        let c = make_cauchy::<f64>();
        let z = [0.0, 0.0];
        assert_eq!(c.evaluate(&z, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let v = c.evaluate(&z, &[0.0, 1.0]).unwrap();
        assert!(v[0].abs() < 1e-16 && (v[1] + 1.0).abs() < 1e-16);
        let mut r = rng();
        for _ in 0..100 {
            let x = rand_point(&mut r, 2);
            let v = c.evaluate(&z, &x).unwrap();
            assert!((norm2(&v) * norm2(&x) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn riesz_values() {
        let k = make_riesz_generalized::<f64>(2.0, 2).unwrap();
        assert_eq!(k.evaluate(&[0.0, 0.0], &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert!(make_riesz_generalized::<f64>(0.0, 2).is_err());
        assert!(make_riesz_generalized::<f64>(-1.0, 2).is_err());
        let k = make_riesz_generalized::<f64>(1.7, 3).unwrap();
        let z = [0.0; 3];
        let mut r = rng();
        for _ in 0..100 {
            let x = rand_point(&mut r, 3);
            let v = k.evaluate(&z, &x).unwrap();
            assert!((norm2(&v) / norm2(&x).powf(-1.7) - 1.0).abs() < 1e-12);
            let c = r.gen_range(0.1..10.0);
            let cx: Vec<f64> = x.iter().map(|v| v * c).collect();
            let w = k.evaluate(&z, &cx).unwrap();
            for (a, b) in w.iter().zip(&v) {
                assert!((a - c.powf(-1.7) * b).abs() <= 1e-12 * b.abs().max(1e-300) + 1e-14);
            }
        }
    }

    #[test]
    fn ahlfors_beurling_values() {
        let k = make_ahlfors_beurling::<f64>();
        let z = [0.0, 0.0];
        assert_eq!(k.evaluate(&z, &[1.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let v = k.evaluate(&z, &[0.0, 1.0]).unwrap();
        assert!((v[0] + 1.0).abs() < 1e-15 && v[1].abs() < 1e-15);
        let mut r = rng();
        for _ in 0..100 {
            let x = rand_point(&mut r, 2);
            let v = k.evaluate(&z, &x).unwrap();
            assert!((norm2(&v) * norm2(&x).powi(2) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn order_check_cases() {
        let pairs: Vec<(Vec<f64>, Vec<f64>)> =
            (1..=6).map(|k| (vec![0.0], vec![10f64.powi(-k)])).collect();
        let h = make_hilbert::<f64>();
        let rep = order_check(&h, &pairs, 1.0);
        assert!((rep.sup - 1.0 / std::f64::consts::PI).abs() < 1e-14);
        assert!(rep.offending.is_empty());

        let rz = make_riesz_generalized::<f64>(1.0, 1).unwrap();
        assert!((order_check(&rz, &pairs, 2.0).sup - 1.0).abs() < 1e-14);

        let mut wrong = make_hilbert::<f64>();
        wrong.order = 0.5;
        let rep = order_check(&wrong, &pairs, 2.0);
        // |K| |s-t|^{1/2} = |s-t|^{-1/2} / pi
        assert!((rep.sup - 1e3 / std::f64::consts::PI).abs() < 1e-9);
        assert_eq!(rep.offending, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn clamp_cases() {
        let five = KernelSpec::constant(1, 5.0f64);
        let c = clamp(&five, 3.0).unwrap();
        assert_eq!(c.evaluate(&[0.0], &[1.0]).unwrap()[0], 3.0);
        let inv = KernelSpec::new("inv", 1, ValueKind::Real(1), 1.0f64, |s, t, o| {
            o[0] = (s[0] - t[0]).abs().recip()
        });
        let same = clamp(&inv, f64::INFINITY).unwrap();
        assert_eq!(same.evaluate(&[0.0], &[0.25]).unwrap()[0], 4.0);
        let c = clamp(&inv, 4.0).unwrap();
        assert_eq!(c.evaluate(&[0.0], &[0.25]).unwrap()[0], 4.0);
        assert_eq!(c.evaluate(&[0.0], &[0.125]).unwrap()[0], 4.0);
        assert_eq!(c.evaluate(&[0.0], &[0.5]).unwrap()[0], 2.0);
        assert_eq!(c.evaluate(&[0.0], &[0.0]).unwrap()[0], 4.0);
        assert!(matches!(clamp(&make_cauchy::<f64>(), 1.0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn materialize_errors_on_shared_points() {
        let g = crate::measure::generators::lebesgue_grid(1, 0.0, 1.0, 0.25).unwrap();
        let h = make_hilbert::<f64>();
        assert!(matches!(
            materialize(&h, &g, &g, None),
            Err(Error::DiagonalSingularity { row: 0, col: 0 })
        ));
        let m = materialize_masked(&h, &g, &g).unwrap();
        assert_eq!(m.coincident.len(), 4);
        assert_eq!(m.entry(1, 1), &[0.0]);
    }

    #[test]
    fn materialize_disjoint_is_finite() {
        let (a, b) = crate::measure::generators::interleaved_grids(2, 0.0, 1.0, 0.25).unwrap();
        let m = materialize(&make_cauchy::<f64>(), &a, &b, None).unwrap();
        assert!(m.entries().iter().all(|v| v.is_finite()));
        assert_eq!((m.rows, m.cols), (16, 16));
    }

    #[test]
    fn apply_matches_adjoint_pairing() {
        let mut r = rng();
        let k = make_cauchy::<f64>();
        let mu = crate::measure::generators::random_atoms(5, 2, 0.0, 1.0, &mut r).unwrap();
        let nu = crate::measure::generators::random_atoms(4, 2, 2.0, 3.0, &mut r).unwrap();
        let m = materialize(&k, &mu, &nu, None).unwrap();
        let f: Vec<f64> = (0..10).map(|_| r.gen_range(-1.0..1.0)).collect();
        let g: Vec<f64> = (0..8).map(|_| r.gen_range(-1.0..1.0)).collect();
        let tf = m.apply(&f, mu.weights());
        let lhs: f64 = (0..4).map(|i| (tf[2 * i] * g[2 * i] + tf[2 * i + 1] * g[2 * i + 1]) * nu.weight(i)).sum();
        let tg = m.apply_adjoint(&g, nu.weights());
        let rhs: f64 = (0..5).map(|j| (tg[2 * j] * f[2 * j] + tg[2 * j + 1] * f[2 * j + 1]) * mu.weight(j)).sum();
        assert!((lhs - rhs).abs() < 1e-12 * lhs.abs().max(1.0));
    }
}
