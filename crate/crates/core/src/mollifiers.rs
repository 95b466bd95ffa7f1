//! Mollifying multipliers `M_eps(s, t) = m((t - s) / eps)` and certified
//! bounds on their Schur norms.
//!
//! A multiplier `m = 1 - rho_hat` has Schur norm at most `1 + ||rho||_1`, the
//! Wiener norm of `1 - m` being `||rho||_1`. That norm is estimated with an
//! FFT: sample `1 - m` on `[-L, L)^N` with `M` points per axis, invert, and
//! sum. With `rho_hat(s) = int rho(x) e^{-i s.x} dx` the spacing factors
//! combine into `||rho||_1 ~ M^{-N} sum_k |IDFT(f)_k|`.

use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{Diagonal, KernelSpec, ValueKind};
use crate::scalar::{norm2, Real};
use crate::smooth::smooth_step;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailType {
    /// `1 - m` has compact support.
    OneMinusCompact,
    /// `1 - m` is the transform of an integrable function.
    OneMinusIntegrable,
}

pub type ProfileFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// Cut-off profile `m` on `R^N`, real or complex valued.
#[derive(Clone)]
pub struct Mollifier<T> {
    pub name: String,
    pub dimension: usize,
    /// `Real(1)` or `Complex`.
    pub values: ValueKind,
    profile: ProfileFn<T>,
    /// `m` vanishes on `|x| < vanishing_radius`.
    pub vanishing_radius: T,
    /// `m(x) = O(|x|^k)` at the origin.
    pub vanishing_order: u32,
    pub tail: TailType,
    /// Length scale of `1 - m`; sets the default FFT window.
    pub scale: T,
    /// `Some((base, k))` when this profile is `base^k`.
    pub power_of: Option<(Arc<Mollifier<T>>, u32)>,
}

impl<T: Real> std::fmt::Debug for Mollifier<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mollifier")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("values", &self.values)
            .field("vanishing_radius", &self.vanishing_radius)
            .field("vanishing_order", &self.vanishing_order)
            .field("tail", &self.tail)
            .finish()
    }
}

impl<T: Real> Mollifier<T> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        dimension: usize,
        values: ValueKind,
        vanishing_radius: T,
        vanishing_order: u32,
        tail: TailType,
        scale: T,
        profile: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Parameter("mollifier dimension must be positive".into()));
        }
        if !matches!(values, ValueKind::Real(1) | ValueKind::Complex) {
            return Err(Error::Unsupported("mollifier values must be scalar or complex".into()));
        }
        Ok(Mollifier {
            name: name.into(),
            dimension,
            values,
            profile: Arc::new(profile),
            vanishing_radius,
            vanishing_order,
            tail,
            scale,
            power_of: None,
        })
    }

    pub fn eval_into(&self, x: &[T], out: &mut [T]) {
        (self.profile)(x, out)
    }

    /// `m(x)` as a complex number (imaginary part 0 for real profiles).
    pub fn eval(&self, x: &[T]) -> Complex<T> {
        let mut out = [T::zero(); 2];
        (self.profile)(x, &mut out[..self.values.len()]);
        Complex::new(out[0], out[1])
    }

    pub fn is_complex(&self) -> bool {
        self.values == ValueKind::Complex
    }
}

/// `m(x) = 1 - exp(-|x|^2 / 2)`.
pub fn gaussian_mollifier<T: Real>(dimension: usize) -> Result<Mollifier<T>> {
    Mollifier::new(
        "gaussian",
        dimension,
        ValueKind::Real(1),
        T::zero(),
        2,
        TailType::OneMinusIntegrable,
        T::one(),
        |x, out| {
            let r2: T = x.iter().map(|&v| v * v).sum();
            out[0] = -(-r2 / T::of(2.0)).exp_m1();
        },
    )
}

/// `m(s) = s / (s - i)` on the line; `1 - m = 1/(1 + i s)`.
pub fn complex_shift_mollifier<T: Real>() -> Mollifier<T> {
    Mollifier::new(
        "complex_shift",
        1,
        ValueKind::Complex,
        T::zero(),
        1,
        TailType::OneMinusIntegrable,
        T::one(),
        |x, out| {
            let s = x[0];
            let d = s * s + T::one();
            out[0] = s * s / d;
            out[1] = s / d;
        },
    )
    .expect("valid mollifier")
}

/// Radial profile equal to 0 on `|x| <= 1 - delta` and 1 on `|x| >= 1`,
/// joined by the smooth step.
pub fn smooth_annulus_mollifier<T: Real>(delta: T, dimension: usize) -> Result<Mollifier<T>> {
    if !(delta > T::zero() && delta < T::one()) {
        return Err(Error::Parameter(format!("annulus delta must lie in (0,1), got {delta}")));
    }
    let lo = T::one() - delta;
    Mollifier::new(
        format!("annulus(delta={delta})"),
        dimension,
        ValueKind::Real(1),
        lo,
        u32::MAX,
        TailType::OneMinusCompact,
        T::one(),
        move |x, out| out[0] = smooth_step((norm2(x) - lo) / delta),
    )
}

/// `m = 1` (no regularization).
pub fn identity_mollifier<T: Real>(dimension: usize) -> Result<Mollifier<T>> {
    Mollifier::new(
        "identity",
        dimension,
        ValueKind::Real(1),
        T::zero(),
        0,
        TailType::OneMinusCompact,
        T::one(),
        |_, out| out[0] = T::one(),
    )
}

/// Pointwise `m^k`.
pub fn multiplier_power<T: Real>(m: &Mollifier<T>, k: u32) -> Result<Mollifier<T>> {
    if k == 0 {
        return Err(Error::Parameter("power must be a positive integer".into()));
    }
    if k == 1 {
        return Ok(m.clone());
    }
    let (base, total) = match &m.power_of {
        Some((b, j)) => (b.clone(), j * k),
        None => (Arc::new(m.clone()), k),
    };
    let inner = m.profile.clone();
    let complex = m.is_complex();
    let mut out = Mollifier::new(
        format!("power({},{k})", m.name),
        m.dimension,
        m.values,
        m.vanishing_radius,
        m.vanishing_order.saturating_mul(k),
        m.tail,
        m.scale,
        move |x, o| {
            inner(x, o);
            if complex {
                let z = Complex::new(o[0], o[1]).powi(k as i32);
                o[0] = z.re;
                o[1] = z.im;
            } else {
                o[0] = o[0].powi(k as i32);
            }
        },
    )?;
    out.power_of = Some((base, total));
    Ok(out)
}

/// `M_eps(s, t) = m((t - s) / eps)`.
#[derive(Clone)]
pub struct Multiplier<T> {
    pub mollifier: Arc<Mollifier<T>>,
    pub eps: T,
}

impl<T: Real> std::fmt::Debug for Multiplier<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Multiplier")
            .field("mollifier", &self.mollifier.name)
            .field("eps", &self.eps)
            .finish()
    }
}

pub fn scale<T: Real>(m: &Mollifier<T>, eps: T) -> Result<Multiplier<T>> {
    if !(eps > T::zero() && eps.is_finite()) {
        return Err(Error::Parameter(format!("eps must be positive, got {eps}")));
    }
    Ok(Multiplier {
        mollifier: Arc::new(m.clone()),
        eps,
    })
}

impl<T: Real> Multiplier<T> {
    /// `scale(scale(m, a), b) = scale(m, a b)`.
    pub fn rescale(&self, b: T) -> Result<Self> {
        if !(b > T::zero()) {
            return Err(Error::Parameter("eps must be positive".into()));
        }
        Ok(Multiplier {
            mollifier: self.mollifier.clone(),
            eps: self.eps * b,
        })
    }

    pub fn vanishing_radius(&self) -> T {
        self.eps * self.mollifier.vanishing_radius
    }

    pub fn eval(&self, s: &[T], t: &[T]) -> Complex<T> {
        let x: Vec<T> = t.iter().zip(s).map(|(&a, &b)| (a - b) / self.eps).collect();
        self.mollifier.eval(&x)
    }

    /// Kernel `M_eps(s, t) K(s, t)`. Complex multipliers turn scalar kernels
    /// into complex ones and multiply complex kernels as complex numbers.
    pub fn apply(&self, k: &KernelSpec<T>) -> Result<KernelSpec<T>> {
        if k.dimension != self.mollifier.dimension {
            return Err(Error::Input("multiplier and kernel dimensions differ".into()));
        }
        let complex = self.mollifier.is_complex();
        let values = match (complex, k.values) {
            (false, v) => v,
            (true, ValueKind::Real(1)) | (true, ValueKind::Complex) => ValueKind::Complex,
            (true, ValueKind::Real(_)) => {
                return Err(Error::Unsupported(
                    "complex multiplier on a real vector kernel".into(),
                ))
            }
        };
        let kin = k.values;
        let inner = k.evaluator().clone();
        let me = self.clone();
        let mut out = KernelSpec::new(
            format!("{}*M[{};eps={}]", k.name, self.mollifier.name, self.eps),
            k.dimension,
            values,
            k.order,
            move |s, t, o| {
                let m = me.eval(s, t);
                let mut kv = [T::zero(); 2];
                match kin {
                    ValueKind::Real(1) | ValueKind::Complex => {
                        inner(s, t, &mut kv[..kin.len()]);
                        let z = m * Complex::new(kv[0], kv[1]);
                        o[0] = z.re;
                        if o.len() > 1 {
                            o[1] = z.im;
                        }
                    }
                    ValueKind::Real(_) => {
                        inner(s, t, o);
                        o.iter_mut().for_each(|v| *v *= m.re);
                    }
                }
            },
        );
        let origin = vec![T::zero(); k.dimension];
        let m0 = self.mollifier.eval(&origin);
        out.diagonal = if m0 == Complex::new(T::zero(), T::zero()) {
            Diagonal::Fixed(vec![T::zero(); values.len()])
        } else {
            match &k.diagonal {
                Diagonal::Singular => Diagonal::Singular,
                _ => Diagonal::Evaluate,
            }
        };
        Ok(out)
    }
}

/// FFT window: `[-half_width, half_width)^N` with `points` samples per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerGrid {
    pub half_width: f64,
    pub points: usize,
}

impl WienerGrid {
    /// Defaults for a function whose structure lives at length `scale`.
    pub fn default_for(dimension: usize, scale: f64) -> Self {
        match dimension {
            1 => WienerGrid { half_width: 16.0 * scale, points: 2048 },
            2 => WienerGrid { half_width: 4.0 * scale, points: 1024 },
            _ => WienerGrid { half_width: 4.0 * scale, points: 64 },
        }
    }

    pub fn scaled(self, factor: f64) -> Self {
        WienerGrid {
            half_width: self.half_width * factor,
            points: self.points,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0) || self.points < 4 || self.points % 2 != 0 {
            return Err(Error::Parameter(format!(
                "grid needs half_width > 0 and an even point count >= 4, got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerEstimate {
    pub value: f64,
    pub error_estimate: f64,
    pub grid: WienerGrid,
    /// A Gaussian window was applied because `f` does not decay inside the grid.
    pub windowed: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchurMethod {
    WienerDft,
    Sobolev,
    ExactFormula,
    /// Product of certified bounds of the factors.
    Composition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurBound {
    pub bound: f64,
    pub method: SchurMethod,
    pub grid: Option<WienerGrid>,
    pub error_estimate: f64,
}

struct Sampled<T> {
    data: Vec<Complex<T>>,
    windowed: bool,
}

fn sample_grid<T: Real, F>(f: &F, dimension: usize, grid: WienerGrid, window: Option<f64>) -> Result<Sampled<T>>
where
    F: Fn(&[T]) -> Complex<T> + Sync,
{
    let m = grid.points;
    let ds = 2.0 * grid.half_width / m as f64;
    let total = m.checked_pow(dimension as u32).ok_or_else(|| Error::Parameter("grid too large".into()))?;
    let axis: Vec<f64> = (0..m).map(|k| -grid.half_width + k as f64 * ds).collect();
    let mut data = vec![Complex::new(T::zero(), T::zero()); total];
    data.par_chunks_mut(m).enumerate().for_each(|(row, chunk)| {
        let mut idx = vec![0usize; dimension];
        let mut r = row;
        for a in (0..dimension.saturating_sub(1)).rev() {
            idx[a] = r % m;
            r /= m;
        }
        let mut x = vec![T::zero(); dimension];
        for (k, slot) in chunk.iter_mut().enumerate() {
            idx[dimension - 1] = k;
            let mut r2 = 0.0;
            for a in 0..dimension {
                x[a] = T::of(axis[idx[a]]);
                r2 += axis[idx[a]] * axis[idx[a]];
            }
            let mut v = f(&x);
            if let Some(sigma) = window {
                v = v * T::of((-r2 / (2.0 * sigma * sigma)).exp());
            }
            *slot = v;
        }
    });
    if data.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Input("function has non-finite samples on the grid".into()));
    }
    Ok(Sampled {
        data,
        windowed: window.is_some(),
    })
}

/// Largest modulus on the grid faces, relative to the overall max.
fn edge_ratio<T: Real>(data: &[Complex<T>], dimension: usize, m: usize) -> f64 {
    let mut max = 0.0f64;
    let mut edge = 0.0f64;
    for (lin, v) in data.iter().enumerate() {
        let a = v.norm().to_f64_lossy();
        max = max.max(a);
        let mut r = lin;
        let mut on_edge = false;
        for _ in 0..dimension {
            if r % m == 0 {
                on_edge = true;
            }
            r /= m;
        }
        if on_edge {
            edge = edge.max(a);
        }
    }
    if max == 0.0 {
        0.0
    } else {
        edge / max
    }
}

/// In-place unnormalized inverse DFT along every axis of an `m^N` array.
fn ifft_nd<T: Real>(data: &mut [Complex<T>], dimension: usize, m: usize) {
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft_inverse(m);
    for axis in 0..dimension {
        let stride = m.pow((dimension - 1 - axis) as u32);
        if stride == 1 {
            data.par_chunks_mut(m).for_each(|c| fft.process(c));
            continue;
        }
        let block = stride * m;
        data.par_chunks_mut(block).for_each(|blk| {
            let mut line = vec![Complex::new(T::zero(), T::zero()); m];
            for off in 0..stride {
                for k in 0..m {
                    line[k] = blk[off + k * stride];
                }
                fft.process(&mut line);
                for k in 0..m {
                    blk[off + k * stride] = line[k];
                }
            }
        });
    }
}

const EDGE_TOL: f64 = 1e-10;

/// `|rho(x_j)|` on the dual grid together with the dual spacing.
fn transform<T: Real, F>(f: &F, dimension: usize, grid: WienerGrid) -> Result<(Vec<f64>, f64, bool)>
where
    F: Fn(&[T]) -> Complex<T> + Sync,
{
    grid.validate()?;
    let m = grid.points;
    let mut s = sample_grid(f, dimension, grid, None)?;
    if edge_ratio(&s.data, dimension, m) > EDGE_TOL {
        s = sample_grid(f, dimension, grid, Some(grid.half_width / 8.0))?;
    }
    ifft_nd(&mut s.data, dimension, m);
    let ds = 2.0 * grid.half_width / m as f64;
    let c = (ds / (2.0 * std::f64::consts::PI)).powi(dimension as i32);
    let mags = s.data.iter().map(|v| v.norm().to_f64_lossy() * c).collect();
    let dx = std::f64::consts::PI / grid.half_width;
    Ok((mags, dx, s.windowed))
}

fn l1_on_grid<T: Real, F>(f: &F, dimension: usize, grid: WienerGrid) -> Result<(f64, bool)>
where
    F: Fn(&[T]) -> Complex<T> + Sync,
{
    let (mags, dx, windowed) = transform(f, dimension, grid)?;
    let sum: f64 = mags.iter().sum();
    Ok((sum * dx.powi(dimension as i32), windowed))
}

/// Estimate of `||f||_W = ||h||_1` where `f = h_hat`.
///
/// When `f` does not decay inside the grid a Gaussian window of width
/// `L/8` is applied; the estimate is then exact for `h >= 0` and a lower
/// estimate otherwise.
pub fn wiener_norm<T: Real, F>(f: F, dimension: usize, grid: WienerGrid) -> Result<WienerEstimate>
where
    F: Fn(&[T]) -> Complex<T> + Sync,
{
    if dimension == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    let (base, windowed) = l1_on_grid(&f, dimension, grid)?;
    let finer = WienerGrid { half_width: grid.half_width, points: 2 * grid.points };
    let wider = WienerGrid { half_width: 2.0 * grid.half_width, points: 2 * grid.points };
    let (a, _) = l1_on_grid(&f, dimension, finer)?;
    let (b, _) = l1_on_grid(&f, dimension, wider)?;
    Ok(WienerEstimate {
        value: base,
        error_estimate: (a - base).abs().max((b - base).abs()),
        grid,
        windowed,
    })
}

/// `1 - m` as a complex function.
fn one_minus<T: Real>(m: &Mollifier<T>) -> impl Fn(&[T]) -> Complex<T> + Sync + '_ {
    move |x: &[T]| Complex::new(T::one(), T::zero()) - m.eval(x)
}

fn default_grid<T: Real>(m: &Mollifier<T>) -> WienerGrid {
    WienerGrid::default_for(m.dimension, m.scale.to_f64_lossy())
}

const RELIABLE: f64 = 0.05;

/// `1 + ||1 - m||_W` by FFT, regardless of how `m` was built.
pub fn schur_bound_wiener<T: Real>(m: &Mollifier<T>, grid: Option<WienerGrid>) -> Result<SchurBound> {
    let grid = grid.unwrap_or_else(|| default_grid(m));
    let est = wiener_norm(one_minus(m), m.dimension, grid)?;
    if est.error_estimate > RELIABLE * est.value.max(1e-300) {
        return Err(Error::UnreliableEstimate {
            coarse: est.value,
            refined: est.value + est.error_estimate,
        });
    }
    Ok(SchurBound {
        bound: 1.0 + est.value,
        method: SchurMethod::WienerDft,
        grid: Some(grid),
        error_estimate: est.error_estimate,
    })
}

/// Certified Schur bound valid for every `M_eps` at once. Powers reuse the
/// bound of their base: `bound(m^k) = bound(m)^k`.
pub fn schur_bound<T: Real>(m: &Mollifier<T>, grid: Option<WienerGrid>) -> Result<SchurBound> {
    if let Some((base, k)) = &m.power_of {
        let b = schur_bound_wiener(base, grid)?;
        let k = *k as i32;
        return Ok(SchurBound {
            bound: b.bound.powi(k),
            method: SchurMethod::Composition,
            grid: b.grid,
            error_estimate: k as f64 * b.bound.powi(k - 1) * b.error_estimate,
        });
    }
    schur_bound_wiener(m, grid)
}

fn gamma_half_integer(n: usize) -> f64 {
    // Gamma(n / 2)
    let mut g = if n % 2 == 0 { 1.0 } else { std::f64::consts::PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while 2.0 * x < n as f64 {
        g *= x;
        x += 1.0;
    }
    g
}

/// `C(N, k) = (int_{R^N} (1 + |x|^k)^{-2} dx)^{1/2}`.
pub fn sobolev_constant(dimension: usize, k: u32) -> Result<f64> {
    if dimension == 0 || 2 * k as usize <= dimension {
        return Err(Error::Parameter(format!(
            "need k > N/2 for a finite constant (N={dimension}, k={k})"
        )));
    }
    let n = dimension as f64;
    let sphere = 2.0 * std::f64::consts::PI.powf(n / 2.0) / gamma_half_integer(dimension);
    let steps = 400_000;
    let h = 1.0 / steps as f64;
    let mut acc = 0.0;
    for i in 0..steps {
        let u = (i as f64 + 0.5) * h;
        let r = u / (1.0 - u);
        let jac = 1.0 / ((1.0 - u) * (1.0 - u));
        acc += r.powf(n - 1.0) * (1.0 + r.powi(k as i32)).powi(-2) * jac;
    }
    Ok((sphere * acc * h).sqrt())
}

fn weighted_l2<T: Real, F>(f: &F, dimension: usize, grid: WienerGrid, k: u32) -> Result<f64>
where
    F: Fn(&[T]) -> Complex<T> + Sync,
{
    let (mags, dx, _) = transform(f, dimension, grid)?;
    let m = grid.points;
    let mut acc = 0.0;
    for (lin, v) in mags.iter().enumerate() {
        let mut r = lin;
        let mut r2 = 0.0;
        for _ in 0..dimension {
            let j = r % m;
            r /= m;
            let jj = if j >= m / 2 { j as f64 - m as f64 } else { j as f64 };
            r2 += (jj * dx) * (jj * dx);
        }
        let w = 1.0 + r2.sqrt().powi(k as i32);
        acc += (w * v) * (w * v);
    }
    Ok((acc * dx.powi(dimension as i32)).sqrt())
}

/// `1 + C(N,k) ||(1 + |x|^k) rho||_2`, the Cauchy-Schwarz bound on
/// `||rho||_1`.
pub fn sobolev_bound<T: Real>(m: &Mollifier<T>, k: u32, grid: Option<WienerGrid>) -> Result<SchurBound> {
    let c = sobolev_constant(m.dimension, k)?;
    let grid = grid.unwrap_or_else(|| default_grid(m));
    let f = one_minus(m);
    let base = weighted_l2(&f, m.dimension, grid, k)?;
    let finer = weighted_l2(&f, m.dimension, WienerGrid { half_width: grid.half_width, points: 2 * grid.points }, k)?;
    Ok(SchurBound {
        bound: 1.0 + c * base,
        method: SchurMethod::Sobolev,
        grid: Some(grid),
        error_estimate: c * (finer - base).abs(),
    })
}

/// Samples of a function on the grid `origin + h * idx`, `idx` in
/// `[0, counts)^N`, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriddedFunction<T> {
    pub dimension: usize,
    pub origin: Vec<T>,
    pub spacing: T,
    pub counts: usize,
    pub values: Vec<T>,
}

impl<T: Real> GriddedFunction<T> {
    pub fn sample(origin: Vec<T>, spacing: T, counts: usize, f: impl Fn(&[T]) -> T) -> Result<Self> {
        let dimension = origin.len();
        if dimension == 0 || counts == 0 || !(spacing > T::zero()) {
            return Err(Error::Parameter("gridded function needs N >= 1, counts >= 1, h > 0".into()));
        }
        let total = counts.pow(dimension as u32);
        let mut values = Vec::with_capacity(total);
        let mut x = vec![T::zero(); dimension];
        for lin in 0..total {
            let mut r = lin;
            for a in (0..dimension).rev() {
                x[a] = origin[a] + T::of_usize(r % counts) * spacing;
                r /= counts;
            }
            values.push(f(&x));
        }
        Ok(GriddedFunction { dimension, origin, spacing, counts, values })
    }

    fn point(&self, lin: usize, x: &mut [T]) {
        let mut r = lin;
        for a in (0..self.dimension).rev() {
            x[a] = self.origin[a] + T::of_usize(r % self.counts) * self.spacing;
            r /= self.counts;
        }
    }

    fn cell(&self) -> T {
        self.spacing.powi(self.dimension as i32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moment {
    pub multi_index: Vec<u32>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    /// Predicted vanishing order of `M = 1 - rho_hat` at the origin.
    pub order: u32,
    pub mass: f64,
    pub moments: Vec<Moment>,
    /// `(s, |M(s)|)` along the first axis.
    pub samples: Vec<(f64, f64)>,
    pub fitted_slope: f64,
    /// The fitted slope is at least the predicted order (within 0.05).
    pub consistent: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentTolerances {
    pub mass: f64,
    pub moment: f64,
}

impl Default for MomentTolerances {
    fn default() -> Self {
        MomentTolerances { mass: 1e-3, moment: 1e-6 }
    }
}

fn multi_indices(dimension: usize, order: u32) -> Vec<Vec<u32>> {
    if dimension == 1 {
        return vec![vec![order]];
    }
    let mut out = Vec::new();
    for first in (0..=order).rev() {
        for mut rest in multi_indices(dimension - 1, order - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

pub const FIT_FREQUENCIES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Vanishing order of `1 - rho_hat` predicted from the moments of `rho`,
/// cross-checked by a log-log fit of `|M(s)|` near 0.
pub fn moment_order<T: Real>(rho: &GriddedFunction<T>, k: u32, tol: MomentTolerances) -> Result<MomentReport> {
    if k == 0 {
        return Err(Error::Parameter("k must be positive".into()));
    }
    let cell = rho.cell().to_f64_lossy();
    let n = rho.values.len();
    let mut pts = vec![T::zero(); rho.dimension];
    let coords: Vec<Vec<f64>> = (0..n)
        .map(|lin| {
            rho.point(lin, &mut pts);
            pts.iter().map(|v| v.to_f64_lossy()).collect()
        })
        .collect();
    let vals: Vec<f64> = rho.values.iter().map(|v| v.to_f64_lossy()).collect();
    let mass: f64 = vals.iter().sum::<f64>() * cell;
    if !((mass - 1.0).abs() <= tol.mass) {
        return Err(Error::Normalization { mass });
    }
    let mut moments = Vec::new();
    let mut order = k;
    'outer: for j in 1..k {
        let mut all_zero = true;
        for alpha in multi_indices(rho.dimension, j) {
            let v: f64 = coords
                .iter()
                .zip(&vals)
                .map(|(x, &r)| {
                    let mono: f64 = x.iter().zip(&alpha).map(|(&c, &e)| c.powi(e as i32)).product();
                    mono * r
                })
                .sum::<f64>()
                * cell;
            if v.abs() > tol.moment {
                all_zero = false;
            }
            moments.push(Moment { multi_index: alpha, value: v });
        }
        if !all_zero {
            order = j;
            break 'outer;
        }
    }
    let total: f64 = vals.iter().sum();
    let samples: Vec<(f64, f64)> = FIT_FREQUENCIES
        .iter()
        .map(|&s| {
            // 1 - e^{-i s x} = 2 sin^2(s x / 2) + i sin(s x)
            let (mut re, mut im) = (0.0, 0.0);
            for (x, &r) in coords.iter().zip(&vals) {
                let h = 0.5 * s * x[0];
                re += 2.0 * h.sin() * h.sin() * r;
                im += (s * x[0]).sin() * r;
            }
            (s, (re * re + im * im).sqrt() / total)
        })
        .collect();
    let fitted_slope = fit_slope(&samples);
    Ok(MomentReport {
        order,
        mass,
        moments,
        samples,
        fitted_slope,
        consistent: fitted_slope >= order as f64 - 0.05,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::make_hilbert;
    use rand::{Rng, SeedableRng};

    #[test]
    fn gaussian_profile() {
        let g = gaussian_mollifier::<f64>(2).unwrap();
        assert_eq!(g.eval(&[0.0, 0.0]).re, 0.0);
        for r in [1e-2, 1e-3, 1e-4] {
            let v = g.eval(&[r, 0.0]).re / (r * r);
            assert!((v - 0.5).abs() < 1e-4);
        }
    }

    #[test]
    fn gaussian_schur_bound_is_two() {
        let g = gaussian_mollifier::<f64>(1).unwrap();
        let b = schur_bound(&g, None).unwrap();
        assert!((b.bound - 2.0).abs() < 1e-3, "{b:?}");
        assert_eq!(b.method, SchurMethod::WienerDft);
    }

    #[test]
    fn gaussian_wiener_at_spec_grid() {
        let est = wiener_norm(
            |x: &[f64]| Complex::new((-x[0] * x[0] / 2.0).exp(), 0.0),
            1,
            WienerGrid { half_width: 20.0, points: 1024 },
        )
        .unwrap();
        assert!((est.value - 1.0).abs() < 1e-3);
        assert!(!est.windowed);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let est = wiener_norm(|_: &[f64]| Complex::new(0.0, 0.0), 1, WienerGrid::default_for(1, 1.0)).unwrap();
        assert_eq!(est.value, 0.0);
        let one = identity_mollifier::<f64>(1).unwrap();
        assert_eq!(schur_bound(&one, None).unwrap().bound, 1.0);
        assert_eq!(sobolev_bound(&one, 1, None).unwrap().bound, 1.0);
    }

    #[test]
    fn modulation_does_not_change_norm() {
        let grid = WienerGrid { half_width: 20.0, points: 1024 };
        let g = |x: &[f64]| Complex::new((-x[0] * x[0] / 2.0).exp(), 0.0);
        let base = wiener_norm(g, 1, grid).unwrap().value;
        let a = 0.75;
        let shifted = wiener_norm(move |x: &[f64]| g(x) * Complex::new(0.0, a * x[0]).exp(), 1, grid).unwrap();
        assert!((shifted.value - base).abs() < 1e-9);
    }

    #[test]
    fn complex_shift_profile_and_bound() {
        let m = complex_shift_mollifier::<f64>();
        assert_eq!(m.eval(&[0.0]), Complex::new(0.0, 0.0));
        let one_minus = Complex::new(1.0, 0.0) - m.eval(&[2.0]);
        let expect = Complex::new(1.0, 0.0) / Complex::new(1.0, 2.0);
        assert!((one_minus - expect).norm() < 1e-15);
        let b = schur_bound(&m, None).unwrap();
        assert!((b.bound - 2.0).abs() < 1e-3, "{b:?}");
    }

    #[test]
    fn complex_shift_regularizes_hilbert() {
        let m = complex_shift_mollifier::<f64>();
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let h = make_hilbert::<f64>();
        for _ in 0..1000 {
            let s = r.gen_range(-10.0..10.0);
            let t = r.gen_range(-10.0..10.0);
            let eps = r.gen_range(0.05..5.0);
            let k = scale(&m, eps).unwrap().apply(&h).unwrap();
            let v = k.evaluate(&[s], &[t]).unwrap();
            let exact = Complex::new(1.0, 0.0) / (Complex::new(s - t, eps) * std::f64::consts::PI);
            assert!((Complex::new(v[0], v[1]) - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn annulus_profile() {
        let m = smooth_annulus_mollifier::<f64>(0.1, 2).unwrap();
        assert_eq!(m.eval(&[1.0, 0.0]).re, 1.0);
        assert_eq!(m.eval(&[3.0, 4.0]).re, 1.0);
        assert_eq!(m.eval(&[0.9, 0.0]).re, 0.0);
        assert_eq!(m.eval(&[0.1, 0.1]).re, 0.0);
        assert!(smooth_annulus_mollifier::<f64>(1.0, 1).is_err());
        assert!(smooth_annulus_mollifier::<f64>(0.0, 1).is_err());
    }

    #[test]
    fn annulus_bound_stable_under_refinement() {
        let m = smooth_annulus_mollifier::<f64>(0.1, 1).unwrap();
        let g = WienerGrid::default_for(1, 1.0);
        let a = schur_bound(&m, Some(g)).unwrap().bound;
        let b = schur_bound(&m, Some(WienerGrid { half_width: g.half_width, points: 2 * g.points })).unwrap().bound;
        let c = schur_bound(&m, Some(WienerGrid { half_width: g.half_width, points: 4 * g.points })).unwrap().bound;
        assert!(a.is_finite());
        assert!((b - a).abs() / a < 0.01 && (c - b).abs() / b < 0.01);
    }

    #[test]
    fn scale_cases() {
        let g = gaussian_mollifier::<f64>(3).unwrap();
        let m1 = scale(&g, 1.0).unwrap();
        assert_eq!(m1.eval(&[0.0, 0.0, 0.0], &[0.3, 0.2, 0.1]), g.eval(&[0.3, 0.2, 0.1]));
        let m2 = scale(&g, 2.0).unwrap();
        let v = m2.eval(&[0.0; 3], &[2.0, 0.0, 0.0]).re;
        assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        let a = m2.rescale(3.0).unwrap();
        let b = scale(&g, 6.0).unwrap();
        for x in [[0.1, 0.2, 0.3], [1.0, -2.0, 0.5]] {
            assert_eq!(a.eval(&[0.0; 3], &x), b.eval(&[0.0; 3], &x));
        }
        let ann = smooth_annulus_mollifier(0.25, 1).unwrap();
        assert_eq!(scale(&ann, 4.0).unwrap().vanishing_radius(), 3.0);
        assert!(scale(&g, 0.0).is_err());
    }

    #[test]
    fn sobolev_constant_closed_form() {
        assert!((sobolev_constant(1, 1).unwrap() - 2f64.sqrt()).abs() < 1e-6);
        assert!(sobolev_constant(2, 1).is_err());
        assert!(sobolev_constant(1, 0).is_err());
    }

    #[test]
    fn sobolev_dominates_wiener() {
        let g = gaussian_mollifier::<f64>(1).unwrap();
        let s = sobolev_bound(&g, 1, None).unwrap();
        let w = schur_bound(&g, None).unwrap();
        assert!(s.bound >= w.bound - s.error_estimate - w.error_estimate);
    }

    #[test]
    fn power_cases() {
        let g = gaussian_mollifier::<f64>(1).unwrap();
        let g2 = multiplier_power(&g, 2).unwrap();
        assert_eq!(g2.vanishing_order, 4);
        let b = schur_bound(&g2, None).unwrap();
        assert_eq!(b.method, SchurMethod::Composition);
        assert!((b.bound - 4.0).abs() < 4e-3);
        let direct = schur_bound_wiener(&g2, None).unwrap();
        assert!(direct.bound <= b.bound + 1e-6);
        let same = multiplier_power(&g, 1).unwrap();
        assert_eq!(same.eval(&[0.7]), g.eval(&[0.7]));
        let x0 = (2.0 * 2f64.ln()).sqrt();
        let g3 = multiplier_power(&g, 3).unwrap();
        assert!((g.eval(&[x0]).re - 0.5).abs() < 1e-15);
        assert!((g3.eval(&[x0]).re - 0.125).abs() < 1e-15);
        assert!(multiplier_power(&g, 0).is_err());
    }

    #[test]
    fn regularized_kernel_diagonal_is_zero() {
        let g = gaussian_mollifier::<f64>(1).unwrap();
        let k = scale(&g, 0.5).unwrap().apply(&make_hilbert()).unwrap();
        assert_eq!(k.evaluate(&[0.3], &[0.3]).unwrap(), vec![0.0]);
    }

    #[test]
    fn multi_index_enumeration() {
        assert_eq!(multi_indices(2, 2), vec![vec![2, 0], vec![1, 1], vec![0, 2]]);
        assert_eq!(multi_indices(3, 1).len(), 3);
    }

    #[test]
    fn moment_orders() {
        let h = 1e-2;
        let gauss = GriddedFunction::sample(vec![-20.0], h, 4000, |x: &[f64]| {
            (-x[0] * x[0] / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt()
        })
        .unwrap();
        let r = moment_order(&gauss, 2, MomentTolerances::default()).unwrap();
        assert_eq!(r.order, 2);
        assert!((r.fitted_slope - 2.0).abs() < 0.05);

        let h = 1e-3;
        let expo = GriddedFunction::sample(vec![0.5 * h], h, 40_000, |x: &[f64]| (-x[0]).exp()).unwrap();
        let r = moment_order(&expo, 2, MomentTolerances::default()).unwrap();
        assert_eq!(r.order, 1);
        assert!((r.moments[0].value - 1.0).abs() < 1e-3);
        assert!((r.fitted_slope - 1.0).abs() < 0.05);

        let bad = GriddedFunction::sample(vec![0.0], 0.1, 10, |_: &[f64]| 2.0).unwrap();
        assert!(matches!(
            moment_order(&bad, 2, MomentTolerances::default()),
            Err(Error::Normalization { .. })
        ));
    }
}
