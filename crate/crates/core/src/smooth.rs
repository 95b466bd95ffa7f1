//! C-infinity step and bump profiles built from the quotient
//! `e^{-1/u} / (e^{-1/u} + e^{-1/(1-u)})`.

use serde::{Deserialize, Serialize};

use crate::scalar::Real;

/// Smooth step: 0 for `u <= 0`, 1 for `u >= 1`, all derivatives vanish at both ends.
pub fn smooth_step<T: Real>(u: T) -> T {
    if u <= T::zero() {
        return T::zero();
    }
    if u >= T::one() {
        return T::one();
    }
    let a = (-u.recip()).exp();
    let b = (-(T::one() - u).recip()).exp();
    a / (a + b)
}

/// Smooth transition equal to 0 below `lo` and 1 above `hi`.
pub fn ramp<T: Real>(x: T, lo: T, hi: T) -> T {
    smooth_step((x - lo) / (hi - lo))
}

/// Smooth bump on the real line: 1 on the plateau `[plateau_lo, plateau_hi]`,
/// 0 outside the open interval `(support_lo, support_hi)`.
///
/// Setting `support_lo = -inf` gives a profile equal to 1 on `(-inf, plateau_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub support_lo: f64,
    pub plateau_lo: f64,
    pub plateau_hi: f64,
    pub support_hi: f64,
}

impl Bump {
    /// Bump with plateau `[0.9, 1]` and support `(0.8, 1.1)`.
    pub fn sectorial() -> Self {
        Bump {
            support_lo: 0.8,
            plateau_lo: 0.9,
            plateau_hi: 1.0,
            support_hi: 1.1,
        }
    }

    /// Profile equal to 1 on `[0, 2]` and vanishing beyond 3.
    pub fn necessity() -> Self {
        Bump {
            support_lo: f64::NEG_INFINITY,
            plateau_lo: f64::NEG_INFINITY,
            plateau_hi: 2.0,
            support_hi: 3.0,
        }
    }

    pub fn eval<T: Real>(&self, x: T) -> T {
        let xf = x.to_f64_lossy();
        if xf <= self.support_lo || xf >= self.support_hi {
            return T::zero();
        }
        if xf < self.plateau_lo {
            return ramp(x, T::of(self.support_lo), T::of(self.plateau_lo));
        }
        if xf > self.plateau_hi {
            return T::one() - ramp(x, T::of(self.plateau_hi), T::of(self.support_hi));
        }
        T::one()
    }

    /// Largest `|x|` where the bump can be nonzero.
    pub fn support_radius(&self) -> f64 {
        self.support_hi
    }
}
