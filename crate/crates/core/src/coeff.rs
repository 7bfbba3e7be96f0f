//! Coefficient fields for series and polynomial arithmetic.
//!
//! Two modes share one trait:
//!
//! * [`C64`] — double-precision complex, the working mode for quadrature,
//!   fits, and trajectories.
//! * [`CRat`] — complex numbers with arbitrary-precision rational parts, the
//!   exact mode for golden-coefficient checks. Factorial coefficient growth
//!   passes 1e308 near `n = 170`, so any check that runs past `n = 30` with
//!   factorial-type coefficients belongs in this mode.
//!
//! Exact-mode values compare exactly (`approx_eq` ignores the tolerance);
//! float values compare against a scale-relative tolerance. `abs_log` exposes
//! coefficient magnitudes in log scale without materializing them as floats,
//! which keeps Gevrey fits honest at orders where doubles overflow.

use alloc::string::String;
use core::fmt;
use core::ops::{Div, Neg, Sub};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};
// Supplies f64 math methods when the crate is compiled no_std on its own;
// redundant (hence the allow) when a dependent loads std into the build
// graph and the inherent methods win.
#[cfg(not(test))]
#[allow(unused_imports)]
use num_traits::Float;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;

/// Complex scalar with exact rational real and imaginary parts.
pub type CRat = Complex<BigRational>;

/// Common interface of the two coefficient modes.
///
/// `Zero`/`One` bring the ring operations; the extra methods cover exact
/// construction, conjugation, magnitude in log scale, and mode-aware
/// comparison.
pub trait Coeff:
    Clone
    + PartialEq
    + fmt::Debug
    + Zero
    + One
    + Neg<Output = Self>
    + Sub<Output = Self>
    + Div<Output = Self>
{
    /// Embeds an integer.
    fn from_i64(v: i64) -> Self;

    /// Embeds a rational `num/den`. `den` must be nonzero.
    fn from_ratio(num: i64, den: i64) -> Self;

    /// Embeds a double. Exact in both modes: every finite `f64` is dyadic.
    fn from_f64(v: f64) -> Self;

    /// Embeds a complex double, exactly in both modes.
    fn from_c64(v: C64) -> Self;

    /// Complex conjugate.
    fn conj(&self) -> Self;

    /// `ln |self|`, or `None` for zero. Robust at magnitudes far beyond the
    /// double range in exact mode.
    fn abs_log(&self) -> Option<f64>;

    /// Lossy projection to double-precision complex.
    fn to_c64(&self) -> C64;

    /// Mode-aware equality: exact in rational mode, scale-relative
    /// `|a - b| <= tol * max(1, |a|, |b|)` in float mode.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;

    /// True for the exact-rational mode.
    fn is_exact() -> bool;

    /// Short human-readable rendering for reports and error messages.
    fn render(&self) -> String;
}

impl Coeff for C64 {
    fn from_i64(v: i64) -> Self {
        Complex::new(v as f64, 0.0)
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        debug_assert!(den != 0);
        Complex::new(num as f64 / den as f64, 0.0)
    }

    fn from_f64(v: f64) -> Self {
        Complex::new(v, 0.0)
    }

    fn from_c64(v: C64) -> Self {
        v
    }

    fn conj(&self) -> Self {
        Complex::new(self.re, -self.im)
    }

    fn abs_log(&self) -> Option<f64> {
        if self.is_zero() {
            None
        } else {
            // norm_sqr available without overflow concerns at desk scale;
            // use hypot-free form via ln to stay monotone near extremes.
            Some(self.norm().ln())
        }
    }

    fn to_c64(&self) -> C64 {
        *self
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        let scale = 1.0_f64.max(self.norm()).max(other.norm());
        (self - other).norm() <= tol * scale
    }

    fn is_exact() -> bool {
        false
    }

    fn render(&self) -> String {
        if self.im == 0.0 {
            alloc::format!("{:.6e}", self.re)
        } else {
            alloc::format!("{:.6e}{:+.6e}i", self.re, self.im)
        }
    }
}

impl Coeff for CRat {
    fn from_i64(v: i64) -> Self {
        Complex::new(BigRational::from_i64(v).expect("i64 embeds"), BigRational::zero())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        let q = BigRational::new(BigInt::from(num), BigInt::from(den));
        Complex::new(q, BigRational::zero())
    }

    fn from_f64(v: f64) -> Self {
        let q = BigRational::from_float(v).expect("finite f64 is dyadic");
        Complex::new(q, BigRational::zero())
    }

    fn from_c64(v: C64) -> Self {
        let re = BigRational::from_float(v.re).expect("finite f64 is dyadic");
        let im = BigRational::from_float(v.im).expect("finite f64 is dyadic");
        Complex::new(re, im)
    }

    fn conj(&self) -> Self {
        Complex::new(self.re.clone(), -self.im.clone())
    }

    fn abs_log(&self) -> Option<f64> {
        if self.is_zero() {
            return None;
        }
        // |z|^2 exactly, then half its log; immune to double overflow.
        let norm_sqr = &self.re * &self.re + &self.im * &self.im;
        Some(0.5 * ln_big_rational(&norm_sqr))
    }

    fn to_c64(&self) -> C64 {
        Complex::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn is_exact() -> bool {
        true
    }

    fn render(&self) -> String {
        if self.im.is_zero() {
            alloc::format!("{}", self.re)
        } else {
            alloc::format!("{} + ({})i", self.re, self.im)
        }
    }
}

/// `ln` of a positive rational, stable for values far outside the f64 range.
fn ln_big_rational(q: &BigRational) -> f64 {
    debug_assert!(q.is_positive());
    ln_big_int(q.numer()) - ln_big_int(q.denom())
}

/// `ln |n|` for a nonzero big integer via mantissa + bit-length split.
pub fn ln_big_int(n: &BigInt) -> f64 {
    let mag = n.magnitude();
    let bits = mag.bits();
    debug_assert!(bits > 0, "ln of zero");
    if bits <= 900 {
        // Comfortably inside the double range.
        return mag.to_f64().expect("fits").ln();
    }
    let shift = bits - 53;
    let top = (mag >> shift).to_f64().expect("53 bits fit");
    top.ln() + shift as f64 * core::f64::consts::LN_2
}

/// Factorial as an exact big integer; used by the exact Borel transform.
pub fn factorial_big(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= BigInt::from(k);
    }
    acc
}
