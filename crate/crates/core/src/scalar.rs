//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! All matrix elements are complex even when the underlying module is
//! unitary, so the working type is `Complex<T>` for some real float `T`.

use std::fmt::{Debug, Display, LowerExp};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

use crate::error::{Error, Result};
use crate::half::HalfInt;

/// Real floating-point scalar (`f32` or `f64`).
pub trait Real:
    Float + FloatConst + NumAssign + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant (tolerance, literal) into `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn from_half(h: HalfInt) -> Self {
        Self::lit(h.to_f64())
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type C<T> = Complex<T>;

pub fn c_real<T: Real>(x: T) -> C<T> {
    Complex::new(x, T::zero())
}

pub fn c_lit<T: Real>(re: f64, im: f64) -> C<T> {
    Complex::new(T::lit(re), T::lit(im))
}

pub fn c_half<T: Real>(h: HalfInt) -> C<T> {
    c_real(T::from_half(h))
}

/// `i`
pub fn c_i<T: Real>() -> C<T> {
    Complex::new(T::zero(), T::one())
}

/// Principal square root: branch cut on the negative real axis, result
/// with non-negative real part, and `sqrt(-x) = +i sqrt(x)` for `x > 0`.
pub fn csqrt<T: Real>(z: C<T>) -> C<T> {
    if z.im == T::zero() {
        // Keep the sign of zero out of the picture on the real axis.
        return if z.re >= T::zero() {
            c_real(z.re.sqrt())
        } else {
            Complex::new(T::zero(), (-z.re).sqrt())
        };
    }
    z.sqrt()
}

/// Square root of a real number taken through the principal complex branch.
pub fn rsqrt<T: Real>(x: T) -> C<T> {
    csqrt(c_real(x))
}

/// Checked constructor for public complex inputs: NaN/Inf are rejected.
pub fn checked_complex<T: Real>(re: T, im: T) -> Result<C<T>> {
    if re.is_finite() && im.is_finite() {
        Ok(Complex::new(re, im))
    } else {
        Err(Error::NonFinite)
    }
}

/// `|z|` without overflow concerns at desk scale.
pub fn cabs<T: Real>(z: C<T>) -> T {
    z.norm()
}

/// Converts a complex value into another scalar width.
pub fn to_c64<T: Real>(z: C<T>) -> Complex<f64> {
    Complex::new(z.re.to_f64().unwrap_or(f64::NAN), z.im.to_f64().unwrap_or(f64::NAN))
}

pub fn from_c64<T: Real>(z: Complex<f64>) -> C<T> {
    Complex::new(T::lit(z.re), T::lit(z.im))
}

/// True when `x` lies within `tol` of an integer; returns that integer.
pub fn near_integer<T: Real>(x: T, tol: T) -> Option<i64> {
    let r = x.round();
    if (x - r).abs() <= tol {
        r.to_i64()
    } else {
        None
    }
}

/// Loosest tolerance any internal check uses in single precision.
pub const SINGLE_FLOOR: f64 = 1e-4;

/// `tol` (chosen for `f64`) widened to the scalar width.
pub fn tol_for<T: Real>(tol: f64) -> T {
    // f32 carries roughly 7 digits, f64 roughly 16.
    if std::mem::size_of::<T>() <= 4 {
        T::lit(tol.max(SINGLE_FLOOR))
    } else {
        T::lit(tol)
    }
}

/// Default identity-check tolerance for the scalar width.
pub fn default_tol<T: Real>() -> T {
    tol_for(1e-10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn principal_branch_on_real_axis() {
        let z = csqrt(Complex::new(-4.0f64, 0.0));
        assert_eq!(z, Complex::new(0.0, 2.0));
        let z = csqrt(Complex::new(-4.0f64, -0.0));
        assert_eq!(z, Complex::new(0.0, 2.0));
        assert_eq!(csqrt(Complex::new(9.0f64, 0.0)), Complex::new(3.0, 0.0));
    }

    #[test]
    fn principal_branch_off_axis_has_nonnegative_real_part() {
        for &(re, im) in &[(-1.0, 1e-3), (-1.0, -1e-3), (0.3, -2.0), (-7.5, 4.0)] {
            let s = csqrt(Complex::new(re, im));
            assert!(s.re >= 0.0);
            let back = s * s;
            assert!((back - Complex::new(re, im)).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(checked_complex(f64::NAN, 0.0).is_err());
        assert!(checked_complex(1.0, f64::INFINITY).is_err());
        assert!(checked_complex(1.0f32, 2.0).is_ok());
    }

    #[test]
    fn integer_detection() {
        assert_eq!(near_integer(2.0 + 1e-14, 1e-12), Some(2));
        assert_eq!(near_integer(-3.0f64, 1e-12), Some(-3));
        assert_eq!(near_integer(0.5f64, 1e-12), None);
    }
}
