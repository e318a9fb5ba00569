//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + rustfft::FftNum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("literal representable")
    }

    fn from_usize_lossy(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }

    fn from_i64_lossy(n: i64) -> Self {
        <Self as FromPrimitive>::from_i64(n).expect("integer representable")
    }

    fn to_f64_lossy(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Complex number over a [`Real`] scalar.
pub type C<T> = Complex<T>;

/// `z^n` for any integer `n`, with `0^0 = 1`.
pub fn cpowi<T: Real>(z: C<T>, n: i64) -> C<T> {
    if n == 0 {
        return C::new(T::one(), T::zero());
    }
    let base = if n < 0 { z.inv() } else { z };
    let mut e = n.unsigned_abs();
    let mut acc = C::new(T::one(), T::zero());
    let mut p = base;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * p;
        }
        p = p * p;
        e >>= 1;
    }
    acc
}

/// `x^n` for a real base and integer exponent.
pub fn rpowi<T: Real>(x: T, n: i64) -> T {
    if n >= 0 {
        x.powi(n as i32)
    } else {
        x.recip().powi((-n) as i32)
    }
}

pub(crate) fn czero<T: Real>() -> C<T> {
    C::new(T::zero(), T::zero())
}

pub(crate) fn cre<T: Real>(x: T) -> C<T> {
    C::new(x, T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_powers() {
        let z = C::new(0.3f64, -1.2);
        let direct = z * z * z;
        assert!((cpowi(z, 3) - direct).norm() < 1e-14);
        assert!((cpowi(z, -2) * z * z - C::new(1.0, 0.0)).norm() < 1e-14);
        assert_eq!(cpowi(C::new(0.0f64, 0.0), 0), C::new(1.0, 0.0));
        assert!((rpowi(2.0f32, -3) - 0.125).abs() < 1e-7);
    }
}
