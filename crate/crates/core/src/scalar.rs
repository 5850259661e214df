//! Real/complex scalar abstraction.
//!
//! The capture stage differentiates the whole solver with respect to the
//! correction exponents by complex-step differentiation, so every routine on
//! the solver path is written once against [`Scalar`].

use std::fmt::Debug;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Sum
{
    fn from_real(x: f64) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    /// Absolute value (modulus for complex numbers).
    fn modulus(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    /// `self^exponent` on the principal branch.
    fn pow(self, exponent: Self) -> Self;
    fn is_finite(self) -> bool;

    fn zero() -> Self {
        Self::from_real(0.0)
    }

    fn one() -> Self {
        Self::from_real(1.0)
    }

    /// `base^exponent` for a non-negative real base. `0^σ` is taken as `0`,
    /// which is the limit for `re(σ) > 0`.
    fn real_pow(base: f64, exponent: Self) -> Self {
        if base == 0.0 {
            Self::zero()
        } else {
            (exponent * base.ln()).exp()
        }
    }
}

impl Scalar for f64 {
    fn from_real(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn pow(self, exponent: Self) -> Self {
        self.powf(exponent)
    }
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
    fn real_pow(base: f64, exponent: Self) -> Self {
        if base == 0.0 {
            0.0
        } else {
            base.powf(exponent)
        }
    }
}

impl Scalar for Complex64 {
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn exp(self) -> Self {
        Complex64::exp(self)
    }
    fn ln(self) -> Self {
        Complex64::ln(self)
    }
    fn sin(self) -> Self {
        Complex64::sin(self)
    }
    fn pow(self, exponent: Self) -> Self {
        self.powc(exponent)
    }
    fn is_finite(self) -> bool {
        Complex64::is_finite(self)
    }
    fn real_pow(base: f64, exponent: Self) -> Self {
        if base == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            // base^(a + ib) = base^a (cos(b ln base) + i sin(b ln base)); the
            // real power goes through powf to keep the real path bit-identical.
            let magnitude = base.powf(exponent.re);
            let phase = exponent.im * base.ln();
            Complex64::new(magnitude * phase.cos(), magnitude * phase.sin())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_pow_matches_powf_on_real_axis() {
        let z = Complex64::real_pow(0.37, Complex64::new(0.9, 0.0));
        assert_eq!(z.re, 0.37f64.powf(0.9));
        assert_eq!(z.im, 0.0);
        assert_eq!(<f64 as Scalar>::real_pow(0.0, 0.2), 0.0);
    }

    #[test]
    fn complex_step_of_power() {
        // d/dσ t^σ = t^σ ln t
        let h = 1e-20;
        let t = 0.3f64;
        let z = Complex64::real_pow(t, Complex64::new(0.4, h));
        let expected = t.powf(0.4) * t.ln();
        assert!((z.im / h - expected).abs() < 1e-15);
    }
}
