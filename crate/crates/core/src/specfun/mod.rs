//! Special functions needed by the correction weights, the manufactured
//! forcings and the single-step Newton mode.
//!
//! Supported domain: [`gamma`] accepts any finite real or complex argument
//! that is not a non-positive integer and whose real part is below the
//! overflow threshold; arguments with `re(z) < 1/2` go through the reflection
//! formula. [`digamma`] and [`ln_gamma`] are real-only on `x > 0`.

mod hypergeom;

pub use hypergeom::{reg_hypergeom, HypergeomParams};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lanczos approximation, g = 7, nine terms.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Largest real part for which Γ stays finite in double precision.
const GAMMA_OVERFLOW: f64 = 171.624_376_956_302_7;

const SQRT_TWO_PI: f64 = 2.506_628_274_631_000_5;

/// Euler gamma function for real or complex arguments.
/// Integer arguments up to this value return the factorial exactly.
const EXACT_FACTORIAL_MAX: f64 = 23.0;

pub fn gamma<T: Scalar>(z: T) -> Result<T> {
    let (re, im) = (z.re(), z.im());
    if !re.is_finite() || !im.is_finite() {
        return Err(Error::Domain {
            function: "gamma",
            argument: re,
        });
    }
    if im == 0.0 && re <= 0.0 && re == re.round() {
        return Err(Error::GammaPole(re));
    }
    if re > GAMMA_OVERFLOW {
        return Err(Error::GammaOverflow(re));
    }
    if im == 0.0 && re == re.round() && re <= EXACT_FACTORIAL_MAX {
        let factorial: f64 = (1..re as u32).map(f64::from).product();
        return Ok(T::from_real(factorial));
    }
    if re < 0.5 {
        // Γ(z) Γ(1 - z) = π / sin(πz)
        let reflected = gamma(T::one() - z)?;
        let value = T::from_real(PI) / ((z * PI).sin() * reflected);
        return if value.is_finite() {
            Ok(value)
        } else {
            Err(Error::GammaOverflow(re))
        };
    }
    Ok(lanczos(z))
}

fn lanczos<T: Scalar>(z: T) -> T {
    let z = z - 1.0;
    let mut series = T::from_real(LANCZOS_COEFFS[0]);
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += T::from_real(c) / (z + i as f64);
    }
    let t = z + (LANCZOS_G + 0.5);
    // Split the power so t^(z+1/2) does not overflow before e^-t pulls it back.
    let half = t.pow((z + 0.5) * 0.5);
    half * (-t).exp() * half * series * SQRT_TWO_PI
}

/// `1/Γ(x)` for real `x`, zero at the poles.
pub(crate) fn rgamma(x: f64) -> Result<f64> {
    if x <= 0.0 && x == x.round() {
        return Ok(0.0);
    }
    Ok(1.0 / gamma(x)?)
}

/// `ln Γ(x)` for real `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "ln_gamma",
            argument: x,
        });
    }
    if x < 0.5 {
        return Ok(ln_gamma(x + 1.0)? - x.ln());
    }
    let z = x - 1.0;
    let mut series = LANCZOS_COEFFS[0];
    for (i, &c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(SQRT_TWO_PI.ln() + (z + 0.5) * t.ln() - t + series.ln())
}

/// Digamma `ψ₀(x)` for real `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "digamma",
            argument: x,
        });
    }
    // Recur upward until the asymptotic series is accurate.
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift -= 1.0 / y;
        y += 1.0;
    }
    let inv2 = 1.0 / (y * y);
    // Bernoulli terms B_{2k} / (2k y^{2k}), k = 1..7
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(shift + y.ln() - 0.5 / y - tail)
}
