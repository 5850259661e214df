//! Second-order stencil for Riemann-Liouville operators on a uniform grid.
//!
//! The fractional integral at `t_n` is split into the last panel (local part)
//! and all earlier panels (history part). On the last panel `u` is replaced
//! by its linear (`n = 1`) or backward quadratic (`n ≥ 2`) interpolant; on
//! every history panel `[t_k, t_{k+1}]` by the forward quadratic through
//! `t_k, t_{k+1}, t_{k+2}`. Integrating the kernel `t^{γ-1}/Γ(γ)` against
//! these interpolants exactly gives the `d` and `b` coefficients. Evaluating
//! the same closed forms at a negative order `γ = -α` yields the
//! (finite-part) Riemann-Liouville derivative of order `α`.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use crate::scalar::Scalar;
use crate::specfun::gamma;

/// History weights with index above this are integrated by Gauss-Legendre
/// instead of the closed form, which cancels like `j²` for large `j`.
const CLOSED_FORM_MAX_INDEX: usize = 4;
const HISTORY_QUADRATURE_POINTS: usize = 20;

/// Uniform grid `t_n = n Δt`, `n = 0..=steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    dt: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::InvalidParameter("grid needs at least one step".into()));
        }
        Ok(Self { dt, steps })
    }

    /// `steps` uniform steps covering `[0, final_time]`.
    pub fn covering(final_time: f64, steps: usize) -> Result<Self> {
        Self::new(final_time / steps as f64, steps)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn node(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.steps).map(|n| self.node(n)).collect()
    }

    pub fn final_time(&self) -> f64 {
        self.node(self.steps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Derivative,
    Integral,
}

/// Local (`d`) and history (`b`) weights for one grid.
///
/// `b1[j], b2[j], b3[j]` weight the panel whose right end lies `j` steps
/// before the evaluation node; index `0` is the local panel and is stored as
/// zero. A stencil may be the sum of several single-order stencils (the
/// multi-term case), in which case `orders` lists every order it contains.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilCoefficients {
    pub(crate) orders: Vec<f64>,
    pub(crate) kind: OperatorKind,
    pub(crate) dt: f64,
    pub(crate) steps: usize,
    pub(crate) d1: [f64; 2],
    pub(crate) d2: [f64; 3],
    pub(crate) b1: Vec<f64>,
    pub(crate) b2: Vec<f64>,
    pub(crate) b3: Vec<f64>,
}

/// `a^{(γ)}_j = ((j + 1)^γ - j^γ) / γ`, i.e. `∫_j^{j+1} z^{γ-1} dz`.
pub fn power_increment(order: f64, j: usize) -> f64 {
    let j = j as f64;
    ((j + 1.0).powf(order) - j.powf(order)) / order
}

/// Stencil for the Riemann-Liouville derivative of order `alpha ∈ (0, 1)`.
pub fn build_coefficients(alpha: f64, grid: &TimeGrid) -> Result<StencilCoefficients> {
    check_order(alpha)?;
    StencilCoefficients::for_order(-alpha, OperatorKind::Derivative, alpha, grid)
}

/// Stencil for the Riemann-Liouville integral of order `alpha ∈ (0, 1)`.
pub fn build_integral_coefficients(alpha: f64, grid: &TimeGrid) -> Result<StencilCoefficients> {
    check_order(alpha)?;
    StencilCoefficients::for_order(alpha, OperatorKind::Integral, alpha, grid)
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            function: "fractional order",
            argument: alpha,
        })
    }
}

impl StencilCoefficients {
    /// `order` is the signed kernel exponent `γ` (negative for derivatives).
    fn for_order(order: f64, kind: OperatorKind, alpha: f64, grid: &TimeGrid) -> Result<Self> {
        let g = order;
        let scale = grid.dt().powf(g);
        let g2 = gamma(2.0 + g)?;
        let g3 = gamma(3.0 + g)?;
        let d1 = [g * scale / g2, scale / g2];
        let d2 = [
            -g * scale / (2.0 * g3),
            g * (3.0 + g) * scale / g3,
            (4.0 + g) * scale / (2.0 * g3),
        ];
        // Δt^γ / Γ(γ) written through Γ(1 + γ) so negative orders stay off the
        // reflection formula.
        let prefactor = scale * g / gamma(1.0 + g)?;

        let steps = grid.steps();
        let mut b1 = vec![0.0; steps];
        let mut b2 = vec![0.0; steps];
        let mut b3 = vec![0.0; steps];
        let rule = GaussLegendre::unit_interval(HISTORY_QUADRATURE_POINTS);
        for j in 1..steps {
            let [w1, w2, w3] = if j <= CLOSED_FORM_MAX_INDEX {
                history_closed_form(g, j)
            } else {
                history_quadrature(g, j, &rule)
            };
            b1[j] = prefactor * w1;
            b2[j] = prefactor * w2;
            b3[j] = prefactor * w3;
        }
        Ok(Self {
            orders: vec![alpha],
            kind,
            dt: grid.dt(),
            steps,
            d1,
            d2,
            b1,
            b2,
            b3,
        })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `(d^{(1)}_0, d^{(1)}_1)`.
    pub fn d1(&self) -> [f64; 2] {
        self.d1
    }

    /// `(d^{(2)}_0, d^{(2)}_1, d^{(2)}_2)`.
    pub fn d2(&self) -> [f64; 3] {
        self.d2
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn b2(&self) -> &[f64] {
        &self.b2
    }

    pub fn b3(&self) -> &[f64] {
        &self.b3
    }

    /// Coefficient of `u_m`, `m = 0..=n`, in the discrete operator at `t_n`.
    pub fn operator_row(&self, n: usize) -> Result<Vec<f64>> {
        self.check_step(n)?;
        let mut row = vec![0.0; n + 1];
        if n == 1 {
            row[0] = self.d1[0];
            row[1] = self.d1[1];
            return Ok(row);
        }
        row[n - 2] += self.d2[0];
        row[n - 1] += self.d2[1];
        row[n] += self.d2[2];
        for k in 0..n - 1 {
            let j = n - 1 - k;
            row[k] += self.b1[j];
            row[k + 1] += self.b2[j];
            row[k + 2] += self.b3[j];
        }
        Ok(row)
    }

    /// Coefficient of `u_n` in the operator at `t_n`.
    pub fn diagonal(&self, n: usize) -> f64 {
        if n == 1 {
            self.d1[1]
        } else {
            self.d2[2] + self.b3[1]
        }
    }

    /// Element-wise sum of stencils built on the same grid.
    pub fn sum(sets: &[StencilCoefficients]) -> Result<StencilCoefficients> {
        let (first, rest) = sets
            .split_first()
            .ok_or_else(|| Error::InvalidParameter("no stencils to aggregate".into()))?;
        let mut total = first.clone();
        for s in rest {
            if s.steps != first.steps || s.dt != first.dt || s.kind != first.kind {
                return Err(Error::InvalidParameter(
                    "stencils must share grid and operator kind".into(),
                ));
            }
            total.orders.extend_from_slice(&s.orders);
            for i in 0..2 {
                total.d1[i] += s.d1[i];
            }
            for i in 0..3 {
                total.d2[i] += s.d2[i];
            }
            for j in 0..total.steps {
                total.b1[j] += s.b1[j];
                total.b2[j] += s.b2[j];
                total.b3[j] += s.b3[j];
            }
        }
        Ok(total)
    }

    fn check_step(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.steps {
            return Err(Error::InvalidParameter(format!(
                "step {n} outside 1..={} of the stencil",
                self.steps
            )));
        }
        Ok(())
    }
}

fn history_closed_form(g: f64, j: usize) -> [f64; 3] {
    let a0 = power_increment(g, j);
    let a1 = power_increment(g + 1.0, j);
    let a2 = power_increment(g + 2.0, j);
    let jf = j as f64;
    [
        0.5 * (a2 - (2.0 * jf - 1.0) * a1 + jf * (jf - 1.0) * a0),
        -(a2 - 2.0 * jf * a1 + (jf + 1.0) * (jf - 1.0) * a0),
        0.5 * (a2 - (2.0 * jf + 1.0) * a1 + jf * (jf + 1.0) * a0),
    ]
}

/// Same integrals as [`history_closed_form`], written over `w ∈ [0, 1]` with
/// `z = j + w`, so no cancellation occurs.
fn history_quadrature(g: f64, j: usize, rule: &GaussLegendre) -> [f64; 3] {
    let jf = j as f64;
    let mut out = [0.0; 3];
    for (&w, &weight) in rule.nodes.iter().zip(&rule.weights) {
        let kernel = weight * (jf + w).powf(g - 1.0);
        out[0] += kernel * 0.5 * w * (w + 1.0);
        out[1] += kernel * (1.0 - w * w);
        out[2] += kernel * 0.5 * w * (w - 1.0);
    }
    out
}

/// `Σ_j d^{(p)}_j u_{n+j-p}` for a window `u_{n-p}, …, u_n`.
pub fn local_part<T: Scalar>(u_window: &[T], coeffs: &StencilCoefficients, p: usize) -> Result<T> {
    let d: &[f64] = match p {
        1 => &coeffs.d1,
        2 => &coeffs.d2,
        _ => return Err(Error::InvalidParameter(format!("local order p = {p} not in {{1, 2}}"))),
    };
    if u_window.len() != p + 1 {
        return Err(Error::LengthMismatch {
            context: "local window",
            expected: p + 1,
            found: u_window.len(),
        });
    }
    Ok(u_window.iter().zip(d).map(|(&u, &w)| u * w).sum())
}

/// History sum at `t_n` over the panels `[t_k, t_{k+1}]`, `k = 0..=n-2`.
/// Needs `u_0..=u_n`, since the last history panel interpolates through `t_n`.
pub fn history_part<T: Scalar>(u_values: &[T], coeffs: &StencilCoefficients, n: usize) -> Result<T> {
    coeffs.check_step(n)?;
    if n == 1 {
        return Ok(T::zero());
    }
    if u_values.len() < n + 1 {
        return Err(Error::LengthMismatch {
            context: "history values",
            expected: n + 1,
            found: u_values.len(),
        });
    }
    let mut acc = T::zero();
    for k in 0..n - 1 {
        let j = n - 1 - k;
        acc += u_values[k] * coeffs.b1[j] + u_values[k + 1] * coeffs.b2[j] + u_values[k + 2] * coeffs.b3[j];
    }
    Ok(acc)
}

/// Discrete operator at `t_n`: linear local part at `n = 1`, quadratic local
/// part plus history for `n ≥ 2`. With a derivative stencil this approximates
/// the Riemann-Liouville derivative.
pub fn apply_rl_derivative<T: Scalar>(u_values: &[T], coeffs: &StencilCoefficients, n: usize) -> Result<T> {
    coeffs.check_step(n)?;
    if u_values.len() < n + 1 {
        return Err(Error::LengthMismatch {
            context: "operator values",
            expected: n + 1,
            found: u_values.len(),
        });
    }
    if n == 1 {
        return local_part(&u_values[0..2], coeffs, 1);
    }
    Ok(local_part(&u_values[n - 2..=n], coeffs, 2)? + history_part(u_values, coeffs, n)?)
}
