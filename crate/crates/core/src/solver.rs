//! Implicit integration of `Σ_l D^{α_l} u = f(t)`, `u(0) = u0`, with optional
//! starting-weight corrections.
//!
//! The Caputo problem is rewritten in Riemann-Liouville form using
//! `D_RL u = D_C u + u0 / (Γ(1-α) t^α)`. The first
//! `min(max(M, 3), steps)` steps are coupled through the correction weights
//! and solved as one dense block; later steps march one at a time.

use std::fmt;
use std::sync::Arc;

use crate::corrections::{aggregate_multiterm, solve_weights, CorrectionSet, SigmaVector};
use crate::discretization::{apply_rl_derivative, build_coefficients, StencilCoefficients, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::specfun::gamma;

/// Smallest block solved implicitly, matching the quadratic stencil warm-up.
const WARM_UP_STEPS: usize = 3;

/// Right-hand side `f(t)`, either a function or samples at `t_1..=t_N`.
#[derive(Clone)]
pub enum Forcing {
    Function(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
    Samples(Vec<f64>),
}

impl Forcing {
    pub fn from_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Forcing::Function(Arc::new(f))
    }

    /// Values at `t_1, …, t_N`.
    pub fn from_samples(values: Vec<f64>) -> Self {
        Forcing::Samples(values)
    }

    /// Node values indexed by `n`; entry `0` is unused and set to zero.
    pub fn sample(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.steps() + 1];
        match self {
            Forcing::Function(f) => {
                for (n, slot) in out.iter_mut().enumerate().skip(1) {
                    *slot = f(grid.node(n));
                }
            }
            Forcing::Samples(values) => {
                if values.len() < grid.steps() {
                    return Err(Error::LengthMismatch {
                        context: "forcing samples",
                        expected: grid.steps(),
                        found: values.len(),
                    });
                }
                out[1..].copy_from_slice(&values[..grid.steps()]);
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forcing"));
        }
        Ok(out)
    }
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Function(_) => f.write_str("Forcing::Function(..)"),
            Forcing::Samples(v) => f.debug_tuple("Forcing::Samples").field(&v.len()).finish(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FdeProblem {
    orders: Vec<f64>,
    initial_value: f64,
    forcing: Forcing,
}

impl FdeProblem {
    pub fn new(orders: Vec<f64>, initial_value: f64, forcing: Forcing) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one fractional order is required".into(),
            ));
        }
        for &a in &orders {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Domain {
                    function: "fractional order",
                    argument: a,
                });
            }
        }
        if !initial_value.is_finite() {
            return Err(Error::NonFinite("initial value"));
        }
        Ok(Self {
            orders,
            initial_value,
            forcing,
        })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn initial_value(&self) -> f64 {
        self.initial_value
    }

    pub fn forcing(&self) -> &Forcing {
        &self.forcing
    }

    /// `f(t_n) + Σ_l u0 / (Γ(1-α_l) t_n^{α_l})` for `n = 0..=N` (entry 0 unused).
    pub fn right_hand_side(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        let mut rhs = self.forcing.sample(grid)?;
        if self.initial_value != 0.0 {
            for &alpha in &self.orders {
                let g = gamma(1.0 - alpha)?;
                for (n, r) in rhs.iter_mut().enumerate().skip(1) {
                    *r += self.initial_value / (g * grid.node(n).powf(alpha));
                }
            }
        }
        Ok(rhs)
    }
}

/// Numerical solution `u^N_n`, `n = 0..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionSeries<T = f64> {
    grid: TimeGrid,
    values: Vec<T>,
}

impl<T: Scalar> SolutionSeries<T> {
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }
}

/// Dense system for the first `size` unknowns `u_1..=u_size`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockSystem<T = f64> {
    pub matrix: Matrix<T>,
    pub rhs: Vec<T>,
}

impl<T: Scalar> BlockSystem<T> {
    pub fn solve(&self) -> Result<Vec<T>> {
        self.matrix.lu()?.solve(&self.rhs)
    }
}

/// Block system for a problem, sampling the forcing on the stencil's grid.
pub fn assemble_block_system<T: Scalar>(
    problem: &FdeProblem,
    corrections: &CorrectionSet<T>,
    coeffs: &StencilCoefficients,
    size: usize,
) -> Result<BlockSystem<T>> {
    let grid = TimeGrid::new(coeffs.dt(), coeffs.steps())?;
    let rhs = problem.right_hand_side(&grid)?;
    block_system(coeffs, corrections, &rhs, problem.initial_value(), size)
}

fn block_system<T: Scalar>(
    coeffs: &StencilCoefficients,
    corrections: &CorrectionSet<T>,
    rhs: &[f64],
    u0: f64,
    size: usize,
) -> Result<BlockSystem<T>> {
    let m = corrections.terms();
    if size == 0 || size > coeffs.steps() || size < m {
        return Err(Error::InvalidParameter(format!(
            "block size {size} must lie in {}..={}",
            m.max(1),
            coeffs.steps()
        )));
    }
    if corrections.steps() != coeffs.steps() || corrections.dt() != coeffs.dt() {
        return Err(Error::InvalidParameter(
            "corrections and stencil use different grids".into(),
        ));
    }
    let mut matrix = Matrix::zeros(size);
    let mut b = Vec::with_capacity(size);
    for n in 1..=size {
        let row = coeffs.operator_row(n)?;
        let w = corrections.at_step(n);
        for (col, &c) in row.iter().enumerate().skip(1) {
            matrix.set(n - 1, col - 1, T::from_real(c));
        }
        let mut known = T::from_real(row[0]);
        for (j, &wj) in w.iter().enumerate() {
            let v = matrix.get(n - 1, j) + wj;
            matrix.set(n - 1, j, v);
            known -= wj;
        }
        b.push(T::from_real(rhs[n]) - known * u0);
    }
    Ok(BlockSystem { matrix, rhs: b })
}

/// Precomputed stencils and right-hand side for repeated solves with
/// different correction exponents on the same problem and grid.
///
/// A solve costs `O(N²)` for the history sums plus `O(N M)` for the
/// correction terms; the weights add one `M × M` factorisation and `O(N M²)`
/// back-substitutions. Memory is `O(N M)`.
#[derive(Debug, Clone)]
pub struct Integrator {
    grid: TimeGrid,
    initial_value: f64,
    per_order: Vec<StencilCoefficients>,
    stencil: StencilCoefficients,
    rhs: Vec<f64>,
}

impl Integrator {
    pub fn new(problem: &FdeProblem, grid: &TimeGrid) -> Result<Self> {
        let per_order = problem
            .orders()
            .iter()
            .map(|&a| build_coefficients(a, grid))
            .collect::<Result<Vec<_>>>()?;
        let stencil = StencilCoefficients::sum(&per_order)?;
        Ok(Self {
            grid: *grid,
            initial_value: problem.initial_value(),
            per_order,
            stencil,
            rhs: problem.right_hand_side(grid)?,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    /// Aggregated stencil `Σ_l` over all orders.
    pub fn stencil(&self) -> &StencilCoefficients {
        &self.stencil
    }

    /// Aggregated correction weights for `sigma`.
    pub fn corrections<T: Scalar>(&self, sigma: &[T]) -> Result<CorrectionSet<T>> {
        if sigma.is_empty() {
            return Ok(CorrectionSet::none(&self.stencil));
        }
        let sets = self
            .per_order
            .iter()
            .map(|c| solve_weights(sigma, c))
            .collect::<Result<Vec<_>>>()?;
        if sets.len() == 1 {
            return Ok(sets.into_iter().next().expect("one set"));
        }
        Ok(aggregate_multiterm(&sets, &self.per_order)?.0)
    }

    /// Solves with corrections at `sigma` (empty for the uncorrected scheme).
    pub fn solve<T: Scalar>(&self, sigma: &[T]) -> Result<SolutionSeries<T>> {
        let corrections = self.corrections(sigma)?;
        self.solve_with(&corrections)
    }

    pub fn solve_with<T: Scalar>(&self, corrections: &CorrectionSet<T>) -> Result<SolutionSeries<T>> {
        let steps = self.grid.steps();
        let m = corrections.terms();
        if m > steps {
            return Err(Error::InvalidParameter(format!(
                "{m} correction terms need at least {m} steps, grid has {steps}"
            )));
        }
        let u0 = self.initial_value;
        let size = m.max(WARM_UP_STEPS).min(steps);
        let block = block_system(&self.stencil, corrections, &self.rhs, u0, size)?;
        let first = block.solve()?;

        let mut u = vec![T::zero(); steps + 1];
        u[0] = T::from_real(u0);
        u[1..=size].copy_from_slice(&first);
        for n in size + 1..=steps {
            let diagonal = self.stencil.diagonal(n);
            if diagonal == 0.0 || !diagonal.is_finite() {
                return Err(Error::SingularMatrix);
            }
            let rest = apply_rl_derivative(&u[..=n], &self.stencil, n)?;
            let correction: T = corrections
                .at_step(n)
                .iter()
                .enumerate()
                .map(|(j, &w)| w * (u[j + 1] - u0))
                .sum();
            u[n] = (T::from_real(self.rhs[n]) - rest - correction) / diagonal;
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("solution"));
        }
        Ok(SolutionSeries {
            grid: self.grid,
            values: u,
        })
    }
}

/// Solves `problem` on `grid`, corrected at `sigma` when given.
pub fn integrate<T: Scalar>(
    problem: &FdeProblem,
    sigma: Option<&SigmaVector>,
    grid: &TimeGrid,
) -> Result<SolutionSeries<T>> {
    let sigma: Vec<T> = sigma
        .map(|s| s.values().iter().map(|&x| T::from_real(x)).collect())
        .unwrap_or_default();
    Integrator::new(problem, grid)?.solve(&sigma)
}

/// Discrete `‖u - u_exact‖₂ / ‖u_exact‖₂` over all nodes.
pub fn l2_relative_error(numeric: &SolutionSeries, exact: &[f64]) -> Result<f64> {
    if numeric.values().len() != exact.len() {
        return Err(Error::LengthMismatch {
            context: "exact solution samples",
            expected: numeric.values().len(),
            found: exact.len(),
        });
    }
    let denominator: f64 = exact.iter().map(|x| x * x).sum::<f64>().sqrt();
    if denominator == 0.0 {
        return Err(Error::InvalidParameter("exact solution is identically zero".into()));
    }
    let numerator: f64 = numeric
        .values()
        .iter()
        .zip(exact)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(numerator / denominator)
}
