//! Stage-I exponent capture.
//!
//! Given short-time samples of a solution and its forcing, the exponents
//! `σ` of the correction terms are fitted by minimising the misfit
//! `E(σ) = Σ_n (u_n^data - u_n^N(σ))²`, where `u^N(σ)` is the corrected
//! numerical solution driven by the sampled forcing. Gradients come from
//! complex-step differentiation of the whole solver and the descent uses
//! Barzilai-Borwein step sizes. [`capture_auto`] adds correction terms one at
//! a time until the misfit drops below tolerance.

use num_complex::Complex64;

use crate::corrections::{SigmaVector, MIN_SIGMA_SEPARATION};
use crate::discretization::TimeGrid;
use crate::error::{Error, Result};
use crate::manufactured::ManufacturedSolution;
use crate::scalar::Scalar;
use crate::solver::{FdeProblem, Forcing, Integrator};
use crate::specfun::{digamma, gamma};

/// Gap enforced between iterates' components, a little above the hard
/// duplicate threshold.
const NUDGE_SEPARATION: f64 = 4.0 * MIN_SIGMA_SEPARATION;
const MAX_BACKTRACKS: usize = 40;
const BB_DENOMINATOR_FLOOR: f64 = 1e-30;

/// Samples `u_n`, `f_n` at `t_1..=t_Ñ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedData {
    grid: TimeGrid,
    u0: f64,
    u_data: Vec<f64>,
    f_data: Vec<f64>,
}

impl ObservedData {
    pub fn new(grid: TimeGrid, u0: f64, u_data: Vec<f64>, f_data: Vec<f64>) -> Result<Self> {
        for (name, v) in [("u_data", &u_data), ("f_data", &f_data)] {
            if v.len() != grid.steps() {
                return Err(Error::LengthMismatch {
                    context: if name == "u_data" {
                        "observed solution"
                    } else {
                        "observed forcing"
                    },
                    expected: grid.steps(),
                    found: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("observed data"));
            }
        }
        Ok(Self {
            grid,
            u0,
            u_data,
            f_data,
        })
    }

    /// Noise-free samples of a manufactured solution.
    pub fn from_manufactured(solution: &ManufacturedSolution, grid: TimeGrid) -> Result<Self> {
        let u = (1..=grid.steps()).map(|n| solution.eval_exact(grid.node(n))).collect();
        Self::new(grid, 0.0, u, solution.forcing_on(&grid)?)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn initial_value(&self) -> f64 {
        self.u0
    }

    pub fn u_data(&self) -> &[f64] {
        &self.u_data
    }

    pub fn f_data(&self) -> &[f64] {
        &self.f_data
    }

    pub fn problem(&self, orders: &[f64]) -> Result<FdeProblem> {
        FdeProblem::new(orders.to_vec(), self.u0, Forcing::from_samples(self.f_data.clone()))
    }
}

/// Initial value of the extra component when escalating from one to two terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EscalationGuess {
    /// The lower exponent bound, standing in for the exponent zero.
    SigmaMin,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureConfig {
    /// Stop when `E < tol_error`.
    pub tol_error: f64,
    /// Stop when `‖∇E‖ < tol_gradient`.
    pub tol_gradient: f64,
    /// Imaginary perturbation of the complex step.
    pub cs_perturbation: f64,
    /// Step size of the first iteration and fallback for degenerate BB steps.
    pub initial_step: f64,
    pub max_iterations: usize,
    pub max_terms: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    /// Starting exponent for one term; `None` uses `sigma_min`.
    pub first_guess: Option<f64>,
    pub second_guess: EscalationGuess,
}

impl Default for CaptureConfig {
    fn default() -> Self {
        Self {
            tol_error: 1e-15,
            tol_gradient: 1e-14,
            cs_perturbation: 1e-14,
            initial_step: 1e-3,
            max_iterations: 5000,
            max_terms: 3,
            sigma_min: 1e-4,
            sigma_max: 5.0,
            first_guess: None,
            second_guess: EscalationGuess::SigmaMin,
        }
    }
}

impl CaptureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_error", self.tol_error),
            ("tol_gradient", self.tol_gradient),
            ("cs_perturbation", self.cs_perturbation),
            ("initial_step", self.initial_step),
            ("sigma_min", self.sigma_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.sigma_max > self.sigma_min) {
            return Err(Error::InvalidParameter("sigma_max must exceed sigma_min".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        if !(1..=3).contains(&self.max_terms) {
            return Err(Error::InvalidParameter(format!(
                "max_terms must be 1, 2 or 3, got {}",
                self.max_terms
            )));
        }
        Ok(())
    }

    fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.sigma_min, self.sigma_max)
    }
}

/// Misfit functional bound to one data set and set of orders.
#[derive(Debug, Clone)]
pub struct Misfit {
    integrator: Integrator,
    u_data: Vec<f64>,
}

impl Misfit {
    pub fn new(data: &ObservedData, orders: &[f64]) -> Result<Self> {
        let problem = data.problem(orders)?;
        Ok(Self {
            integrator: Integrator::new(&problem, data.grid())?,
            u_data: data.u_data().to_vec(),
        })
    }

    pub fn steps(&self) -> usize {
        self.u_data.len()
    }

    /// `E(σ)` in the scalar type of `sigma`.
    pub fn eval<T: Scalar>(&self, sigma: &[T]) -> Result<T> {
        let solution = self.integrator.solve(sigma)?;
        let e: T = solution.values()[1..]
            .iter()
            .zip(&self.u_data)
            .map(|(&u, &d)| {
                let r = u - d;
                r * r
            })
            .sum();
        if !e.is_finite() {
            return Err(Error::NonFinite("misfit"));
        }
        Ok(e)
    }

    pub fn value(&self, sigma: &[f64]) -> Result<f64> {
        self.eval(sigma)
    }

    /// `E(σ)` and its complex-step gradient `Im E(σ + iΔσ e_j) / Δσ`.
    pub fn value_and_gradient(&self, sigma: &[f64], perturbation: f64) -> Result<(f64, Vec<f64>)> {
        let mut value = None;
        let mut gradient = Vec::with_capacity(sigma.len());
        for j in 0..sigma.len() {
            let mut z: Vec<Complex64> = sigma.iter().map(|&s| Complex64::new(s, 0.0)).collect();
            z[j].im = perturbation;
            let e = self.eval(&z)?;
            value.get_or_insert(e.re);
            gradient.push(e.im / perturbation);
        }
        let value = match value {
            Some(v) => v,
            None => self.value(sigma)?,
        };
        if gradient.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("misfit gradient"));
        }
        Ok((value, gradient))
    }
}

pub fn misfit(sigma: &SigmaVector, data: &ObservedData, orders: &[f64]) -> Result<f64> {
    Misfit::new(data, orders)?.value(sigma.values())
}

pub fn misfit_gradient(
    sigma: &SigmaVector,
    data: &ObservedData,
    orders: &[f64],
    config: &CaptureConfig,
) -> Result<Vec<f64>> {
    if !(config.cs_perturbation > 0.0) {
        return Err(Error::InvalidParameter(
            "complex-step perturbation must be positive".into(),
        ));
    }
    Ok(Misfit::new(data, orders)?
        .value_and_gradient(sigma.values(), config.cs_perturbation)?
        .1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TerminationStatus {
    ConvergedError,
    ConvergedGradient,
    MaxIterations,
}

impl TerminationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            TerminationStatus::ConvergedError => "converged_error",
            TerminationStatus::ConvergedGradient => "converged_gradient",
            TerminationStatus::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub sigma: Vec<f64>,
    pub error: f64,
    pub grad_norm: f64,
    /// Step taken from this iterate; zero on the terminal record.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureTrace {
    pub records: Vec<IterationRecord>,
    pub status: TerminationStatus,
}

impl CaptureTrace {
    /// Iterate with the smallest misfit.
    pub fn best(&self) -> &IterationRecord {
        self.records
            .iter()
            .min_by(|a, b| a.error.total_cmp(&b.error))
            .expect("trace has at least one record")
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("trace has at least one record")
    }

    pub fn terms(&self) -> usize {
        self.records[0].sigma.len()
    }
}

/// Clamps into the admissible range and pushes apart components that nearly
/// coincide.
fn project(sigma: &mut [f64], config: &CaptureConfig) {
    for s in sigma.iter_mut() {
        *s = config.clamp(*s);
    }
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    for w in 1..order.len() {
        let (lo, hi) = (order[w - 1], order[w]);
        if sigma[hi] - sigma[lo] < NUDGE_SEPARATION {
            sigma[hi] = sigma[lo] + NUDGE_SEPARATION;
        }
    }
    // Pushing up may cross the upper bound; repeat downwards from the top.
    for w in (0..order.len()).rev() {
        let i = order[w];
        let ceiling = if w + 1 < order.len() {
            sigma[order[w + 1]] - NUDGE_SEPARATION
        } else {
            config.sigma_max
        };
        if sigma[i] > ceiling {
            sigma[i] = ceiling;
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn recoverable(e: &Error) -> bool {
    matches!(
        e,
        Error::IllConditioned(_) | Error::SingularMatrix | Error::DuplicateSigma { .. }
    )
}

/// Barzilai-Borwein descent with a fixed number of terms.
pub fn capture_fixed_m(misfit: &Misfit, sigma0: &[f64], config: &CaptureConfig) -> Result<CaptureTrace> {
    config.validate()?;
    if sigma0.is_empty() {
        return Err(Error::InvalidParameter("initial guess is empty".into()));
    }
    if sigma0.len() > misfit.steps() {
        return Err(Error::InvalidParameter(format!(
            "{} terms need at least as many data points, got {}",
            sigma0.len(),
            misfit.steps()
        )));
    }
    let mut sigma = sigma0.to_vec();
    project(&mut sigma, config);
    let (mut error, mut gradient) = misfit.value_and_gradient(&sigma, config.cs_perturbation)?;
    let mut records = Vec::new();
    let mut previous: Option<(Vec<f64>, Vec<f64>)> = None;

    loop {
        let k = records.len();
        let grad_norm = norm(&gradient);
        let status = if error < config.tol_error {
            Some(TerminationStatus::ConvergedError)
        } else if grad_norm < config.tol_gradient {
            Some(TerminationStatus::ConvergedGradient)
        } else if k + 1 >= config.max_iterations {
            Some(TerminationStatus::MaxIterations)
        } else {
            None
        };
        if let Some(status) = status {
            records.push(IterationRecord {
                k,
                sigma,
                error,
                grad_norm,
                step: 0.0,
            });
            return Ok(CaptureTrace { records, status });
        }

        let mut step = match &previous {
            None => config.initial_step,
            Some((prev_sigma, prev_grad)) => {
                let ds: Vec<f64> = sigma.iter().zip(prev_sigma).map(|(a, b)| a - b).collect();
                let dg: Vec<f64> = gradient.iter().zip(prev_grad).map(|(a, b)| a - b).collect();
                let denominator: f64 = dg.iter().map(|x| x * x).sum();
                let numerator: f64 = ds.iter().zip(&dg).map(|(a, b)| a * b).sum();
                let bb = numerator / denominator;
                if denominator < BB_DENOMINATOR_FLOOR || !bb.is_finite() || bb <= 0.0 {
                    config.initial_step
                } else {
                    bb
                }
            }
        };

        let mut attempt = 0;
        let (next_sigma, next_error, next_gradient) = loop {
            let mut candidate: Vec<f64> = sigma.iter().zip(&gradient).map(|(s, g)| s - step * g).collect();
            project(&mut candidate, config);
            match misfit.value_and_gradient(&candidate, config.cs_perturbation) {
                Ok((e, g)) => break (candidate, e, g),
                Err(e) if recoverable(&e) && attempt < MAX_BACKTRACKS => {
                    attempt += 1;
                    step *= 0.5;
                }
                Err(e) => return Err(e),
            }
        };
        records.push(IterationRecord {
            k,
            sigma: sigma.clone(),
            error,
            grad_norm,
            step,
        });
        previous = Some((
            std::mem::replace(&mut sigma, next_sigma),
            std::mem::replace(&mut gradient, next_gradient),
        ));
        error = next_error;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaptureResult {
    pub sigma: SigmaVector,
    pub m_used: usize,
    pub final_error: f64,
    pub traces: Vec<CaptureTrace>,
}

/// Adds correction terms until the misfit is below tolerance or the term
/// budget is exhausted. Each stage starts from the best iterate of the
/// previous one.
pub fn capture_auto(misfit: &Misfit, config: &CaptureConfig) -> Result<CaptureResult> {
    config.validate()?;
    let max_terms = config.max_terms.min(misfit.steps());
    let mut guess = vec![config.first_guess.unwrap_or(config.sigma_min)];
    let mut traces: Vec<CaptureTrace> = Vec::new();
    for m in 1..=max_terms {
        let trace = capture_fixed_m(misfit, &guess, config)?;
        let best = trace.best().clone();
        traces.push(trace);
        if best.error < config.tol_error || m == max_terms {
            return Ok(CaptureResult {
                sigma: SigmaVector::new(best.sigma)?,
                m_used: m,
                final_error: best.error,
                traces,
            });
        }
        guess = match m {
            1 => {
                let extra = match config.second_guess {
                    EscalationGuess::SigmaMin => config.sigma_min,
                    EscalationGuess::Value(v) => v,
                };
                vec![extra, best.sigma[0]]
            }
            _ => vec![best.sigma[0], best.sigma[1], 0.5 * (best.sigma[0] + best.sigma[1])],
        };
    }
    unreachable!("loop returns on the last term count")
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    /// Stop when `E < tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-28,
            max_iterations: 100,
            sigma_min: 1e-4,
            sigma_max: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub sigma: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `(σ^k, E(σ^k))` for every iterate, starting with the guess.
    pub history: Vec<(f64, f64)>,
}

/// Newton iteration on `E(σ) = (u_1 - u^N_1(σ))²` for one step and one term,
/// where `u^N_1 = Δt^α Γ(1+σ-α)/Γ(1+σ) f_1` in closed form.
pub fn newton_single(data: &ObservedData, sigma0: f64, alpha: f64, config: &NewtonConfig) -> Result<NewtonOutcome> {
    if data.initial_value() != 0.0 {
        return Err(Error::InvalidParameter("single-step mode needs u0 = 0".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            function: "fractional order",
            argument: alpha,
        });
    }
    let dt = data.grid().dt();
    let (u1, f1) = (data.u_data()[0], data.f_data()[0]);
    let scale = dt.powf(alpha);
    let eval = |s: f64| -> Result<(f64, f64)> {
        let c = scale * gamma(1.0 + s - alpha)? / gamma(1.0 + s)?;
        let r = u1 - c * f1;
        let psi = digamma(1.0 + s - alpha)? - digamma(1.0 + s)?;
        Ok((r * r, -2.0 * r * c * psi * f1))
    };

    let mut sigma = sigma0.clamp(config.sigma_min, config.sigma_max);
    let (mut e, mut de) = eval(sigma)?;
    let mut history = vec![(sigma, e)];
    for iteration in 1..=config.max_iterations {
        if e < config.tolerance {
            return Ok(NewtonOutcome {
                sigma,
                iterations: iteration - 1,
                converged: true,
                history,
            });
        }
        if de.abs() < 1e-300 {
            return Err(Error::ZeroDerivative { sigma, error: e });
        }
        let next = (sigma - e / de).clamp(config.sigma_min, config.sigma_max);
        let stalled = (next - sigma).abs() <= 4.0 * f64::EPSILON * sigma.abs();
        sigma = next;
        (e, de) = eval(sigma)?;
        history.push((sigma, e));
        if stalled {
            return Ok(NewtonOutcome {
                sigma,
                iterations: iteration,
                converged: true,
                history,
            });
        }
    }
    Ok(NewtonOutcome {
        sigma,
        iterations: config.max_iterations,
        converged: e < config.tolerance,
        history,
    })
}

/// Converged single-step exponent for each time step, with data from
/// `u = Σ_j t^{σ*_j}`.
pub fn sigma_vs_dt_study(
    sigma_star: &[f64],
    alpha: f64,
    dt_values: &[f64],
    sigma0: f64,
    config: &NewtonConfig,
) -> Result<Vec<(f64, f64)>> {
    let solution = ManufacturedSolution::power_sum(sigma_star.to_vec(), vec![alpha])?;
    dt_values
        .iter()
        .map(|&dt| {
            let data = ObservedData::from_manufactured(&solution, TimeGrid::new(dt, 1)?)?;
            Ok((dt, newton_single(&data, sigma0, alpha, config)?.sigma))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn data(exps: &[f64], alpha: f64, dt: f64, steps: usize) -> ObservedData {
        let sol = ManufacturedSolution::power_sum(exps.to_vec(), vec![alpha]).unwrap();
        ObservedData::from_manufactured(&sol, TimeGrid::new(dt, steps).unwrap()).unwrap()
    }

    #[test]
    fn observed_data_validation() {
        let grid = TimeGrid::new(0.1, 3).unwrap();
        assert!(ObservedData::new(grid, 0.0, vec![1.0; 2], vec![1.0; 3]).is_err());
        assert!(ObservedData::new(grid, 0.0, vec![1.0; 3], vec![f64::NAN; 3]).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(CaptureConfig::default().validate().is_ok());
        let bad = CaptureConfig {
            max_terms: 4,
            ..CaptureConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = CaptureConfig {
            tol_error: 0.0,
            ..CaptureConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn self_consistent_data_has_zero_misfit() {
        let d = data(&[0.2, 0.6], 0.5, 0.05, 20);
        let m = Misfit::new(&d, &[0.5]).unwrap();
        assert!(m.value(&[0.2, 0.6]).unwrap() <= 1e-28);
        let (_, g) = m.value_and_gradient(&[0.2, 0.6], 1e-14).unwrap();
        assert!(norm(&g) <= 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = data(&[0.1, 0.35, 0.5], 0.5, 0.05, 20);
        let m = Misfit::new(&d, &[0.5]).unwrap();
        let sigma = [0.2, 0.4];
        let (_, g) = m.value_and_gradient(&sigma, 1e-14).unwrap();
        let h = 1e-6;
        for j in 0..2 {
            let mut p = sigma;
            p[j] += h;
            let mut q = sigma;
            q[j] -= h;
            let fd = (m.value(&p).unwrap() - m.value(&q).unwrap()) / (2.0 * h);
            assert!((g[j] - fd).abs() <= 1e-5 * fd.abs(), "{} vs {}", g[j], fd);
        }
    }

    #[test]
    fn gradient_is_insensitive_to_perturbation_size() {
        let d = data(&[0.1, 0.3], 0.5, 0.05, 20);
        let m = Misfit::new(&d, &[0.5]).unwrap();
        let reference = m.value_and_gradient(&[0.15, 0.45], 1e-14).unwrap().1;
        for h in [1e-12, 1e-16] {
            let g = m.value_and_gradient(&[0.15, 0.45], h).unwrap().1;
            for j in 0..2 {
                assert!((g[j] - reference[j]).abs() <= 1e-6 * reference[j].abs());
            }
        }
    }

    #[test]
    fn single_step_gradient_matches_closed_form_derivative() {
        let (alpha, dt) = (0.5, 0.01);
        let d = data(&[0.1, 0.3], alpha, dt, 1);
        let m = Misfit::new(&d, &[alpha]).unwrap();
        let s = 0.25;
        let (_, g) = m.value_and_gradient(&[s], 1e-14).unwrap();
        let (u1, f1) = (d.u_data()[0], d.f_data()[0]);
        let c = dt.powf(alpha) * gamma(1.0 + s - alpha).unwrap() / gamma(1.0 + s).unwrap();
        let psi = digamma(1.0 + s - alpha).unwrap() - digamma(1.0 + s).unwrap();
        let analytic = -2.0 * (u1 - c * f1) * c * psi * f1;
        assert!((g[0] - analytic).abs() <= 1e-8 * analytic.abs());
    }

    #[test]
    fn projection_clamps_and_separates() {
        let config = CaptureConfig::default();
        let mut s = vec![-1.0, 10.0, 0.3, 0.3];
        project(&mut s, &config);
        assert_eq!(s[0], config.sigma_min);
        assert_eq!(s[1], config.sigma_max);
        assert!((s[3] - s[2]).abs() >= NUDGE_SEPARATION * 0.99);
        let mut top = vec![5.0, 5.0];
        project(&mut top, &config);
        assert!(top.iter().all(|&x| x <= config.sigma_max));
        assert!((top[0] - top[1]).abs() >= NUDGE_SEPARATION * 0.99);
    }

    #[test]
    fn single_term_capture_of_alpha() {
        let d = data(&[0.5], 0.5, 0.1, 10);
        let m = Misfit::new(&d, &[0.5]).unwrap();
        let config = CaptureConfig {
            tol_error: 1e-12,
            ..CaptureConfig::default()
        };
        let result = capture_auto(&m, &config).unwrap();
        assert_eq!(result.m_used, 1);
        assert!((result.sigma.values()[0] - 0.5).abs() < 1e-5);
        assert!(result.final_error < 1e-12);
    }

    #[test]
    fn trace_invariants() {
        let d = data(&[0.1, 0.3], 0.5, 0.01, 30);
        let m = Misfit::new(&d, &[0.5]).unwrap();
        let config = CaptureConfig {
            max_iterations: 60,
            ..CaptureConfig::default()
        };
        let trace = capture_fixed_m(&m, &[0.5], &config).unwrap();
        assert!(trace.records.len() <= 60);
        assert!(trace.records.iter().all(|r| r.error >= 0.0));
        let mut best = f64::INFINITY;
        for r in &trace.records {
            let next = best.min(r.error);
            assert!(next <= best);
            best = next;
        }
        assert_eq!(trace.best().error, best);
        if trace.status == TerminationStatus::ConvergedGradient {
            assert!(trace.last().grad_norm < config.tol_gradient);
        }
        if trace.status == TerminationStatus::ConvergedError {
            assert!(trace.last().error < config.tol_error);
        }
    }

    #[test]
    fn newton_requires_zero_initial_value() {
        let grid = TimeGrid::new(0.01, 1).unwrap();
        let d = ObservedData::new(grid, 1.0, vec![1.0], vec![1.0]).unwrap();
        assert!(newton_single(&d, 0.3, 0.5, &NewtonConfig::default()).is_err());
    }

    #[test]
    fn newton_recovers_single_exponent() {
        for (star, guess) in [(0.5, 0.0001), (0.5, 1.05), (0.1, 0.0001), (0.1, 1.1)] {
            let d = data(&[star], 0.5, 0.01, 1);
            let out = newton_single(&d, guess, 0.5, &NewtonConfig::default()).unwrap();
            assert!(
                (out.sigma - star).abs() < 1e-10,
                "σ* = {star}, σ0 = {guess}: {}",
                out.sigma
            );
            assert!(out.iterations <= 100);
        }
    }

    #[test]
    fn sigma_study_trends_towards_strongest_singularity() {
        let config = NewtonConfig::default();
        let exact = sigma_vs_dt_study(&[0.35], 0.5, &[1e-1, 1e-2, 1e-3], 0.2, &config).unwrap();
        assert!(exact.iter().all(|&(_, s)| (s - 0.35).abs() < 1e-10));

        let star = [0.1, 0.3, 0.5];
        let table = sigma_vs_dt_study(&star, 0.5, &[1e-1, 1e-2, 1e-3, 1e-4], 0.2, &config).unwrap();
        assert!(table.last().unwrap().1 < table[0].1);
        assert!(table.iter().all(|&(_, s)| s > 0.1 && s < 0.5));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn misfit_is_permutation_invariant(a in 0.05f64..0.9, b in 0.05f64..0.9, c in 0.05f64..0.9) {
            prop_assume!((a - b).abs() > 1e-3 && (a - c).abs() > 1e-3 && (b - c).abs() > 1e-3);
            let d = data(&[0.1, 0.3, 0.5], 0.5, 0.05, 12);
            let m = Misfit::new(&d, &[0.5]).unwrap();
            let e1 = m.value(&[a, b, c]).unwrap();
            let e2 = m.value(&[c, a, b]).unwrap();
            prop_assert!((e1 - e2).abs() <= 1e-13 * e1.abs().max(1e-300) + 1e-28);
        }
    }
}
