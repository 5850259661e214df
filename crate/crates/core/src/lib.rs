//! Singularity capturing and corrected finite-difference time integration for
//! fractional differential equations.
//!
//! The crate is organised as a two-stage pipeline:
//!
//! 1. [`capture`] estimates the power-law exponents `σ` of a solution near
//!    `t = 0` from a handful of short-time samples, by minimising the squared
//!    misfit between the data and a corrected numerical solution. Gradients
//!    come from complex-step differentiation and the descent uses
//!    Barzilai-Borwein step sizes.
//! 2. [`solver`] integrates single- and multi-term Riemann-Liouville FDEs over
//!    long times, using the captured exponents as starting-weight corrections
//!    ([`corrections`]) on top of a second-order interpolation stencil
//!    ([`discretization`]). The resulting scheme is of order `3 - α`.
//!
//! Every numerical routine is generic over [`Scalar`], implemented for `f64`
//! and [`Complex64`], so the complete solver can run in complex arithmetic.
//!
//! ```
//! use fraccap_core::{integrate, FdeProblem, Forcing, ManufacturedSolution, SigmaVector, TimeGrid};
//!
//! let exact = ManufacturedSolution::power_sum(vec![0.1, 0.3], vec![0.5]).unwrap();
//! let grid = TimeGrid::new(0.05, 40).unwrap();
//! let sampler = exact.clone();
//! let forcing = Forcing::from_fn(move |t| sampler.eval_forcing(t).unwrap());
//! let problem = FdeProblem::new(vec![0.5], 0.0, forcing).unwrap();
//! let sigma = SigmaVector::new(vec![0.1, 0.3]).unwrap();
//! let solution = integrate::<f64>(&problem, Some(&sigma), &grid).unwrap();
//! let t_end = grid.node(grid.steps());
//! assert!((solution.values()[grid.steps()] - exact.eval_exact(t_end)).abs() < 1e-10);
//! ```

pub mod capture;
pub mod corrections;
pub mod discretization;
pub mod error;
pub mod export;
pub mod linalg;
pub mod manufactured;
mod quadrature;
pub mod scalar;
pub mod solver;
pub mod specfun;

pub use num_complex::Complex64;

pub use capture::{
    capture_auto, capture_fixed_m, misfit, misfit_gradient, newton_single, sigma_vs_dt_study, CaptureConfig,
    CaptureResult, CaptureTrace, EscalationGuess, IterationRecord, Misfit, NewtonConfig, NewtonOutcome, ObservedData,
    TerminationStatus,
};
pub use corrections::{
    aggregate_multiterm, closed_form_w11, condition_study, solve_correction_weights, solve_weights, ConditionRow,
    CorrectionSet, SigmaRule, SigmaVector,
};
pub use discretization::{
    apply_rl_derivative, build_coefficients, build_integral_coefficients, history_part, local_part,
    StencilCoefficients, TimeGrid,
};
pub use error::{Error, Result};
pub use manufactured::{
    component_errors, sample_random_singularities, ComponentErrors, ManufacturedSolution, SolutionKind,
};
pub use scalar::Scalar;
pub use solver::{
    assemble_block_system, integrate, l2_relative_error, BlockSystem, FdeProblem, Forcing, Integrator, SolutionSeries,
};
pub use specfun::{digamma, gamma, ln_gamma, reg_hypergeom, HypergeomParams};
