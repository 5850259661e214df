//! Manufactured solutions with analytic forcings, random exponent sampling
//! and component-wise exponent errors.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::discretization::TimeGrid;
use crate::error::{Error, Result};
use crate::solver::{FdeProblem, Forcing};
use crate::specfun::{gamma, reg_hypergeom, HypergeomParams};

/// Sampled exponents closer than this are redrawn.
const MIN_SAMPLE_SEPARATION: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    /// `u(t) = Σ_j t^{σ_j}`
    PowerSum,
    /// `u(t) = t^σ cos(ω t)`
    SingularOscillatory,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManufacturedSolution {
    kind: SolutionKind,
    exponents: Vec<f64>,
    frequency: f64,
    orders: Vec<f64>,
}

impl ManufacturedSolution {
    pub fn power_sum(exponents: Vec<f64>, orders: Vec<f64>) -> Result<Self> {
        if exponents.is_empty() {
            return Err(Error::InvalidParameter("at least one exponent is required".into()));
        }
        Self::validate(&exponents, &orders)?;
        Ok(Self {
            kind: SolutionKind::PowerSum,
            exponents,
            frequency: 0.0,
            orders,
        })
    }

    pub fn oscillatory(exponent: f64, frequency: f64, orders: Vec<f64>) -> Result<Self> {
        Self::validate(&[exponent], &orders)?;
        if !frequency.is_finite() {
            return Err(Error::NonFinite("frequency"));
        }
        Ok(Self {
            kind: SolutionKind::SingularOscillatory,
            exponents: vec![exponent],
            frequency,
            orders,
        })
    }

    fn validate(exponents: &[f64], orders: &[f64]) -> Result<()> {
        for &s in exponents {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Domain {
                    function: "solution exponent",
                    argument: s,
                });
            }
        }
        if orders.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one fractional order is required".into(),
            ));
        }
        for &a in orders {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Domain {
                    function: "fractional order",
                    argument: a,
                });
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> SolutionKind {
        self.kind
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn eval_exact(&self, t: f64) -> f64 {
        match self.kind {
            SolutionKind::PowerSum => self.exponents.iter().map(|&s| power(t, s)).sum(),
            SolutionKind::SingularOscillatory => power(t, self.exponents[0]) * (self.frequency * t).cos(),
        }
    }

    /// `Σ_l D^{α_l} u(t)` in closed form.
    pub fn eval_forcing(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain {
                function: "manufactured forcing",
                argument: t,
            });
        }
        let mut total = 0.0;
        for &alpha in &self.orders {
            total += match self.kind {
                SolutionKind::PowerSum => {
                    let mut f = 0.0;
                    for &s in &self.exponents {
                        f += gamma(1.0 + s)? / gamma(1.0 + s - alpha)? * t.powf(s - alpha);
                    }
                    f
                }
                SolutionKind::SingularOscillatory => oscillatory_forcing(self.exponents[0], self.frequency, alpha, t)?,
            };
        }
        Ok(total)
    }

    pub fn exact_on(&self, grid: &TimeGrid) -> Vec<f64> {
        grid.nodes().into_iter().map(|t| self.eval_exact(t)).collect()
    }

    /// Forcing sampled at `t_1..=t_N`.
    pub fn forcing_on(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        (1..=grid.steps()).map(|n| self.eval_forcing(grid.node(n))).collect()
    }

    /// The FDE this solution satisfies, with `u(0) = 0`.
    pub fn problem(&self) -> Result<FdeProblem> {
        let me = self.clone();
        FdeProblem::new(
            self.orders.clone(),
            0.0,
            Forcing::from_fn(move |t| me.eval_forcing(t).unwrap_or(f64::NAN)),
        )
    }
}

fn power(t: f64, s: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.powf(s)
    }
}

/// `D^α [t^σ cos(ω t)]` as a combination of two regularized `2F̃3` functions
/// of `z = -ω² t² / 4`.
fn oscillatory_forcing(sigma: f64, omega: f64, alpha: f64, t: f64) -> Result<f64> {
    let z = -(omega * t).powi(2) / 4.0;
    let c1 = -(2f64).powf(alpha - sigma - 4.0) * PI * gamma(1.0 + sigma)?;
    let c2 = 8.0 * (alpha - sigma - 1.0);
    let c3 = (1.0 + sigma) * (2.0 + sigma);
    let first = reg_hypergeom(&HypergeomParams::new(
        vec![(1.0 + sigma) / 2.0, (2.0 + sigma) / 2.0],
        vec![0.5, (2.0 - alpha + sigma) / 2.0, (3.0 - alpha + sigma) / 2.0],
        z,
    ))?;
    let second = reg_hypergeom(&HypergeomParams::new(
        vec![(3.0 + sigma) / 2.0, (4.0 + sigma) / 2.0],
        vec![1.5, (4.0 - alpha + sigma) / 2.0, (5.0 - alpha + sigma) / 2.0],
        z,
    ))?;
    Ok(c1 * t.powf(sigma - alpha) * (c2 * first + c3 * omega * omega * t * t * second))
}

/// `count` distinct draws from `U(0, upper)` with a ChaCha8 generator seeded
/// by `seed`.
pub fn sample_random_singularities(count: usize, upper: f64, seed: u64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    if !(upper > 0.0) || !upper.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "upper bound must be positive, got {upper}"
        )));
    }
    if (count as f64) * MIN_SAMPLE_SEPARATION * 4.0 > upper {
        return Err(Error::InvalidParameter(format!(
            "cannot place {count} separated samples below {upper}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<f64> = Vec::with_capacity(count);
    while out.len() < count {
        let x: f64 = rng.gen_range(0.0..upper);
        if x > 0.0 && out.iter().all(|&y| (x - y).abs() >= MIN_SAMPLE_SEPARATION) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Relative exponent errors after optimal matching.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentErrors {
    /// `|σ*_j - σ_j| / |σ*_j|`, in the order of the matched captured values.
    pub errors: Vec<f64>,
    /// Captured exponent of each matched pair.
    pub captured: Vec<f64>,
    /// True exponent each captured value was matched to.
    pub matched_truth: Vec<f64>,
    /// Set when the captured and true vectors differ in length and only a
    /// subset could be matched.
    pub subset_match: bool,
}

impl ComponentErrors {
    pub fn max(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Matches captured to true exponents by the injection minimising the largest
/// relative error (ties broken by the sum).
pub fn component_errors(captured: &[f64], truth: &[f64]) -> Result<ComponentErrors> {
    if captured.is_empty() || truth.is_empty() {
        return Err(Error::InvalidParameter("exponent lists must be non-empty".into()));
    }
    if captured.len() > 9 || truth.len() > 9 {
        return Err(Error::InvalidParameter("at most nine exponents can be matched".into()));
    }
    let pairs = captured.len().min(truth.len());
    let mut best: Option<(f64, f64, Vec<(usize, usize)>)> = None;
    let mut chosen = Vec::with_capacity(pairs);
    let mut used = vec![false; truth.len().max(captured.len())];
    search(captured, truth, 0, pairs, &mut chosen, &mut used, &mut best);
    let (_, _, mut matching) = best.expect("at least one matching exists");
    matching.sort_by_key(|&(c, _)| c);
    let rel = |c: usize, t: usize| (truth[t] - captured[c]).abs() / truth[t].abs();
    Ok(ComponentErrors {
        errors: matching.iter().map(|&(c, t)| rel(c, t)).collect(),
        captured: matching.iter().map(|&(c, _)| captured[c]).collect(),
        matched_truth: matching.iter().map(|&(_, t)| truth[t]).collect(),
        subset_match: captured.len() != truth.len(),
    })
}

/// Depth-first enumeration of injective pairings. When there are more
/// captured values than true ones, the roles are swapped so that every true
/// exponent is matched.
fn search(
    captured: &[f64],
    truth: &[f64],
    depth: usize,
    pairs: usize,
    chosen: &mut Vec<(usize, usize)>,
    used: &mut [bool],
    best: &mut Option<(f64, f64, Vec<(usize, usize)>)>,
) {
    let captured_drives = captured.len() <= truth.len();
    if depth == pairs {
        let errs = chosen
            .iter()
            .map(|&(c, t)| (truth[t] - captured[c]).abs() / truth[t].abs());
        let (max, sum) = errs.fold((0.0f64, 0.0), |(m, s), e| (m.max(e), s + e));
        let better = match best {
            None => true,
            Some((bm, bs, _)) => max < *bm || (max == *bm && sum < *bs),
        };
        if better {
            *best = Some((max, sum, chosen.clone()));
        }
        return;
    }
    let others = if captured_drives { truth.len() } else { captured.len() };
    for o in 0..others {
        if used[o] {
            continue;
        }
        used[o] = true;
        chosen.push(if captured_drives { (depth, o) } else { (o, depth) });
        search(captured, truth, depth + 1, pairs, chosen, used, best);
        chosen.pop();
        used[o] = false;
    }
}
