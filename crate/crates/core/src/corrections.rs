//! Starting-weight corrections that make the discrete operator exact on a set
//! of singular monomials `t^{σ_k}`.
//!
//! For every step `n` the weights solve the `M × M` Vandermonde system
//! `Σ_j j^{σ_k} W_{j,n} = (D^α t^{σ_k}|_{t_n} - D_Δ t^{σ_k}|_{t_n}) / Δt^{σ_k}`,
//! where `D_Δ` is the uncorrected stencil. The matrix does not depend on `n`
//! and is factored once.

use crate::discretization::{apply_rl_derivative, OperatorKind, StencilCoefficients, TimeGrid};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;
use crate::specfun::gamma;

/// Exponents closer than this are treated as duplicates.
pub const MIN_SIGMA_SEPARATION: f64 = 1e-8;
/// Above this condition estimate the weights are flagged as unreliable.
pub const CONDITION_WARNING: f64 = 1e13;
/// Above this condition estimate the solve is refused.
pub const CONDITION_LIMIT: f64 = 1e15;

/// Positive, pairwise distinct correction exponents.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaVector(Vec<f64>);

impl SigmaVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("sigma vector is empty".into()));
        }
        for &s in &values {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::Domain {
                    function: "correction exponent",
                    argument: s,
                });
            }
        }
        check_separation(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

fn check_separation(values: &[f64]) -> Result<()> {
    for (i, &a) in values.iter().enumerate() {
        for &b in &values[i + 1..] {
            if (a - b).abs() < MIN_SIGMA_SEPARATION {
                return Err(Error::DuplicateSigma {
                    first: a,
                    second: b,
                    min_separation: MIN_SIGMA_SEPARATION,
                });
            }
        }
    }
    Ok(())
}

/// Starting weights `W_{j,n}`, `j = 1..=M`, `n = 1..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSet<T = f64> {
    pub(crate) sigma: Vec<T>,
    pub(crate) orders: Vec<f64>,
    pub(crate) dt: f64,
    pub(crate) steps: usize,
    /// `weights[n - 1][j - 1] = W_{j,n}`.
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) condition_estimate: f64,
    pub(crate) residual_norm: f64,
}

impl<T: Scalar> CorrectionSet<T> {
    /// The uncorrected scheme (`M = 0`).
    pub fn none(coeffs: &StencilCoefficients) -> Self {
        Self {
            sigma: Vec::new(),
            orders: coeffs.orders().to_vec(),
            dt: coeffs.dt(),
            steps: coeffs.steps(),
            weights: vec![Vec::new(); coeffs.steps()],
            condition_estimate: 1.0,
            residual_norm: 0.0,
        }
    }

    /// Exponents sorted by real part; `W_{j,n}` does not depend on their order.
    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    /// Number of correction terms `M`.
    pub fn terms(&self) -> usize {
        self.sigma.len()
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `W_{j,n}` with one-based `j` and `n`.
    pub fn weight(&self, j: usize, n: usize) -> T {
        self.weights[n - 1][j - 1]
    }

    /// `(W_{1,n}, …, W_{M,n})`.
    pub fn at_step(&self, n: usize) -> &[T] {
        &self.weights[n - 1]
    }

    /// ∞-norm condition estimate of the Vandermonde matrix.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Largest defining-relation residual over all `k` and `n`.
    pub fn residual_norm(&self) -> f64 {
        self.residual_norm
    }

    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_estimate > CONDITION_WARNING
    }
}

/// Weights for real exponents.
pub fn solve_correction_weights(
    sigma: &SigmaVector,
    alpha: f64,
    grid: &TimeGrid,
    coeffs: &StencilCoefficients,
) -> Result<CorrectionSet> {
    if coeffs.orders() != [alpha] || coeffs.dt() != grid.dt() || coeffs.steps() != grid.steps() {
        return Err(Error::InvalidParameter(
            "stencil was not built for this order and grid".into(),
        ));
    }
    solve_weights(sigma.values(), coeffs)
}

/// Weights for arbitrary (possibly complex) exponents against any stencil,
/// including aggregated multi-term stencils.
pub fn solve_weights<T: Scalar>(sigma: &[T], coeffs: &StencilCoefficients) -> Result<CorrectionSet<T>> {
    let m = sigma.len();
    if m == 0 {
        return Ok(CorrectionSet::none(coeffs));
    }
    if m > coeffs.steps() {
        return Err(Error::InvalidParameter(format!(
            "{m} correction terms need at least {m} steps, grid has {}",
            coeffs.steps()
        )));
    }
    for s in sigma {
        if !(s.re() > 0.0) || !s.is_finite() {
            return Err(Error::Domain {
                function: "correction exponent",
                argument: s.re(),
            });
        }
    }
    let real_parts: Vec<f64> = sigma.iter().map(|s| s.re()).collect();
    check_separation(&real_parts)?;
    // The weights do not depend on the order of the exponents; fixing the row
    // order makes them bit-identical under permutation.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        real_parts[a]
            .total_cmp(&real_parts[b])
            .then(sigma[a].im().total_cmp(&sigma[b].im()))
    });
    let sigma: Vec<T> = order.iter().map(|&i| sigma[i]).collect();
    let sigma = sigma.as_slice();

    let vandermonde = Matrix::from_fn(m, |k, j| T::real_pow((j + 1) as f64, sigma[k]));
    let condition = vandermonde.condition_inf()?;
    if !(condition <= CONDITION_LIMIT) {
        return Err(Error::IllConditioned(condition));
    }
    let lu = vandermonde.lu()?;

    let dt = coeffs.dt();
    let steps = coeffs.steps();
    let mut exact_factor = Vec::with_capacity(m);
    for &s in sigma {
        exact_factor.push(exact_power_factors(s, coeffs)?);
    }
    let monomials: Vec<Vec<T>> = sigma
        .iter()
        .map(|&s| (0..=steps).map(|i| T::real_pow(i as f64 * dt, s)).collect())
        .collect();
    let scales: Vec<T> = sigma.iter().map(|&s| T::real_pow(dt, s)).collect();

    let mut weights = Vec::with_capacity(steps);
    let mut residual_norm: f64 = 0.0;
    let mut discrete = vec![T::zero(); m];
    let mut exact = vec![T::zero(); m];
    for n in 1..=steps {
        let t = n as f64 * dt;
        let mut rhs = Vec::with_capacity(m);
        for k in 0..m {
            discrete[k] = apply_rl_derivative(&monomials[k], coeffs, n)?;
            exact[k] = exact_factor[k]
                .iter()
                .map(|&(c, shift)| c * T::real_pow(t, sigma[k] + shift))
                .sum();
            rhs.push((exact[k] - discrete[k]) / scales[k]);
        }
        let w = lu.solve(&rhs)?;
        for k in 0..m {
            let corrected: T = discrete[k] + (0..m).map(|j| w[j] * monomials[k][j + 1]).sum::<T>();
            residual_norm = residual_norm.max((corrected - exact[k]).modulus());
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("correction weights"));
        }
        weights.push(w);
    }
    Ok(CorrectionSet {
        sigma: sigma.to_vec(),
        orders: coeffs.orders().to_vec(),
        dt,
        steps,
        weights,
        condition_estimate: condition,
        residual_norm,
    })
}

/// Exact operator applied to `t^σ` as a sum of `c · t^{σ + shift}` terms, one
/// per order in the stencil.
fn exact_power_factors<T: Scalar>(sigma: T, coeffs: &StencilCoefficients) -> Result<Vec<(T, f64)>> {
    let numerator = gamma(sigma + 1.0)?;
    coeffs
        .orders()
        .iter()
        .map(|&alpha| {
            let shift = match coeffs.kind() {
                OperatorKind::Derivative => -alpha,
                OperatorKind::Integral => alpha,
            };
            Ok((numerator / gamma(sigma + (1.0 + shift))?, shift))
        })
        .collect()
}

/// `W_{1,1} = Γ(1+σ)/Γ(1+σ-α) Δt^{-α} - d^{(1)}_1` for a single correction term.
pub fn closed_form_w11(sigma: f64, alpha: f64, dt: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Domain {
            function: "correction exponent",
            argument: sigma,
        });
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            function: "fractional order",
            argument: alpha,
        });
    }
    let scale = dt.powf(-alpha);
    Ok(gamma(1.0 + sigma)? / gamma(1.0 + sigma - alpha)? * scale - scale / gamma(2.0 - alpha)?)
}

/// Sums per-order weights and stencils for a multi-term operator
/// `Σ_l D^{α_l}`. A single set passes through unchanged.
pub fn aggregate_multiterm<T: Scalar>(
    weight_sets: &[CorrectionSet<T>],
    coeff_sets: &[StencilCoefficients],
) -> Result<(CorrectionSet<T>, StencilCoefficients)> {
    if weight_sets.len() != coeff_sets.len() {
        return Err(Error::LengthMismatch {
            context: "multi-term sets",
            expected: coeff_sets.len(),
            found: weight_sets.len(),
        });
    }
    let (first, rest) = weight_sets
        .split_first()
        .ok_or_else(|| Error::InvalidParameter("no weight sets to aggregate".into()))?;
    let mut total = first.clone();
    for set in rest {
        if set.sigma != first.sigma || set.dt != first.dt || set.steps != first.steps {
            return Err(Error::InvalidParameter(
                "weight sets must share sigma, time step and step count".into(),
            ));
        }
        total.orders.extend_from_slice(&set.orders);
        for (acc, w) in total.weights.iter_mut().zip(&set.weights) {
            for (a, &b) in acc.iter_mut().zip(w) {
                *a += b;
            }
        }
        total.condition_estimate = total.condition_estimate.max(set.condition_estimate);
        total.residual_norm += set.residual_norm;
    }
    let stencil = StencilCoefficients::sum(coeff_sets)?;
    if stencil.steps() != total.steps || stencil.dt() != total.dt {
        return Err(Error::InvalidParameter(
            "weight sets and stencils were built on different grids".into(),
        ));
    }
    Ok((total, stencil))
}

/// How the exponents of a conditioning study are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaRule {
    /// `σ_k = α k`
    AlphaK,
    /// `σ_k = 0.1 k`
    TenthK,
    Custom(Vec<f64>),
}

impl SigmaRule {
    pub fn exponents(&self, alpha: f64, m: usize) -> Result<Vec<f64>> {
        match self {
            SigmaRule::AlphaK => Ok((1..=m).map(|k| alpha * k as f64).collect()),
            SigmaRule::TenthK => Ok((1..=m).map(|k| 0.1 * k as f64).collect()),
            SigmaRule::Custom(values) if values.len() >= m => Ok(values[..m].to_vec()),
            SigmaRule::Custom(values) => Err(Error::LengthMismatch {
                context: "custom sigma rule",
                expected: m,
                found: values.len(),
            }),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SigmaRule::AlphaK => "alpha_k",
            SigmaRule::TenthK => "tenth_k",
            SigmaRule::Custom(_) => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionRow {
    pub m: usize,
    pub rule: &'static str,
    pub condition_estimate: f64,
}

/// Condition estimates of `V_{kj} = j^{σ_k}` for `M = 1..=max_m`.
pub fn condition_study(rule: &SigmaRule, alpha: f64, max_m: usize) -> Result<Vec<ConditionRow>> {
    if max_m == 0 || max_m > 12 {
        return Err(Error::InvalidParameter(format!("max_m = {max_m} not in 1..=12")));
    }
    let mut rows = Vec::with_capacity(max_m);
    for m in 1..=max_m {
        let sigma = rule.exponents(alpha, m)?;
        let v = Matrix::from_fn(m, |k, j| ((j + 1) as f64).powf(sigma[k]));
        rows.push(ConditionRow {
            m,
            rule: rule.label(),
            condition_estimate: v.condition_inf()?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::build_coefficients;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn setup(alpha: f64, dt: f64, steps: usize) -> (TimeGrid, StencilCoefficients) {
        let grid = TimeGrid::new(dt, steps).unwrap();
        let coeffs = build_coefficients(alpha, &grid).unwrap();
        (grid, coeffs)
    }

    fn sigma(values: &[f64]) -> SigmaVector {
        SigmaVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn sigma_vector_validation() {
        assert!(SigmaVector::new(vec![]).is_err());
        assert!(SigmaVector::new(vec![0.0]).is_err());
        assert!(matches!(
            SigmaVector::new(vec![0.3, 0.3 + 1e-9]),
            Err(Error::DuplicateSigma { .. })
        ));
        assert!(SigmaVector::new(vec![0.3, 0.3 + 1e-7]).is_ok());
    }

    #[test]
    fn single_term_matches_closed_form() {
        let (grid, coeffs) = setup(0.5, 1.0, 4);
        let set = solve_correction_weights(&sigma(&[0.9]), 0.5, &grid, &coeffs).unwrap();
        let expected = gamma(1.9).unwrap() / gamma(1.4).unwrap() - 1.0 / gamma(1.5).unwrap();
        assert!((set.weight(1, 1) - expected).abs() < 1e-14);
        assert!((closed_form_w11(0.9, 0.5, 1.0).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn closed_form_at_sigma_equal_alpha() {
        let (alpha, dt) = (0.4, 0.02f64);
        let d11 = dt.powf(-alpha) / gamma(2.0 - alpha).unwrap();
        let expected = gamma(1.0 + alpha).unwrap() * dt.powf(-alpha) - d11;
        let got = closed_form_w11(alpha, alpha, dt).unwrap();
        assert!((got - expected).abs() < 1e-13 * expected.abs());
    }

    #[test]
    fn three_terms_satisfy_defining_relation() {
        let (alpha, dt, steps) = (0.5, 0.1, 10);
        let (grid, coeffs) = setup(alpha, dt, steps);
        let s = [0.1, 0.3, 0.5];
        let set = solve_correction_weights(&sigma(&s), alpha, &grid, &coeffs).unwrap();
        assert!(set.residual_norm() <= 1e-9);
        // Substitute the weights back independently of the solver internals.
        for &sk in &s {
            let u: Vec<f64> = (0..=steps).map(|i| (i as f64 * dt).powf(sk)).collect();
            for n in 1..=steps {
                let t = n as f64 * dt;
                let corrected = apply_rl_derivative(&u, &coeffs, n).unwrap()
                    + (1..=3).map(|j| set.weight(j, n) * u[j]).sum::<f64>();
                let exact = gamma(1.0 + sk).unwrap() / gamma(1.0 + sk - alpha).unwrap() * t.powf(sk - alpha);
                assert!((corrected - exact).abs() <= 1e-9, "σ = {sk}, n = {n}");
            }
        }
    }

    #[test]
    fn weights_decay_away_from_origin() {
        for dt in [1e-3, 1e-2, 1e-1] {
            let (grid, coeffs) = setup(0.5, dt, 12);
            let set = solve_correction_weights(&sigma(&[0.9]), 0.5, &grid, &coeffs).unwrap();
            assert!(set.weight(1, 1).abs() >= set.weight(1, 10).abs(), "dt = {dt}");
        }
    }

    #[test]
    fn too_few_steps_is_rejected() {
        let (grid, coeffs) = setup(0.5, 0.1, 2);
        assert!(solve_correction_weights(&sigma(&[0.1, 0.2, 0.3]), 0.5, &grid, &coeffs).is_err());
    }

    #[test]
    fn mismatched_stencil_is_rejected() {
        let (grid, coeffs) = setup(0.5, 0.1, 5);
        assert!(solve_correction_weights(&sigma(&[0.1]), 0.3, &grid, &coeffs).is_err());
    }

    #[test]
    fn aggregation_identity_and_doubling() {
        let (grid, coeffs) = setup(0.35, 0.05, 8);
        let set = solve_correction_weights(&sigma(&[0.2, 0.6]), 0.35, &grid, &coeffs).unwrap();
        let (one, stencil) = aggregate_multiterm(std::slice::from_ref(&set), std::slice::from_ref(&coeffs)).unwrap();
        assert_eq!(one, set);
        assert_eq!(stencil, coeffs);

        let (two, stencil2) =
            aggregate_multiterm(&[set.clone(), set.clone()], &[coeffs.clone(), coeffs.clone()]).unwrap();
        for n in 1..=8 {
            for j in 1..=2 {
                assert_eq!(two.weight(j, n), 2.0 * set.weight(j, n));
            }
        }
        assert_eq!(stencil2.d2()[2], 2.0 * coeffs.d2()[2]);
        assert_eq!(stencil2.b1()[5], 2.0 * coeffs.b1()[5]);
    }

    #[test]
    fn aggregation_rejects_mismatched_sigma() {
        let (grid, coeffs) = setup(0.35, 0.05, 8);
        let a = solve_correction_weights(&sigma(&[0.2]), 0.35, &grid, &coeffs).unwrap();
        let b = solve_correction_weights(&sigma(&[0.3]), 0.35, &grid, &coeffs).unwrap();
        assert!(aggregate_multiterm(&[a, b], &[coeffs.clone(), coeffs]).is_err());
    }

    #[test]
    fn aggregated_weights_match_direct_multiterm_solve() {
        let grid = TimeGrid::new(0.1, 6).unwrap();
        let orders = [0.3, 0.5, 0.7];
        let stencils: Vec<_> = orders.iter().map(|&a| build_coefficients(a, &grid).unwrap()).collect();
        let sets: Vec<_> = stencils
            .iter()
            .map(|c| solve_weights(&[0.9, 0.2], c).unwrap())
            .collect();
        let (aggregated, stencil) = aggregate_multiterm(&sets, &stencils).unwrap();
        let direct = solve_weights(&[0.9, 0.2], &stencil).unwrap();
        for n in 1..=6 {
            for j in 1..=2 {
                let (a, b) = (aggregated.weight(j, n), direct.weight(j, n));
                assert!((a - b).abs() < 1e-11 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn condition_study_shape() {
        let tenth = condition_study(&SigmaRule::TenthK, 0.5, 9).unwrap();
        let alpha = condition_study(&SigmaRule::AlphaK, 0.5, 9).unwrap();
        assert!((tenth[0].condition_estimate - 1.0).abs() < 1e-15);
        assert!(tenth[8].condition_estimate > tenth[4].condition_estimate);
        assert!(tenth[4].condition_estimate > tenth[1].condition_estimate);
        for m in 1..9 {
            assert!(tenth[m].condition_estimate > alpha[m].condition_estimate);
            assert!(tenth[m].condition_estimate >= tenth[m - 1].condition_estimate);
            assert!(alpha[m].condition_estimate >= alpha[m - 1].condition_estimate);
        }
        assert!(condition_study(&SigmaRule::TenthK, 0.5, 13).is_err());
        assert!(condition_study(&SigmaRule::Custom(vec![0.1]), 0.5, 2).is_err());
    }

    #[test]
    fn nine_tenth_exponents_reach_double_precision_limit() {
        // Explicit inverse by Gauss-Jordan elimination, independent of the LU path.
        let n = 9;
        let mut a: Vec<Vec<f64>> = (0..n)
            .map(|k| (0..n).map(|j| ((j + 1) as f64).powf(0.1 * (k + 1) as f64)).collect())
            .collect();
        let norm_a = a
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut inv: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        for c in 0..n {
            let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
            a.swap(c, p);
            inv.swap(c, p);
            let pivot = a[c][c];
            for j in 0..n {
                a[c][j] /= pivot;
                inv[c][j] /= pivot;
            }
            for r in 0..n {
                if r != c {
                    let f = a[r][c];
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
        let norm_inv = inv
            .iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        assert!(norm_a * norm_inv >= 1e13);
        let study = condition_study(&SigmaRule::TenthK, 0.5, 9).unwrap();
        let ratio = study[8].condition_estimate / (norm_a * norm_inv);
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn refuses_hopeless_conditioning() {
        let grid = TimeGrid::new(0.1, 12).unwrap();
        let coeffs = build_coefficients(0.5, &grid).unwrap();
        let s: Vec<f64> = (1..=11).map(|k| 0.1 * k as f64).collect();
        assert!(matches!(solve_weights(&s, &coeffs), Err(Error::IllConditioned(_))));
    }

    #[test]
    fn complex_step_matches_finite_difference() {
        let grid = TimeGrid::new(0.05, 10).unwrap();
        let coeffs = build_coefficients(0.5, &grid).unwrap();
        let base = [0.15, 0.45, 0.8];
        let (h_cs, h_fd) = (1e-20, 1e-6);
        for j in 0..3 {
            let mut z: Vec<Complex64> = base.iter().map(|&s| Complex64::new(s, 0.0)).collect();
            z[j].im = h_cs;
            let cs = solve_weights(&z, &coeffs).unwrap();
            let mut plus = base;
            plus[j] += h_fd;
            let mut minus = base;
            minus[j] -= h_fd;
            let wp = solve_weights(&plus, &coeffs).unwrap();
            let wm = solve_weights(&minus, &coeffs).unwrap();
            for n in [1, 4, 10] {
                for i in 1..=3 {
                    let derivative = cs.weight(i, n).im / h_cs;
                    let fd = (wp.weight(i, n) - wm.weight(i, n)) / (2.0 * h_fd);
                    assert!(
                        (derivative - fd).abs() <= 1e-5 * fd.abs().max(1e-3),
                        "j={j} i={i} n={n}: {derivative} vs {fd}"
                    );
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn residual_small_for_random_exponents(
            raw in proptest::collection::vec(0.02f64..1.5, 1..=3),
            alpha in 0.1f64..0.9,
        ) {
            let mut s = raw.clone();
            s.sort_by(f64::total_cmp);
            for i in 1..s.len() {
                if s[i] - s[i - 1] < 0.05 {
                    s[i] = s[i - 1] + 0.05;
                }
            }
            let grid = TimeGrid::new(0.02, 50).unwrap();
            let coeffs = build_coefficients(alpha, &grid).unwrap();
            let set = solve_weights(&s, &coeffs).unwrap();
            if set.condition_estimate() < 1e10 {
                prop_assert!(set.residual_norm() <= 1e-9, "residual {}", set.residual_norm());
            }
        }

        #[test]
        fn closed_form_agrees_with_solver(
            s in 0.01f64..2.0,
            alpha in 0.05f64..0.95,
            dt in 1e-3f64..1.0,
        ) {
            let grid = TimeGrid::new(dt, 2).unwrap();
            let coeffs = build_coefficients(alpha, &grid).unwrap();
            let set = solve_weights(&[s], &coeffs).unwrap();
            let closed = closed_form_w11(s, alpha, dt).unwrap();
            let scale = closed.abs().max(dt.powf(-alpha) / gamma(2.0 - alpha).unwrap());
            prop_assert!((set.weight(1, 1) - closed).abs() <= 1e-12 * scale);
        }
    }
}
