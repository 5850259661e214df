//! Run configuration: a flat `key = value` file overlaid with command-line
//! flags of the same names.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use fraccap_core::{CaptureConfig, EscalationGuess, SigmaRule};

use crate::error::CliError;

pub const DEFAULT_SEED: u64 = 20_190_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Stage-I only: estimate exponents from short-time data.
    Capture,
    /// Stage-II only: corrected integration with given exponents.
    Solve,
    /// Capture on the short grid, then integrate on the long grid.
    Pipeline,
    /// Error against step size for captured and baseline exponents.
    Convergence,
    /// Correction weights and Vandermonde condition numbers.
    Weights,
    /// Regenerate a reference study and check it.
    Repro,
}

macro_rules! config_keys {
    ($($(#[doc = $doc:literal])* $key:ident),* $(,)?) => {
        /// Flag overrides. Every config-file key has a flag of the same name
        /// with dashes for underscores.
        #[derive(Debug, Default, Clone, clap::Args)]
        pub struct Overrides {
            $(
                $(#[doc = $doc])*
                #[arg(long, value_name = "VALUE")]
                pub $key: Option<String>,
            )*
        }

        impl Overrides {
            pub fn pairs(&self) -> Vec<(&'static str, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$key {
                        out.push((stringify!($key), v.clone()));
                    }
                )*
                out
            }
        }

        pub const KEYS: &[&str] = &[$(stringify!($key)),*];
    };
}

config_keys! {
    /// Fractional orders, comma separated.
    orders,
    /// Initial value u(0).
    u0,
    /// Manufactured solution family: power_sum or oscillatory.
    solution,
    /// Exponents of the manufactured solution.
    exponents,
    /// Draw this many exponents at random instead of listing them.
    random_terms,
    /// Upper bound for random exponents.
    random_upper,
    /// Angular frequency of the oscillatory solution.
    frequency,
    /// Observed data CSV with columns n, t, u_data, f_data.
    data_file,
    /// Stage-I step size.
    capture_dt,
    /// Stage-I number of samples.
    capture_steps,
    /// Stage-II step size.
    dt,
    /// Stage-II number of steps.
    steps,
    /// Stage-II final time, used when steps is absent.
    final_time,
    /// Correction exponents, or the capture starting point.
    sigma,
    /// Reference exponents to compare against.
    baseline_sigma,
    tol_error,
    tol_gradient,
    cs_perturbation,
    initial_step,
    max_iterations,
    max_terms,
    sigma_min,
    sigma_max,
    /// Starting exponent for one-term capture.
    first_guess,
    /// Extra exponent when escalating to two terms: a number or sigma_min.
    second_guess,
    /// Step counts for convergence mode.
    convergence_steps,
    /// Exponent rules for the condition study: tenth_k, alpha_k.
    sigma_rules,
    /// Largest term count in the condition study.
    max_m,
    /// Repro study ids, or all.
    study,
    /// Output directory.
    out,
    /// Random seed.
    seed,
}

/// Raw key/value pairs, file first and flags on top.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut raw = Self::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`", i + 1)))?;
            let key = key.trim().replace('-', "_");
            if raw.entries.contains_key(&key) {
                return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
            raw.set(&key, value.trim())?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("unknown key `{key}`")));
        }
        self.entries.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<(), CliError> {
        for (k, v) in overrides.pairs() {
            self.set(k, &v)?;
        }
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    fn has(&self, key: &str) -> bool {
        self.get(key).is_some()
    }

    fn scalar<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<T>()
                            .map_err(|e| CliError::Config(format!("`{key}`: cannot parse `{s}`: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExponentSpec {
    Listed(Vec<f64>),
    Random { count: usize, upper: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolutionSpec {
    PowerSum(ExponentSpec),
    Oscillatory { exponent: f64, frequency: f64 },
}

/// Where the Stage-I samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Manufactured(SolutionSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub dt: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Study {
    F(u8),
    Cond,
    MultitermRandom,
    Oscillatory,
}

impl Study {
    pub fn all() -> Vec<Study> {
        let mut v: Vec<Study> = (1..=14).map(Study::F).collect();
        v.extend([Study::Cond, Study::MultitermRandom, Study::Oscillatory]);
        v
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Study::F(k) => write!(f, "f{k}"),
            Study::Cond => f.write_str("cond"),
            Study::MultitermRandom => f.write_str("multiterm_random"),
            Study::Oscillatory => f.write_str("oscillatory"),
        }
    }
}

impl FromStr for Study {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let unknown = || CliError::Config(format!("unknown study `{s}`"));
        match s {
            "cond" => Ok(Study::Cond),
            "multiterm_random" => Ok(Study::MultitermRandom),
            "oscillatory" => Ok(Study::Oscillatory),
            _ => {
                let k: u8 = s.strip_prefix('f').and_then(|d| d.parse().ok()).ok_or_else(unknown)?;
                if (1..=14).contains(&k) {
                    Ok(Study::F(k))
                } else {
                    Err(unknown())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub orders: Vec<f64>,
    pub u0: f64,
    pub source: Option<DataSource>,
    pub capture_grid: GridSpec,
    pub solve_grid: GridSpec,
    pub sigma: Option<Vec<f64>>,
    pub baseline_sigma: Option<Vec<f64>>,
    pub capture: CaptureConfig,
    pub convergence_steps: Vec<usize>,
    pub sigma_rules: Vec<SigmaRule>,
    pub max_m: usize,
    pub studies: Vec<Study>,
    pub out: PathBuf,
    pub seed: u64,
}

fn positive(key: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "`{key}` must be positive and finite, got {v}"
        )))
    }
}

impl RunConfig {
    pub fn from_raw(mode: Mode, raw: &RawConfig) -> Result<Self, CliError> {
        let orders = raw.list::<f64>("orders")?.unwrap_or_else(|| vec![0.5]);
        if orders.is_empty() {
            return Err(CliError::Config("`orders` is empty".into()));
        }
        let u0 = raw.scalar("u0")?.unwrap_or(0.0);

        let manufactured_keys = ["solution", "exponents", "random_terms", "random_upper", "frequency"];
        let has_manufactured = manufactured_keys.iter().any(|k| raw.has(k));
        let source = match (raw.get("data_file"), has_manufactured) {
            (Some(_), true) => {
                return Err(CliError::Config(
                    "give either a manufactured solution or `data_file`, not both".into(),
                ))
            }
            (Some(path), false) => Some(DataSource::File(PathBuf::from(path))),
            (None, true) => Some(DataSource::Manufactured(Self::solution_spec(raw)?)),
            (None, false) => None,
        };

        let capture_grid = GridSpec {
            dt: positive("capture_dt", raw.scalar("capture_dt")?.unwrap_or(0.01))?,
            steps: raw.scalar("capture_steps")?.unwrap_or(100),
        };
        let dt = positive("dt", raw.scalar("dt")?.unwrap_or(0.01))?;
        let steps = match (raw.scalar::<usize>("steps")?, raw.scalar::<f64>("final_time")?) {
            (Some(_), Some(_)) => return Err(CliError::Config("give `steps` or `final_time`, not both".into())),
            (Some(n), None) => n,
            (None, Some(t)) => (positive("final_time", t)? / dt).round() as usize,
            (None, None) => 100,
        };
        let solve_grid = GridSpec { dt, steps };
        for (key, grid) in [("capture_steps", capture_grid), ("steps", solve_grid)] {
            if grid.steps == 0 {
                return Err(CliError::Config(format!("`{key}` must be at least 1")));
            }
        }

        let defaults = CaptureConfig::default();
        let second_guess = match raw.get("second_guess") {
            None | Some("sigma_min") => EscalationGuess::SigmaMin,
            Some(_) => EscalationGuess::Value(raw.scalar("second_guess")?.unwrap_or_default()),
        };
        let capture = CaptureConfig {
            tol_error: raw.scalar("tol_error")?.unwrap_or(defaults.tol_error),
            tol_gradient: raw.scalar("tol_gradient")?.unwrap_or(defaults.tol_gradient),
            cs_perturbation: raw.scalar("cs_perturbation")?.unwrap_or(defaults.cs_perturbation),
            initial_step: raw.scalar("initial_step")?.unwrap_or(defaults.initial_step),
            max_iterations: raw.scalar("max_iterations")?.unwrap_or(defaults.max_iterations),
            max_terms: raw.scalar("max_terms")?.unwrap_or(defaults.max_terms),
            sigma_min: raw.scalar("sigma_min")?.unwrap_or(defaults.sigma_min),
            sigma_max: raw.scalar("sigma_max")?.unwrap_or(defaults.sigma_max),
            first_guess: raw.scalar("first_guess")?.or(defaults.first_guess),
            second_guess,
        };
        capture.validate().map_err(|e| CliError::Config(e.to_string()))?;

        let convergence_steps = raw
            .list::<usize>("convergence_steps")?
            .unwrap_or_else(|| (0..6).map(|k| 64usize << k).collect());
        if convergence_steps.len() < 2 || convergence_steps.contains(&0) {
            return Err(CliError::Config(
                "`convergence_steps` needs at least two positive entries".into(),
            ));
        }

        let sigma_rules = match raw.list::<String>("sigma_rules")? {
            None => vec![SigmaRule::TenthK, SigmaRule::AlphaK],
            Some(names) => names
                .iter()
                .map(|n| match n.as_str() {
                    "tenth_k" => Ok(SigmaRule::TenthK),
                    "alpha_k" => Ok(SigmaRule::AlphaK),
                    other => Err(CliError::Config(format!("unknown sigma rule `{other}`"))),
                })
                .collect::<Result<_, _>>()?,
        };

        let studies = match raw.list::<String>("study")? {
            None => Vec::new(),
            Some(ids) if ids.iter().any(|s| s == "all") => Study::all(),
            Some(ids) => {
                let mut v = ids.iter().map(|s| s.parse()).collect::<Result<Vec<Study>, _>>()?;
                v.sort();
                v.dedup();
                v
            }
        };
        if mode == Mode::Repro && studies.is_empty() {
            return Err(CliError::Config("repro mode needs `study`".into()));
        }

        Ok(Self {
            mode,
            orders,
            u0,
            source,
            capture_grid,
            solve_grid,
            sigma: raw.list("sigma")?,
            baseline_sigma: raw.list("baseline_sigma")?,
            capture,
            convergence_steps,
            sigma_rules,
            max_m: raw.scalar("max_m")?.unwrap_or(9),
            studies,
            out: raw
                .get("out")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("out")),
            seed: raw.scalar("seed")?.unwrap_or(DEFAULT_SEED),
        })
    }

    fn solution_spec(raw: &RawConfig) -> Result<SolutionSpec, CliError> {
        match raw.get("solution").unwrap_or("power_sum") {
            "power_sum" => {
                let listed = raw.list::<f64>("exponents")?;
                let count = raw.scalar::<usize>("random_terms")?;
                match (listed, count) {
                    (Some(_), Some(_)) => Err(CliError::Config("give `exponents` or `random_terms`, not both".into())),
                    (Some(e), None) => Ok(SolutionSpec::PowerSum(ExponentSpec::Listed(e))),
                    (None, Some(count)) => Ok(SolutionSpec::PowerSum(ExponentSpec::Random {
                        count,
                        upper: raw.scalar("random_upper")?.unwrap_or(0.5),
                    })),
                    (None, None) => Err(CliError::Config("power_sum needs `exponents` or `random_terms`".into())),
                }
            }
            "oscillatory" => {
                let exps = raw
                    .list::<f64>("exponents")?
                    .ok_or_else(|| CliError::Config("oscillatory needs `exponents`".into()))?;
                if exps.len() != 1 {
                    return Err(CliError::Config("oscillatory takes exactly one exponent".into()));
                }
                Ok(SolutionSpec::Oscillatory {
                    exponent: exps[0],
                    frequency: raw.scalar("frequency")?.unwrap_or(10.0 * std::f64::consts::PI),
                })
            }
            other => Err(CliError::Config(format!("unknown solution `{other}`"))),
        }
    }
}
