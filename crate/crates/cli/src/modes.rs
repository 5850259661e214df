//! The non-repro run modes.

use std::path::PathBuf;
use std::time::Instant;

use fraccap_core::export::{fmt_f64, read_observed, write_observed, write_solution, write_trace};
use fraccap_core::{
    build_coefficients, capture_auto, capture_fixed_m, component_errors, condition_study, l2_relative_error,
    sample_random_singularities, solve_weights, CaptureTrace, CorrectionSet, FdeProblem, Integrator,
    ManufacturedSolution, Misfit, ObservedData, SolutionSeries, StencilCoefficients, TimeGrid,
};
use rayon::prelude::*;

use crate::config::{DataSource, ExponentSpec, GridSpec, Mode, RunConfig, SolutionSpec};
use crate::error::CliError;
use crate::output::{OutputDir, Summary, Table};
use crate::repro;

/// What a run produced.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub summary: Summary,
    pub files: Vec<PathBuf>,
    /// Names of failed acceptance checks (repro mode only).
    pub failures: Vec<String>,
}

pub fn run(config: &RunConfig) -> Result<Report, CliError> {
    let out = OutputDir::create(&config.out)?;
    let mut report = Report::default();
    report.summary.add("mode", format!("{:?}", config.mode).to_lowercase());
    match config.mode {
        Mode::Capture => run_capture(config, &out, &mut report)?,
        Mode::Solve => run_solve(config, &out, &mut report)?,
        Mode::Pipeline => run_pipeline(config, &out, &mut report)?,
        Mode::Convergence => run_convergence(config, &out, &mut report)?,
        Mode::Weights => run_weights(config, &out, &mut report)?,
        Mode::Repro => repro::run(config, &out, &mut report)?,
    }
    report.files.push(out.write_summary(&report.summary)?);
    Ok(report)
}

/// A manufactured solution shifted by the configured initial value.
#[derive(Debug, Clone)]
pub struct Manufactured {
    pub solution: ManufacturedSolution,
    pub u0: f64,
}

impl Manufactured {
    pub fn build(spec: &SolutionSpec, config: &RunConfig) -> Result<Self, CliError> {
        let orders = config.orders.clone();
        let solution = match spec {
            SolutionSpec::PowerSum(ExponentSpec::Listed(e)) => ManufacturedSolution::power_sum(e.clone(), orders)?,
            SolutionSpec::PowerSum(ExponentSpec::Random { count, upper }) => {
                let e = sample_random_singularities(*count, *upper, config.seed)?;
                ManufacturedSolution::power_sum(e, orders)?
            }
            SolutionSpec::Oscillatory { exponent, frequency } => {
                ManufacturedSolution::oscillatory(*exponent, *frequency, orders)?
            }
        };
        Ok(Self {
            solution,
            u0: config.u0,
        })
    }

    pub fn exact_on(&self, grid: &TimeGrid) -> Vec<f64> {
        self.solution.exact_on(grid).into_iter().map(|u| u + self.u0).collect()
    }

    pub fn problem(&self) -> Result<FdeProblem, CliError> {
        let p = self.solution.problem()?;
        Ok(FdeProblem::new(p.orders().to_vec(), self.u0, p.forcing().clone())?)
    }

    pub fn observed(&self, grid: GridSpec) -> Result<ObservedData, CliError> {
        let grid = TimeGrid::new(grid.dt, grid.steps)?;
        let u = self.exact_on(&grid)[1..].to_vec();
        Ok(ObservedData::new(grid, self.u0, u, self.solution.forcing_on(&grid)?)?)
    }
}

fn manufactured(config: &RunConfig) -> Result<Option<Manufactured>, CliError> {
    match &config.source {
        Some(DataSource::Manufactured(spec)) => Manufactured::build(spec, config).map(Some),
        _ => Ok(None),
    }
}

fn require_manufactured(config: &RunConfig) -> Result<Manufactured, CliError> {
    manufactured(config)?.ok_or_else(|| {
        CliError::Config(format!(
            "{:?} mode needs a manufactured solution (`exponents`, `random_terms` or `solution`)",
            config.mode
        ))
    })
}

/// Stage-I samples, from a file (truncated to `capture_steps`) or a
/// manufactured solution on the capture grid.
fn observed(config: &RunConfig) -> Result<ObservedData, CliError> {
    match &config.source {
        Some(DataSource::File(path)) => {
            let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
            let data = read_observed(file)?;
            let keep = config.capture_grid.steps.min(data.grid().steps());
            if keep == data.grid().steps() {
                return Ok(data);
            }
            let grid = TimeGrid::new(data.grid().dt(), keep)?;
            Ok(ObservedData::new(
                grid,
                data.initial_value(),
                data.u_data()[..keep].to_vec(),
                data.f_data()[..keep].to_vec(),
            )?)
        }
        Some(DataSource::Manufactured(spec)) => Manufactured::build(spec, config)?.observed(config.capture_grid),
        None => Err(CliError::Config(
            "no capture input: give `data_file` or a manufactured solution".into(),
        )),
    }
}

#[derive(Debug, Clone)]
pub struct Captured {
    pub sigma: Vec<f64>,
    pub error: f64,
    pub traces: Vec<CaptureTrace>,
}

/// Fixed-M descent from `sigma` when given, hierarchical capture otherwise.
pub fn capture(config: &RunConfig, data: &ObservedData) -> Result<Captured, CliError> {
    let misfit = Misfit::new(data, &config.orders)?;
    match &config.sigma {
        Some(guess) => {
            let trace = capture_fixed_m(&misfit, guess, &config.capture)?;
            let best = trace.best().clone();
            Ok(Captured {
                sigma: best.sigma,
                error: best.error,
                traces: vec![trace],
            })
        }
        None => {
            let r = capture_auto(&misfit, &config.capture)?;
            Ok(Captured {
                sigma: r.sigma.into_inner(),
                error: r.final_error,
                traces: r.traces,
            })
        }
    }
}

fn write_capture(
    config: &RunConfig,
    out: &OutputDir,
    report: &mut Report,
    data: &ObservedData,
    started: Instant,
) -> Result<Captured, CliError> {
    let captured = capture(config, data)?;
    for trace in &captured.traces {
        let name = format!("trace_m{}.csv", trace.terms());
        report.files.push(out.write(&name, |w| Ok(write_trace(w, trace)?))?);
    }
    let s = &mut report.summary;
    s.add("capture_steps", data.grid().steps());
    s.add_f64("capture_dt", data.grid().dt());
    s.add("M", captured.sigma.len());
    s.add_list("sigma", &captured.sigma);
    s.add_f64("E", captured.error);
    s.add("status", captured.traces.last().map_or("none", |t| t.status.as_str()));
    s.add(
        "iterations",
        captured.traces.iter().map(|t| t.records.len()).sum::<usize>(),
    );
    if let Some(m) = manufactured(config)? {
        let truth = m.solution.exponents();
        if !truth.is_empty() {
            let errs = component_errors(&captured.sigma, truth)?;
            s.add_list("true_sigma", truth);
            s.add_list("component_errors", &errs.errors);
        }
    }
    s.add("capture_wall_time_s", format!("{:.6}", started.elapsed().as_secs_f64()));
    Ok(captured)
}

fn run_capture(config: &RunConfig, out: &OutputDir, report: &mut Report) -> Result<(), CliError> {
    let started = Instant::now();
    let data = observed(config)?;
    report
        .files
        .push(out.write("observed.csv", |w| Ok(write_observed(w, &data)?))?);
    write_capture(config, out, report, &data, started)?;
    Ok(())
}

struct Solved {
    series: SolutionSeries,
    exact: Vec<f64>,
    corrections: CorrectionSet,
}

fn solve_on(m: &Manufactured, grid: &TimeGrid, sigma: Option<&[f64]>) -> Result<Solved, CliError> {
    let problem = m.problem()?;
    let integrator = Integrator::new(&problem, grid)?;
    let corrections = match sigma {
        Some(s) if !s.is_empty() => integrator.corrections(s)?,
        _ => CorrectionSet::none(integrator.stencil()),
    };
    let series = integrator.solve_with(&corrections)?;
    Ok(Solved {
        series,
        exact: m.exact_on(grid),
        corrections,
    })
}

fn add_error_summary(s: &mut Summary, prefix: &str, solved: &Solved) -> Result<(), CliError> {
    let max_abs = solved
        .series
        .values()
        .iter()
        .zip(&solved.exact)
        .map(|(u, e)| (u - e).abs())
        .fold(0.0, f64::max);
    s.add_f64(
        &format!("{prefix}l2_relative_error"),
        l2_relative_error(&solved.series, &solved.exact)?,
    );
    s.add_f64(&format!("{prefix}max_abs_error"), max_abs);
    s.add_f64(
        &format!("{prefix}condition_estimate"),
        solved.corrections.condition_estimate(),
    );
    Ok(())
}

fn run_solve(config: &RunConfig, out: &OutputDir, report: &mut Report) -> Result<(), CliError> {
    let m = require_manufactured(config)?;
    let grid = TimeGrid::new(config.solve_grid.dt, config.solve_grid.steps)?;
    let solved = solve_on(&m, &grid, config.sigma.as_deref())?;
    report.files.push(out.write("solution.csv", |w| {
        Ok(write_solution(w, &solved.series, Some(&solved.exact))?)
    })?);

    let problem = m.problem()?;
    let forcing = problem.forcing().sample(&grid)?[1..].to_vec();
    let data = ObservedData::new(
        grid,
        problem.initial_value(),
        solved.series.values()[1..].to_vec(),
        forcing,
    )?;
    report
        .files
        .push(out.write("observed.csv", |w| Ok(write_observed(w, &data)?))?);

    let s = &mut report.summary;
    s.add("steps", grid.steps());
    s.add_f64("dt", grid.dt());
    s.add_list("sigma", config.sigma.as_deref().unwrap_or(&[]));
    add_error_summary(s, "", &solved)
}

fn run_pipeline(config: &RunConfig, out: &OutputDir, report: &mut Report) -> Result<(), CliError> {
    let started = Instant::now();
    let m = require_manufactured(config)?;
    let data = m.observed(config.capture_grid)?;
    report
        .files
        .push(out.write("observed.csv", |w| Ok(write_observed(w, &data)?))?);
    let captured = write_capture(config, out, report, &data, started)?;

    let grid = TimeGrid::new(config.solve_grid.dt, config.solve_grid.steps)?;
    let solved = solve_on(&m, &grid, Some(&captured.sigma))?;
    report.files.push(out.write("solution.csv", |w| {
        Ok(write_solution(w, &solved.series, Some(&solved.exact))?)
    })?);
    report.summary.add("steps", grid.steps());
    report.summary.add_f64("dt", grid.dt());
    add_error_summary(&mut report.summary, "", &solved)?;

    if let Some(baseline) = &config.baseline_sigma {
        let base = solve_on(&m, &grid, Some(baseline))?;
        report.files.push(out.write("solution_baseline.csv", |w| {
            Ok(write_solution(w, &base.series, Some(&base.exact))?)
        })?);
        let beats = (1..=grid.steps()).all(|n| {
            (solved.series.values()[n] - solved.exact[n]).abs() < (base.series.values()[n] - base.exact[n]).abs()
        });
        report.summary.add_list("baseline_sigma", baseline);
        add_error_summary(&mut report.summary, "baseline_", &base)?;
        report.summary.add("beats_baseline_every_node", beats);
    }
    report
        .summary
        .add("wall_time_s", format!("{:.6}", started.elapsed().as_secs_f64()));
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Relative L² errors of each exponent set on each grid.
pub fn convergence_table(
    m: &Manufactured,
    final_time: f64,
    steps: &[usize],
    series: &[(&str, &[f64])],
) -> Result<(Table, Vec<(String, f64)>), CliError> {
    let errors: Vec<Vec<f64>> = steps
        .par_iter()
        .map(|&n| {
            let grid = TimeGrid::covering(final_time, n)?;
            series
                .iter()
                .map(|(_, sigma)| {
                    let solved = solve_on(m, &grid, Some(sigma))?;
                    Ok(l2_relative_error(&solved.series, &solved.exact)?)
                })
                .collect::<Result<Vec<f64>, CliError>>()
        })
        .collect::<Result<_, _>>()?;

    let mut header = vec!["steps".to_string(), "dt".to_string()];
    header.extend(series.iter().map(|(name, _)| format!("l2_error_{name}")));
    let mut table = Table::new(header);
    for (&n, row) in steps.iter().zip(&errors) {
        let mut cells = vec![n.to_string(), fmt_f64(final_time / n as f64)];
        cells.extend(row.iter().map(|&e| fmt_f64(e)));
        table.push(cells);
    }
    let slopes = series
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            let pts: Vec<(f64, f64)> = steps
                .iter()
                .zip(&errors)
                .map(|(&n, r)| (final_time / n as f64, r[i]))
                .collect();
            (name.to_string(), log_log_slope(&pts))
        })
        .collect();
    Ok((table, slopes))
}

fn run_convergence(config: &RunConfig, out: &OutputDir, report: &mut Report) -> Result<(), CliError> {
    let started = Instant::now();
    let m = require_manufactured(config)?;
    let sigma = match &config.sigma {
        Some(s) => {
            report.summary.add_list("sigma", s);
            s.clone()
        }
        None => {
            let data = m.observed(config.capture_grid)?;
            write_capture(config, out, report, &data, started)?.sigma
        }
    };
    let final_time = config.solve_grid.dt * config.solve_grid.steps as f64;
    let mut series: Vec<(&str, &[f64])> = vec![("captured", &sigma)];
    if let Some(b) = &config.baseline_sigma {
        series.push(("baseline", b));
    }
    let (table, slopes) = convergence_table(&m, final_time, &config.convergence_steps, &series)?;
    report.files.push(out.write_table("convergence.csv", &table)?);
    let mut fit = Table::new(["series", "slope"]);
    for (name, slope) in &slopes {
        fit.push(vec![name.clone(), fmt_f64(*slope)]);
        report.summary.add_f64(&format!("slope_{name}"), *slope);
    }
    report.files.push(out.write_table("convergence_fit.csv", &fit)?);
    report.summary.add_f64("final_time", final_time);
    Ok(())
}

/// Stencil of the (possibly multi-term) operator on `grid`.
pub fn stencil(orders: &[f64], grid: &TimeGrid) -> Result<StencilCoefficients, CliError> {
    let sets = orders
        .iter()
        .map(|&a| build_coefficients(a, grid))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(StencilCoefficients::sum(&sets)?)
}

fn run_weights(config: &RunConfig, out: &OutputDir, report: &mut Report) -> Result<(), CliError> {
    let s = &mut report.summary;
    if let Some(sigma) = &config.sigma {
        let grid = TimeGrid::new(config.solve_grid.dt, config.solve_grid.steps)?;
        let set: CorrectionSet = solve_weights(sigma, &stencil(&config.orders, &grid)?)?;
        let mut header = vec!["n".to_string(), "t".to_string()];
        header.extend((1..=set.terms()).map(|j| format!("W_{j}")));
        let mut table = Table::new(header);
        for n in 1..=grid.steps() {
            let mut row = vec![n.to_string(), fmt_f64(grid.node(n))];
            row.extend(set.at_step(n).iter().map(|&w| fmt_f64(w)));
            table.push(row);
        }
        report.files.push(out.write_table("weights.csv", &table)?);
        s.add_list("sigma", set.sigma());
        s.add_f64("condition_estimate", set.condition_estimate());
        s.add_f64("residual_norm", set.residual_norm());
    }
    let alpha = config.orders[0];
    let mut rows = Vec::new();
    for rule in &config.sigma_rules {
        rows.extend(condition_study(rule, alpha, config.max_m)?);
    }
    report.files.push(out.write("condition.csv", |w| {
        Ok(fraccap_core::export::write_condition(w, &rows)?)
    })?);
    s.add("max_m", config.max_m);
    Ok(())
}
