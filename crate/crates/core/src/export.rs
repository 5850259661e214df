//! CSV serialisation of solutions, capture traces, condition tables and
//! observed data. Floats are written with 17 significant digits.

use std::io::{Read, Write};

use crate::capture::{CaptureTrace, ObservedData};
use crate::corrections::ConditionRow;
use crate::discretization::TimeGrid;
use crate::error::{CsvError, Error, Result};
use crate::solver::SolutionSeries;

/// `{:.16e}`, i.e. 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(w)
}

/// Columns `n, t, u_numeric[, u_exact, abs_error]`.
pub fn write_solution<W: Write>(w: W, solution: &SolutionSeries, exact: Option<&[f64]>) -> Result<()> {
    let values = solution.values();
    if let Some(e) = exact {
        if e.len() != values.len() {
            return Err(Error::LengthMismatch {
                context: "exact values for export",
                expected: values.len(),
                found: e.len(),
            });
        }
    }
    let mut out = writer(w);
    if exact.is_some() {
        out.write_record(["n", "t", "u_numeric", "u_exact", "abs_error"])?;
    } else {
        out.write_record(["n", "t", "u_numeric"])?;
    }
    for (n, &u) in values.iter().enumerate() {
        let mut row = vec![n.to_string(), fmt_f64(solution.grid().node(n)), fmt_f64(u)];
        if let Some(e) = exact {
            row.push(fmt_f64(e[n]));
            row.push(fmt_f64((u - e[n]).abs()));
        }
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `k, sigma_1..sigma_M, E, grad_norm, step`.
pub fn write_trace<W: Write>(w: W, trace: &CaptureTrace) -> Result<()> {
    let m = trace.terms();
    let mut out = writer(w);
    let mut header = vec!["k".to_string()];
    header.extend((1..=m).map(|j| format!("sigma_{j}")));
    header.extend(["E", "grad_norm", "step"].map(String::from));
    out.write_record(&header)?;
    for r in &trace.records {
        let mut row = vec![r.k.to_string()];
        row.extend(r.sigma.iter().map(|&s| fmt_f64(s)));
        row.extend([fmt_f64(r.error), fmt_f64(r.grad_norm), fmt_f64(r.step)]);
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `M, sigma_rule, condition_estimate`.
pub fn write_condition<W: Write>(w: W, rows: &[ConditionRow]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["M", "sigma_rule", "condition_estimate"])?;
    for r in rows {
        out.write_record([r.m.to_string(), r.rule.to_string(), fmt_f64(r.condition_estimate)])?;
    }
    out.flush()?;
    Ok(())
}

/// Columns `n, t, u_data, f_data` for `n = 1..=Ñ`, preceded by an `n = 0`
/// row carrying the initial value when it is nonzero.
pub fn write_observed<W: Write>(w: W, data: &ObservedData) -> Result<()> {
    let mut out = writer(w);
    out.write_record(["n", "t", "u_data", "f_data"])?;
    if data.initial_value() != 0.0 {
        out.write_record([
            "0".to_string(),
            fmt_f64(0.0),
            fmt_f64(data.initial_value()),
            fmt_f64(f64::NAN),
        ])?;
    }
    for (i, (&u, &f)) in data.u_data().iter().zip(data.f_data()).enumerate() {
        let n = i + 1;
        out.write_record([n.to_string(), fmt_f64(data.grid().node(n)), fmt_f64(u), fmt_f64(f)])?;
    }
    out.flush()?;
    Ok(())
}

/// Reads `n, t, u_data, f_data` rows. The rows must cover `n = 1..=Ñ` on a
/// uniform grid; a row with `n = 0` supplies the initial value.
pub fn read_observed<R: Read>(r: R) -> Result<ObservedData> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Csv(CsvError(format!("missing column `{name}`"))))
    };
    let (cn, ct, cu, cf) = (column("n")?, column("t")?, column("u_data")?, column("f_data")?);
    let mut rows: Vec<(usize, f64, f64, f64)> = Vec::new();
    for record in reader.records() {
        let record = record?;
        let field = |i: usize| record.get(i).unwrap_or("");
        let parse = |i: usize| -> Result<f64> {
            field(i)
                .parse::<f64>()
                .map_err(|e| Error::Csv(CsvError(format!("bad number `{}`: {e}", field(i)))))
        };
        let n = field(cn)
            .parse::<usize>()
            .map_err(|e| Error::Csv(CsvError(format!("bad step index `{}`: {e}", field(cn)))))?;
        rows.push((n, parse(ct)?, parse(cu)?, parse(cf)?));
    }
    rows.sort_by_key(|r| r.0);
    let u0 = match rows.first() {
        Some(&(0, _, u, _)) => {
            rows.remove(0);
            u
        }
        _ => 0.0,
    };
    if rows.is_empty() {
        return Err(Error::Csv(CsvError("no data rows".into())));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.0 != i + 1 {
            return Err(Error::Csv(CsvError(format!(
                "expected step {} but found {}",
                i + 1,
                r.0
            ))));
        }
    }
    let dt = rows[0].1;
    for r in &rows {
        let expected = r.0 as f64 * dt;
        if (r.1 - expected).abs() > 1e-9 * expected.max(1.0) {
            return Err(Error::Csv(CsvError(format!(
                "time {} at step {} is not on a uniform grid",
                r.1, r.0
            ))));
        }
    }
    let grid = TimeGrid::new(dt, rows.len())?;
    ObservedData::new(
        grid,
        u0,
        rows.iter().map(|r| r.2).collect(),
        rows.iter().map(|r| r.3).collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manufactured::ManufacturedSolution;

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }

    #[test]
    fn observed_round_trip() {
        let sol = ManufacturedSolution::power_sum(vec![0.3, 0.7], vec![0.5]).unwrap();
        let data = ObservedData::from_manufactured(&sol, TimeGrid::new(0.1, 5).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_observed(&mut buf, &data).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("n,t,u_data,f_data\n"));
        let back = read_observed(buf.as_slice()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn malformed_observed_data() {
        assert!(read_observed("n,t,u_data\n1,0.1,1\n".as_bytes()).is_err());
        assert!(read_observed("n,t,u_data,f_data\n1,0.1,1,x\n".as_bytes()).is_err());
        assert!(read_observed("n,t,u_data,f_data\n1,0.1,1,1\n3,0.3,1,1\n".as_bytes()).is_err());
        assert!(read_observed("n,t,u_data,f_data\n1,0.1,1,1\n2,0.25,1,1\n".as_bytes()).is_err());
        let with_u0 = read_observed("n,t,u_data,f_data\n0,0,2,0\n1,0.1,1,1\n".as_bytes()).unwrap();
        assert_eq!(with_u0.initial_value(), 2.0);
    }

    #[test]
    fn nonzero_initial_value_round_trip() {
        let data = ObservedData::new(TimeGrid::new(0.5, 2).unwrap(), -1.5, vec![1.0, 2.0], vec![3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        write_observed(&mut buf, &data).unwrap();
        assert_eq!(read_observed(buf.as_slice()).unwrap(), data);
    }
}
