//! Plain-text signal formats.
//!
//! Signals travel as CSV with a `t,value` header and a uniform time grid;
//! input/output pairs as `t,x,y`. Floats are written with Rust's shortest
//! round-trip formatting, so write-then-read is lossless.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::SignalSeries;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn parse_float(path: &Path, line: usize, field: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|e| parse_err(path, line, format!("bad {field} value {text:?}: {e}")))
}

fn split_columns<'a>(
    path: &Path,
    line_no: usize,
    line: &'a str,
    expected: usize,
) -> Result<Vec<&'a str>> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != expected {
        return Err(parse_err(
            path,
            line_no,
            format!(
                "expected {expected} comma-separated fields, got {}",
                fields.len()
            ),
        ));
    }
    Ok(fields)
}

/// Check that the parsed time column is `i * dt` for a fixed dt.
fn infer_dt(path: &Path, times: &[f64]) -> Result<f64> {
    if times.len() < 2 {
        // A single-sample file: any positive dt works; pick 1.
        return Ok(1.0);
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(parse_err(
            path,
            3,
            "time column must be strictly increasing",
        ));
    }
    for (i, &t) in times.iter().enumerate() {
        let expect = times[0] + i as f64 * dt;
        if (t - expect).abs() > 1e-9 * expect.abs().max(1.0) {
            return Err(parse_err(
                path,
                i + 2,
                format!("time {t} is off the uniform grid (expected {expect})"),
            ));
        }
    }
    Ok(dt)
}

pub fn write_signal_csv(path: impl AsRef<Path>, series: &SignalSeries) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 16 + 16);
    out.push_str("t,value\n");
    for (i, v) in series.values().iter().enumerate() {
        out.push_str(&format!("{},{}\n", series.time_at(i), v));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_signal_csv(path: impl AsRef<Path>) -> Result<SignalSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(path, 1, "empty file"));
    };
    if header.trim() != "t,value" {
        return Err(parse_err(
            path,
            1,
            format!("expected header \"t,value\", got {header:?}"),
        ));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_columns(path, idx + 1, line, 2)?;
        times.push(parse_float(path, idx + 1, "t", fields[0])?);
        values.push(parse_float(path, idx + 1, "value", fields[1])?);
    }
    let dt = infer_dt(path, &times)?;
    SignalSeries::new(values, dt)
}

pub fn write_pair_csv(
    path: impl AsRef<Path>,
    input: &SignalSeries,
    output: &SignalSeries,
) -> Result<()> {
    if input.len() != output.len() {
        return Err(Error::LengthMismatch {
            left: input.len(),
            right: output.len(),
        });
    }
    let mut out = String::with_capacity(input.len() * 24 + 16);
    out.push_str("t,x,y\n");
    for i in 0..input.len() {
        out.push_str(&format!(
            "{},{},{}\n",
            input.time_at(i),
            input.values()[i],
            output.values()[i]
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_pair_csv(path: impl AsRef<Path>) -> Result<(SignalSeries, SignalSeries)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(path, 1, "empty file"));
    };
    if header.trim() != "t,x,y" {
        return Err(parse_err(
            path,
            1,
            format!("expected header \"t,x,y\", got {header:?}"),
        ));
    }
    let mut times = Vec::new();
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_columns(path, idx + 1, line, 3)?;
        times.push(parse_float(path, idx + 1, "t", fields[0])?);
        xs.push(parse_float(path, idx + 1, "x", fields[1])?);
        ys.push(parse_float(path, idx + 1, "y", fields[2])?);
    }
    let dt = infer_dt(path, &times)?;
    Ok((SignalSeries::new(xs, dt)?, SignalSeries::new(ys, dt)?))
}

/// Read a multi-input record: header `t,x1,..,xp,y` for p >= 1 inputs
/// (the single-input header `t,x,y` is accepted too).
pub fn read_record_csv(path: impl AsRef<Path>) -> Result<(Vec<SignalSeries>, SignalSeries)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(parse_err(path, 1, "empty file"));
    };
    let columns: Vec<&str> = header.trim().split(',').collect();
    let p = columns.len().saturating_sub(2);
    let valid_header = p >= 1
        && columns[0] == "t"
        && *columns.last().unwrap() == "y"
        && (columns[1..=p] == ["x"]
            || columns[1..=p]
                .iter()
                .enumerate()
                .all(|(g, c)| *c == format!("x{}", g + 1)));
    if !valid_header {
        return Err(parse_err(
            path,
            1,
            format!("expected header \"t,x1,..,xp,y\", got {header:?}"),
        ));
    }
    let mut times = Vec::new();
    let mut xs: Vec<Vec<f64>> = vec![Vec::new(); p];
    let mut ys = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields = split_columns(path, idx + 1, line, p + 2)?;
        times.push(parse_float(path, idx + 1, "t", fields[0])?);
        for g in 0..p {
            xs[g].push(parse_float(path, idx + 1, columns[g + 1], fields[g + 1])?);
        }
        ys.push(parse_float(path, idx + 1, "y", fields[p + 1])?);
    }
    let dt = infer_dt(path, &times)?;
    let inputs = xs
        .into_iter()
        .map(|values| SignalSeries::new(values, dt))
        .collect::<Result<Vec<_>>>()?;
    Ok((inputs, SignalSeries::new(ys, dt)?))
}

/// Write a multi-input record with header `t,x1,..,xp,y`.
pub fn write_record_csv(
    path: impl AsRef<Path>,
    inputs: &[SignalSeries],
    output: &SignalSeries,
) -> Result<()> {
    let Some(first) = inputs.first() else {
        return Err(Error::InvalidConfig("need at least one input".into()));
    };
    for series in inputs {
        if series.len() != output.len() {
            return Err(Error::LengthMismatch {
                left: series.len(),
                right: output.len(),
            });
        }
    }
    let mut out = String::from("t");
    for g in 1..=inputs.len() {
        out.push_str(&format!(",x{g}"));
    }
    out.push_str(",y\n");
    for i in 0..output.len() {
        out.push_str(&format!("{}", first.time_at(i)));
        for series in inputs {
            out.push_str(&format!(",{}", series.values()[i]));
        }
        out.push_str(&format!(",{}\n", output.values()[i]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Residual trace as `step,residual`, steps numbered from 1.
pub fn write_residual_csv(path: impl AsRef<Path>, residuals: &[f64]) -> Result<()> {
    let mut out = String::with_capacity(residuals.len() * 16 + 16);
    out.push_str("step,residual\n");
    for (i, r) in residuals.iter().enumerate() {
        out.push_str(&format!("{},{}\n", i + 1, r));
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("signal.csv");
        let series = SignalSeries::new(vec![0.1, -2.5e-17, 3.0, 1.0 / 3.0], 0.25).unwrap();
        write_signal_csv(&path, &series).unwrap();
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(back.len(), series.len());
        for (a, b) in series.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.dt(), series.dt());
    }

    #[test]
    fn pair_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        let x = SignalSeries::new(vec![1.0, 2.0, 3.0], 0.5).unwrap();
        let y = SignalSeries::new(vec![-1.0, 0.25, 9.0], 0.5).unwrap();
        write_pair_csv(&path, &x, &y).unwrap();
        let (bx, by) = read_pair_csv(&path).unwrap();
        assert_eq!(bx, x);
        assert_eq!(by, y);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,value\n0,1.0\n0.5,oops\n").unwrap();
        match read_signal_csv(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "time,val\n0,1.0\n").unwrap();
        assert!(matches!(
            read_signal_csv(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,value\n0,1.0\n1,2.0\n2.5,3.0\n").unwrap();
        assert!(matches!(read_signal_csv(&path), Err(Error::Parse { .. })));
    }

    #[test]
    fn record_round_trip_two_inputs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("record.csv");
        let x1 = SignalSeries::new(vec![0.1, 0.2, 0.3], 0.5).unwrap();
        let x2 = SignalSeries::new(vec![1.0, -1.0, 0.5], 0.5).unwrap();
        let y = SignalSeries::new(vec![2.0, 4.0, 6.0], 0.5).unwrap();
        write_record_csv(&path, &[x1.clone(), x2.clone()], &y).unwrap();
        let (inputs, output) = read_record_csv(&path).unwrap();
        assert_eq!(inputs, vec![x1, x2]);
        assert_eq!(output, y);
    }

    #[test]
    fn record_reader_accepts_single_input_pair_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.csv");
        fs::write(&path, "t,x,y\n0,0.1,1.0\n1,0.2,2.0\n").unwrap();
        let (inputs, output) = read_record_csv(&path).unwrap();
        assert_eq!(inputs.len(), 1);
        assert_eq!(inputs[0].values(), &[0.1, 0.2]);
        assert_eq!(output.values(), &[1.0, 2.0]);
    }

    #[test]
    fn record_reader_rejects_mixed_headers() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "t,x1,x3,y\n0,0.1,0.2,1.0\n").unwrap();
        assert!(matches!(
            read_record_csv(&path),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn residual_trace_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("residuals.csv");
        write_residual_csv(&path, &[0.5, -0.25]).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "step,residual\n1,0.5\n2,-0.25\n");
    }
}
