//! Trajectory and summary serialization.
//!
//! Floats are written in Rust's shortest round-trip form, so every value
//! parses back to the identical double.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::config::OutputFormat;
use crate::optimizers::{IterateRecord, Trajectory};

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

pub fn csv_header(dim: usize) -> String {
    let mut h = String::from("n");
    for i in 0..dim {
        let _ = write!(h, ",z{i}");
    }
    h.push_str(",f,grad_norm,delta1,delta2,step_norm");
    h
}

pub fn csv_row(r: &IterateRecord) -> String {
    let mut row = r.n.to_string();
    for c in &r.point {
        row.push(',');
        row.push_str(&num(*c));
    }
    let d1 = r.step_size.map(|s| s.first());
    let d2 = r.step_size.and_then(|s| s.second());
    let _ = write!(
        row,
        ",{},{},{},{},{}",
        num(r.value),
        num(r.grad_norm),
        opt(d1),
        opt(d2),
        opt(r.step_norm)
    );
    row
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    let mut out = csv_header(t.final_point().len());
    out.push('\n');
    for r in &t.records {
        out.push_str(&csv_row(r));
        out.push('\n');
    }
    out
}

pub fn record_json(r: &IterateRecord) -> Value {
    json!({
        "n": r.n,
        "z": r.point,
        "f": r.value,
        "grad_norm": r.grad_norm,
        "delta1": r.step_size.map(|s| s.first()),
        "delta2": r.step_size.and_then(|s| s.second()),
        "step_norm": r.step_norm,
    })
}

pub fn trajectory_json_lines(t: &Trajectory) -> String {
    json_lines(t.records.iter().map(record_json))
}

pub fn json_lines<I, T>(items: I) -> String
where
    I: IntoIterator<Item = T>,
    T: Serialize,
{
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(&item).expect("plain data serializes"));
        out.push('\n');
    }
    out
}

/// Writes `t` to `path` in the requested format.
pub fn emit_trajectory(t: &Trajectory, format: OutputFormat, path: &Path) -> io::Result<()> {
    let body = match format {
        OutputFormat::Csv => trajectory_csv(t),
        OutputFormat::JsonLines => trajectory_json_lines(t),
    };
    write_file(path, body.as_bytes())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    f.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line_search::LineSearchParams;
    use crate::objective::{DiagonalQuadratic, Point, SeparableObjective};
    use crate::optimizers::{run_backtracking_gd, run_coordinatewise_backtracking_gd, RunOptions};
    use std::sync::Arc;

    fn two_record_run() -> Trajectory {
        let p = LineSearchParams::new(0.5, 0.5, 2.0).unwrap();
        run_backtracking_gd(
            &DiagonalQuadratic::isotropic(1, 1.0),
            &vec![1.0].into(),
            &p,
            &RunOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn quadratic_csv() {
        let csv = trajectory_csv(&two_record_run());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "n,z0,f,grad_norm,delta1,delta2,step_norm");
        assert_eq!(lines[1], "0,1.0,0.5,1.0,1.0,,1.0");
        assert_eq!(lines[2], "1,0.0,0.0,0.0,,,");
    }

    #[test]
    fn coordinatewise_csv_fills_both_deltas() {
        let f = SeparableObjective::new(
            Arc::new(DiagonalQuadratic::isotropic(1, 1.0)),
            Arc::new(DiagonalQuadratic::isotropic(1, 4.0)),
        );
        let p = LineSearchParams::new(0.5, 0.5, 2.0).unwrap();
        let t = run_coordinatewise_backtracking_gd(
            &f,
            &Point::with_split(vec![1.0, 1.0], 1, 1).unwrap(),
            &p,
            &RunOptions::default(),
        )
        .unwrap();
        let csv = trajectory_csv(&t);
        let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(row.len(), 8);
        assert_eq!(row[5], "1.0");
        assert_eq!(row[6], "0.25");
    }

    #[test]
    fn json_lines_preserve_doubles() {
        let v = [
            0.1 + 0.2,
            1.0 / 3.0,
            std::f64::consts::PI * 1e-300,
            123_456_789.123_456_78,
        ];
        let text = json_lines(v.iter().map(|x| json!({ "x": x })));
        for (line, &x) in text.lines().zip(&v) {
            let parsed: Value = serde_json::from_str(line).unwrap();
            assert_eq!(parsed["x"].as_f64().unwrap().to_bits(), x.to_bits());
        }
        for &x in &v {
            assert_eq!(num(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn json_lines_trajectory() {
        let text = trajectory_json_lines(&two_record_run());
        let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first["delta1"], json!(1.0));
        assert_eq!(first["delta2"], Value::Null);
    }
}
