//! Per-iteration diagnostics and their CSV form.

use std::io::{self, BufRead, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    /// Component-gradient evaluations divided by `n`.
    pub epochs: f64,
    pub prox_evals: u64,
    /// `‖xᵗ − xᵗ⁻¹‖ + ‖zᵗ⁻¹ − xᵗ‖` of the last step.
    pub residual: f64,
    pub objective: f64,
    pub objective_gap: Option<f64>,
    pub dist_sq: Option<f64>,
    pub lyap_m: Option<f64>,
    pub lyap_y: Option<f64>,
    pub lyap_total: Option<f64>,
    pub wall_ms: f64,
}

pub const CSV_HEADER: [&str; 11] = [
    "t",
    "epochs",
    "prox_evals",
    "residual",
    "objective",
    "objective_gap",
    "dist_sq",
    "lyap_m",
    "lyap_y",
    "lyap_total",
    "wall_ms",
];

/// Scientific notation with 17 significant digits; `inf`/`-inf`/`nan` for non-finite values.
pub fn format_float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn format_opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

pub fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse { line: 0, message: format!("bad number '{s}': {e}") })
}

impl TraceRecord {
    pub fn to_csv_row(&self) -> String {
        [
            self.t.to_string(),
            format_float(self.epochs),
            self.prox_evals.to_string(),
            format_float(self.residual),
            format_float(self.objective),
            format_opt(self.objective_gap),
            format_opt(self.dist_sq),
            format_opt(self.lyap_m),
            format_opt(self.lyap_y),
            format_opt(self.lyap_total),
            format_float(self.wall_ms),
        ]
        .join(",")
    }

    pub fn from_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CSV_HEADER.len() {
            return Err(Error::Parse {
                line: 0,
                message: format!("expected {} fields, found {}", CSV_HEADER.len(), f.len()),
            });
        }
        let int = |s: &str| {
            s.parse::<u64>().map_err(|e| Error::Parse { line: 0, message: format!("bad integer '{s}': {e}") })
        };
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { parse_float(s).map(Some) };
        Ok(TraceRecord {
            t: int(f[0])?,
            epochs: parse_float(f[1])?,
            prox_evals: int(f[2])?,
            residual: parse_float(f[3])?,
            objective: parse_float(f[4])?,
            objective_gap: opt(f[5])?,
            dist_sq: opt(f[6])?,
            lyap_m: opt(f[7])?,
            lyap_y: opt(f[8])?,
            lyap_total: opt(f[9])?,
            wall_ms: parse_float(f[10])?,
        })
    }
}

pub fn write_csv<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    writeln!(out, "{}", CSV_HEADER.join(","))?;
    for r in records {
        writeln!(out, "{}", r.to_csv_row())?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<TraceRecord>> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty trace".into() })?
        .map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
    if header.trim() != CSV_HEADER.join(",") {
        return Err(Error::Parse { line: 1, message: "unexpected header".into() });
    }
    let mut out = Vec::new();
    for (k, line) in lines.enumerate() {
        let line = line.map_err(|e| Error::Parse { line: k + 2, message: e.to_string() })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = TraceRecord::from_csv_row(line.trim()).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse { line: k + 2, message },
            other => other,
        })?;
        out.push(rec);
    }
    Ok(out)
}
