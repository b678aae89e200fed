use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{Matrix, Row, SparseRow, Vector};

/// Labelled feature rows `(aᵢ, bᵢ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<Row>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(rows: Vec<Row>, labels: Vec<f64>, dim: usize) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::arg(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        for r in &rows {
            check_dim(dim, r.dim())?;
        }
        Ok(Dataset { rows, labels, dim })
    }

    pub fn from_dense(a: &Matrix, b: &Vector) -> Result<Self> {
        check_dim(a.nrows(), b.len())?;
        let rows = (0..a.nrows()).map(|i| Row::Dense(a.row(i).transpose())).collect();
        Self::new(rows, b.iter().copied().collect(), a.ncols())
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// The first `k` rows.
    pub fn head(&self, k: usize) -> Dataset {
        let k = k.min(self.len());
        Dataset { rows: self.rows[..k].to_vec(), labels: self.labels[..k].to_vec(), dim: self.dim }
    }

    /// Dense `len × dim` feature matrix.
    pub fn matrix(&self) -> Matrix {
        let mut a = Matrix::zeros(self.len(), self.dim);
        for (i, r) in self.rows.iter().enumerate() {
            a.set_row(i, &r.to_dense().transpose());
        }
        a
    }

    pub fn label_vector(&self) -> Vector {
        Vector::from_column_slice(&self.labels)
    }

    /// Replace the labels, keeping the rows.
    pub fn with_labels(mut self, labels: Vec<f64>) -> Result<Self> {
        check_dim(self.len(), labels.len())?;
        self.labels = labels;
        Ok(self)
    }
}

/// LIBSVM text: `label idx:val …` with 1-based indices; zero entries of dense rows are omitted.
impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (r, b) in self.rows.iter().zip(&self.labels) {
            write!(f, "{b}")?;
            match r {
                Row::Dense(v) => {
                    for (i, x) in v.iter().enumerate().filter(|(_, x)| **x != 0.0) {
                        write!(f, " {}:{x}", i + 1)?;
                    }
                }
                Row::Sparse(s) => {
                    for (i, x) in s.indices.iter().zip(&s.values) {
                        write!(f, " {}:{x}", i + 1)?;
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Parse LIBSVM text; `dim` defaults to the largest index seen.
pub fn parse_libsvm<R: BufRead>(input: R, dim: Option<usize>) -> Result<Dataset> {
    let mut parsed: Vec<(f64, Vec<usize>, Vec<f64>)> = Vec::new();
    let mut max_index = 0;
    for (k, line) in input.lines().enumerate() {
        let lineno = k + 1;
        let err = |message: String| Error::Parse { line: lineno, message };
        let line = line.map_err(|e| err(e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let mut tokens = body.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok.parse().map_err(|_| err(format!("bad label '{label_tok}'")))?;
        let mut idx = Vec::new();
        let mut vals = Vec::new();
        for tok in tokens {
            let (i, v) = tok.split_once(':').ok_or_else(|| err(format!("expected idx:val, got '{tok}'")))?;
            let i: usize = i.parse().map_err(|_| err(format!("bad index in '{tok}'")))?;
            let v: f64 = v.parse().map_err(|_| err(format!("bad value in '{tok}'")))?;
            if i == 0 {
                return Err(err("indices are 1-based".into()));
            }
            if idx.last().is_some_and(|&last| i - 1 <= last) {
                return Err(err(format!("index {i} is not ascending")));
            }
            max_index = max_index.max(i);
            idx.push(i - 1);
            vals.push(v);
        }
        parsed.push((label, idx, vals));
    }
    let d = match dim {
        Some(d) if d < max_index => {
            return Err(Error::Parse { line: 0, message: format!("index {max_index} exceeds dimension {d}") })
        }
        Some(d) => d,
        None => max_index,
    };
    let mut rows = Vec::with_capacity(parsed.len());
    let mut labels = Vec::with_capacity(parsed.len());
    for (label, idx, vals) in parsed {
        rows.push(Row::Sparse(SparseRow::new(d, idx, vals)?));
        labels.push(label);
    }
    Dataset::new(rows, labels, d)
}

pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    write!(out, "{data}")
}

pub fn load_libsvm(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::arg(format!("cannot open {}: {e}", path.display())))?;
    parse_libsvm(BufReader::new(file), dim)
}
