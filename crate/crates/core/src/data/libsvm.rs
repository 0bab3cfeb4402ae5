use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One labelled example with sorted 0-based feature indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRow {
    pub label: f64,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseRow {
    pub fn new(label: f64, entries: Vec<(usize, f64)>) -> Result<Self> {
        let (indices, values): (Vec<_>, Vec<_>) = entries.into_iter().unzip();
        let row = Self {
            label,
            indices,
            values,
        };
        row.validate()?;
        Ok(row)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidProblem(m.to_string()));
        if self.indices.len() != self.values.len() {
            return bad("index and value lengths differ");
        }
        if !self.label.is_finite() || self.values.iter().any(|v| !v.is_finite()) {
            return bad("labels and values must be finite");
        }
        if self.indices.windows(2).any(|w| w[0] >= w[1]) {
            return bad("indices must be strictly increasing");
        }
        Ok(())
    }

    #[inline]
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, v)| w[i] * v)
            .sum()
    }

    /// `out += a · x`
    #[inline]
    pub fn axpy_into(&self, a: f64, out: &mut [f64]) {
        for (&i, v) in self.indices.iter().zip(&self.values) {
            out[i] += a * v;
        }
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, d: usize) -> Vec<f64> {
        let mut x = vec![0.0; d];
        self.axpy_into(1.0, &mut x);
        x
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseDataset {
    pub rows: Vec<SparseRow>,
    /// One past the largest 0-based index seen, or a caller-fixed width.
    pub dim: usize,
}

impl SparseDataset {
    pub fn new(rows: Vec<SparseRow>) -> Result<Self> {
        for r in &rows {
            r.validate()?;
        }
        let dim = rows
            .iter()
            .filter_map(|r| r.indices.last())
            .map(|i| i + 1)
            .max()
            .unwrap_or(0);
        Ok(Self { rows, dim })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Widen to `dim` features (datasets split from one file share a width).
    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim < self.dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: self.dim,
            });
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            dim: self.dim,
        }
    }

    /// Divide every feature by its largest absolute value; returns the scales.
    pub fn max_abs_scale(&mut self) -> Vec<f64> {
        let mut s = vec![0.0f64; self.dim];
        for r in &self.rows {
            for (&i, v) in r.indices.iter().zip(&r.values) {
                s[i] = s[i].max(v.abs());
            }
        }
        for r in &mut self.rows {
            for (&i, v) in r.indices.iter().zip(r.values.iter_mut()) {
                *v /= s[i];
            }
        }
        s
    }
}

/// Parses libsvm text: `label idx:val idx:val …` with 1-based indices.
/// Anything after `#` is a comment; blank lines are skipped.
pub fn parse_libsvm(input: &[u8]) -> Result<SparseDataset> {
    let mut rows = Vec::new();
    for (k, raw) in input.split(|&b| b == b'\n').enumerate() {
        let line = k + 1;
        let err = |message: String| Error::Parse { line, message };
        let text = std::str::from_utf8(raw).map_err(|_| err("invalid UTF-8".into()))?;
        let text = text.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        let mut tokens = text.split_ascii_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("non-numeric label {label_tok:?}")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label {label_tok:?}")));
        }
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected idx:val, got {tok:?}")))?;
            let i: i64 = i
                .parse()
                .map_err(|_| err(format!("non-numeric index {i:?}")))?;
            if i <= 0 {
                return Err(err(format!("index must be positive, got {i}")));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| err(format!("non-numeric value {v:?}")))?;
            if !v.is_finite() {
                return Err(err(format!("non-finite value {v}")));
            }
            let i = (i - 1) as usize;
            if indices.last().is_some_and(|&last| i <= last) {
                return Err(err(format!("non-increasing index at line {line}")));
            }
            indices.push(i);
            values.push(v);
        }
        rows.push(SparseRow {
            label,
            indices,
            values,
        });
    }
    SparseDataset::new(rows)
}

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<SparseDataset> {
    parse_libsvm(&std::fs::read(path)?)
}

/// Serialises with 1-based indices and shortest round-trip floats.
pub fn to_libsvm(ds: &SparseDataset) -> String {
    let mut s = String::new();
    for r in &ds.rows {
        write!(s, "{}", r.label).unwrap();
        for (i, v) in r.indices.iter().zip(&r.values) {
            write!(s, " {}:{}", i + 1, v).unwrap();
        }
        s.push('\n');
    }
    s
}
