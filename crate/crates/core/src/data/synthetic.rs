use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{SparseDataset, SparseRow};
use crate::rng::stream;
use crate::{Error, Result};

/// Sparse linear regression `y = xᵀw★ + ε`.
///
/// Each row has `⌈density·d⌉` nonzeros at uniformly chosen coordinates with
/// `N(0, 1)` values, so every feature has variance about `density`. `w★` has
/// `support` nonzeros of magnitude in `[0.5, 1]` with random signs;
/// `ε ~ N(0, noise_sd²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSparse {
    pub d: usize,
    pub rows: usize,
    pub density: f64,
    pub support: usize,
    pub noise_sd: f64,
}

impl SyntheticSparse {
    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.rows == 0 {
            return Err(Error::Precondition("d and rows must be positive".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::Precondition(format!(
                "density must be in (0, 1], got {}",
                self.density
            )));
        }
        if self.support == 0 || self.support > self.d {
            return Err(Error::Precondition(format!(
                "support must be in 1..={}",
                self.d
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::Precondition(
                "noise_sd must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Returns the dataset (width `d`) and `w★`.
    pub fn generate(&self, seed: u64) -> Result<(SparseDataset, Vec<f64>)> {
        self.validate()?;
        let mut rng = stream(seed, u64::MAX);
        let mut w = vec![0.0; self.d];
        for i in sample(&mut rng, self.d, self.support) {
            let mag: f64 = rng.gen_range(0.5..=1.0);
            w[i] = if rng.gen::<bool>() { mag } else { -mag };
        }
        let nnz = ((self.density * self.d as f64).ceil() as usize).clamp(1, self.d);
        let noise =
            Normal::new(0.0, self.noise_sd).map_err(|e| Error::Precondition(e.to_string()))?;
        let mut rows = Vec::with_capacity(self.rows);
        for _ in 0..self.rows {
            let mut idx = sample(&mut rng, self.d, nnz).into_vec();
            idx.sort_unstable();
            let values: Vec<f64> = idx
                .iter()
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            let mut row = SparseRow {
                label: 0.0,
                indices: idx,
                values,
            };
            row.label = row.dot(&w) + noise.sample(&mut rng);
            rows.push(row);
        }
        Ok((SparseDataset::new(rows)?.with_dim(self.d)?, w))
    }
}
