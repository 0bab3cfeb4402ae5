use std::sync::Arc;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{SparseDataset, SparseRow};
use crate::geometry::FeasibleSet;
use crate::problems::{Datum, ProblemMeta, Regularizer, StochasticProblem};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    Square,
    Hinge,
}

impl Loss {
    #[inline]
    pub fn value(self, margin: f64, y: f64) -> f64 {
        match self {
            Self::Square => (margin - y) * (margin - y),
            Self::Hinge => (1.0 - y * margin).max(0.0),
        }
    }

    /// Derivative in the prediction `xᵀw`.
    #[inline]
    pub fn derivative(self, margin: f64, y: f64) -> f64 {
        match self {
            Self::Square => 2.0 * (margin - y),
            Self::Hinge => {
                if y * margin < 1.0 {
                    -y
                } else {
                    0.0
                }
            }
        }
    }
}

/// The uniform distribution over a training set, sampled with replacement,
/// plus an optional `λ‖w‖₁` term. `W*` is unknown, so excess risk is not
/// available and the EBC tooling refuses these instances.
#[derive(Clone, Debug)]
pub struct EmpiricalProblem {
    train: Arc<SparseDataset>,
    loss: Loss,
    set: FeasibleSet,
    lambda: f64,
    meta: ProblemMeta,
}

impl EmpiricalProblem {
    pub fn new(
        train: Arc<SparseDataset>,
        loss: Loss,
        set: FeasibleSet,
        lambda: f64,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        set.validate()?;
        if train.dim > set.dim() {
            return Err(Error::DimensionMismatch {
                expected: set.dim(),
                got: train.dim,
            });
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "λ must be finite and nonnegative, got {lambda}"
            )));
        }
        if loss == Loss::Hinge && train.rows.iter().any(|r| r.label != 1.0 && r.label != -1.0) {
            return Err(Error::InvalidProblem("hinge labels must be ±1".into()));
        }
        let d = set.dim();
        let g = if set.is_bounded() {
            train
                .rows
                .iter()
                .map(|r| {
                    let x = r.to_dense(d);
                    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
                    let reach = set.support(&x).max(set.support(&neg));
                    let slope = match loss {
                        Loss::Square => 2.0 * (reach + r.label.abs()),
                        Loss::Hinge => 1.0,
                    };
                    slope * r.norm2()
                })
                .fold(0.0, f64::max)
        } else {
            f64::INFINITY
        };
        let smooth = match loss {
            Loss::Square => Some(
                train
                    .rows
                    .iter()
                    .map(|r| 2.0 * r.norm2().powi(2))
                    .fold(0.0, f64::max),
            ),
            Loss::Hinge => None,
        };
        let meta = ProblemMeta {
            d,
            lipschitz_g: g,
            smoothness_l: smooth,
            diameter_r: set.max_norm(),
            pstar: None,
            ebc: None,
            composite_lambda: (lambda > 0.0).then_some(lambda),
        };
        Ok(Self {
            train,
            loss,
            set,
            lambda,
            meta,
        })
    }

    pub fn train(&self) -> &SparseDataset {
        &self.train
    }

    pub fn loss_kind(&self) -> Loss {
        self.loss
    }

    pub fn row(&self, z: &Datum) -> &SparseRow {
        match z {
            Datum::Index(k) => &self.train.rows[*k],
            Datum::Labeled { .. } => panic!("empirical problems only draw indexed rows"),
        }
    }

    /// Mean data loss over `rows` (no regularizer).
    pub fn test_error(&self, rows: &SparseDataset, w: &[f64]) -> f64 {
        mean_loss(self.loss, rows, w)
    }
}

pub fn mean_loss(loss: Loss, rows: &SparseDataset, w: &[f64]) -> f64 {
    if rows.is_empty() {
        return f64::NAN;
    }
    rows.rows
        .iter()
        .map(|r| loss.value(r.dot(w), r.label))
        .sum::<f64>()
        / rows.len() as f64
}

impl StochasticProblem for EmpiricalProblem {
    fn name(&self) -> &str {
        match self.loss {
            Loss::Square => "empirical_square",
            Loss::Hinge => "empirical_hinge",
        }
    }
    fn meta(&self) -> &ProblemMeta {
        &self.meta
    }
    fn set(&self) -> &FeasibleSet {
        &self.set
    }
    fn regularizer(&self) -> Regularizer {
        if self.lambda > 0.0 {
            Regularizer::L1 {
                lambda: self.lambda,
            }
        } else {
            Regularizer::None
        }
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Datum {
        Datum::Index(rng.gen_range(0..self.train.len()))
    }

    fn loss(&self, w: &[f64], z: &Datum) -> f64 {
        let r = self.row(z);
        self.loss.value(r.dot(w), r.label)
    }

    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        let r = self.row(z);
        out.iter_mut().for_each(|o| *o = 0.0);
        r.axpy_into(self.loss.derivative(r.dot(w), r.label), out);
    }

    fn risk(&self, w: &[f64]) -> Option<f64> {
        Some(mean_loss(self.loss, &self.train, w) + self.regularizer().value(w))
    }

    fn optimal_point(&self, _w: &[f64]) -> Option<Vec<f64>> {
        None
    }

    fn excess_risk(&self, _w: &[f64]) -> Option<f64> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::parse_libsvm;

    #[test]
    fn single_row_risk_is_its_loss() {
        let ds = Arc::new(parse_libsvm(b"2 1:1 2:3\n").unwrap());
        let p = EmpiricalProblem::new(ds, Loss::Square, FeasibleSet::unbounded(2), 0.0).unwrap();
        let w = [0.5, -1.0];
        assert_eq!(p.risk(&w), Some((0.5 - 3.0 - 2.0_f64).powi(2)));
        assert_eq!(p.excess_risk(&w), None);
        assert_eq!(p.meta().lipschitz_g, f64::INFINITY);
    }

    #[test]
    fn test_error_matches_loop() {
        let train = Arc::new(parse_libsvm(b"1 1:1\n").unwrap().with_dim(3).unwrap());
        let test = parse_libsvm(b"1 1:0.5 3:2\n-1 2:1\n0.5 1:-1 2:1 3:1\n").unwrap();
        let p = EmpiricalProblem::new(
            train,
            Loss::Square,
            FeasibleSet::l1_ball(3, 2.0).unwrap(),
            0.1,
        )
        .unwrap();
        let w = [0.3, -0.2, 0.7];
        let dense = [[0.5, 0.0, 2.0], [0.0, 1.0, 0.0], [-1.0, 1.0, 1.0]];
        let ys = [1.0, -1.0, 0.5];
        let mut direct = 0.0;
        for k in 0..3 {
            let mut m = 0.0;
            for i in 0..3 {
                m += dense[k][i] * w[i];
            }
            direct += (m - ys[k]) * (m - ys[k]);
        }
        direct /= 3.0;
        assert!((p.test_error(&test, &w) - direct).abs() < 1e-12);
        assert_eq!(p.regularizer(), Regularizer::L1 { lambda: 0.1 });
        assert_eq!(p.meta().composite_lambda, Some(0.1));
    }

    #[test]
    fn hinge_labels_validated() {
        let ds = Arc::new(parse_libsvm(b"0.5 1:1\n").unwrap());
        assert!(
            EmpiricalProblem::new(ds, Loss::Hinge, FeasibleSet::l2_ball(1, 1.0).unwrap(), 0.0)
                .is_err()
        );
        let ds = Arc::new(parse_libsvm(b"-1 1:1\n").unwrap());
        let p = EmpiricalProblem::new(ds, Loss::Hinge, FeasibleSet::l2_ball(1, 1.0).unwrap(), 0.0)
            .unwrap();
        let mut g = [0.0];
        p.subgradient(&[0.0], &Datum::Index(0), &mut g);
        assert_eq!(g, [1.0]);
    }
}
