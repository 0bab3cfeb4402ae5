//! Stochastic problem oracles with closed-form risk, optimal sets and
//! ground-truth error-bound parameters.
//!
//! Every instance draws from a finite-support or product distribution, so
//! `P`, `P*`, `W*`, `G` and `(θ, α)` are exact rather than estimated.

mod check;
mod composite;
mod hinge;
mod least_squares;
mod newsvendor;
mod quadratic;
mod registry;

pub use check::{check_lipschitz, check_meta, sample_near_optimum, MetaCheck};
pub use composite::{L1Regularized, LinearNoise, PnormComposite};
pub use hinge::Hinge;
pub use least_squares::{LabeledPoint, LeastSquares};
pub use newsvendor::{Newsvendor, Scenario};
pub use quadratic::{ShiftedQuadratic, WeightedVector};
pub use registry::{registry, registry_ids, ProblemSpec};

use std::fmt::Debug;
use std::sync::Arc;

use rand::distributions::{Distribution, WeightedIndex};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::geometry::FeasibleSet;
use crate::linalg::{dist2, norm1};
use crate::{Error, Result};

pub type SharedProblem = Arc<dyn StochasticProblem>;

/// One draw `z` from the data distribution.
#[derive(Clone, Debug, PartialEq)]
pub enum Datum {
    /// Atom `k` of a finite support.
    Index(usize),
    Labeled {
        x: Vec<f64>,
        y: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    None,
    L1 { lambda: f64 },
}

impl Regularizer {
    pub fn lambda(&self) -> f64 {
        match self {
            Self::None => 0.0,
            Self::L1 { lambda } => *lambda,
        }
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.lambda() * norm1(w)
    }

    /// Lipschitz constant of the regularizer over ℝᵈ in the ℓ2 norm.
    pub fn lipschitz(&self, d: usize) -> f64 {
        self.lambda() * (d as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ebc {
    pub theta: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemMeta {
    pub d: usize,
    /// Lipschitz constant of `w ↦ f(w, z)` over `W` (data term only).
    pub lipschitz_g: f64,
    pub smoothness_l: Option<f64>,
    /// `R` with `‖w‖₂ ≤ R` on `W`.
    pub diameter_r: f64,
    /// `None` when the optimum is not known in closed form.
    pub pstar: Option<f64>,
    pub ebc: Option<Ebc>,
    pub composite_lambda: Option<f64>,
}

impl ProblemMeta {
    /// Lipschitz constant of the full objective, regularizer included.
    pub fn total_lipschitz(&self) -> f64 {
        self.lipschitz_g + self.composite_lambda.unwrap_or(0.0) * (self.d as f64).sqrt()
    }
}

/// The oracle bundle consumed by solvers and checkers.
///
/// `loss` and `subgradient` cover the data term `f(w, z)` only; `risk`
/// includes the regularizer. Implementations are immutable, and randomness
/// always comes from the caller's generator.
pub trait StochasticProblem: Send + Sync + Debug {
    fn name(&self) -> &str;
    fn meta(&self) -> &ProblemMeta;
    fn set(&self) -> &FeasibleSet;

    fn regularizer(&self) -> Regularizer {
        Regularizer::None
    }

    /// Whether every `f(·, z)` is convex (the risk is always convex).
    fn per_sample_convex(&self) -> bool {
        true
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Datum;
    fn loss(&self, w: &[f64], z: &Datum) -> f64;
    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]);

    /// `P(w) = E f(w, z) + r(w)` when available in closed form.
    fn risk(&self, w: &[f64]) -> Option<f64>;

    /// The point of `W*` nearest to `w`.
    fn optimal_point(&self, w: &[f64]) -> Option<Vec<f64>>;

    fn distance_to_optimal(&self, w: &[f64]) -> Option<f64> {
        self.optimal_point(w).map(|p| dist2(w, &p))
    }

    fn excess_risk(&self, w: &[f64]) -> Option<f64> {
        Some(self.risk(w)? - self.meta().pstar?)
    }

    /// `(A, b, c)` with `E f(w, z) = wᵀAw + bᵀw + c`, when the risk is quadratic.
    fn quadratic_form(&self) -> Option<QuadraticForm> {
        None
    }

    /// Subgradient of data term plus regularizer.
    fn full_subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        self.subgradient(w, z, out);
        let lambda = self.regularizer().lambda();
        if lambda != 0.0 {
            for (o, wi) in out.iter_mut().zip(w) {
                *o += lambda * crate::linalg::sign(*wi);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticForm {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: f64,
}

impl QuadraticForm {
    pub fn value(&self, w: &[f64]) -> f64 {
        crate::optim::quad_form(&self.a, w) + crate::linalg::dot(&self.b, w) + self.c
    }

    pub fn gradient(&self, w: &[f64], out: &mut [f64]) {
        crate::optim::mat_vec(&self.a, w, out);
        for (o, bi) in out.iter_mut().zip(&self.b) {
            *o = 2.0 * *o + bi;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().flatten().all(|v| *v == 0.0) && self.b.iter().all(|v| *v == 0.0)
    }
}

/// Normalised probabilities plus a sampler over atom indices.
#[derive(Clone, Debug)]
pub(crate) struct Atoms {
    pub probs: Vec<f64>,
    index: WeightedIndex<f64>,
}

impl Atoms {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProblem("empty support".into()));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidProblem(
                "probabilities must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidProblem("probabilities sum to zero".into()));
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let index = WeightedIndex::new(&probs).map_err(|e| Error::InvalidProblem(e.to_string()))?;
        Ok(Self { probs, index })
    }

    pub fn draw(&self, rng: &mut dyn RngCore) -> usize {
        self.index.sample(rng)
    }

    pub fn expect(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| p * f(k)).sum()
    }
}

pub(crate) fn require_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidProblem(format!("{what} must be finite")))
    }
}

pub(crate) fn require_bounded(set: &FeasibleSet) -> Result<()> {
    if set.is_bounded() {
        Ok(())
    } else {
        Err(Error::InvalidProblem(
            "the feasible set must be bounded".into(),
        ))
    }
}

/// Euclidean projection of `v` onto `{ s ≥ 0, Σ s = r }`.
pub(crate) fn project_simplex(v: &[f64], r: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumsum += uj;
        let t = (cumsum - r) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    v.iter().map(|x| (x - tau).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_sums_to_radius() {
        let p = project_simplex(&[0.5, 2.0, -1.0], 1.0);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let q = project_simplex(&[0.2, 0.2], 1.0);
        assert!((q[0] - 0.5).abs() < 1e-15 && (q[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn atoms_reject_bad_weights() {
        assert!(Atoms::new(&[]).is_err());
        assert!(Atoms::new(&[1.0, -1.0]).is_err());
        assert!(Atoms::new(&[0.0, 0.0]).is_err());
        let a = Atoms::new(&[1.0, 3.0]).unwrap();
        assert_eq!(a.probs, vec![0.25, 0.75]);
    }
}
