use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{require_finite, Atoms, Datum, Ebc, ProblemMeta, StochasticProblem};
use crate::error::check_dim;
use crate::geometry::FeasibleSet;
use crate::{Error, Result};

fn unit_weight() -> f64 {
    1.0
}

/// One demand scenario. `pieces[j]` lists `(slope, intercept)` pairs whose
/// pointwise minimum is the profit earned from resource `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "unit_weight")]
    pub weight: f64,
    pub pieces: Vec<Vec<(f64, f64)>>,
}

/// `min_{0 ≤ x ≤ b} cᵀx − E[Π(x; z)]` with a profit that separates over
/// resources, each part a minimum of affine functions.
#[derive(Clone, Debug)]
pub struct Newsvendor {
    name: String,
    set: FeasibleSet,
    costs: Vec<f64>,
    scenarios: Vec<Scenario>,
    atoms: Atoms,
    /// Optimal interval per resource.
    optimum: Vec<(f64, f64)>,
    meta: ProblemMeta,
}

impl Newsvendor {
    pub fn new(costs: Vec<f64>, capacity: Vec<f64>, scenarios: Vec<Scenario>) -> Result<Self> {
        let q = costs.len();
        check_dim(q, capacity.len())?;
        require_finite(&costs, "costs")?;
        let set = FeasibleSet::nonnegative_box(capacity.clone())?;
        if scenarios.is_empty() {
            return Err(Error::InvalidProblem("empty demand support".into()));
        }
        for s in &scenarios {
            check_dim(q, s.pieces.len())?;
            for p in &s.pieces {
                if p.is_empty() {
                    return Err(Error::InvalidProblem(
                        "every resource needs at least one profit piece".into(),
                    ));
                }
                if p.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
                    return Err(Error::InvalidProblem("profit pieces must be finite".into()));
                }
            }
        }
        let atoms = Atoms::new(&scenarios.iter().map(|s| s.weight).collect::<Vec<_>>())?;
        let mut me = Self {
            name: "newsvendor".into(),
            set,
            costs,
            scenarios,
            atoms,
            optimum: vec![],
            meta: ProblemMeta {
                d: q,
                lipschitz_g: 0.0,
                smoothness_l: None,
                diameter_r: 0.0,
                pstar: None,
                ebc: None,
                composite_lambda: None,
            },
        };
        let (mut gap, mut slope) = (0.0_f64, f64::INFINITY);
        let mut pstar = 0.0;
        let mut g2 = 0.0;
        for j in 0..q {
            let bps = me.breakpoints(j, capacity[j]);
            let vals: Vec<f64> = bps.iter().map(|&x| me.phi(j, x)).collect();
            let best = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * (1.0 + best.abs());
            let first = vals.iter().position(|v| *v <= best + tol).unwrap();
            let last = vals.iter().rposition(|v| *v <= best + tol).unwrap();
            let (lo, hi) = (bps[first], bps[last]);
            me.optimum.push((lo, hi));
            pstar += best;
            // Convexity: the segments adjacent to the optimal interval have
            // the smallest slopes outside it.
            if first > 0 {
                slope = slope.min((vals[first - 1] - vals[first]) / (bps[first] - bps[first - 1]));
            }
            if last + 1 < bps.len() {
                slope = slope.min((vals[last + 1] - vals[last]) / (bps[last + 1] - bps[last]));
            }
            gap = gap.max(lo).max(capacity[j] - hi);
            let worst = me
                .scenarios
                .iter()
                .flat_map(|s| s.pieces[j].iter().map(|(a, _)| (me.costs[j] - a).abs()))
                .fold(0.0, f64::max);
            g2 += worst * worst;
        }
        let alpha = if gap == 0.0 { 1.0 } else { gap / slope };
        me.meta = ProblemMeta {
            d: q,
            lipschitz_g: g2.sqrt(),
            smoothness_l: None,
            diameter_r: me.set.max_norm(),
            pstar: Some(pstar),
            ebc: Some(Ebc { theta: 1.0, alpha }),
            composite_lambda: None,
        };
        Ok(me)
    }

    /// Single resource, `Π(x; z) = min(x, z)`, `c = 0.5`, `z ∈ {1, 2}`, `x ∈ [0, 3]`.
    pub fn single_resource_example() -> Self {
        let sc = |z: f64| Scenario {
            weight: 1.0,
            pieces: vec![vec![(1.0, 0.0), (0.0, z)]],
        };
        Self::new(vec![0.5], vec![3.0], vec![sc(1.0), sc(2.0)]).unwrap()
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    /// Optimal interval of each resource.
    pub fn optimal_intervals(&self) -> &[(f64, f64)] {
        &self.optimum
    }

    fn profit(pieces: &[(f64, f64)], x: f64) -> (f64, f64) {
        let mut best = (f64::INFINITY, 0.0);
        for (a, b) in pieces {
            let v = a * x + b;
            if v < best.0 {
                best = (v, *a);
            }
        }
        best
    }

    /// Expected cost of resource `j` at level `x`.
    fn phi(&self, j: usize, x: f64) -> f64 {
        self.costs[j] * x
            - self
                .atoms
                .expect(|k| Self::profit(&self.scenarios[k].pieces[j], x).0)
    }

    fn breakpoints(&self, j: usize, cap: f64) -> Vec<f64> {
        let mut bps = vec![0.0, cap];
        for s in &self.scenarios {
            let p = &s.pieces[j];
            for (i, (a1, b1)) in p.iter().enumerate() {
                for (a2, b2) in &p[i + 1..] {
                    if a1 != a2 {
                        let x = (b2 - b1) / (a1 - a2);
                        if x > 0.0 && x < cap {
                            bps.push(x);
                        }
                    }
                }
            }
        }
        bps.sort_by(f64::total_cmp);
        bps.dedup();
        bps
    }
}

impl StochasticProblem for Newsvendor {
    fn name(&self) -> &str {
        &self.name
    }
    fn meta(&self) -> &ProblemMeta {
        &self.meta
    }
    fn set(&self) -> &FeasibleSet {
        &self.set
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Datum {
        Datum::Index(self.atoms.draw(rng))
    }

    fn loss(&self, x: &[f64], z: &Datum) -> f64 {
        let Datum::Index(k) = z else {
            panic!("newsvendor data are scenario indices")
        };
        let s = &self.scenarios[*k];
        (0..x.len())
            .map(|j| self.costs[j] * x[j] - Self::profit(&s.pieces[j], x[j]).0)
            .sum()
    }

    /// Ties between pieces resolve to the first listed piece.
    fn subgradient(&self, x: &[f64], z: &Datum, out: &mut [f64]) {
        let Datum::Index(k) = z else {
            panic!("newsvendor data are scenario indices")
        };
        let s = &self.scenarios[*k];
        for j in 0..x.len() {
            out[j] = self.costs[j] - Self::profit(&s.pieces[j], x[j]).1;
        }
    }

    fn risk(&self, x: &[f64]) -> Option<f64> {
        Some((0..x.len()).map(|j| self.phi(j, x[j])).sum())
    }

    fn optimal_point(&self, x: &[f64]) -> Option<Vec<f64>> {
        Some(
            x.iter()
                .zip(&self.optimum)
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
        )
    }
}
