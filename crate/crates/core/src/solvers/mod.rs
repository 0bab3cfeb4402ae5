//! The stochastic subgradient family and the multi-stage adaptive drivers.
//!
//! A run is sequential. Every solver draws its samples through a counting tap
//! and records a [`RunTrace`] of averaged iterates at log-spaced sample counts
//! and at stage boundaries.

mod adaptive;
mod basic;
mod sag;
mod schedule;

pub use adaptive::{asa, asa2, asa3, default_r0, default_rho};
pub use basic::{psg, smd_pnorm, ssg, ssgs};
pub use sag::sag;
pub use schedule::{ssg_tail_bound, stage_count, StageSchedule, StepRule};

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::geometry::{prox_l1_cap_into, prox_l1_into, BallCap, FeasibleSet, FEASIBILITY_TOL};
use crate::linalg::dist2;
use crate::problems::{Datum, StochasticProblem};
use crate::{Error, Result};

/// Log-spaced checkpoints per run, on top of stage boundaries.
pub const CHECKPOINTS: usize = 32;

/// Where iterates live: a plain set or a ball cap `W ∩ B(c, R)`.
#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Set(FeasibleSet),
    Cap(BallCap),
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Self::Set(s) => s.dim(),
            Self::Cap(c) => c.dim(),
        }
    }

    pub fn base(&self) -> &FeasibleSet {
        match self {
            Self::Set(s) => s,
            Self::Cap(c) => &c.base,
        }
    }

    /// Largest constraint violation of `x`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Self::Set(s) => s.violation(x),
            Self::Cap(c) => c.base.violation(x).max(dist2(x, &c.center) - c.radius),
        }
    }

    pub(crate) fn project_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Self::Set(s) => {
                s.project_into(x, out);
                Ok(())
            }
            Self::Cap(c) => crate::geometry::cap_search(x, &c.center, c.radius, out, |p, _, y| {
                c.base.project_into(p, y)
            }),
        }
    }

    pub(crate) fn prox_l1_into(&self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        match self {
            Self::Set(s) => prox_l1_into(x, t, s, out),
            Self::Cap(c) => prox_l1_cap_into(x, t, c, out),
        }
    }
}

impl From<FeasibleSet> for Domain {
    fn from(s: FeasibleSet) -> Self {
        Self::Set(s)
    }
}

impl From<BallCap> for Domain {
    fn from(c: BallCap) -> Self {
        Self::Cap(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    /// Samples consumed so far in the run.
    pub samples: u64,
    /// 1-based stage index; single-stage solvers report 1.
    pub stage: usize,
    /// The solver's current output candidate (an average for the averaging methods).
    pub iterate: Vec<f64>,
    pub excess: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: String,
    pub seed: Option<u64>,
    pub records: Vec<Checkpoint>,
    pub final_iterate: Vec<f64>,
    pub samples_used: u64,
    pub stage_count: usize,
    /// Largest violation of the active domain over every iterate.
    pub max_violation: f64,
    pub schedule: Option<StageSchedule>,
    /// Zero unless the caller measured it; kept out of the determinism contract.
    pub wall_ms: f64,
}

impl RunTrace {
    pub fn final_excess(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.excess)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// Counts every sample drawn from the problem.
pub(crate) struct Tap<'r> {
    rng: &'r mut dyn RngCore,
    pub count: u64,
}

impl<'r> Tap<'r> {
    pub fn new(rng: &'r mut dyn RngCore) -> Self {
        Self { rng, count: 0 }
    }

    pub fn draw(&mut self, p: &dyn StochasticProblem) -> Datum {
        self.count += 1;
        p.sample(self.rng)
    }
}

pub(crate) struct Recorder<'p> {
    problem: &'p dyn StochasticProblem,
    targets: Vec<u64>,
    next: usize,
    pub records: Vec<Checkpoint>,
    pub max_violation: f64,
}

impl<'p> Recorder<'p> {
    pub fn new(problem: &'p dyn StochasticProblem, budget: u64) -> Self {
        let budget = budget.max(1);
        let mut targets: Vec<u64> = (0..CHECKPOINTS)
            .map(|k| {
                (budget as f64)
                    .powf(k as f64 / (CHECKPOINTS - 1) as f64)
                    .round() as u64
            })
            .map(|t| t.clamp(1, budget))
            .collect();
        targets.dedup();
        Self {
            problem,
            targets,
            next: 0,
            records: Vec::new(),
            max_violation: 0.0,
        }
    }

    #[inline]
    pub fn due(&self, samples: u64) -> bool {
        self.next < self.targets.len() && samples >= self.targets[self.next]
    }

    pub fn record(&mut self, samples: u64, stage: usize, iterate: Vec<f64>) {
        while self.next < self.targets.len() && self.targets[self.next] <= samples {
            self.next += 1;
        }
        let excess = self.problem.excess_risk(&iterate);
        let cp = Checkpoint {
            samples,
            stage,
            iterate,
            excess,
        };
        match self.records.last_mut() {
            Some(last) if last.samples == samples => *last = cp,
            _ => self.records.push(cp),
        }
    }

    #[inline]
    pub fn observe(&mut self, v: f64) {
        if v > self.max_violation {
            self.max_violation = v;
        }
    }
}

pub(crate) fn check_start(domain: &Domain, w1: &[f64]) -> Result<()> {
    crate::error::check_dim(domain.dim(), w1.len())?;
    let v = domain.violation(w1);
    if v > FEASIBILITY_TOL {
        return Err(Error::InfeasibleStart { violation: v });
    }
    Ok(())
}

pub(crate) fn finish(
    algorithm: &str,
    rec: Recorder<'_>,
    final_iterate: Vec<f64>,
    samples_used: u64,
    stage_count: usize,
    schedule: Option<StageSchedule>,
) -> RunTrace {
    RunTrace {
        algorithm: algorithm.to_string(),
        seed: None,
        records: rec.records,
        final_iterate,
        samples_used,
        stage_count,
        max_violation: rec.max_violation,
        schedule,
        wall_ms: 0.0,
    }
}

#[cfg(test)]
pub(crate) mod testkit {
    use rand::RngCore;

    use crate::geometry::FeasibleSet;
    use crate::problems::{Datum, ProblemMeta, Regularizer, StochasticProblem};

    /// `f(w, z) = gᵀw` with a fixed `g` on `[−1, 1]ᵈ`; every draw is the same.
    #[derive(Debug)]
    pub struct ConstGrad {
        pub g: Vec<f64>,
        pub lambda: f64,
        pub set: FeasibleSet,
        pub meta: ProblemMeta,
    }

    impl ConstGrad {
        pub fn new(g: Vec<f64>, lambda: f64) -> Self {
            let d = g.len();
            let set = FeasibleSet::linf_ball(d, 1.0).unwrap();
            let meta = ProblemMeta {
                d,
                lipschitz_g: crate::linalg::norm2(&g).max(1.0),
                smoothness_l: None,
                diameter_r: set.max_norm(),
                pstar: None,
                ebc: None,
                composite_lambda: None,
            };
            Self {
                g,
                lambda,
                set,
                meta,
            }
        }
    }

    impl StochasticProblem for ConstGrad {
        fn name(&self) -> &str {
            "const_grad"
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
            rng.next_u32();
            Datum::Index(0)
        }
        fn loss(&self, w: &[f64], _z: &Datum) -> f64 {
            crate::linalg::dot(&self.g, w)
        }
        fn subgradient(&self, _w: &[f64], _z: &Datum, out: &mut [f64]) {
            out.copy_from_slice(&self.g);
        }
        fn risk(&self, _w: &[f64]) -> Option<f64> {
            None
        }
        fn optimal_point(&self, _w: &[f64]) -> Option<Vec<f64>> {
            None
        }
    }
}
