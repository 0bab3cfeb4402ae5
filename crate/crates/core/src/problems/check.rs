use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use super::StochasticProblem;
use crate::linalg::{dist2, norm2};
use crate::{Error, Result};

/// Sample sizes for the metadata self-check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetaCheck {
    pub ebc_points: usize,
    pub lipschitz_pairs: usize,
    pub samples_per_pair: usize,
}

impl Default for MetaCheck {
    fn default() -> Self {
        Self {
            ebc_points: 2_000,
            lipschitz_pairs: 200,
            samples_per_pair: 20,
        }
    }
}

impl MetaCheck {
    pub fn thorough() -> Self {
        Self {
            ebc_points: 10_000,
            lipschitz_pairs: 1_000,
            samples_per_pair: 100,
        }
    }
}

/// A feasible point at a random, log-uniform distance from `W*`.
pub fn sample_near_optimum(p: &dyn StochasticProblem, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
    let set = p.set();
    let u = set.sample_uniform(rng)?;
    let anchor = p
        .optimal_point(&u)
        .ok_or_else(|| Error::Unsupported(format!("{} has no optimal set", p.name())))?;
    let scale = set.diameter() * 10f64.powf(-rng.gen_range(0.0..6.0));
    let dir: Vec<f64> = (0..u.len()).map(|_| StandardNormal.sample(rng)).collect();
    let n = norm2(&dir).max(f64::MIN_POSITIVE);
    let x: Vec<f64> = anchor
        .iter()
        .zip(&dir)
        .map(|(a, d)| a + scale * d / n)
        .collect();
    set.project(&x)
}

/// Verifies the instance's own `(θ, α)`, `P*` and `G` by sampling.
pub fn check_meta(p: &dyn StochasticProblem, cfg: &MetaCheck, rng: &mut dyn RngCore) -> Result<()> {
    let meta = p.meta();
    let fail = |msg: String| Err(Error::InvalidProblem(format!("{}: {msg}", p.name())));
    if let (Some(ebc), Some(_)) = (meta.ebc, meta.pstar) {
        for i in 0..cfg.ebc_points {
            let w = if i % 10 < 7 {
                p.set().sample_uniform(rng)?
            } else {
                sample_near_optimum(p, rng)?
            };
            let excess = p.excess_risk(&w).expect("closed-form risk");
            if excess < -1e-9 {
                return fail(format!("risk below P* by {:e}", -excess));
            }
            let d = p.distance_to_optimal(&w).expect("optimal set");
            let bound = ebc.alpha * excess.max(0.0).powf(ebc.theta);
            if d * d > bound + 1e-9 {
                return fail(format!(
                    "EBC violated: dist² = {:e} > {:e} at {w:?}",
                    d * d,
                    bound
                ));
            }
        }
    }
    check_lipschitz(p, cfg.lipschitz_pairs, cfg.samples_per_pair, rng)
}

/// `|f(w,z) − f(u,z)| ≤ G‖w − u‖` and `‖∂f(w,z)‖ ≤ G` on random feasible points.
pub fn check_lipschitz(
    p: &dyn StochasticProblem,
    pairs: usize,
    samples: usize,
    rng: &mut dyn RngCore,
) -> Result<()> {
    let g = p.meta().lipschitz_g;
    let mut grad = vec![0.0; p.meta().d];
    for _ in 0..pairs {
        let w = p.set().sample_uniform(rng)?;
        let u = p.set().sample_uniform(rng)?;
        for _ in 0..samples {
            let z = p.sample(rng);
            let lhs = (p.loss(&w, &z) - p.loss(&u, &z)).abs();
            if lhs > g * dist2(&w, &u) + 1e-9 {
                return Err(Error::InvalidProblem(format!(
                    "{}: Lipschitz bound {g} violated",
                    p.name()
                )));
            }
            p.subgradient(&w, &z, &mut grad);
            if norm2(&grad) > g + 1e-9 {
                return Err(Error::InvalidProblem(format!(
                    "{}: subgradient norm exceeds {g}",
                    p.name()
                )));
            }
        }
    }
    Ok(())
}
