//! Empirical risk minimisation and excess-risk rate studies.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::FeasibleSet;
use crate::linalg::{dist2, norm2};
use crate::optim::Fista;
use crate::problems::{Datum, StochasticProblem};
use crate::rates::{fit_log_log, median, predicted_exponent, RateFit, MIN_FIT_POINTS};
use crate::rng::stream;
use crate::{Error, Result};

/// Subgradient iterations per start on nonsmooth objectives.
const SUBGRADIENT_ITERS: usize = 5_000;

/// `P_n(w) = (1/n) Σ f(w, zᵢ) + r(w)`. Repeated atoms of a finite support are
/// merged into weights, so evaluations cost `O(#distinct · d)`.
struct Empirical<'a> {
    p: &'a dyn StochasticProblem,
    data: Vec<(Datum, f64)>,
}

impl<'a> Empirical<'a> {
    fn new(p: &'a dyn StochasticProblem, samples: &[Datum]) -> Self {
        let n = samples.len() as f64;
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut data = Vec::new();
        for z in samples {
            match z {
                Datum::Index(k) => *counts.entry(*k).or_default() += 1,
                other => data.push((other.clone(), 1.0 / n)),
            }
        }
        data.extend(
            counts
                .into_iter()
                .map(|(k, c)| (Datum::Index(k), c as f64 / n)),
        );
        Self { p, data }
    }

    fn value(&self, w: &[f64]) -> f64 {
        self.data
            .iter()
            .map(|(z, a)| a * self.p.loss(w, z))
            .sum::<f64>()
            + self.p.regularizer().value(w)
    }

    /// Data-term gradient (or subgradient).
    fn grad(&self, w: &[f64], out: &mut [f64]) {
        let mut g = vec![0.0; w.len()];
        out.iter_mut().for_each(|o| *o = 0.0);
        for (z, a) in &self.data {
            self.p.subgradient(w, z, &mut g);
            for (o, gi) in out.iter_mut().zip(&g) {
                *o += a * gi;
            }
        }
    }
}

/// Minimises the empirical risk of `samples` over `W` to within `tolerance`.
///
/// Smooth instances use accelerated proximal gradient, certified by the
/// prox-gradient bound `P_n(w⁺) − min P_n ≤ L‖w − w⁺‖·diam(W)`. Nonsmooth
/// instances use a diminishing-step projected subgradient method with
/// best-iterate tracking from several starts; the spread of the best values
/// across starts stands in for the gap.
pub fn solve_erm(p: &dyn StochasticProblem, samples: &[Datum], tolerance: f64) -> Result<Vec<f64>> {
    if !(tolerance > 0.0) {
        return Err(Error::Precondition(format!(
            "tolerance must be positive, got {tolerance}"
        )));
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !p.per_sample_convex() {
        return Err(Error::Unsupported(format!(
            "{}: the empirical risk is not convex",
            p.name()
        )));
    }
    let emp = Empirical::new(p, samples);
    let set = p.set();
    match p.meta().smoothness_l {
        Some(l) => smooth(&emp, set, l.max(1e-9), tolerance),
        None => nonsmooth(&emp, set, tolerance),
    }
}

fn smooth(emp: &Empirical<'_>, set: &FeasibleSet, lip: f64, tolerance: f64) -> Result<Vec<f64>> {
    let lambda = emp.p.regularizer().lambda();
    let fista = Fista::default();
    let w = fista.minimize(|w, g| emp.grad(w, g), lip, lambda, set, &set.center())?;
    // one certified prox-gradient step
    let mut g = vec![0.0; w.len()];
    emp.grad(&w, &mut g);
    let x: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi - gi / lip).collect();
    let plus = crate::geometry::prox_l1(&x, lambda / lip, set)?;
    let gap = lip * dist2(&w, &plus) * set.diameter();
    if gap > tolerance {
        return Err(Error::ErmTolerance {
            gap,
            tolerance,
            iterations: fista.max_iter,
        });
    }
    Ok(plus)
}

fn nonsmooth(emp: &Empirical<'_>, set: &FeasibleSet, tolerance: f64) -> Result<Vec<f64>> {
    let d = set.dim();
    let lambda = emp.p.regularizer().lambda();
    let diam = set.diameter();
    let g_lip = emp.p.meta().total_lipschitz().max(1e-12);
    let ones = vec![1.0; d];
    let neg: Vec<f64> = ones.iter().map(|v| -v).collect();
    let starts = [
        set.center(),
        set.support_point(&ones),
        set.support_point(&neg),
    ];
    let mut bests = Vec::with_capacity(starts.len());
    for start in &starts {
        let mut w = set.project(start)?;
        let mut best = (emp.value(&w), w.clone());
        let mut g = vec![0.0; d];
        let mut x = vec![0.0; d];
        for k in 1..=SUBGRADIENT_ITERS {
            emp.grad(&w, &mut g);
            for i in 0..d {
                g[i] += lambda * crate::linalg::sign(w[i]);
            }
            let gn = norm2(&g);
            if gn == 0.0 {
                break;
            }
            let step = diam / (gn.max(g_lip * 1e-3) * (k as f64).sqrt());
            for i in 0..d {
                x[i] = w[i] - step * g[i];
            }
            set.project_into(&x, &mut w);
            let v = emp.value(&w);
            if v < best.0 {
                best = (v, w.clone());
            }
        }
        bests.push(best);
    }
    let lo = bests.iter().map(|b| b.0).fold(f64::INFINITY, f64::min);
    let hi = bests.iter().map(|b| b.0).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > tolerance {
        return Err(Error::ErmTolerance {
            gap: hi - lo,
            tolerance,
            iterations: SUBGRADIENT_ITERS,
        });
    }
    let best = bests
        .into_iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .unwrap();
    Ok(best.1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErmStudyResult {
    pub problem: String,
    pub n_grid: Vec<u64>,
    /// `excess[i][r]`: replicate `r` at `n_grid[i]`, clamped at 0.
    pub excess: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    pub fit: Option<RateFit>,
    /// Why the fit is missing, when it is.
    pub fit_error: Option<String>,
    /// `−1/(2 − θ)`.
    pub predicted: Option<f64>,
    /// `−2/(2 − θ)`, the small-`P*` exponent.
    pub predicted_optimistic: Option<f64>,
    pub tolerance: f64,
    /// Grid steps where the median rose by more than twice its replicate noise.
    pub monotone_violations: Vec<u64>,
}

/// Runs ERM on fresh samples for every `(n, replicate)` cell; cell `(i, r)`
/// draws from `stream(seed, i·replicates + r)`. `tolerance = None` uses
/// `1e-2 · d / max n` as a stand-in for the smallest expected excess.
pub fn erm_rate_study(
    p: &dyn StochasticProblem,
    n_grid: &[u64],
    replicates: usize,
    tolerance: Option<f64>,
    seed: u64,
) -> Result<ErmStudyResult> {
    let mut grid = n_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    if grid.len() < MIN_FIT_POINTS || grid[0] == 0 {
        return Err(Error::Precondition(format!(
            "need at least {MIN_FIT_POINTS} distinct positive sample sizes"
        )));
    }
    if replicates < 10 {
        return Err(Error::Precondition(format!(
            "need at least 10 replicates, got {replicates}"
        )));
    }
    if p.meta().pstar.is_none() {
        return Err(Error::Unsupported(format!(
            "{}: no closed-form optimum to measure excess against",
            p.name()
        )));
    }
    let n_max = *grid.last().unwrap();
    let tolerance = tolerance.unwrap_or(1e-2 * p.meta().d as f64 / n_max as f64);
    let cells: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..replicates).map(move |r| (i, r)))
        .collect();
    let results: Vec<f64> = cells
        .par_iter()
        .map(|&(i, r)| {
            let mut rng = stream(seed, (i * replicates + r) as u64);
            let samples: Vec<Datum> = (0..grid[i]).map(|_| p.sample(&mut rng)).collect();
            let w = solve_erm(p, &samples, tolerance)?;
            let e = p.excess_risk(&w).expect("closed-form risk");
            Ok(e.max(0.0))
        })
        .collect::<Result<_>>()?;
    let excess: Vec<Vec<f64>> = results.chunks(replicates).map(|c| c.to_vec()).collect();
    let medians: Vec<f64> = excess.iter().map(|v| median(v)).collect();
    let theta = p.meta().ebc.map(|e| e.theta);
    let pairs: Vec<(f64, f64)> = grid
        .iter()
        .zip(&medians)
        .map(|(n, m)| (*n as f64, *m))
        .collect();
    let (fit, fit_error) = match fit_log_log(&pairs, theta) {
        Ok(f) => (Some(f), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let noise: Vec<f64> = excess
        .iter()
        .map(|v| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
                / (v.len() as f64 - 1.0)
                / v.len() as f64)
                .sqrt()
        })
        .collect();
    let monotone_violations = (1..grid.len())
        .filter(|&i| medians[i] > medians[i - 1] + 2.0 * (noise[i] + noise[i - 1]))
        .map(|i| grid[i])
        .collect();
    Ok(ErmStudyResult {
        problem: p.name().to_string(),
        n_grid: grid,
        excess,
        medians,
        fit,
        fit_error,
        predicted: theta.map(predicted_exponent),
        predicted_optimistic: theta.map(|t| 2.0 * predicted_exponent(t)),
        tolerance,
        monotone_violations,
    })
}
