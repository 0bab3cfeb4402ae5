//! Empirical estimation of the error bound condition
//! `dist(w, W*)² ≤ α (P(w) − P*)^θ` and Monte-Carlo checks of the relaxed
//! Bernstein and central conditions it implies.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::problems::{sample_near_optimum, StochasticProblem};
use crate::{Error, Result};

/// Fewest admitted points `estimate_ebc` accepts.
pub const MIN_ADMITTED: usize = 100;

/// `{0.05, 0.10, …, 1.00}`.
pub fn default_theta_grid() -> Vec<f64> {
    (1..=20).map(|k| k as f64 * 0.05).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbcOptions {
    pub theta_grid: Vec<f64>,
    /// Absolute floor; `None` means `1e-6 ×` the largest observed excess.
    pub excess_floor: Option<f64>,
    /// `None` means `10 α` from the metadata, else `1e3`.
    pub alpha_cap: Option<f64>,
}

impl Default for EbcOptions {
    fn default() -> Self {
        Self {
            theta_grid: default_theta_grid(),
            excess_floor: None,
            alpha_cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbcEstimate {
    pub theta_grid: Vec<f64>,
    /// `max dist²/excess^θ` over admitted points, per grid value.
    pub alpha_hat: Vec<f64>,
    /// The maximising point per grid value.
    pub witnesses: Vec<Vec<f64>>,
    pub recommended_theta: Option<f64>,
    pub excess_floor: f64,
    pub alpha_cap: f64,
    pub admitted: usize,
}

impl EbcEstimate {
    pub fn alpha_at(&self, theta: f64) -> Option<f64> {
        self.theta_grid
            .iter()
            .position(|t| (t - theta).abs() < 1e-12)
            .map(|i| self.alpha_hat[i])
    }
}

fn excess_and_dist(p: &dyn StochasticProblem, w: &[f64]) -> Result<(f64, f64)> {
    let unsupported = || Error::Unsupported(format!("{} has no closed-form optimal set", p.name()));
    let e = p.excess_risk(w).ok_or_else(unsupported)?;
    let d = p.distance_to_optimal(w).ok_or_else(unsupported)?;
    Ok((e, d))
}

/// Mixes 70% uniform draws over `W` with 30% points at log-uniform distances
/// from `W*`, where the bound binds.
pub fn ebc_points(
    p: &dyn StochasticProblem,
    count: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<Vec<f64>>> {
    (0..count)
        .map(|i| {
            if i % 10 < 7 {
                p.set().sample_uniform(rng)
            } else {
                sample_near_optimum(p, rng)
            }
        })
        .collect()
}

pub fn estimate_ebc(
    p: &dyn StochasticProblem,
    points: &[Vec<f64>],
    opts: &EbcOptions,
) -> Result<EbcEstimate> {
    if opts.theta_grid.is_empty() || opts.theta_grid.iter().any(|t| !(*t > 0.0 && *t <= 2.0)) {
        return Err(Error::Precondition(
            "θ grid values must lie in (0, 2]".into(),
        ));
    }
    let evals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|w| excess_and_dist(p, w))
        .collect::<Result<_>>()?;
    let max_excess = evals.iter().map(|e| e.0).fold(0.0, f64::max);
    let floor = opts.excess_floor.unwrap_or(1e-6 * max_excess);
    let alpha_cap = opts
        .alpha_cap
        .unwrap_or_else(|| p.meta().ebc.map_or(1e3, |e| 10.0 * e.alpha));
    let admitted: Vec<usize> = (0..points.len())
        .filter(|&i| evals[i].0 >= floor && evals[i].0 > 0.0)
        .collect();
    if admitted.len() < MIN_ADMITTED {
        return Err(Error::TooFewPoints {
            admitted: admitted.len(),
            required: MIN_ADMITTED,
        });
    }
    let mut alpha_hat = Vec::with_capacity(opts.theta_grid.len());
    let mut witnesses = Vec::with_capacity(opts.theta_grid.len());
    for &theta in &opts.theta_grid {
        let (best, arg) = admitted
            .iter()
            .map(|&i| (evals[i].1 * evals[i].1 / evals[i].0.powf(theta), i))
            .fold(
                (0.0, admitted[0]),
                |acc, x| if x.0 > acc.0 { x } else { acc },
            );
        alpha_hat.push(best);
        witnesses.push(points[arg].clone());
    }
    let recommended_theta = opts
        .theta_grid
        .iter()
        .zip(&alpha_hat)
        .filter(|(_, a)| **a <= alpha_cap)
        .map(|(t, _)| *t)
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.max(t))));
    Ok(EbcEstimate {
        theta_grid: opts.theta_grid.clone(),
        alpha_hat,
        witnesses,
        recommended_theta,
        excess_floor: floor,
        alpha_cap,
        admitted: admitted.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EbcViolation {
    pub point: Vec<f64>,
    pub dist_sq: f64,
    pub bound: f64,
    /// `bound − dist²`, negative.
    pub margin: f64,
}

/// Points where `dist² > α·excess^θ + 1e-9`.
pub fn check_ebc(
    p: &dyn StochasticProblem,
    theta: f64,
    alpha: f64,
    points: &[Vec<f64>],
) -> Result<Vec<EbcViolation>> {
    let evals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|w| excess_and_dist(p, w))
        .collect::<Result<_>>()?;
    Ok(points
        .iter()
        .zip(evals)
        .filter_map(|(w, (e, d))| {
            let bound = alpha * e.max(0.0).powf(theta);
            let dist_sq = d * d;
            (dist_sq > bound + 1e-9).then(|| EbcViolation {
                point: w.clone(),
                dist_sq,
                bound,
                margin: bound - dist_sq,
            })
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionKind {
    Bernstein,
    Central,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConditionParams {
    Bernstein {
        theta: f64,
        b_const: f64,
    },
    Central {
        theta: f64,
        eta: f64,
        epsilon: f64,
        b: f64,
        c: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointMargin {
    pub w: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; the condition holds when this is nonnegative.
    pub margin: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionCheckReport {
    pub kind: ConditionKind,
    pub params: ConditionParams,
    pub points: Vec<PointMargin>,
    pub mc_samples: usize,
    /// Every point satisfies `margin + 3·stderr ≥ 0`.
    pub pass: bool,
    /// Central only: the moment is at most 1 wherever the excess is at least `ε`.
    pub stronger_pass: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub condition: ConditionKind,
    pub theta: f64,
    pub parameter: f64,
    pub margin: f64,
    pub stderr: f64,
    pub pass: bool,
}

impl ConditionCheckReport {
    pub fn rows(&self) -> Vec<ReportRow> {
        let (theta, parameter) = match self.params {
            ConditionParams::Bernstein { theta, b_const } => (theta, b_const),
            ConditionParams::Central { theta, eta, .. } => (theta, eta),
        };
        self.points
            .iter()
            .map(|m| ReportRow {
                condition: self.kind,
                theta,
                parameter,
                margin: m.margin,
                stderr: m.stderr,
                pass: m.pass,
            })
            .collect()
    }

    fn merge(mut self, other: Self) -> Self {
        self.pass &= other.pass;
        self.stronger_pass = match (self.stronger_pass, other.stronger_pass) {
            (Some(a), Some(b)) => Some(a && b),
            (a, b) => a.or(b),
        };
        self.points.extend(other.points);
        self
    }
}

/// `f(w, z) + r(w) − f(w*, z) − r(w*)` over `n` fresh draws, with `w*` the
/// optimum nearest `w`.
fn loss_gaps(
    p: &dyn StochasticProblem,
    w: &[f64],
    n: usize,
    rng: &mut dyn RngCore,
) -> Result<Vec<f64>> {
    let ws = p.optimal_point(w).ok_or_else(|| {
        Error::Unsupported(format!("{} has no closed-form optimal set", p.name()))
    })?;
    let reg = p.regularizer();
    let dr = reg.value(w) - reg.value(&ws);
    Ok((0..n)
        .map(|_| {
            let z = p.sample(rng);
            p.loss(w, &z) - p.loss(&ws, &z) + dr
        })
        .collect())
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, 0.0);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

fn require_mc(mc_samples: usize) -> Result<()> {
    if mc_samples < 2 {
        return Err(Error::Precondition(
            "at least 2 Monte-Carlo samples are needed".into(),
        ));
    }
    Ok(())
}

/// `B = G²α` from the metadata.
pub fn default_bernstein_b(p: &dyn StochasticProblem) -> Option<f64> {
    let m = p.meta();
    m.ebc.map(|e| m.total_lipschitz().powi(2) * e.alpha)
}

/// `E[(f(w,z) − f(w*,z))²] ≤ B (E[f(w,z) − f(w*,z)])^θ` at one point. The
/// second moment is a Monte-Carlo mean; the first moment is the closed-form
/// excess risk when the problem has one.
pub fn check_bernstein(
    p: &dyn StochasticProblem,
    w: &[f64],
    theta: f64,
    b_const: f64,
    mc_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<ConditionCheckReport> {
    require_mc(mc_samples)?;
    let params = ConditionParams::Bernstein { theta, b_const };
    let report = |m: PointMargin| ConditionCheckReport {
        kind: ConditionKind::Bernstein,
        params,
        pass: m.pass,
        points: vec![m],
        mc_samples,
        stronger_pass: None,
    };
    if p.excess_risk(w).is_some_and(|e| e <= 1e-12) {
        return Ok(report(PointMargin {
            w: w.to_vec(),
            lhs: 0.0,
            rhs: 0.0,
            margin: 0.0,
            stderr: 0.0,
            pass: true,
        }));
    }
    let gaps = loss_gaps(p, w, mc_samples, rng)?;
    let sq: Vec<f64> = gaps.iter().map(|g| g * g).collect();
    let (lhs, lhs_se) = mean_and_se(&sq);
    // The mean gap is the excess risk. Near W* its Monte-Carlo estimate is
    // dominated by noise and can go negative, so use the closed form if any.
    let (mean, mean_se) = match p.excess_risk(w) {
        Some(e) => (e, 0.0),
        None => mean_and_se(&gaps),
    };
    let mean = mean.max(0.0);
    let rhs = b_const * mean.powf(theta);
    // delta method for B·m^θ
    let rhs_se = if mean > 0.0 {
        b_const * theta * mean.powf(theta - 1.0) * mean_se
    } else {
        0.0
    };
    let stderr = (lhs_se * lhs_se + rhs_se * rhs_se).sqrt();
    let margin = rhs - lhs;
    Ok(report(PointMargin {
        w: w.to_vec(),
        lhs,
        rhs,
        margin,
        stderr,
        pass: margin + 3.0 * stderr >= 0.0,
    }))
}

pub fn check_bernstein_many(
    p: &dyn StochasticProblem,
    points: &[Vec<f64>],
    theta: f64,
    b_const: f64,
    mc_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<ConditionCheckReport> {
    let mut out: Option<ConditionCheckReport> = None;
    for w in points {
        let r = check_bernstein(p, w, theta, b_const, mc_samples, rng)?;
        out = Some(match out {
            None => r,
            Some(acc) => acc.merge(r),
        });
    }
    out.ok_or_else(|| Error::Precondition("no points to check".into()))
}

/// `κ(x) = (eˣ − x − 1)/x²`, with `κ(0) = 1/2`.
pub fn kappa(x: f64) -> f64 {
    ln_kappa(x).exp()
}

fn ln_kappa(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        (0.5 + x / 6.0 + x * x / 24.0).ln()
    } else if x > 50.0 {
        x - 2.0 * x.ln() + (-(x + 1.0) * (-x).exp()).ln_1p()
    } else {
        (x.exp_m1() - x).ln() - 2.0 * x.abs().ln()
    }
}

/// `c = 1/(αG²κ(4GRb))`, computed in log space.
pub fn central_c(alpha: f64, g: f64, r: f64, b: f64) -> f64 {
    (-(alpha * g * g).ln() - ln_kappa(4.0 * g * r * b)).exp()
}

/// `η = min(c ε^{1−θ}, b)`.
pub fn central_eta(c: f64, epsilon: f64, theta: f64, b: f64) -> f64 {
    let v = if theta == 1.0 {
        c
    } else {
        c * epsilon.powf(1.0 - theta)
    };
    v.min(b)
}

/// `E exp(η(f(w*,z) − f(w,z))) ≤ exp(ηε)` at one point, with `(θ, α, G, R)`
/// from the metadata. Moments are evaluated as log-sum-exp.
pub fn check_central(
    p: &dyn StochasticProblem,
    w: &[f64],
    epsilon: f64,
    b: f64,
    mc_samples: usize,
    rng: &mut dyn RngCore,
) -> Result<ConditionCheckReport> {
    require_mc(mc_samples)?;
    if !(epsilon >= 0.0) || !(b > 0.0) {
        return Err(Error::Precondition(format!(
            "need ε ≥ 0 and b > 0, got ε = {epsilon}, b = {b}"
        )));
    }
    let meta = p.meta();
    let ebc = meta
        .ebc
        .ok_or_else(|| Error::Unsupported(format!("{} has no EBC metadata", p.name())))?;
    let c = central_c(ebc.alpha, meta.total_lipschitz(), meta.diameter_r, b);
    let eta = central_eta(c, epsilon, ebc.theta, b);
    let params = ConditionParams::Central {
        theta: ebc.theta,
        eta,
        epsilon,
        b,
        c,
    };
    let gaps = loss_gaps(p, w, mc_samples, rng)?;
    let x: Vec<f64> = gaps.iter().map(|g| -eta * g).collect();
    let shift = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scaled: Vec<f64> = x.iter().map(|v| (v - shift).exp()).collect();
    let (m, se) = mean_and_se(&scaled);
    let log_moment = shift + m.ln();
    let stderr = if m > 0.0 { se / m } else { 0.0 };
    let rhs = eta * epsilon;
    let margin = rhs - log_moment;
    let stronger = p
        .excess_risk(w)
        .filter(|e| *e >= epsilon)
        .map(|_| -log_moment + 3.0 * stderr >= 0.0);
    let point = PointMargin {
        w: w.to_vec(),
        lhs: log_moment,
        rhs,
        margin,
        stderr,
        pass: margin + 3.0 * stderr >= 0.0,
    };
    Ok(ConditionCheckReport {
        kind: ConditionKind::Central,
        params,
        pass: point.pass && stronger.unwrap_or(true),
        points: vec![point],
        mc_samples,
        stronger_pass: stronger,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Hinge, LeastSquares, PnormComposite};
    use crate::rng::stream;

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(0.0), 0.5);
        for x in [1e-6, 0.3, 1.0, 5.0, 40.0, 60.0, 300.0] {
            // power series Σ x^k/(k+2)! below 1, the closed form above
            let direct = if x < 1.0 {
                let (mut term, mut sum) = (0.5, 0.0);
                for k in 0..30 {
                    sum += term;
                    term *= x / (k as f64 + 3.0);
                }
                sum
            } else {
                (x.exp() - x - 1.0) / (x * x)
            };
            assert!((kappa(x) / direct - 1.0).abs() < 1e-9, "x = {x}");
        }
        assert!(kappa(1000.0).is_infinite());
        assert!(central_c(1.0, 1.0, 1.0, 1000.0) == 0.0);
    }

    #[test]
    fn eta_rule() {
        assert_eq!(central_eta(2.0, 0.3, 1.0, 5.0), 2.0);
        assert_eq!(central_eta(2.0, 0.3, 1.0, 1.0), 1.0);
        assert!((central_eta(2.0, 0.25, 0.5, 5.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quadratic_ebc_identity() {
        let p = LeastSquares::two_point();
        let pts = ebc_points(&p, 2000, &mut stream(1, 0)).unwrap();
        let est = estimate_ebc(&p, &pts, &EbcOptions::default()).unwrap();
        assert_eq!(est.recommended_theta, Some(1.0));
        assert!((est.alpha_at(1.0).unwrap() - 1.0).abs() < 1e-9);
        assert!(check_ebc(&p, 1.0, 1.0, &pts).unwrap().is_empty());
        assert!(!check_ebc(&p, 1.0, 0.5, &pts).unwrap().is_empty());
        assert!(check_ebc(&p, 1.0, 0.0, &[vec![0.0]]).unwrap().is_empty());
    }

    #[test]
    fn quartic_prefers_half() {
        let p = PnormComposite::quartic();
        let pts = ebc_points(&p, 5000, &mut stream(2, 0)).unwrap();
        let est = estimate_ebc(
            &p,
            &pts,
            &EbcOptions {
                excess_floor: Some(1e-6),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((est.alpha_at(0.5).unwrap() - 1.0).abs() < 1e-9);
        let t = est.recommended_theta.unwrap();
        assert!((0.5..=0.65 + 1e-9).contains(&t), "θ = {t}");
    }

    #[test]
    fn too_few_points() {
        let p = LeastSquares::two_point();
        let pts = vec![vec![0.5]; 10];
        assert_eq!(
            estimate_ebc(&p, &pts, &EbcOptions::default()).unwrap_err(),
            Error::TooFewPoints {
                admitted: 10,
                required: 100
            }
        );
    }

    #[test]
    fn bernstein_closed_form() {
        // w = 1: gap (1 − z)² − z² = 1 − 2z, E = 1, E[gap²] = 5, B = 16.
        let p = LeastSquares::two_point();
        let b = default_bernstein_b(&p).unwrap();
        assert_eq!(b, 16.0);
        let r = check_bernstein(&p, &[1.0], 1.0, b, 20_000, &mut stream(3, 0)).unwrap();
        let m = &r.points[0];
        assert!(r.pass);
        assert!((m.lhs - 5.0).abs() < 3.0 * m.stderr + 1e-12);
        let small = check_bernstein(&p, &[1.0], 1.0, 4.0, 20_000, &mut stream(3, 0)).unwrap();
        assert!(!small.pass);
        let opt = check_bernstein(&p, &[0.0], 1.0, b, 100, &mut stream(3, 0)).unwrap();
        assert!(opt.pass && opt.points[0].margin == 0.0);
    }

    #[test]
    fn central_at_optimum_and_away() {
        let p = Hinge::new(
            vec![0.2, -0.1],
            crate::geometry::FeasibleSet::linf_ball(2, 1.0).unwrap(),
        )
        .unwrap();
        let ws = p.optimal_point(&[0.0, 0.0]).unwrap();
        let r = check_central(&p, &ws, 0.1, 1.0, 500, &mut stream(4, 0)).unwrap();
        assert!(r.pass);
        assert_eq!(r.points[0].lhs, 0.0);
        let r = check_central(&p, &[-1.0, 1.0], 0.01, 1.0, 5000, &mut stream(4, 1)).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.stronger_pass, Some(true));
    }
}
