use rand::RngCore;

use super::{check_start, finish, Domain, Recorder, RunTrace, Tap};
use crate::geometry::mirror_step_pnorm;
use crate::problems::StochasticProblem;
use crate::{Error, Result};

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn mean(sum: &[f64], count: usize) -> Vec<f64> {
    sum.iter().map(|s| s / count as f64).collect()
}

/// Projected stochastic subgradient with a constant step; returns the average
/// of all `T + 1` iterates `w₁ … w_{T+1}`.
pub fn ssg(
    problem: &dyn StochasticProblem,
    domain: &Domain,
    w1: &[f64],
    gamma: f64,
    t: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    check_start(domain, w1)?;
    positive("gamma", gamma)?;
    if t == 0 {
        return Err(Error::Precondition("T must be at least 1".into()));
    }
    let mut tap = Tap::new(rng);
    let mut rec = Recorder::new(problem, t as u64);
    let avg = ssg_stage(problem, domain, w1, gamma, t, &mut tap, &mut rec, 1)?;
    rec.record(tap.count, 1, avg.clone());
    let used = tap.count;
    Ok((avg.clone(), finish("ssg", rec, avg, used, 1, None)))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn ssg_stage(
    problem: &dyn StochasticProblem,
    domain: &Domain,
    w1: &[f64],
    gamma: f64,
    t: usize,
    tap: &mut Tap<'_>,
    rec: &mut Recorder<'_>,
    stage: usize,
) -> Result<Vec<f64>> {
    let d = w1.len();
    let mut w = w1.to_vec();
    let mut sum = w1.to_vec();
    let mut g = vec![0.0; d];
    let mut x = vec![0.0; d];
    for step in 1..=t {
        let z = tap.draw(problem);
        problem.full_subgradient(&w, &z, &mut g);
        for i in 0..d {
            x[i] = w[i] - gamma * g[i];
        }
        domain.project_into(&x, &mut w)?;
        rec.observe(domain.violation(&w));
        for i in 0..d {
            sum[i] += w[i];
        }
        if rec.due(tap.count) {
            rec.record(tap.count, stage, mean(&sum, step + 1));
        }
    }
    Ok(mean(&sum, t + 1))
}

/// Subgradient method with the strongly convex anchor `‖w − w₁‖²/(2β)` built
/// into the recursion, projecting onto `W` only. The literal `t = 1`
/// coefficient `1 − 2/t = −1` makes the first step a reflection through `w₁`.
pub fn ssgs(
    problem: &dyn StochasticProblem,
    w1: &[f64],
    beta: f64,
    t: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    let domain = Domain::Set(problem.set().clone());
    check_start(&domain, w1)?;
    positive("beta", beta)?;
    if t < 3 {
        return Err(Error::Precondition(format!("SSGS needs T >= 3, got {t}")));
    }
    let mut tap = Tap::new(rng);
    let mut rec = Recorder::new(problem, t as u64);
    let avg = ssgs_stage(problem, w1, beta, t, &mut tap, &mut rec, 1)?;
    rec.record(tap.count, 1, avg.clone());
    let used = tap.count;
    Ok((avg.clone(), finish("ssgs", rec, avg, used, 1, None)))
}

pub(crate) fn ssgs_stage(
    problem: &dyn StochasticProblem,
    w1: &[f64],
    beta: f64,
    t: usize,
    tap: &mut Tap<'_>,
    rec: &mut Recorder<'_>,
    stage: usize,
) -> Result<Vec<f64>> {
    let set = problem.set();
    let d = w1.len();
    let mut w = w1.to_vec();
    let mut sum = w1.to_vec();
    let mut g = vec![0.0; d];
    let mut x = vec![0.0; d];
    for step in 1..=t {
        let z = tap.draw(problem);
        problem.full_subgradient(&w, &z, &mut g);
        let s = step as f64;
        let (a, b, c) = (1.0 - 2.0 / s, 2.0 / s, 2.0 * beta / s);
        for i in 0..d {
            x[i] = a * w[i] + b * w1[i] - c * g[i];
        }
        set.project_into(&x, &mut w);
        rec.observe(set.violation(&w));
        for i in 0..d {
            sum[i] += w[i];
        }
        if rec.due(tap.count) {
            rec.record(tap.count, stage, mean(&sum, step + 1));
        }
    }
    Ok(mean(&sum, t + 1))
}

/// Proximal stochastic gradient: `g_t` covers the data term, the ℓ1 term is
/// handled by the prox over the domain. Returns the average of `w₁ … w_T`.
pub fn psg(
    problem: &dyn StochasticProblem,
    domain: &Domain,
    w1: &[f64],
    gamma: f64,
    t: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    check_start(domain, w1)?;
    positive("gamma", gamma)?;
    if t == 0 {
        return Err(Error::Precondition("T must be at least 1".into()));
    }
    let mut tap = Tap::new(rng);
    let mut rec = Recorder::new(problem, t as u64);
    let (avg, _) = psg_stage(problem, domain, w1, gamma, t, &mut tap, &mut rec, 1)?;
    rec.record(tap.count, 1, avg.clone());
    let used = tap.count;
    Ok((avg.clone(), finish("psg", rec, avg, used, 1, None)))
}

/// Returns the average and the last iterate `w_{T+1}`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn psg_stage(
    problem: &dyn StochasticProblem,
    domain: &Domain,
    w1: &[f64],
    gamma: f64,
    t: usize,
    tap: &mut Tap<'_>,
    rec: &mut Recorder<'_>,
    stage: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let lambda = problem.regularizer().lambda();
    let d = w1.len();
    let mut w = w1.to_vec();
    let mut sum = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut x = vec![0.0; d];
    for step in 1..=t {
        for i in 0..d {
            sum[i] += w[i];
        }
        let z = tap.draw(problem);
        problem.subgradient(&w, &z, &mut g);
        for i in 0..d {
            x[i] = w[i] - gamma * g[i];
        }
        domain.prox_l1_into(&x, gamma * lambda, &mut w)?;
        rec.observe(domain.violation(&w));
        if rec.due(tap.count) {
            rec.record(tap.count, stage, mean(&sum, step));
        }
    }
    Ok((mean(&sum, t), w))
}

/// Mirror descent with the p-norm divergence; averages `T + 1` iterates like SSG.
pub fn smd_pnorm(
    problem: &dyn StochasticProblem,
    w1: &[f64],
    gamma: f64,
    t: usize,
    p: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    let set = problem.set();
    check_start(&Domain::Set(set.clone()), w1)?;
    positive("gamma", gamma)?;
    if !(p >= 2.0) {
        return Err(Error::InvalidNormExponent(p));
    }
    if t == 0 {
        return Err(Error::Precondition("T must be at least 1".into()));
    }
    let d = w1.len();
    let mut tap = Tap::new(rng);
    let mut rec = Recorder::new(problem, t as u64);
    let mut w = w1.to_vec();
    let mut sum = w1.to_vec();
    let mut g = vec![0.0; d];
    for step in 1..=t {
        let z = tap.draw(problem);
        problem.full_subgradient(&w, &z, &mut g);
        w = mirror_step_pnorm(&w, &g, gamma, p, set)?;
        rec.observe(set.violation(&w));
        for i in 0..d {
            sum[i] += w[i];
        }
        if rec.due(tap.count) {
            rec.record(tap.count, 1, mean(&sum, step + 1));
        }
    }
    let avg = mean(&sum, t + 1);
    rec.record(tap.count, 1, avg.clone());
    let used = tap.count;
    Ok((avg.clone(), finish("smd", rec, avg, used, 1, None)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::LeastSquares;
    use crate::rng::stream;
    use crate::solvers::testkit::ConstGrad;

    // Scalar recursions written out independently of the vector code.
    fn ssgs_oracle(w1: f64, g: f64, beta: f64, t: usize) -> f64 {
        let mut w = w1;
        let mut sum = w1;
        for s in 1..=t {
            let s = s as f64;
            w = ((1.0 - 2.0 / s) * w + 2.0 / s * w1 - 2.0 * beta / s * g).clamp(-1.0, 1.0);
            sum += w;
        }
        sum / (t + 1) as f64
    }

    #[test]
    fn ssg_one_step() {
        let p = ConstGrad::new(vec![1.0], 0.0);
        let dom = Domain::Set(p.set.clone());
        let (w, tr) = ssg(&p, &dom, &[0.0], 0.5, 1, &mut stream(0, 0)).unwrap();
        assert_eq!(w, vec![-0.25]);
        assert_eq!(tr.samples_used, 1);
    }

    #[test]
    fn ssgs_hand_unrolled() {
        // w₂ = Π(−1) = −1, w₃ = 0·(−1) + 1·0 − 0.5 = −0.5,
        // w₄ = (1/3)(−0.5) + 0 − 1/3 = −0.5; average (0 − 1 − 0.5 − 0.5)/4.
        let p = ConstGrad::new(vec![1.0], 0.0);
        let (w, _) = ssgs(&p, &[0.0], 0.5, 3, &mut stream(0, 0)).unwrap();
        assert!((w[0] + 0.5).abs() < 1e-15);
        assert!((ssgs_oracle(0.0, 1.0, 0.5, 3) + 0.5).abs() < 1e-15);
        for (w1, beta, t) in [(0.3, 0.2, 5), (-0.7, 1.5, 9), (0.0, 0.01, 40)] {
            let (w, _) = ssgs(&p, &[w1], beta, t, &mut stream(0, 0)).unwrap();
            assert!((w[0] - ssgs_oracle(w1, 1.0, beta, t)).abs() < 1e-14);
        }
    }

    #[test]
    fn ssgs_zero_gradient_is_fixed() {
        let p = ConstGrad::new(vec![0.0, 0.0], 0.0);
        let (w, _) = ssgs(&p, &[0.4, -0.2], 3.0, 10, &mut stream(0, 0)).unwrap();
        assert!((w[0] - 0.4).abs() < 1e-15 && (w[1] + 0.2).abs() < 1e-15);
        assert!(matches!(
            ssgs(&p, &[0.0, 0.0], 1.0, 2, &mut stream(0, 0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn psg_averages_first_t_iterates() {
        let p = ConstGrad::new(vec![0.0], 0.3);
        let dom = Domain::Set(p.set.clone());
        let mut tap_rng = stream(0, 0);
        let mut tap = Tap::new(&mut tap_rng);
        let mut rec = Recorder::new(&p, 1);
        let (avg, last) = psg_stage(&p, &dom, &[1.0], 1.0, 1, &mut tap, &mut rec, 1).unwrap();
        assert_eq!(avg, vec![1.0]);
        assert!((last[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn psg_without_penalty_follows_ssg_iterates() {
        let p = LeastSquares::two_point();
        let dom = Domain::Set(p.set().clone());
        let t = 50;
        let (a, _) = ssg(&p, &dom, &[0.5], 0.05, t, &mut stream(4, 1)).unwrap();
        let mut r = stream(4, 1);
        let mut tap = Tap::new(&mut r);
        let mut rec = Recorder::new(&p, t as u64);
        let (avg, last) = psg_stage(&p, &dom, &[0.5], 0.05, t, &mut tap, &mut rec, 1).unwrap();
        // SSG's sum over w₁..w_{T+1} equals PSG's sum over w₁..w_T plus w_{T+1}.
        let ssg_sum = a[0] * (t + 1) as f64;
        assert!((ssg_sum - (avg[0] * t as f64 + last[0])).abs() < 1e-12);
    }

    #[test]
    fn smd_p2_matches_ssg() {
        let p = LeastSquares::two_point();
        let dom = Domain::Set(p.set().clone());
        let (a, ta) = ssg(&p, &dom, &[0.2], 0.03, 300, &mut stream(9, 2)).unwrap();
        let (b, tb) = smd_pnorm(&p, &[0.2], 0.03, 300, 2.0, &mut stream(9, 2)).unwrap();
        assert!((a[0] - b[0]).abs() < 1e-10);
        for (x, y) in ta.records.iter().zip(&tb.records) {
            assert_eq!(x.samples, y.samples);
            assert!((x.iterate[0] - y.iterate[0]).abs() < 1e-10);
        }
        let z = ConstGrad::new(vec![0.0, 0.0], 0.0);
        let (w, _) = smd_pnorm(&z, &[0.1, 0.2], 0.5, 5, 4.0, &mut stream(0, 0)).unwrap();
        assert!((w[0] - 0.1).abs() < 1e-12 && (w[1] - 0.2).abs() < 1e-12);
        assert!(matches!(
            smd_pnorm(&z, &[0.0, 0.0], 0.5, 5, 1.5, &mut stream(0, 0)),
            Err(Error::InvalidNormExponent(_))
        ));
    }

    #[test]
    fn smd_single_step_matches_mirror_step() {
        let p = ConstGrad::new(vec![1.0, 0.0], 0.0);
        let (w, _) = smd_pnorm(&p, &[0.0, 0.0], 1.0, 1, 4.0, &mut stream(0, 0)).unwrap();
        // iterates (0,0) then (−1,0)
        assert!((w[0] + 0.5).abs() < 1e-12 && w[1].abs() < 1e-12);
    }

    #[test]
    fn infeasible_start_rejected() {
        let p = LeastSquares::two_point();
        let dom = Domain::Set(p.set().clone());
        let r = ssg(&p, &dom, &[1.5], 0.1, 3, &mut stream(0, 0));
        assert!(matches!(r, Err(Error::InfeasibleStart { .. })));
    }

    #[test]
    fn replay_is_identical() {
        let p = LeastSquares::two_point();
        let dom = Domain::Set(p.set().clone());
        let a = ssg(&p, &dom, &[0.5], 0.01, 1000, &mut stream(1, 5)).unwrap();
        let b = ssg(&p, &dom, &[0.5], 0.01, 1000, &mut stream(1, 5)).unwrap();
        assert_eq!(a, b);
        let tr = a.1;
        assert!(tr.records.windows(2).all(|w| w[0].samples < w[1].samples));
        assert_eq!(tr.records.last().unwrap().samples, 1000);
    }
}
