use rand::RngCore;

use super::basic::{psg_stage, ssg_stage, ssgs_stage};
use super::{check_start, finish, Domain, Recorder, RunTrace, StageSchedule, StepRule, Tap};
use crate::geometry::BallCap;
use crate::problems::StochasticProblem;
use crate::{Error, Result};

/// `R₀ = 2R`, which covers `‖w₁ − w*‖` for any feasible `w₁`.
pub fn default_r0(problem: &dyn StochasticProblem) -> f64 {
    2.0 * problem.meta().diameter_r
}

/// Multi-stage SSG on shrinking ball caps `W ∩ B(ŵ_{k−1}, R_{k−1})`, each
/// stage warm-started at the previous stage's average.
pub fn asa(
    problem: &dyn StochasticProblem,
    w1: &[f64],
    n: u64,
    r0: f64,
    g: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    let sched = StageSchedule::new(StepRule::Asa, n, r0, g)?;
    run_stages("asa", problem, w1, sched, rng, |k, w_hat, s, tap, rec| {
        let cap = BallCap::new(problem.set().clone(), w_hat.to_vec(), s.radii[k - 1])?;
        ssg_stage(
            problem,
            &Domain::Cap(cap),
            w_hat,
            s.steps[k - 1],
            s.n0 as usize,
            tap,
            rec,
            k,
        )
    })
}

/// Multi-stage SSGS: no cap projections anywhere.
pub fn asa2(
    problem: &dyn StochasticProblem,
    w1: &[f64],
    n: u64,
    r0: f64,
    g: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    let sched = StageSchedule::new(StepRule::Asa2, n, r0, g)?;
    if sched.n0 < 3 {
        return Err(Error::Precondition("SSGS stages need n0 >= 3".into()));
    }
    run_stages("asa2", problem, w1, sched, rng, |k, w_hat, s, tap, rec| {
        ssgs_stage(problem, w_hat, s.steps[k - 1], s.n0 as usize, tap, rec, k)
    })
}

/// `ρ = λ√d`, the Lipschitz constant of the ℓ1 term.
pub fn default_rho(problem: &dyn StochasticProblem) -> f64 {
    problem.regularizer().lipschitz(problem.meta().d)
}

/// Multi-stage PSG on ball caps for `E f + λ‖·‖₁`; `g` bounds the data term
/// only and must satisfy `n₀ ≥ ρ²/G²`.
pub fn asa3(
    problem: &dyn StochasticProblem,
    w1: &[f64],
    n: u64,
    r0: f64,
    g: f64,
    rho: f64,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    let sched = StageSchedule::new(StepRule::Asa3, n, r0, g)?;
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Precondition(format!(
            "ρ must be finite and nonnegative, got {rho}"
        )));
    }
    if (sched.n0 as f64) < rho * rho / (g * g) {
        return Err(Error::Precondition(format!(
            "the proximal rate guarantee needs n0 >= ρ²/G², got n0 = {} < {}",
            sched.n0,
            rho * rho / (g * g)
        )));
    }
    run_stages("asa3", problem, w1, sched, rng, |k, w_hat, s, tap, rec| {
        let cap = BallCap::new(problem.set().clone(), w_hat.to_vec(), s.radii[k - 1])?;
        Ok(psg_stage(
            problem,
            &Domain::Cap(cap),
            w_hat,
            s.steps[k - 1],
            s.n0 as usize,
            tap,
            rec,
            k,
        )?
        .0)
    })
}

fn run_stages<F>(
    name: &str,
    problem: &dyn StochasticProblem,
    w1: &[f64],
    sched: StageSchedule,
    rng: &mut dyn RngCore,
    mut stage: F,
) -> Result<(Vec<f64>, RunTrace)>
where
    F: FnMut(usize, &[f64], &StageSchedule, &mut Tap<'_>, &mut Recorder<'_>) -> Result<Vec<f64>>,
{
    check_start(&Domain::Set(problem.set().clone()), w1)?;
    let mut tap = Tap::new(rng);
    let mut rec = Recorder::new(problem, sched.samples());
    let mut w_hat = w1.to_vec();
    for k in 1..=sched.m {
        w_hat = stage(k, &w_hat, &sched, &mut tap, &mut rec)?;
        rec.record(tap.count, k, w_hat.clone());
    }
    let used = tap.count;
    let m = sched.m;
    Ok((
        w_hat.clone(),
        finish(name, rec, w_hat, used, m, Some(sched)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{LeastSquares, StochasticProblem};
    use crate::rng::stream;
    use crate::solvers::testkit::ConstGrad;

    #[test]
    fn budget_and_stage_count() {
        let p = LeastSquares::two_point();
        for n in [100u64, 1000, 5000] {
            let (w, tr) = asa(&p, &[1.0], n, default_r0(&p), 4.0, &mut stream(2, n)).unwrap();
            let s = tr.schedule.clone().unwrap();
            assert_eq!(tr.samples_used, s.m as u64 * s.n0);
            assert!(tr.samples_used <= n);
            assert_eq!(tr.stage_count, s.m);
            assert!(tr.max_violation <= 1e-8);
            assert!(p.set().contains(&w, 1e-12));
        }
    }

    #[test]
    fn small_n_rejected() {
        let p = LeastSquares::two_point();
        assert!(matches!(
            asa(&p, &[0.0], 99, 2.0, 4.0, &mut stream(0, 0)),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            asa2(&p, &[0.0], 50, 2.0, 4.0, &mut stream(0, 0)),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn asa2_shares_the_schedule() {
        let p = LeastSquares::two_point();
        let (_, a) = asa(&p, &[0.0], 1000, 2.0, 4.0, &mut stream(0, 0)).unwrap();
        let (_, b) = asa2(&p, &[0.0], 1000, 2.0, 4.0, &mut stream(0, 0)).unwrap();
        let (sa, sb) = (a.schedule.unwrap(), b.schedule.unwrap());
        assert_eq!((sa.m, sa.n0, sa.radii), (sb.m, sb.n0, sb.radii));
        assert_eq!(b.samples_used, 1000);
    }

    #[test]
    fn asa3_precondition() {
        // G = 1, ρ = 1, n = 1000 → n₀ = 500 ≥ 1
        let p = ConstGrad::new(vec![0.0; 100], 0.1);
        let rho = default_rho(&p);
        assert!((rho - 1.0).abs() < 1e-12);
        assert!(asa3(&p, &vec![0.0; 100], 1000, 2.0, 1.0, rho, &mut stream(0, 0)).is_ok());
        let r = asa3(&p, &vec![0.0; 100], 1000, 2.0, 0.01, rho, &mut stream(0, 0));
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn asa_converges_on_two_point() {
        let p = LeastSquares::two_point();
        let (w, tr) = asa(&p, &[1.0], 100_000, 4.0, 4.0, &mut stream(5, 0)).unwrap();
        assert!(p.excess_risk(&w).unwrap() < 1e-3);
        assert_eq!(tr.final_excess(), p.excess_risk(&w));
    }
}
