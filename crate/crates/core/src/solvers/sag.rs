use rand::seq::SliceRandom;
use rand::RngCore;

use super::{finish, Recorder, RunTrace};
use crate::data::{EmpiricalProblem, Loss};
use crate::problems::{Datum, StochasticProblem};
use crate::{Error, Result};

/// Stochastic average gradient for the unconstrained, unregularized square
/// loss over the training rows. Each row's gradient `2(xᵢᵀw − yᵢ)xᵢ` is kept
/// as its scalar residual; the step divides the gradient sum by the number of
/// rows seen so far. Each epoch visits the rows in a fresh random order.
/// Returns the last iterate.
pub fn sag(
    problem: &EmpiricalProblem,
    w1: &[f64],
    step: f64,
    epochs: usize,
    rng: &mut dyn RngCore,
) -> Result<(Vec<f64>, RunTrace)> {
    if problem.loss_kind() != Loss::Square {
        return Err(Error::Unsupported(
            "SAG is implemented for the square loss only".into(),
        ));
    }
    crate::error::check_dim(problem.meta().d, w1.len())?;
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Precondition(format!(
            "step must be positive, got {step}"
        )));
    }
    let n = problem.train().len();
    let budget = (n * epochs) as u64;
    if budget == 0 {
        return Err(Error::Precondition("SAG needs at least one epoch".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    let mut rec = Recorder::new(problem, budget);
    let mut w = w1.to_vec();
    let mut sum = vec![0.0; w.len()];
    let mut memory = vec![0.0; n];
    let mut seen = vec![false; n];
    let mut seen_count = 0usize;
    for _ in 0..epochs {
        order.shuffle(rng);
        for &i in &order {
            count += 1;
            let row = problem.row(&Datum::Index(i));
            let g = 2.0 * (row.dot(&w) - row.label);
            row.axpy_into(g - memory[i], &mut sum);
            memory[i] = g;
            if !seen[i] {
                seen[i] = true;
                seen_count += 1;
            }
            let a = -step / seen_count as f64;
            for (wj, sj) in w.iter_mut().zip(&sum) {
                *wj += a * sj;
            }
            if rec.due(count) {
                rec.record(count, 1, w.clone());
            }
        }
    }
    rec.record(count, 1, w.clone());
    let used = count;
    Ok((w.clone(), finish("sag", rec, w, used, 1, None)))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::parse_libsvm;
    use crate::geometry::FeasibleSet;
    use crate::rng::stream;

    fn problem(src: &[u8], d: usize) -> EmpiricalProblem {
        let ds = Arc::new(parse_libsvm(src).unwrap().with_dim(d).unwrap());
        EmpiricalProblem::new(ds, Loss::Square, FeasibleSet::unbounded(d), 0.0).unwrap()
    }

    #[test]
    fn single_row_is_gradient_descent() {
        let p = problem(b"2 1:1 2:0.5\n", 2);
        let (w, tr) = sag(&p, &[0.1, 0.3], 0.2, 1, &mut stream(0, 0)).unwrap();
        let r = 2.0 * (0.1 + 0.15 - 2.0);
        assert!((w[0] - (0.1 - 0.2 * r)).abs() < 1e-15);
        assert!((w[1] - (0.3 - 0.2 * r * 0.5)).abs() < 1e-15);
        assert_eq!(tr.samples_used, 1);
    }

    #[test]
    fn zero_targets_stay_at_zero() {
        let p = problem(b"0 1:1 2:0.5\n0 2:-1\n", 2);
        let (w, _) = sag(&p, &[0.0, 0.0], 0.5, 3, &mut stream(0, 0)).unwrap();
        assert_eq!(w, vec![0.0, 0.0]);
    }

    #[test]
    fn two_rows_match_scalar_oracle() {
        let p = problem(b"1 1:2\n-0.5 1:1\n", 1);
        let (w, tr) = sag(&p, &[0.0], 0.1, 3, &mut stream(3, 3)).unwrap();
        assert_eq!(tr.samples_used, 6);
        // Replay the same shuffles with a straight-line scalar SAG.
        let mut rng = stream(3, 3);
        let xs = [2.0, 1.0];
        let ys = [1.0, -0.5];
        let (mut v, mut mem, mut seen, mut total) = (0.0, [0.0; 2], [false; 2], 0.0);
        let mut order = [0usize, 1];
        for i in (0..3).flat_map(|_| {
            order.shuffle(&mut rng);
            order
        }) {
            let g = 2.0 * (xs[i] * v - ys[i]) * xs[i];
            total += g - mem[i];
            mem[i] = g;
            seen[i] = true;
            v -= 0.1 * total / seen.iter().filter(|s| **s).count() as f64;
        }
        assert!((w[0] - v).abs() < 1e-14);
    }

    #[test]
    fn hinge_is_unsupported() {
        let ds = Arc::new(parse_libsvm(b"1 1:1\n").unwrap());
        let p = EmpiricalProblem::new(ds, Loss::Hinge, FeasibleSet::unbounded(1), 0.0).unwrap();
        assert!(matches!(
            sag(&p, &[0.0], 0.1, 1, &mut stream(0, 0)),
            Err(Error::Unsupported(_))
        ));
    }
}
