//! Deterministic first-order solvers used to compute exact optima of
//! instances and of empirical objectives.

use crate::geometry::{prox_l1_into, FeasibleSet};
use crate::linalg::{dist2, norm2};
use crate::Result;

pub(crate) struct Fista {
    pub max_iter: usize,
    /// Stop once successive iterates move less than this.
    pub step_tol: f64,
}

impl Default for Fista {
    fn default() -> Self {
        Self {
            max_iter: 200_000,
            step_tol: 1e-15,
        }
    }
}

impl Fista {
    /// Minimises `h(w) + λ‖w‖₁` over `set` where `h` is `lip`-smooth.
    ///
    /// Uses the gradient-based adaptive restart of O'Donoghue and Candès, so
    /// strongly convex objectives converge linearly.
    pub fn minimize<G>(
        &self,
        grad: G,
        lip: f64,
        lambda: f64,
        set: &FeasibleSet,
        w0: &[f64],
    ) -> Result<Vec<f64>>
    where
        G: Fn(&[f64], &mut [f64]),
    {
        let d = w0.len();
        let step = 1.0 / lip.max(1e-300);
        let mut w = set.project(w0)?;
        let mut y = w.clone();
        let mut w_next = vec![0.0; d];
        let mut g = vec![0.0; d];
        let mut x = vec![0.0; d];
        let mut t = 1.0_f64;
        for _ in 0..self.max_iter {
            grad(&y, &mut g);
            for i in 0..d {
                x[i] = y[i] - step * g[i];
            }
            prox_l1_into(&x, step * lambda, set, &mut w_next)?;
            let moved = dist2(&w_next, &w);
            // Restart momentum when it points uphill.
            let uphill: f64 = (0..d)
                .map(|i| (y[i] - w_next[i]) * (w_next[i] - w[i]))
                .sum();
            if uphill > 0.0 {
                t = 1.0;
                y.copy_from_slice(&w_next);
            } else {
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
                let beta = (t - 1.0) / t_next;
                for i in 0..d {
                    y[i] = w_next[i] + beta * (w_next[i] - w[i]);
                }
                t = t_next;
            }
            std::mem::swap(&mut w, &mut w_next);
            if moved <= self.step_tol * (1.0 + norm2(&w)) {
                break;
            }
        }
        Ok(w)
    }
}

/// Eigenvalues of a symmetric matrix given row-major, ascending.
pub(crate) fn sym_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let d = a.len();
    let m = nalgebra::DMatrix::from_fn(d, d, |i, j| 0.5 * (a[i][j] + a[j][i]));
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub(crate) fn mat_vec(a: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(a) {
        *o = crate::linalg::dot(row, x);
    }
}

pub(crate) fn quad_form(a: &[Vec<f64>], x: &[f64]) -> f64 {
    a.iter()
        .zip(x)
        .map(|(row, xi)| xi * crate::linalg::dot(row, x))
        .sum()
}
