use serde::{Deserialize, Serialize};

use super::{FeasibleSet, FEASIBILITY_TOL};
use crate::error::check_dim;
use crate::linalg::dist2;
use crate::{Error, Result};

/// Residual tolerance on the ball constraint once it is active.
pub const CAP_TOLERANCE: f64 = 1e-10;
pub const CAP_MAX_STEPS: usize = 200;

/// `W ∩ B(center, radius)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCap {
    pub base: FeasibleSet,
    pub center: Vec<f64>,
    pub radius: f64,
}

impl BallCap {
    pub fn new(base: FeasibleSet, center: Vec<f64>, radius: f64) -> Result<Self> {
        check_dim(base.dim(), center.len())?;
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::InvalidSet(format!(
                "cap radius must be finite and >= 0, got {radius}"
            )));
        }
        let v = base.violation(&center);
        if v > FEASIBILITY_TOL {
            return Err(Error::InvalidSet(format!(
                "cap center violates the base set by {v:e}"
            )));
        }
        Ok(Self {
            base,
            center,
            radius,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.base.contains(x, tol) && dist2(x, &self.center) <= self.radius + tol
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        project_cap(self, x)
    }
}

/// Euclidean projection onto `W ∩ B(c, R)`.
///
/// Minimising `½‖y − x‖² + (λ/2)‖y − c‖²` over `W` gives `Π_W((x + λc)/(1 + λ))`.
/// With `s = λ/(1 + λ)` the candidate is `Π_W((1 − s)x + s·c)`, and its distance
/// to `c` decreases monotonically in `s` from `‖Π_W(x) − c‖` to 0. The search
/// bisects on `s ∈ [0, 1]` and returns the candidate on the feasible side.
pub fn project_cap(cap: &BallCap, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(cap.dim(), x.len())?;
    let mut out = vec![0.0; x.len()];
    cap_search(x, &cap.center, cap.radius, &mut out, |p, _s, y| {
        cap.base.project_into(p, y)
    })?;
    Ok(out)
}

/// Shared multiplier search. `inner(p, s, out)` must solve the base problem at
/// the shifted point `p = (1 − s)x + s·c`; the scale `s` lets proximal callers
/// shrink their penalty by `1 − s`.
pub(crate) fn cap_search<F>(
    x: &[f64],
    c: &[f64],
    radius: f64,
    out: &mut [f64],
    mut inner: F,
) -> Result<()>
where
    F: FnMut(&[f64], f64, &mut [f64]),
{
    if radius == 0.0 {
        out.copy_from_slice(c);
        return Ok(());
    }
    inner(x, 0.0, out);
    if dist2(out, c) <= radius {
        return Ok(());
    }
    let mut p = vec![0.0; x.len()];
    let mut y = vec![0.0; x.len()];
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    out.copy_from_slice(c);
    let mut residual = f64::INFINITY;
    for _ in 0..CAP_MAX_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // No representable point left between the brackets.
            return Ok(());
        }
        for ((pi, xi), ci) in p.iter_mut().zip(x).zip(c) {
            *pi = (1.0 - mid) * xi + mid * ci;
        }
        inner(&p, mid, &mut y);
        let h = dist2(&y, c) - radius;
        if h > 0.0 {
            lo = mid;
        } else {
            hi = mid;
            out.copy_from_slice(&y);
            residual = -h;
            if residual <= CAP_TOLERANCE {
                return Ok(());
            }
        }
    }
    Err(Error::CapSearch {
        residual,
        iterations: CAP_MAX_STEPS,
    })
}
