use super::{cap_search, project_l1_centered_in_place, BallCap, FeasibleSet};
use crate::error::check_dim;
use crate::linalg::soft_threshold;
use crate::{Error, Result};

const MULTIPLIER_STEPS: usize = 200;

/// `argmin_{w ∈ W} ½‖w − x‖² + t‖w‖₁`.
///
/// Boxes, origin-centred balls and the whole space have closed forms. An
/// off-centre ℓ2 ball reuses the cap multiplier search over the whole space;
/// an off-centre ℓ1 ball bisects the multiplier of its constraint, each
/// coordinate then being a 1-D problem with two kinks.
pub fn prox_l1(x: &[f64], t: f64, set: &FeasibleSet) -> Result<Vec<f64>> {
    check_dim(set.dim(), x.len())?;
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!(
            "prox scale must be >= 0, got {t}"
        )));
    }
    let mut out = vec![0.0; x.len()];
    prox_l1_into(x, t, set, &mut out)?;
    Ok(out)
}

pub(crate) fn prox_l1_into(x: &[f64], t: f64, set: &FeasibleSet, out: &mut [f64]) -> Result<()> {
    match set {
        FeasibleSet::Box { .. }
        | FeasibleSet::NonnegativeBox { .. }
        | FeasibleSet::Unbounded { .. } => {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = soft_threshold(*xi, t);
            }
            let tmp = out.to_vec();
            set.project_into(&tmp, out);
            Ok(())
        }
        FeasibleSet::L2Ball { center, radius } => {
            if center.iter().all(|c| *c == 0.0) {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = soft_threshold(*xi, t);
                }
                let n = crate::linalg::norm2(out);
                if n > *radius {
                    let s = radius / n;
                    out.iter_mut().for_each(|o| *o *= s);
                }
                Ok(())
            } else {
                cap_search(x, center, *radius, out, |p, s, y| {
                    for (yi, pi) in y.iter_mut().zip(p) {
                        *yi = soft_threshold(*pi, t * (1.0 - s));
                    }
                })
            }
        }
        FeasibleSet::L1Ball { center, radius } => {
            if center.iter().all(|c| *c == 0.0) {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = soft_threshold(*xi, t);
                }
                project_l1_centered_in_place(out, *radius);
                Ok(())
            } else {
                prox_l1_shifted_l1_ball(x, t, center, *radius, out);
                Ok(())
            }
        }
    }
}

/// Proximal step over a ball cap `W ∩ B(c, R)`.
///
/// The ball multiplier turns the problem into a prox over `W` at the shifted
/// point `(1 − s)x + s·c` with penalty `t(1 − s)`.
pub(crate) fn prox_l1_cap_into(x: &[f64], t: f64, cap: &BallCap, out: &mut [f64]) -> Result<()> {
    let mut inner_err = None;
    cap_search(x, &cap.center, cap.radius, out, |p, s, y| {
        if let Err(e) = prox_l1_into(p, t * (1.0 - s), &cap.base, y) {
            inner_err.get_or_insert(e);
        }
    })?;
    match inner_err {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn prox_l1_shifted_l1_ball(x: &[f64], t: f64, c: &[f64], r: f64, out: &mut [f64]) {
    let solve = |mu: f64, out: &mut [f64]| {
        for i in 0..x.len() {
            out[i] = two_kink_argmin(x[i], t, mu, c[i]);
        }
    };
    let gap = |w: &[f64]| w.iter().zip(c).map(|(a, b)| (a - b).abs()).sum::<f64>();
    solve(0.0, out);
    if gap(out) <= r {
        return;
    }
    let mut lo = 0.0;
    let mut hi = x
        .iter()
        .zip(c)
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()))
        + t
        + 1.0;
    let mut w = vec![0.0; x.len()];
    solve(hi, out);
    for _ in 0..MULTIPLIER_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        solve(mid, &mut w);
        let g = gap(&w);
        if g > r {
            lo = mid;
        } else {
            hi = mid;
            out.copy_from_slice(&w);
            if r - g <= super::CAP_TOLERANCE {
                break;
            }
        }
    }
}

/// `argmin_w ½(w − a)² + t|w| + μ|w − b|` for `t, μ ≥ 0`.
fn two_kink_argmin(a: f64, t: f64, mu: f64, b: f64) -> f64 {
    let obj = |w: f64| 0.5 * (w - a) * (w - a) + t * w.abs() + mu * (w - b).abs();
    let (k1, k2) = if b < 0.0 { (b, 0.0) } else { (0.0, b) };
    let mut best = (obj(k1), k1);
    let mut consider = |w: f64| {
        let v = obj(w);
        if v < best.0 {
            best = (v, w);
        }
    };
    consider(k2);
    // Stationary points of each smooth piece, kept only when they fall inside it.
    for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let w = a - t * s1 - mu * s2;
        let ok1 = if s1 > 0.0 { w >= 0.0 } else { w <= 0.0 };
        let ok2 = if s2 > 0.0 { w >= b } else { w <= b };
        if ok1 && ok2 {
            consider(w);
        }
    }
    best.1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_prox_matches_soft_threshold_oracle() {
        let set = FeasibleSet::linf_ball(2, 1.0).unwrap();
        let w = prox_l1(&[0.9, -0.2], 0.3, &set).unwrap();
        // Independent scalar oracle: minimise ½(w − x)² + t|w| on a fine grid.
        let grid = |x: f64| {
            (0..=20_000)
                .map(|k| -1.0 + k as f64 * 1e-4)
                .min_by(|a, b| {
                    let f = |w: f64| 0.5 * (w - x) * (w - x) + 0.3 * w.abs();
                    f(*a).total_cmp(&f(*b))
                })
                .unwrap()
        };
        assert!((w[0] - grid(0.9)).abs() < 1e-4 && (w[1] - grid(-0.2)).abs() < 1e-4);
        assert!((w[0] - 0.6).abs() < 1e-12 && w[1] == 0.0);
    }

    #[test]
    fn zero_scale_is_projection() {
        for set in [
            FeasibleSet::l2_ball(3, 1.0).unwrap(),
            FeasibleSet::l1_ball(3, 1.0).unwrap(),
            FeasibleSet::linf_ball(3, 0.5).unwrap(),
        ] {
            let x = [2.0, -0.4, 0.1];
            let a = prox_l1(&x, 0.0, &set).unwrap();
            let b = set.project(&x).unwrap();
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn origin_is_fixed() {
        let set = FeasibleSet::l2_ball(2, 1.0).unwrap();
        assert_eq!(prox_l1(&[0.0, 0.0], 5.0, &set).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn two_kink_argmin_matches_grid() {
        for &(a, t, mu, b) in &[
            (2.0, 0.3, 0.5, 0.4),
            (-1.0, 0.2, 0.1, 0.7),
            (0.1, 0.5, 2.0, -0.3),
            (3.0, 0.0, 0.0, 1.0),
        ] {
            let f = |w: f64| 0.5 * (w - a) * (w - a) + t * f64::abs(w) + mu * (w - b).abs();
            let g = (0..=80_000)
                .map(|k| -4.0 + k as f64 * 1e-4)
                .min_by(|x, y| f(*x).total_cmp(&f(*y)))
                .unwrap();
            assert!(
                (two_kink_argmin(a, t, mu, b) - g).abs() < 2e-4,
                "{a} {t} {mu} {b}"
            );
        }
    }

    #[test]
    fn shifted_balls_satisfy_prox_optimality() {
        // Compare objective values against many feasible perturbations.
        let sets = [
            FeasibleSet::l2_ball(2, 0.6)
                .unwrap()
                .with_center(&[0.3, -0.2])
                .unwrap(),
            FeasibleSet::l1_ball(2, 0.6)
                .unwrap()
                .with_center(&[0.3, -0.2])
                .unwrap(),
        ];
        let x = [1.5, 0.8];
        let t = 0.25;
        let f = |w: &[f64]| 0.5 * crate::linalg::dist2_sq(w, &x) + t * crate::linalg::norm1(w);
        for set in &sets {
            let w = prox_l1(&x, t, set).unwrap();
            assert!(set.contains(&w, 1e-9));
            let fw = f(&w);
            for i in 0..400 {
                for j in 0..400 {
                    let u = [-0.5 + i as f64 * 0.004, -1.0 + j as f64 * 0.004];
                    if set.contains(&u, 0.0) {
                        assert!(fw <= f(&u) + 1e-9, "{:?} beats {:?}", u, w);
                    }
                }
            }
        }
    }
}
