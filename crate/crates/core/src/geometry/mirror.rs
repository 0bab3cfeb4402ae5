use super::FeasibleSet;
use crate::error::check_dim;
use crate::{Error, Result};

/// `‖θ‖_p`, scaled by the largest magnitude so large `p` does not overflow.
fn pnorm(theta: &[f64], p: f64) -> f64 {
    let m = theta.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * theta
        .iter()
        .map(|x| (x.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Gradient of `½‖θ‖_p²`: `sign(θᵢ)|θᵢ|^{p−1} / ‖θ‖_p^{p−2}`.
///
/// Written as `‖θ‖_p · sign(θᵢ) · (|θᵢ|/‖θ‖_p)^{p−1}` to stay finite.
pub fn pnorm_link(theta: &[f64], p: f64) -> Vec<f64> {
    let n = pnorm(theta, p);
    if n == 0.0 {
        return vec![0.0; theta.len()];
    }
    theta
        .iter()
        .map(|x| n * x.signum() * (x.abs() / n).powf(p - 1.0) * if *x == 0.0 { 0.0 } else { 1.0 })
        .collect()
}

/// One mirror-descent step with mirror map `½‖·‖_q²`, `q = p/(p − 1)`.
///
/// The primal point goes to the dual through the q-norm link, takes the
/// gradient step there, and comes back through the p-norm link (the two are
/// inverse to each other). For constrained sets the result is then projected
/// in the Euclidean sense, an approximation of the Bregman projection.
pub fn mirror_step_pnorm(
    w: &[f64],
    g: &[f64],
    step: f64,
    p: f64,
    set: &FeasibleSet,
) -> Result<Vec<f64>> {
    check_dim(set.dim(), w.len())?;
    check_dim(set.dim(), g.len())?;
    if !(p >= 2.0) || !p.is_finite() {
        return Err(Error::InvalidNormExponent(p));
    }
    if p == 2.0 {
        let x: Vec<f64> = w.iter().zip(g).map(|(wi, gi)| wi - step * gi).collect();
        return set.project(&x);
    }
    let q = p / (p - 1.0);
    let mut dual = pnorm_link(w, q);
    for (d, gi) in dual.iter_mut().zip(g) {
        *d -= step * gi;
    }
    let primal = pnorm_link(&dual, p);
    set.project(&primal)
}

/// Default exponent `max(2, 2 ln d)`.
pub fn default_p(d: usize) -> f64 {
    (2.0 * (d as f64).ln()).max(2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Straight-line scalar versions of the two link functions.
    fn link_oracle(theta: &[f64], p: f64) -> Vec<f64> {
        let norm: f64 = theta
            .iter()
            .map(|x| x.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        if norm == 0.0 {
            return vec![0.0; theta.len()];
        }
        theta
            .iter()
            .map(|x| {
                x.signum() * x.abs().powf(p - 1.0) / norm.powf(p - 2.0) * (*x != 0.0) as u8 as f64
            })
            .collect()
    }

    #[test]
    fn worked_step_at_origin() {
        let set = FeasibleSet::unbounded(2);
        let w = mirror_step_pnorm(&[0.0, 0.0], &[1.0, 0.0], 1.0, 4.0, &set).unwrap();
        let dual: Vec<f64> = link_oracle(&[0.0, 0.0], 4.0 / 3.0)
            .iter()
            .zip([1.0, 0.0])
            .map(|(d, g)| d - g)
            .collect();
        let expect = link_oracle(&dual, 4.0);
        assert_eq!(expect, vec![-1.0, 0.0]);
        assert!((w[0] + 1.0).abs() < 1e-12 && w[1].abs() < 1e-12);
    }

    #[test]
    fn links_agree_with_oracle_and_invert() {
        let theta = [0.3, -1.2, 0.0, 2.5];
        for p in [2.5, 4.0, 13.8] {
            let q = p / (p - 1.0);
            let a = pnorm_link(&theta, p);
            let b = link_oracle(&theta, p);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-12 * (1.0 + y.abs()));
            }
            let back = pnorm_link(&pnorm_link(&theta, q), p);
            for (x, y) in back.iter().zip(&theta) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let set = FeasibleSet::linf_ball(3, 1.0).unwrap();
        let w = [0.2, -0.7, 0.5];
        let out = mirror_step_pnorm(&w, &[0.0; 3], 0.5, 6.0, &set).unwrap();
        for (a, b) in out.iter().zip(&w) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn exponent_below_two_is_rejected() {
        let set = FeasibleSet::unbounded(1);
        assert_eq!(
            mirror_step_pnorm(&[0.0], &[1.0], 1.0, 1.5, &set),
            Err(Error::InvalidNormExponent(1.5))
        );
    }

    #[test]
    fn default_exponent() {
        assert_eq!(default_p(1), 2.0);
        assert!((default_p(1000) - 2.0 * 1000f64.ln()).abs() < 1e-15);
    }
}
