use rand::RngCore;

use super::{
    require_finite, Atoms, Datum, Ebc, ProblemMeta, QuadraticForm, Regularizer, SharedProblem,
    StochasticProblem, WeightedVector,
};
use crate::error::check_dim;
use crate::geometry::FeasibleSet;
use crate::linalg::{dot, norm1, norm2};
use crate::optim::{sym_eigenvalues, Fista};
use crate::{Error, Result};

#[derive(Clone, Debug)]
enum L1Optimum {
    Point(Vec<f64>),
    /// Per-coordinate optimal intervals of a separable problem over a box.
    Intervals(Vec<(f64, f64)>),
}

/// `E f(w, z) + λ‖w‖₁` over a base whose risk is quadratic or linear.
///
/// Solved exactly when the quadratic part is positive definite (proximal
/// gradient) or identically zero over a box (coordinate-wise).
#[derive(Clone, Debug)]
pub struct L1Regularized {
    name: String,
    base: SharedProblem,
    lambda: f64,
    optimum: L1Optimum,
    meta: ProblemMeta,
}

impl L1Regularized {
    pub fn new(base: SharedProblem, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "λ must be finite and >= 0, got {lambda}"
            )));
        }
        if base.regularizer() != Regularizer::None {
            return Err(Error::InvalidProblem(
                "the base problem is already regularized".into(),
            ));
        }
        let form = base.quadratic_form().ok_or_else(|| {
            Error::Unsupported("the base risk must be quadratic or linear in closed form".into())
        })?;
        let set = base.set().clone();
        let d = set.dim();
        let objective = |w: &[f64]| form.value(w) + lambda * norm1(w);
        let ev = sym_eigenvalues(&form.a);
        let (optimum, pstar, alpha) = if ev[0] > 1e-12 * ev[d - 1].max(1.0) {
            let w = Fista::default().minimize(
                |w, g| form.gradient(w, g),
                2.0 * ev[d - 1],
                lambda,
                &set,
                &set.center(),
            )?;
            let p = objective(&w);
            (L1Optimum::Point(w), p, 1.0 / ev[0])
        } else if form.a.iter().flatten().all(|v| *v == 0.0) {
            let (lo, hi) = set
                .box_bounds()
                .ok_or_else(|| Error::Unsupported("a linear base needs a box constraint".into()))?;
            let mut intervals = Vec::with_capacity(d);
            let (mut gap, mut slope) = (0.0_f64, f64::INFINITY);
            let mut w = vec![0.0; d];
            for j in 0..d {
                let (a, b, s) = linear_l1_interval(form.b[j], lambda, lo[j], hi[j]);
                intervals.push((a, b));
                w[j] = a;
                let g = (a - lo[j]).max(hi[j] - b);
                if g > 0.0 {
                    gap = gap.max(g);
                    slope = slope.min(s);
                }
            }
            let alpha = if gap == 0.0 { 1.0 } else { gap / slope };
            (L1Optimum::Intervals(intervals), objective(&w), alpha)
        } else {
            return Err(Error::Unsupported(
                "singular non-zero quadratic base with an ℓ1 term".into(),
            ));
        };
        let bm = base.meta();
        let meta = ProblemMeta {
            d,
            lipschitz_g: bm.lipschitz_g,
            smoothness_l: bm.smoothness_l,
            diameter_r: bm.diameter_r,
            pstar: Some(pstar),
            ebc: Some(Ebc { theta: 1.0, alpha }),
            composite_lambda: Some(lambda),
        };
        Ok(Self {
            name: format!("{}+l1", base.name()),
            base,
            lambda,
            optimum,
            meta,
        })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Minimisers of `b·w + λ|w|` over `[lo, hi]` as an interval, plus the
/// smallest slope magnitude just outside it.
fn linear_l1_interval(b: f64, lambda: f64, lo: f64, hi: f64) -> (f64, f64, f64) {
    let f = |w: f64| b * w + lambda * w.abs();
    let mut cands = vec![lo, hi];
    if lo < 0.0 && 0.0 < hi {
        cands.push(0.0);
    }
    let best = cands.iter().map(|&w| f(w)).fold(f64::INFINITY, f64::min);
    let tol = 1e-14 * (1.0 + best.abs());
    let opt: Vec<f64> = cands
        .iter()
        .copied()
        .filter(|&w| f(w) <= best + tol)
        .collect();
    let a = opt.iter().copied().fold(f64::INFINITY, f64::min);
    let c = opt.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // Slopes just outside the interval; convexity makes them the smallest.
    let left = if a > 0.0 { b + lambda } else { b - lambda };
    let right = if c < 0.0 { b - lambda } else { b + lambda };
    let mut s = f64::INFINITY;
    if a > lo {
        s = s.min(left.abs());
    }
    if c < hi {
        s = s.min(right.abs());
    }
    (a, c, s)
}

impl StochasticProblem for L1Regularized {
    fn name(&self) -> &str {
        &self.name
    }
    fn meta(&self) -> &ProblemMeta {
        &self.meta
    }
    fn set(&self) -> &FeasibleSet {
        self.base.set()
    }
    fn regularizer(&self) -> Regularizer {
        Regularizer::L1 {
            lambda: self.lambda,
        }
    }
    fn per_sample_convex(&self) -> bool {
        self.base.per_sample_convex()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Datum {
        self.base.sample(rng)
    }
    fn loss(&self, w: &[f64], z: &Datum) -> f64 {
        self.base.loss(w, z)
    }
    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        self.base.subgradient(w, z, out)
    }
    fn risk(&self, w: &[f64]) -> Option<f64> {
        Some(self.base.risk(w)? + self.lambda * norm1(w))
    }
    fn optimal_point(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(match &self.optimum {
            L1Optimum::Point(p) => p.clone(),
            L1Optimum::Intervals(iv) => w
                .iter()
                .zip(iv)
                .map(|(x, (a, b))| x.clamp(*a, *b))
                .collect(),
        })
    }
    fn quadratic_form(&self) -> Option<QuadraticForm> {
        self.base.quadratic_form()
    }
}

/// `f(w, z) = zᵀw` with `E z = 0`: pure noise with zero risk, every point optimal.
#[derive(Clone, Debug)]
pub struct LinearNoise {
    set: FeasibleSet,
    support: Vec<Vec<f64>>,
    atoms: Atoms,
    meta: ProblemMeta,
}

impl LinearNoise {
    pub fn new(support: Vec<WeightedVector>, set: FeasibleSet) -> Result<Self> {
        set.validate()?;
        super::require_bounded(&set)?;
        let d = set.dim();
        if support.is_empty() {
            return Err(Error::InvalidProblem("empty support".into()));
        }
        for z in &support {
            check_dim(d, z.z.len())?;
            require_finite(&z.z, "z")?;
        }
        let atoms = Atoms::new(&support.iter().map(|z| z.weight).collect::<Vec<_>>())?;
        let support: Vec<Vec<f64>> = support.into_iter().map(|z| z.z).collect();
        for j in 0..d {
            let m = atoms.expect(|k| support[k][j]);
            if m.abs() > 1e-12 {
                return Err(Error::InvalidProblem(format!(
                    "noise mean is {m} at coordinate {j}, expected 0"
                )));
            }
        }
        let g = support.iter().map(|z| norm2(z)).fold(0.0, f64::max);
        let meta = ProblemMeta {
            d,
            lipschitz_g: g,
            smoothness_l: Some(0.0),
            diameter_r: set.max_norm(),
            pstar: Some(0.0),
            ebc: Some(Ebc {
                theta: 1.0,
                alpha: 1.0,
            }),
            composite_lambda: None,
        };
        Ok(Self {
            set,
            support,
            atoms,
            meta,
        })
    }

    fn z<'a>(&'a self, z: &'a Datum) -> &'a [f64] {
        match z {
            Datum::Index(k) => &self.support[*k],
            Datum::Labeled { x, .. } => x,
        }
    }
}

impl StochasticProblem for LinearNoise {
    fn name(&self) -> &str {
        "linear_noise"
    }
    fn meta(&self) -> &ProblemMeta {
        &self.meta
    }
    fn set(&self) -> &FeasibleSet {
        &self.set
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Datum {
        Datum::Index(self.atoms.draw(rng))
    }
    fn loss(&self, w: &[f64], z: &Datum) -> f64 {
        dot(self.z(z), w)
    }
    fn subgradient(&self, _w: &[f64], z: &Datum, out: &mut [f64]) {
        out.copy_from_slice(self.z(z));
    }
    fn risk(&self, _w: &[f64]) -> Option<f64> {
        Some(0.0)
    }
    fn optimal_point(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(w.to_vec())
    }
    fn quadratic_form(&self) -> Option<QuadraticForm> {
        let d = self.meta.d;
        Some(QuadraticForm {
            a: vec![vec![0.0; d]; d],
            b: vec![0.0; d],
            c: 0.0,
        })
    }
}

/// `E f(w, z) + λ‖w‖_p^p` for even `p`, over a box containing the origin.
///
/// The base risk must vanish identically, so `W* = {0}` and
/// `‖w‖₂² ≤ d^{1−2/p} λ^{−2/p} (λ‖w‖_p^p)^{2/p}`: the growth exponent is
/// `θ = 2/p`. The smooth `λ‖w‖_p^p` term is folded into each sample's loss.
#[derive(Clone, Debug)]
pub struct PnormComposite {
    name: String,
    base: SharedProblem,
    lambda: f64,
    p: i32,
    meta: ProblemMeta,
}

impl PnormComposite {
    pub fn new(base: SharedProblem, lambda: f64, p: f64) -> Result<Self> {
        if !(p.fract() == 0.0 && (2.0..=64.0).contains(&p) && (p as i32) % 2 == 0) {
            return Err(Error::InvalidProblem(format!(
                "p must be an even integer, got {p}"
            )));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "λ must be positive, got {lambda}"
            )));
        }
        let form = base.quadratic_form();
        if !form.as_ref().is_some_and(QuadraticForm::is_zero)
            || base.regularizer() != Regularizer::None
        {
            return Err(Error::Unsupported(
                "the p-norm composite needs a base with identically zero risk".into(),
            ));
        }
        let set = base.set();
        let (lo, hi) = set.box_bounds().ok_or_else(|| {
            Error::InvalidProblem("the p-norm composite needs a box constraint".into())
        })?;
        if lo.iter().zip(&hi).any(|(l, u)| *l > 0.0 || *u < 0.0) {
            return Err(Error::InvalidProblem(
                "the box must contain the origin".into(),
            ));
        }
        let d = set.dim();
        let pi = p as i32;
        let reach: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, u)| l.abs().max(u.abs()))
            .collect();
        let grad_bound = lambda
            * p
            * reach
                .iter()
                .map(|r| r.powi(2 * (pi - 1)))
                .sum::<f64>()
                .sqrt();
        let curv =
            lambda * p * (p - 1.0) * reach.iter().fold(0.0_f64, |m, r| m.max(r.powi(pi - 2)));
        let bm = base.meta();
        let c0 = form.unwrap().c;
        let meta = ProblemMeta {
            d,
            lipschitz_g: bm.lipschitz_g + grad_bound,
            smoothness_l: bm.smoothness_l.map(|l| l + curv),
            diameter_r: bm.diameter_r,
            pstar: Some(c0),
            ebc: Some(Ebc {
                theta: 2.0 / p,
                alpha: (d as f64).powf(1.0 - 2.0 / p) * lambda.powf(-2.0 / p),
            }),
            composite_lambda: None,
        };
        Ok(Self {
            name: format!("pnorm{pi}_composite"),
            base,
            lambda,
            p: pi,
            meta,
        })
    }

    /// `f(w, z) = zw + w⁴` with `z = ±1`, `W = [−1, 1]`: `θ = ½`, `α = 1`.
    pub fn quartic() -> Self {
        let noise = LinearNoise::new(
            vec![
                WeightedVector::new(vec![1.0]),
                WeightedVector::new(vec![-1.0]),
            ],
            FeasibleSet::linf_ball(1, 1.0).unwrap(),
        )
        .unwrap();
        Self::new(std::sync::Arc::new(noise), 1.0, 4.0)
            .unwrap()
            .named("quartic")
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn exponent(&self) -> i32 {
        self.p
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        self.lambda * w.iter().map(|x| x.powi(self.p)).sum::<f64>()
    }
}

impl StochasticProblem for PnormComposite {
    fn name(&self) -> &str {
        &self.name
    }
    fn meta(&self) -> &ProblemMeta {
        &self.meta
    }
    fn set(&self) -> &FeasibleSet {
        self.base.set()
    }
    fn per_sample_convex(&self) -> bool {
        self.base.per_sample_convex()
    }
    fn sample(&self, rng: &mut dyn RngCore) -> Datum {
        self.base.sample(rng)
    }
    fn loss(&self, w: &[f64], z: &Datum) -> f64 {
        self.base.loss(w, z) + self.penalty(w)
    }
    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        self.base.subgradient(w, z, out);
        let c = self.lambda * self.p as f64;
        for (o, wi) in out.iter_mut().zip(w) {
            *o += c * wi.powi(self.p - 1);
        }
    }
    fn risk(&self, w: &[f64]) -> Option<f64> {
        Some(self.base.risk(w)? + self.penalty(w))
    }
    fn optimal_point(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(vec![0.0; w.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Hinge, LabeledPoint, LeastSquares};
    use std::sync::Arc;

    fn square_base() -> SharedProblem {
        // x ≡ 1, y ≡ 0: base risk w².
        Arc::new(
            LeastSquares::new(
                vec![LabeledPoint::new(vec![1.0], 0.0)],
                FeasibleSet::linf_ball(1, 1.0).unwrap(),
            )
            .unwrap(),
        )
    }

    #[test]
    fn scalar_l1_example() {
        let p = L1Regularized::new(square_base(), 1.0).unwrap();
        for w in [-1.0, -0.25, 0.0, 0.6, 1.0] {
            let direct = w * w + f64::abs(w);
            assert!((p.risk(&[w]).unwrap() - direct).abs() < 1e-15);
            let dist2 = w * w;
            assert!(dist2 <= p.meta().ebc.unwrap().alpha * p.excess_risk(&[w]).unwrap() + 1e-15);
        }
        assert!(p.meta().pstar.unwrap().abs() < 1e-15);
        assert_eq!(p.optimal_point(&[0.4]), Some(vec![0.0]));
    }

    #[test]
    fn zero_lambda_matches_base() {
        let base = square_base();
        let p = L1Regularized::new(base.clone(), 0.0).unwrap();
        for w in [-0.8, 0.1, 0.9] {
            assert_eq!(p.risk(&[w]), base.risk(&[w]));
        }
    }

    #[test]
    fn negative_lambda_is_rejected() {
        assert!(L1Regularized::new(square_base(), -0.1).is_err());
    }

    #[test]
    fn linear_base_intervals() {
        // risk 1 − 0.3w₁ − 0.05w₂ + 0.1‖w‖₁ on [−1,1]²: w₁* = 1; w₂ has slope
        // −0.05 + 0.1 > 0 on the right and −0.15 on the left, so w₂* = 0.
        let h =
            Arc::new(Hinge::new(vec![0.3, 0.05], FeasibleSet::linf_ball(2, 1.0).unwrap()).unwrap());
        let p = L1Regularized::new(h, 0.1).unwrap();
        assert_eq!(p.optimal_point(&[0.0, 0.5]), Some(vec![1.0, 0.0]));
        assert!((p.meta().pstar.unwrap() - (1.0 - 0.3 + 0.1)).abs() < 1e-15);
        // Flat coordinate: slope b ± λ with b = −0.1 = −λ on the right.
        let (a, c, _) = linear_l1_interval(-0.1, 0.1, -1.0, 1.0);
        assert_eq!((a, c), (0.0, 1.0));
    }

    #[test]
    fn quartic_metadata() {
        let q = PnormComposite::quartic();
        assert_eq!(
            q.meta().ebc,
            Some(Ebc {
                theta: 0.5,
                alpha: 1.0
            })
        );
        assert_eq!(q.meta().lipschitz_g, 5.0);
        for w in [-1.0, -0.2, 0.0, 0.5] {
            let e = q.excess_risk(&[w]).unwrap();
            assert!((e - w.powi(4)).abs() < 1e-15);
            assert!((w * w - e.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn odd_or_fractional_p_is_rejected() {
        let noise: SharedProblem = Arc::new(
            LinearNoise::new(
                vec![
                    WeightedVector::new(vec![1.0]),
                    WeightedVector::new(vec![-1.0]),
                ],
                FeasibleSet::linf_ball(1, 1.0).unwrap(),
            )
            .unwrap(),
        );
        assert!(PnormComposite::new(noise.clone(), 1.0, 3.0).is_err());
        assert!(PnormComposite::new(noise.clone(), 1.0, 4.5).is_err());
        let two = PnormComposite::new(noise, 1.0, 2.0).unwrap();
        assert_eq!(two.meta().ebc.unwrap().theta, 1.0);
    }
}
