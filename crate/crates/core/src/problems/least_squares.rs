use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    require_bounded, require_finite, Atoms, Datum, Ebc, ProblemMeta, QuadraticForm,
    StochasticProblem,
};
use crate::error::check_dim;
use crate::geometry::FeasibleSet;
use crate::linalg::{dot, norm2};
use crate::optim::{sym_eigenvalues, Fista};
use crate::{Error, Result};

fn unit_weight() -> f64 {
    1.0
}

/// Atom `(x, y)` of a finite data distribution, with unnormalised weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x: Vec<f64>,
    pub y: f64,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

impl LabeledPoint {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Self { x, y, weight: 1.0 }
    }
}

/// Expected square loss `E[(wᵀx − y)²]` over a finite support.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    name: String,
    set: FeasibleSet,
    points: Vec<LabeledPoint>,
    atoms: Atoms,
    form: QuadraticForm,
    wstar: Vec<f64>,
    meta: ProblemMeta,
}

impl LeastSquares {
    /// Requires `E[xxᵀ] ≻ 0`, so `W*` is a single point and `α = 1/λ_min`.
    pub fn new(points: Vec<LabeledPoint>, set: FeasibleSet) -> Result<Self> {
        Self::build(points, set, false)
    }

    /// Over an ℓ2 ball whose constrained minimum is strictly above the
    /// unconstrained one. The optimum then sits on the sphere and the growth
    /// is sharp even when `E[xxᵀ]` is singular: `α = 2r/‖∇P(w*)‖`.
    pub fn with_exterior_minimizer(points: Vec<LabeledPoint>, set: FeasibleSet) -> Result<Self> {
        Self::build(points, set, true)
    }

    /// `d = 1`, `x ≡ 1`, `y = ±1` equiprobable, `W = [−1, 1]`.
    pub fn two_point() -> Self {
        let pts = vec![
            LabeledPoint::new(vec![1.0], -1.0),
            LabeledPoint::new(vec![1.0], 1.0),
        ];
        Self::new(pts, FeasibleSet::linf_ball(1, 1.0).unwrap())
            .unwrap()
            .named("two_point_ls")
    }

    /// The noiseless counterpart of [`LeastSquares::two_point`]: `y ≡ 0`, so `P* = 0`.
    pub fn two_point_zero_noise() -> Self {
        let pts = vec![LabeledPoint::new(vec![1.0], 0.0)];
        Self::new(pts, FeasibleSet::linf_ball(1, 1.0).unwrap())
            .unwrap()
            .named("two_point_ls_zero_noise")
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn points(&self) -> &[LabeledPoint] {
        &self.points
    }

    pub fn minimizer(&self) -> &[f64] {
        &self.wstar
    }

    fn build(points: Vec<LabeledPoint>, set: FeasibleSet, exterior: bool) -> Result<Self> {
        set.validate()?;
        require_bounded(&set)?;
        let d = set.dim();
        if points.is_empty() {
            return Err(Error::InvalidProblem("empty support".into()));
        }
        for p in &points {
            check_dim(d, p.x.len())?;
            require_finite(&p.x, "features")?;
            require_finite(&[p.y], "labels")?;
        }
        let atoms = Atoms::new(&points.iter().map(|p| p.weight).collect::<Vec<_>>())?;
        let mut a = vec![vec![0.0; d]; d];
        let mut b = vec![0.0; d];
        let mut c = 0.0;
        for (p, pr) in points.iter().zip(&atoms.probs) {
            for i in 0..d {
                for j in 0..d {
                    a[i][j] += pr * p.x[i] * p.x[j];
                }
                b[i] -= 2.0 * pr * p.y * p.x[i];
            }
            c += pr * p.y * p.y;
        }
        let ev = sym_eigenvalues(&a);
        let (ev_min, ev_max) = (ev[0], ev[d - 1]);
        let pd = ev_min > 1e-12 * ev_max.max(1.0);
        if !pd && !exterior {
            return Err(Error::InvalidProblem(
                "E[xxᵀ] must be positive definite".into(),
            ));
        }
        let form = QuadraticForm { a, b, c };
        let fista = Fista {
            max_iter: if pd { 200_000 } else { 2_000_000 },
            ..Fista::default()
        };
        let wstar = fista.minimize(
            |w, g| form.gradient(w, g),
            2.0 * ev_max.max(1e-12),
            0.0,
            &set,
            &set.center(),
        )?;
        let mut alpha = if pd { 1.0 / ev_min } else { f64::INFINITY };
        if exterior {
            let FeasibleSet::L2Ball { radius, .. } = &set else {
                return Err(Error::InvalidProblem(
                    "the exterior-minimizer variant needs an ℓ2 ball".into(),
                ));
            };
            let mut g = vec![0.0; d];
            form.gradient(&wstar, &mut g);
            let gn = norm2(&g);
            if gn <= 1e-9 {
                return Err(Error::InvalidProblem(
                    "the unconstrained minimizer lies inside the ball".into(),
                ));
            }
            alpha = alpha.min(2.0 * radius / gn);
        }
        let g_lip = points
            .iter()
            .map(|p| {
                let neg: Vec<f64> = p.x.iter().map(|v| -v).collect();
                2.0 * (set.support(&p.x) - p.y).max(set.support(&neg) + p.y) * norm2(&p.x)
            })
            .fold(0.0, f64::max);
        let smooth = points
            .iter()
            .map(|p| 2.0 * dot(&p.x, &p.x))
            .fold(0.0, f64::max);
        let meta = ProblemMeta {
            d,
            lipschitz_g: g_lip,
            smoothness_l: Some(smooth),
            diameter_r: set.max_norm(),
            pstar: Some(form.value(&wstar)),
            ebc: Some(Ebc { theta: 1.0, alpha }),
            composite_lambda: None,
        };
        Ok(Self {
            name: "least_squares".into(),
            set,
            points,
            atoms,
            form,
            wstar,
            meta,
        })
    }

    fn atom<'a>(&'a self, z: &'a Datum) -> (&'a [f64], f64) {
        match z {
            Datum::Index(k) => (&self.points[*k].x, self.points[*k].y),
            Datum::Labeled { x, y } => (x, *y),
        }
    }
}

impl StochasticProblem for LeastSquares {
    fn name(&self) -> &str {
        &self.name
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
        let (x, y) = self.atom(z);
        let r = dot(w, x) - y;
        r * r
    }

    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        let (x, y) = self.atom(z);
        let r = 2.0 * (dot(w, x) - y);
        for (o, xi) in out.iter_mut().zip(x) {
            *o = r * xi;
        }
    }

    fn risk(&self, w: &[f64]) -> Option<f64> {
        Some(self.form.value(w))
    }

    fn optimal_point(&self, _w: &[f64]) -> Option<Vec<f64>> {
        Some(self.wstar.clone())
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        Some(self.form.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_risk_by_expansion() {
        // E[(w − y)²] over y = ±1: ½(w+1)² + ½(w−1)² = w² + 1.
        let p = LeastSquares::two_point();
        for w in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            let direct = 0.5 * (w + 1.0_f64).powi(2) + 0.5 * (w - 1.0_f64).powi(2);
            assert!((p.risk(&[w]).unwrap() - direct).abs() < 1e-15);
            assert!((direct - (w * w + 1.0)).abs() < 1e-15);
        }
        assert_eq!(p.meta().pstar, Some(1.0));
        assert_eq!(p.excess_risk(&[0.0]), Some(0.0));
        assert_eq!(p.distance_to_optimal(&[0.0]), Some(0.0));
        assert_eq!(
            p.meta().ebc,
            Some(Ebc {
                theta: 1.0,
                alpha: 1.0
            })
        );
        assert_eq!(p.meta().lipschitz_g, 4.0);
    }

    #[test]
    fn singular_second_moment_is_rejected() {
        let pts = vec![LabeledPoint::new(vec![1.0, 0.0], 1.0)];
        let r = LeastSquares::new(pts, FeasibleSet::linf_ball(2, 1.0).unwrap());
        assert!(matches!(r, Err(Error::InvalidProblem(_))));
    }

    #[test]
    fn non_finite_support_is_rejected() {
        let pts = vec![LabeledPoint::new(vec![f64::INFINITY], 1.0)];
        assert!(LeastSquares::new(pts, FeasibleSet::linf_ball(1, 1.0).unwrap()).is_err());
    }

    #[test]
    fn exterior_minimizer_on_ball() {
        // x ∈ {e1, e2}, y = 2: unconstrained optimum (2, 2) lies outside the unit ball.
        let pts = vec![
            LabeledPoint::new(vec![1.0, 0.0], 2.0),
            LabeledPoint::new(vec![0.0, 1.0], 2.0),
        ];
        let p = LeastSquares::with_exterior_minimizer(
            pts.clone(),
            FeasibleSet::l2_ball(2, 1.0).unwrap(),
        )
        .unwrap();
        let s = 0.5_f64.sqrt();
        assert!((p.minimizer()[0] - s).abs() < 1e-10 && (p.minimizer()[1] - s).abs() < 1e-10);
        let inside =
            LeastSquares::with_exterior_minimizer(pts, FeasibleSet::l2_ball(2, 5.0).unwrap());
        assert!(inside.is_err());
    }
}
