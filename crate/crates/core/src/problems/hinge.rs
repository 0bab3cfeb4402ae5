use rand::{Rng, RngCore};

use super::{
    project_simplex, require_bounded, require_finite, Datum, Ebc, ProblemMeta, QuadraticForm,
    StochasticProblem,
};
use crate::error::check_dim;
use crate::geometry::FeasibleSet;
use crate::linalg::{dot, norm1, norm2};
use crate::{Error, Result};

/// Expected hinge loss `E[(1 − y wᵀx)₊]` with `E[yx] = μ`.
///
/// `y` is a fair sign and `x = y·s·ε` with independent `εⱼ ∈ {±1}`. The scale
/// `s` makes `|wᵀx| ≤ 1` on `W`, so the hinge never clips and the risk is the
/// linear function `1 − wᵀμ`.
#[derive(Clone, Debug)]
pub struct Hinge {
    name: String,
    set: FeasibleSet,
    mu: Vec<f64>,
    scale: f64,
    p_plus: Vec<f64>,
    meta: ProblemMeta,
}

impl Hinge {
    pub fn new(mu: Vec<f64>, set: FeasibleSet) -> Result<Self> {
        set.validate()?;
        require_bounded(&set)?;
        let d = set.dim();
        check_dim(d, mu.len())?;
        require_finite(&mu, "mean vector")?;
        if mu.iter().all(|m| *m == 0.0) {
            return Err(Error::InvalidProblem("E[yx] = 0 is not allowed".into()));
        }
        let reach = match &set {
            FeasibleSet::L2Ball { center, radius } => norm1(center) + radius * (d as f64).sqrt(),
            FeasibleSet::L1Ball { center, radius } => norm1(center) + radius,
            _ => {
                let (l, u) = set.box_bounds().expect("bounded non-ball sets are boxes");
                l.iter().zip(&u).map(|(a, b)| a.abs().max(b.abs())).sum()
            }
        };
        if reach <= 0.0 {
            return Err(Error::InvalidProblem(
                "the feasible set is the origin".into(),
            ));
        }
        let scale = 1.0 / reach;
        if let Some(j) = mu.iter().position(|m| m.abs() > scale * (1.0 + 1e-12)) {
            return Err(Error::InvalidProblem(format!(
                "|μ_{j}| = {} exceeds the attainable mean {scale} for this set",
                mu[j].abs()
            )));
        }
        let p_plus = mu
            .iter()
            .map(|m| (0.5 * (1.0 + m / scale)).clamp(0.0, 1.0))
            .collect();
        let alpha = match &set {
            FeasibleSet::L2Ball { radius, .. } => 2.0 * radius / norm2(&mu),
            FeasibleSet::L1Ball { radius, .. } => {
                let top = mu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let next = mu
                    .iter()
                    .map(|v| v.abs())
                    .filter(|v| *v < top * (1.0 - 1e-12))
                    .fold(0.0_f64, f64::max);
                let gap = if mu.iter().all(|v| v.abs() >= top * (1.0 - 1e-12)) {
                    top
                } else {
                    top - next
                };
                4.0 * radius / gap
            }
            _ => {
                let (l, u) = set.box_bounds().unwrap();
                let (mut width, mut slope) = (0.0_f64, f64::INFINITY);
                for j in 0..d {
                    if mu[j] != 0.0 {
                        width = width.max(u[j] - l[j]);
                        slope = slope.min(mu[j].abs());
                    }
                }
                if width == 0.0 {
                    1.0
                } else {
                    width / slope
                }
            }
        };
        let meta = ProblemMeta {
            d,
            lipschitz_g: scale * (d as f64).sqrt(),
            smoothness_l: None,
            diameter_r: set.max_norm(),
            pstar: Some(1.0 - set.support(&mu)),
            ebc: Some(Ebc { theta: 1.0, alpha }),
            composite_lambda: None,
        };
        Ok(Self {
            name: "hinge".into(),
            set,
            mu,
            scale,
            p_plus,
            meta,
        })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    fn parts(z: &Datum) -> (&[f64], f64) {
        match z {
            Datum::Labeled { x, y } => (x, *y),
            Datum::Index(_) => panic!("hinge data are labeled points"),
        }
    }
}

impl StochasticProblem for Hinge {
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
        let y = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let x = self
            .p_plus
            .iter()
            .map(|p| {
                let e = if rng.gen::<f64>() < *p { 1.0 } else { -1.0 };
                y * self.scale * e
            })
            .collect();
        Datum::Labeled { x, y }
    }

    fn loss(&self, w: &[f64], z: &Datum) -> f64 {
        let (x, y) = Self::parts(z);
        (1.0 - y * dot(w, x)).max(0.0)
    }

    /// At the kink the zero element is returned.
    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        let (x, y) = Self::parts(z);
        if y * dot(w, x) < 1.0 {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = -y * xi;
            }
        } else {
            out.iter_mut().for_each(|o| *o = 0.0);
        }
    }

    fn risk(&self, w: &[f64]) -> Option<f64> {
        Some(1.0 - dot(w, &self.mu))
    }

    /// Nearest point of the face of `W` that maximises `wᵀμ`.
    fn optimal_point(&self, w: &[f64]) -> Option<Vec<f64>> {
        Some(match &self.set {
            FeasibleSet::L2Ball { center, radius } => {
                let n = norm2(&self.mu);
                center
                    .iter()
                    .zip(&self.mu)
                    .map(|(c, m)| c + radius * m / n)
                    .collect()
            }
            FeasibleSet::L1Ball { center, radius } => {
                let top = self.mu.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                let face: Vec<usize> = (0..w.len())
                    .filter(|&j| self.mu[j].abs() >= top * (1.0 - 1e-12))
                    .collect();
                let a: Vec<f64> = face
                    .iter()
                    .map(|&j| self.mu[j].signum() * (w[j] - center[j]))
                    .collect();
                let s = project_simplex(&a, *radius);
                let mut v = center.clone();
                for (k, &j) in face.iter().enumerate() {
                    v[j] += self.mu[j].signum() * s[k];
                }
                v
            }
            _ => {
                let (l, u) = self.set.box_bounds().unwrap();
                (0..w.len())
                    .map(|j| {
                        if self.mu[j] > 0.0 {
                            u[j]
                        } else if self.mu[j] < 0.0 {
                            l[j]
                        } else {
                            w[j].clamp(l[j], u[j])
                        }
                    })
                    .collect()
            }
        })
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        let d = self.mu.len();
        Some(QuadraticForm {
            a: vec![vec![0.0; d]; d],
            b: self.mu.iter().map(|m| -m).collect(),
            c: 1.0,
        })
    }
}
