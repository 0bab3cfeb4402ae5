use rand::RngCore;
use serde::{Deserialize, Serialize};

use super::{
    require_bounded, require_finite, Atoms, Datum, Ebc, ProblemMeta, QuadraticForm,
    StochasticProblem,
};
use crate::error::check_dim;
use crate::geometry::FeasibleSet;
use crate::linalg::{dot, norm2};
use crate::optim::{mat_vec, sym_eigenvalues, Fista};
use crate::{Error, Result};

fn unit_weight() -> f64 {
    1.0
}

/// Atom of a finite vector-valued distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedVector {
    pub z: Vec<f64>,
    #[serde(default = "unit_weight")]
    pub weight: f64,
}

impl WeightedVector {
    pub fn new(z: Vec<f64>) -> Self {
        Self { z, weight: 1.0 }
    }
}

/// `f(w, z) = wᵀ(S − zzᵀ)w − bᵀw`, a random quadratic that may be non-convex
/// per sample while `Q = S − E[zzᵀ] ⪰ 0`.
#[derive(Clone, Debug)]
pub struct ShiftedQuadratic {
    name: String,
    set: FeasibleSet,
    s: Vec<Vec<f64>>,
    support: Vec<Vec<f64>>,
    atoms: Atoms,
    b: Vec<f64>,
    q: Vec<Vec<f64>>,
    wstar: Vec<f64>,
    /// Coordinates spanning the null space of `Q`; free on `W*`.
    free: Vec<bool>,
    convex: bool,
    meta: ProblemMeta,
}

impl ShiftedQuadratic {
    /// A singular `Q` is accepted only when its null space is spanned by
    /// coordinate axes, `b` vanishes there, and `W` is a box. Then
    /// `W* = { w ∈ W : w_R = w*_R }` on the range coordinates `R`.
    pub fn new(
        s: Vec<Vec<f64>>,
        support: Vec<WeightedVector>,
        b: Vec<f64>,
        set: FeasibleSet,
    ) -> Result<Self> {
        set.validate()?;
        require_bounded(&set)?;
        let d = set.dim();
        check_dim(d, s.len())?;
        for row in &s {
            check_dim(d, row.len())?;
            require_finite(row, "S")?;
        }
        for i in 0..d {
            for j in 0..i {
                if (s[i][j] - s[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidProblem("S must be symmetric".into()));
                }
            }
        }
        check_dim(d, b.len())?;
        require_finite(&b, "b")?;
        if support.is_empty() {
            return Err(Error::InvalidProblem("empty support".into()));
        }
        for z in &support {
            check_dim(d, z.z.len())?;
            require_finite(&z.z, "z")?;
        }
        let atoms = Atoms::new(&support.iter().map(|z| z.weight).collect::<Vec<_>>())?;
        let support: Vec<Vec<f64>> = support.into_iter().map(|z| z.z).collect();

        let mut q = s.clone();
        for (z, p) in support.iter().zip(&atoms.probs) {
            for i in 0..d {
                for j in 0..d {
                    q[i][j] -= p * z[i] * z[j];
                }
            }
        }
        let ev = sym_eigenvalues(&q);
        if ev[0] < -1e-9 {
            return Err(Error::InvalidProblem(format!(
                "S − E[zzᵀ] has eigenvalue {:e} < 0",
                ev[0]
            )));
        }
        let ev_max = ev[d - 1].max(1e-12);
        let tol = 1e-9 * ev_max.max(1.0);
        let mut free = vec![false; d];
        let lambda_min;
        if ev[0] > tol {
            lambda_min = ev[0];
        } else {
            if set.box_bounds().is_none() {
                return Err(Error::InvalidProblem(
                    "a singular S − E[zzᵀ] needs a box constraint".into(),
                ));
            }
            for j in 0..d {
                free[j] = q[j].iter().all(|v| v.abs() <= 1e-12);
            }
            let range: Vec<usize> = (0..d).filter(|&j| !free[j]).collect();
            if free.iter().zip(&b).any(|(f, bj)| *f && *bj != 0.0) {
                return Err(Error::InvalidProblem(
                    "b must vanish on the null space of S − E[zzᵀ]".into(),
                ));
            }
            let sub: Vec<Vec<f64>> = range
                .iter()
                .map(|&i| range.iter().map(|&j| q[i][j]).collect())
                .collect();
            let m = if sub.is_empty() {
                f64::INFINITY
            } else {
                sym_eigenvalues(&sub)[0]
            };
            if m <= tol {
                return Err(Error::InvalidProblem(
                    "the null space of S − E[zzᵀ] is not coordinate-aligned".into(),
                ));
            }
            lambda_min = m;
        }
        let grad = |w: &[f64], g: &mut [f64]| {
            mat_vec(&q, w, g);
            for (gi, bi) in g.iter_mut().zip(&b) {
                *gi = 2.0 * *gi - bi;
            }
        };
        let wstar = Fista::default().minimize(grad, 2.0 * ev_max, 0.0, &set, &set.center())?;

        let mut convex = true;
        let mut op = 0.0_f64;
        for z in &support {
            let mut m = s.clone();
            for i in 0..d {
                for j in 0..d {
                    m[i][j] -= z[i] * z[j];
                }
            }
            let e = sym_eigenvalues(&m);
            convex &= e[0] >= -1e-12;
            op = op.max(e[0].abs()).max(e[d - 1].abs());
        }
        let r = set.max_norm();
        let pstar = crate::optim::quad_form(&q, &wstar) - dot(&b, &wstar);
        let meta = ProblemMeta {
            d,
            lipschitz_g: 2.0 * op * r + norm2(&b),
            smoothness_l: Some(2.0 * op),
            diameter_r: r,
            pstar: Some(pstar),
            ebc: Some(Ebc {
                theta: 1.0,
                alpha: 1.0 / lambda_min,
            }),
            composite_lambda: None,
        };
        Ok(Self {
            name: "shifted_quadratic".into(),
            set,
            s,
            support,
            atoms,
            b,
            q,
            wstar,
            free,
            convex,
            meta,
        })
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = name.to_string();
        self
    }

    fn z<'a>(&'a self, z: &'a Datum) -> &'a [f64] {
        match z {
            Datum::Index(k) => &self.support[*k],
            Datum::Labeled { x, .. } => x,
        }
    }
}

impl StochasticProblem for ShiftedQuadratic {
    fn name(&self) -> &str {
        &self.name
    }
    fn meta(&self) -> &ProblemMeta {
        &self.meta
    }
    fn set(&self) -> &FeasibleSet {
        &self.set
    }
    fn per_sample_convex(&self) -> bool {
        self.convex
    }

    fn sample(&self, rng: &mut dyn RngCore) -> Datum {
        Datum::Index(self.atoms.draw(rng))
    }

    fn loss(&self, w: &[f64], z: &Datum) -> f64 {
        let z = self.z(z);
        let zw = dot(z, w);
        crate::optim::quad_form(&self.s, w) - zw * zw - dot(&self.b, w)
    }

    fn subgradient(&self, w: &[f64], z: &Datum, out: &mut [f64]) {
        let z = self.z(z);
        let zw = dot(z, w);
        mat_vec(&self.s, w, out);
        for ((o, zi), bi) in out.iter_mut().zip(z).zip(&self.b) {
            *o = 2.0 * (*o - zi * zw) - bi;
        }
    }

    fn risk(&self, w: &[f64]) -> Option<f64> {
        Some(crate::optim::quad_form(&self.q, w) - dot(&self.b, w))
    }

    fn optimal_point(&self, w: &[f64]) -> Option<Vec<f64>> {
        let bounds = self.set.box_bounds();
        Some(
            (0..w.len())
                .map(|j| match (&bounds, self.free[j]) {
                    (Some((l, u)), true) => w[j].clamp(l[j], u[j]),
                    _ => self.wstar[j],
                })
                .collect(),
        )
    }

    fn quadratic_form(&self) -> Option<QuadraticForm> {
        Some(QuadraticForm {
            a: self.q.clone(),
            b: self.b.iter().map(|v| -v).collect(),
            c: 0.0,
        })
    }
}
