//! Projection, proximal and mirror-map kernels.
//!
//! All operations are pure functions of their inputs.

mod cap;
mod mirror;
mod prox;

pub use cap::{project_cap, BallCap, CAP_MAX_STEPS, CAP_TOLERANCE};
pub use mirror::{default_p, mirror_step_pnorm, pnorm_link};
pub use prox::prox_l1;

pub(crate) use cap::cap_search;
pub(crate) use prox::{prox_l1_cap_into, prox_l1_into};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::check_dim;
use crate::linalg::{dist2, norm1, norm2};
use crate::{Error, Result};

/// Membership slack used by [`FeasibleSet::contains`] callers across the crate.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// A closed convex constraint region.
///
/// `LinfBall` is not a separate variant: [`FeasibleSet::linf_ball`] builds the
/// equivalent [`FeasibleSet::Box`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeasibleSet {
    L2Ball {
        center: Vec<f64>,
        radius: f64,
    },
    L1Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Box {
        lower: Vec<f64>,
        upper: Vec<f64>,
    },
    /// `{ w : 0 <= w <= upper }`
    NonnegativeBox {
        upper: Vec<f64>,
    },
    /// The whole space; only meaningful for unconstrained baselines.
    Unbounded {
        dim: usize,
    },
}

impl FeasibleSet {
    pub fn l2_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::L2Ball {
            center: vec![0.0; dim],
            radius,
        }
        .validated()
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::L1Ball {
            center: vec![0.0; dim],
            radius,
        }
        .validated()
    }

    pub fn linf_ball(dim: usize, radius: f64) -> Result<Self> {
        Self::Box {
            lower: vec![-radius; dim],
            upper: vec![radius; dim],
        }
        .validated()
    }

    pub fn cube(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        Self::Box { lower, upper }.validated()
    }

    pub fn nonnegative_box(upper: Vec<f64>) -> Result<Self> {
        Self::NonnegativeBox { upper }.validated()
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::Unbounded { dim }
    }

    /// Moves a ball's center. Boxes are translated coordinate-wise.
    pub fn with_center(self, c: &[f64]) -> Result<Self> {
        check_dim(self.dim(), c.len())?;
        match self {
            Self::L2Ball { radius, .. } => Self::L2Ball {
                center: c.to_vec(),
                radius,
            }
            .validated(),
            Self::L1Ball { radius, .. } => Self::L1Ball {
                center: c.to_vec(),
                radius,
            }
            .validated(),
            Self::Box { lower, upper } => {
                let mid: Vec<f64> = lower
                    .iter()
                    .zip(&upper)
                    .map(|(l, u)| 0.5 * (l + u))
                    .collect();
                let shift: Vec<f64> = c.iter().zip(&mid).map(|(a, b)| a - b).collect();
                Self::Box {
                    lower: lower.iter().zip(&shift).map(|(l, s)| l + s).collect(),
                    upper: upper.iter().zip(&shift).map(|(u, s)| u + s).collect(),
                }
                .validated()
            }
            other => Err(Error::InvalidSet(format!(
                "{} has no center",
                other.kind_name()
            ))),
        }
    }

    pub fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Self::L2Ball { center, radius } | Self::L1Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::InvalidSet("dimension must be positive".into()));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(Error::InvalidSet(format!(
                        "radius must be positive, got {radius}"
                    )));
                }
                if !finite(center) {
                    return Err(Error::InvalidSet("center must be finite".into()));
                }
            }
            Self::Box { lower, upper } => {
                check_dim(lower.len(), upper.len())?;
                if lower.is_empty() {
                    return Err(Error::InvalidSet("dimension must be positive".into()));
                }
                if !finite(lower) || !finite(upper) {
                    return Err(Error::InvalidSet("box bounds must be finite".into()));
                }
                if let Some(i) = lower.iter().zip(upper).position(|(l, u)| l > u) {
                    return Err(Error::InvalidSet(format!(
                        "lower > upper at coordinate {i}"
                    )));
                }
            }
            Self::NonnegativeBox { upper } => {
                if upper.is_empty() {
                    return Err(Error::InvalidSet("dimension must be positive".into()));
                }
                if upper.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
                    return Err(Error::InvalidSet(
                        "nonnegative box needs finite upper >= 0".into(),
                    ));
                }
            }
            Self::Unbounded { dim } => {
                if *dim == 0 {
                    return Err(Error::InvalidSet("dimension must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::L2Ball { .. } => "l2_ball",
            Self::L1Ball { .. } => "l1_ball",
            Self::Box { .. } => "box",
            Self::NonnegativeBox { .. } => "nonnegative_box",
            Self::Unbounded { .. } => "unbounded",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::L2Ball { center, .. } | Self::L1Ball { center, .. } => center.len(),
            Self::Box { lower, .. } => lower.len(),
            Self::NonnegativeBox { upper } => upper.len(),
            Self::Unbounded { dim } => *dim,
        }
    }

    pub fn is_bounded(&self) -> bool {
        !matches!(self, Self::Unbounded { .. })
    }

    /// Coordinate bounds of a box-shaped set.
    pub fn box_bounds(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match self {
            Self::Box { lower, upper } => Some((lower.clone(), upper.clone())),
            Self::NonnegativeBox { upper } => Some((vec![0.0; upper.len()], upper.clone())),
            _ => None,
        }
    }

    #[inline]
    fn lower_at(&self, i: usize) -> f64 {
        match self {
            Self::Box { lower, .. } => lower[i],
            _ => 0.0,
        }
    }

    /// Amount by which `x` violates the constraint (0 inside).
    pub fn violation(&self, x: &[f64]) -> f64 {
        match self {
            Self::L2Ball { center, radius } => (dist2(x, center) - radius).max(0.0),
            Self::L1Ball { center, radius } => {
                let d: f64 = x.iter().zip(center).map(|(a, c)| (a - c).abs()).sum();
                (d - radius).max(0.0)
            }
            Self::Box { .. } | Self::NonnegativeBox { .. } => {
                let upper = match self {
                    Self::Box { upper, .. } | Self::NonnegativeBox { upper } => upper,
                    _ => unreachable!(),
                };
                x.iter().enumerate().fold(0.0, |m, (i, &v)| {
                    m.max(self.lower_at(i) - v).max(v - upper[i])
                })
            }
            Self::Unbounded { .. } => 0.0,
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim() && self.violation(x) <= tol
    }

    /// Euclidean projection `argmin_{y ∈ W} ‖y − x‖₂`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; x.len()];
        self.project_into(x, &mut out);
        Ok(out)
    }

    /// Allocation-free projection; `x` and `out` must have the set's dimension.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim());
        match self {
            Self::L2Ball { center, radius } => {
                let d = dist2(x, center);
                if d <= *radius {
                    out.copy_from_slice(x);
                } else {
                    let s = radius / d;
                    for ((o, xi), ci) in out.iter_mut().zip(x).zip(center) {
                        *o = ci + s * (xi - ci);
                    }
                }
            }
            Self::L1Ball { center, radius } => {
                for ((o, xi), ci) in out.iter_mut().zip(x).zip(center) {
                    *o = xi - ci;
                }
                project_l1_centered_in_place(out, *radius);
                for (o, ci) in out.iter_mut().zip(center) {
                    *o += ci;
                }
            }
            Self::Box { lower, upper } => {
                for (((o, xi), l), u) in out.iter_mut().zip(x).zip(lower).zip(upper) {
                    *o = xi.clamp(*l, *u);
                }
            }
            Self::NonnegativeBox { upper } => {
                for ((o, xi), u) in out.iter_mut().zip(x).zip(upper) {
                    *o = xi.clamp(0.0, *u);
                }
            }
            Self::Unbounded { .. } => out.copy_from_slice(x),
        }
    }

    /// Support function `σ_W(d) = max_{w ∈ W} wᵀd`.
    pub fn support(&self, d: &[f64]) -> f64 {
        match self {
            Self::L2Ball { center, radius } => crate::linalg::dot(center, d) + radius * norm2(d),
            Self::L1Ball { center, radius } => {
                crate::linalg::dot(center, d) + radius * crate::linalg::norm_inf(d)
            }
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .zip(d)
                .map(|((l, u), di)| (l * di).max(u * di))
                .sum(),
            Self::NonnegativeBox { upper } => {
                upper.iter().zip(d).map(|(u, di)| (u * di).max(0.0)).sum()
            }
            Self::Unbounded { .. } => {
                if d.iter().all(|x| *x == 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// A maximiser of `wᵀd` over the set (a vertex for polyhedra).
    pub fn support_point(&self, d: &[f64]) -> Vec<f64> {
        match self {
            Self::L2Ball { center, radius } => {
                let n = norm2(d);
                if n == 0.0 {
                    center.clone()
                } else {
                    center
                        .iter()
                        .zip(d)
                        .map(|(c, di)| c + radius * di / n)
                        .collect()
                }
            }
            Self::L1Ball { center, radius } => {
                let mut w = center.clone();
                let (mut best, mut arg) = (0.0, None);
                for (i, di) in d.iter().enumerate() {
                    if di.abs() > best {
                        best = di.abs();
                        arg = Some(i);
                    }
                }
                if let Some(i) = arg {
                    w[i] += radius * d[i].signum();
                }
                w
            }
            Self::Box { .. } | Self::NonnegativeBox { .. } => {
                let (lower, upper) = self.box_bounds().unwrap();
                d.iter()
                    .enumerate()
                    .map(|(i, di)| {
                        if *di > 0.0 {
                            upper[i]
                        } else if *di < 0.0 {
                            lower[i]
                        } else {
                            0.5 * (lower[i] + upper[i])
                        }
                    })
                    .collect()
            }
            Self::Unbounded { dim } => vec![0.0; *dim],
        }
    }

    /// `R` with `‖w‖₂ ≤ R` for every `w ∈ W`.
    pub fn max_norm(&self) -> f64 {
        match self {
            Self::L2Ball { center, radius } | Self::L1Ball { center, radius } => {
                norm2(center) + radius
            }
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l.abs().max(u.abs()).powi(2))
                .sum::<f64>()
                .sqrt(),
            Self::NonnegativeBox { upper } => norm2(upper),
            Self::Unbounded { .. } => f64::INFINITY,
        }
    }

    /// Euclidean diameter.
    pub fn diameter(&self) -> f64 {
        match self {
            Self::L2Ball { radius, .. } | Self::L1Ball { radius, .. } => 2.0 * radius,
            Self::Box { lower, upper } => dist2(lower, upper),
            Self::NonnegativeBox { upper } => norm2(upper),
            Self::Unbounded { .. } => f64::INFINITY,
        }
    }

    /// The center of a ball, the midpoint of a box.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Self::L2Ball { center, .. } | Self::L1Ball { center, .. } => center.clone(),
            Self::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| 0.5 * (l + u))
                .collect(),
            Self::NonnegativeBox { upper } => upper.iter().map(|u| 0.5 * u).collect(),
            Self::Unbounded { dim } => vec![0.0; *dim],
        }
    }

    /// A deterministic extreme point used as the default starting iterate:
    /// the upper corner of a box, `center + r·e₁` for balls.
    pub fn corner(&self) -> Vec<f64> {
        match self {
            Self::L2Ball { center, radius } | Self::L1Ball { center, radius } => {
                let mut w = center.clone();
                w[0] += radius;
                w
            }
            Self::Box { upper, .. } | Self::NonnegativeBox { upper } => upper.clone(),
            Self::Unbounded { dim } => vec![0.0; *dim],
        }
    }

    /// A point drawn uniformly from the set.
    pub fn sample_uniform(&self, rng: &mut dyn RngCore) -> Result<Vec<f64>> {
        let d = self.dim();
        Ok(match self {
            Self::L2Ball { center, radius } => {
                let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
                let n = norm2(&g).max(f64::MIN_POSITIVE);
                let r = radius * rng.gen::<f64>().powf(1.0 / d as f64);
                center
                    .iter()
                    .zip(&g)
                    .map(|(c, gi)| c + r * gi / n)
                    .collect()
            }
            Self::L1Ball { center, radius } => {
                // d + 1 exponential spacings: the first d, normalised, are
                // uniform on the ℓ1 ball's positive orthant piece.
                let e: Vec<f64> = (0..=d).map(|_| Exp1.sample(rng)).collect();
                let total: f64 = e.iter().sum();
                center
                    .iter()
                    .zip(&e)
                    .map(|(c, ei)| {
                        let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                        c + s * radius * ei / total
                    })
                    .collect()
            }
            Self::Box { .. } | Self::NonnegativeBox { .. } => {
                let (lower, upper) = self.box_bounds().unwrap();
                lower
                    .iter()
                    .zip(&upper)
                    .map(|(l, u)| l + (u - l) * rng.gen::<f64>())
                    .collect()
            }
            Self::Unbounded { .. } => {
                return Err(Error::Unsupported(
                    "uniform sampling from an unbounded set".into(),
                ))
            }
        })
    }

    pub fn l1_norm_of(&self, x: &[f64]) -> f64 {
        norm1(x)
    }
}

/// Sort-based projection of `v` onto `{ u : ‖u‖₁ ≤ r }`, in place.
///
/// Magnitudes are sorted in decreasing order with ties broken by index; the
/// threshold is the largest `θ` for which the soft-thresholded vector still
/// has ℓ1 norm `r`.
pub(crate) fn project_l1_centered_in_place(v: &mut [f64], r: f64) {
    if norm1(v) <= r {
        return;
    }
    let theta = l1_threshold(v, r);
    for x in v.iter_mut() {
        *x = crate::linalg::soft_threshold(*x, theta);
    }
}

fn l1_threshold(v: &[f64], r: f64) -> f64 {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[b].abs().total_cmp(&v[a].abs()).then(a.cmp(&b)));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &i) in order.iter().enumerate() {
        let u = v[i].abs();
        cumsum += u;
        let t = (cumsum - r) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn l2_interior_point_is_fixed() {
        let s = FeasibleSet::l2_ball(2, 1.0).unwrap();
        assert_eq!(s.project(&[0.3, 0.4]).unwrap(), vec![0.3, 0.4]);
    }

    #[test]
    fn l2_exterior_point_scales_radially() {
        let s = FeasibleSet::l2_ball(2, 1.0).unwrap();
        let p = s.project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn l1_projection_matches_worked_example() {
        // Oracle: minimise (y1-3)² + (y2-1)² over |y1| + |y2| <= 1 on a
        // 1e-4 grid of the boundary segment y1 + y2 = 1, y1 ∈ [0, 1].
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=10_000 {
            let y1 = k as f64 * 1e-4;
            let v = (y1 - 3.0).powi(2) + (1.0 - y1 - 1.0).powi(2);
            if v < best.0 {
                best = (v, y1);
            }
        }
        assert!((best.1 - 1.0).abs() < 1e-12);
        let s = FeasibleSet::l1_ball(2, 1.0).unwrap();
        let p = s.project(&[3.0, 1.0]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let s = FeasibleSet::linf_ball(3, 1.0).unwrap();
        assert_eq!(
            s.project(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                got: 1
            })
        );
    }

    #[test]
    fn invalid_sets_are_rejected() {
        assert!(FeasibleSet::l2_ball(2, 0.0).is_err());
        assert!(FeasibleSet::l1_ball(0, 1.0).is_err());
        assert!(FeasibleSet::cube(vec![1.0], vec![0.0]).is_err());
        assert!(FeasibleSet::nonnegative_box(vec![-1.0]).is_err());
    }

    #[test]
    fn support_function_matches_support_point() {
        let mut rng = stream(1, 0);
        let sets = [
            FeasibleSet::l2_ball(3, 1.5).unwrap(),
            FeasibleSet::l1_ball(3, 2.0)
                .unwrap()
                .with_center(&[0.1, -0.2, 0.3])
                .unwrap(),
            FeasibleSet::cube(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]).unwrap(),
            FeasibleSet::nonnegative_box(vec![1.0, 2.0, 0.5]).unwrap(),
        ];
        for s in &sets {
            for _ in 0..50 {
                let d: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let p = s.support_point(&d);
                assert!(s.contains(&p, 1e-12));
                assert!((crate::linalg::dot(&p, &d) - s.support(&d)).abs() < 1e-12);
                let u = s.sample_uniform(&mut rng).unwrap();
                assert!(crate::linalg::dot(&u, &d) <= s.support(&d) + 1e-12);
            }
        }
    }

    #[test]
    fn uniform_samples_are_feasible() {
        let mut rng = stream(2, 0);
        for s in [
            FeasibleSet::l2_ball(4, 1.0).unwrap(),
            FeasibleSet::l1_ball(4, 1.0).unwrap(),
            FeasibleSet::linf_ball(4, 0.5).unwrap(),
        ] {
            for _ in 0..200 {
                let u = s.sample_uniform(&mut rng).unwrap();
                assert!(s.contains(&u, 1e-12));
            }
        }
    }
}
