use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{
    check_meta, Hinge, L1Regularized, LabeledPoint, LeastSquares, LinearNoise, MetaCheck,
    Newsvendor, PnormComposite, Scenario, SharedProblem, ShiftedQuadratic, WeightedVector,
};
use crate::geometry::FeasibleSet;
use crate::{Error, Result};

/// The benchmark instances, in registry order. Ground-truth θ: 1, 1, 1, 1, 1, ½.
const IDS: [&str; 6] = [
    "two_point_ls",
    "hinge_box5",
    "shifted_quadratic",
    "l1_least_squares",
    "newsvendor",
    "quartic",
];

pub fn registry_ids() -> &'static [&'static str] {
    &IDS
}

/// Builds every registry instance, each admitted only after its metadata
/// passes [`check_meta`].
pub fn registry() -> Result<Vec<SharedProblem>> {
    IDS.iter().map(|id| build_registered(id)).collect()
}

fn build_registered(id: &str) -> Result<SharedProblem> {
    let p: SharedProblem = match id {
        "two_point_ls" => Arc::new(LeastSquares::two_point()),
        "two_point_ls_zero_noise" => Arc::new(LeastSquares::two_point_zero_noise()),
        "hinge_box5" => Arc::new(
            Hinge::new(
                vec![0.1, -0.06, 0.15, 0.03, -0.12],
                FeasibleSet::linf_ball(5, 1.0)?,
            )?
            .named("hinge_box5"),
        ),
        "shifted_quadratic" => Arc::new(
            ShiftedQuadratic::new(
                vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                vec![
                    WeightedVector::new(vec![2f64.sqrt(), 0.0]),
                    WeightedVector::new(vec![0.0, 0.0]),
                ],
                vec![0.0, 0.5],
                FeasibleSet::linf_ball(2, 1.0)?,
            )?
            .named("shifted_quadratic"),
        ),
        "l1_least_squares" => {
            let w0 = [0.6, -0.05];
            let mut pts = Vec::new();
            for x in [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, -1.0]] {
                let clean = x[0] * w0[0] + x[1] * w0[1];
                for noise in [-0.5, 0.5] {
                    pts.push(LabeledPoint::new(x.to_vec(), clean + noise));
                }
            }
            let base = Arc::new(LeastSquares::new(pts, FeasibleSet::linf_ball(2, 1.0)?)?);
            Arc::new(L1Regularized::new(base, 0.1)?.named("l1_least_squares"))
        }
        "newsvendor" => Arc::new(Newsvendor::single_resource_example().named("newsvendor")),
        "quartic" => Arc::new(PnormComposite::quartic()),
        other => {
            return Err(Error::InvalidProblem(format!(
                "unknown registry id '{other}'"
            )))
        }
    };
    check_meta(
        p.as_ref(),
        &MetaCheck::default(),
        &mut crate::rng::stream(0x5eed, 0),
    )?;
    Ok(p)
}

/// Serializable problem description, as found in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemSpec {
    Registry {
        id: String,
    },
    LeastSquares {
        points: Vec<LabeledPoint>,
        set: FeasibleSet,
        #[serde(default)]
        exterior_minimizer: bool,
    },
    Hinge {
        mu: Vec<f64>,
        set: FeasibleSet,
    },
    ShiftedQuadratic {
        s: Vec<Vec<f64>>,
        support: Vec<WeightedVector>,
        b: Vec<f64>,
        set: FeasibleSet,
    },
    L1Regularized {
        base: Box<ProblemSpec>,
        lambda: f64,
    },
    PnormComposite {
        noise: Vec<WeightedVector>,
        set: FeasibleSet,
        lambda: f64,
        p: f64,
    },
    Newsvendor {
        costs: Vec<f64>,
        capacity: Vec<f64>,
        scenarios: Vec<Scenario>,
    },
}

impl ProblemSpec {
    pub fn registry(id: &str) -> Self {
        Self::Registry { id: id.to_string() }
    }

    pub fn build(&self) -> Result<SharedProblem> {
        Ok(match self {
            Self::Registry { id } => build_registered(id)?,
            Self::LeastSquares {
                points,
                set,
                exterior_minimizer,
            } => {
                if *exterior_minimizer {
                    Arc::new(LeastSquares::with_exterior_minimizer(
                        points.clone(),
                        set.clone(),
                    )?)
                } else {
                    Arc::new(LeastSquares::new(points.clone(), set.clone())?)
                }
            }
            Self::Hinge { mu, set } => Arc::new(Hinge::new(mu.clone(), set.clone())?),
            Self::ShiftedQuadratic { s, support, b, set } => Arc::new(ShiftedQuadratic::new(
                s.clone(),
                support.clone(),
                b.clone(),
                set.clone(),
            )?),
            Self::L1Regularized { base, lambda } => {
                Arc::new(L1Regularized::new(base.build()?, *lambda)?)
            }
            Self::PnormComposite {
                noise,
                set,
                lambda,
                p,
            } => {
                let base = Arc::new(LinearNoise::new(noise.clone(), set.clone())?);
                Arc::new(PnormComposite::new(base, *lambda, *p)?)
            }
            Self::Newsvendor {
                costs,
                capacity,
                scenarios,
            } => Arc::new(Newsvendor::new(
                costs.clone(),
                capacity.clone(),
                scenarios.clone(),
            )?),
        })
    }

    /// Short label used in file names and summaries.
    pub fn label(&self) -> String {
        match self {
            Self::Registry { id } => id.clone(),
            Self::LeastSquares { .. } => "least_squares".into(),
            Self::Hinge { .. } => "hinge".into(),
            Self::ShiftedQuadratic { .. } => "shifted_quadratic".into(),
            Self::L1Regularized { base, .. } => format!("{}_l1", base.label()),
            Self::PnormComposite { p, .. } => format!("pnorm{p}_composite"),
            Self::Newsvendor { .. } => "newsvendor".into(),
        }
    }
}
