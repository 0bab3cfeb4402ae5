//! Experiment configuration, stored as TOML.
//!
//! ```toml
//! title = "ASA vs SSG on the two-point instance"
//! seed = 7
//! replicates = 20
//! n_grid = [1000, 10000, 100000]
//!
//! [problem]
//! kind = "registry"
//! id = "two_point_ls"
//!
//! [[algorithms]]
//! id = "asa"
//!
//! [[algorithms]]
//! id = "ssg"
//! ```
//!
//! A `[dataset]` table replaces `[problem]` for finite training sets; the
//! summary then reports test error instead of excess risk.

use std::path::{Path, PathBuf};

use adasa_core::data::{Loss, SyntheticSparse};
use adasa_core::geometry::FeasibleSet;
use adasa_core::problems::{registry_ids, ProblemSpec};

use serde::{Deserialize, Serialize};

use crate::BenchError;

fn default_delta() -> f64 {
    0.1
}

fn default_replicates() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub seed: u64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub n_grid: Vec<u64>,
    /// Confidence level for bound checks.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    /// Record wall-clock time per cell. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub problem: Option<ProblemSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<DatasetSpec>,
    pub algorithms: Vec<AlgorithmSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    Libsvm { path: PathBuf },
    Synthetic(SyntheticSparse),
}

fn default_ratios() -> [f64; 3] {
    [4.0, 1.0, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub data: DataSource,
    pub loss: Loss,
    pub set: SetShape,
    /// Feature dimension; defaults to the largest index in the data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default)]
    pub lambda: f64,
    /// Train, validation, test.
    #[serde(default = "default_ratios")]
    pub ratios: [f64; 3],
    /// Divide every feature by its largest absolute value before splitting.
    #[serde(default)]
    pub max_abs_scale: bool,
}

/// A feasible set centred at the origin whose dimension comes from the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SetShape {
    /// `radius = None` takes `‖w★‖₁` of synthetic data.
    L1Ball {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        radius: Option<f64>,
    },
    L2Ball {
        radius: f64,
    },
    Box {
        lower: f64,
        upper: f64,
    },
    Unbounded,
}

impl SetShape {
    pub fn build(&self, d: usize, truth: Option<&[f64]>) -> Result<FeasibleSet, BenchError> {
        let r = match self {
            Self::L1Ball { radius: Some(r) } => FeasibleSet::l1_ball(d, *r),
            Self::L1Ball { radius: None } => {
                let w = truth.ok_or_else(|| {
                    BenchError::Config("l1_ball needs a radius for libsvm data".into())
                })?;
                FeasibleSet::l1_ball(d, adasa_core::linalg::norm1(w))
            }
            Self::L2Ball { radius } => FeasibleSet::l2_ball(d, *radius),
            Self::Box { lower, upper } => FeasibleSet::cube(vec![*lower; d], vec![*upper; d]),
            Self::Unbounded => Ok(FeasibleSet::unbounded(d)),
        };
        r.map_err(|e| BenchError::Config(e.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmId {
    Asa,
    Asa2,
    Asa3,
    Ssg,
    Ssgs,
    Psg,
    Smd,
    Sag,
}

impl AlgorithmId {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Asa => "asa",
            Self::Asa2 => "asa2",
            Self::Asa3 => "asa3",
            Self::Ssg => "ssg",
            Self::Ssgs => "ssgs",
            Self::Psg => "psg",
            Self::Smd => "smd",
            Self::Sag => "sag",
        }
    }

    pub fn is_adaptive(self) -> bool {
        matches!(self, Self::Asa | Self::Asa2 | Self::Asa3)
    }
}

/// Per-algorithm parameters. Anything left out takes the documented default
/// computed from the problem metadata.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlgorithmSpec {
    pub id: Option<AlgorithmId>,
    /// Series name in outputs; defaults to the id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Constant step for SSG/PSG/SMD. Default `R₀/(G√(T+1))`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// SSGS anchor weight. Default `R₀√T/(2G)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    /// Default `2R`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    /// Default: the metadata Lipschitz constant (data term only for PSG/ASA3).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    /// ASA3 only. Default `λ√d`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// SMD norm exponent. Default `max(2, 2 ln d)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// SAG step. Default `1/(16 L)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// SAG passes over the training set. Default 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    /// Starting point. Default: the corner of `W` for problems, the origin
    /// projected onto `W` for datasets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w1: Option<Vec<f64>>,
}

impl AlgorithmSpec {
    pub fn new(id: AlgorithmId) -> Self {
        Self {
            id: Some(id),
            ..Default::default()
        }
    }

    pub fn algorithm(&self) -> AlgorithmId {
        self.id.expect("validated configs name every algorithm")
    }

    pub fn name(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| self.algorithm().as_str().to_string())
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, BenchError> {
        Self::from_toml_with_overrides(s, &[])
    }

    /// Applies `key=value` overrides to the parsed TOML before typing it.
    /// Keys are dotted paths; array elements are addressed by index
    /// (`algorithms.0.gamma=0.1`). Values are TOML literals, with bare words
    /// taken as strings.
    pub fn from_toml_with_overrides(s: &str, overrides: &[String]) -> Result<Self, BenchError> {
        let mut table: toml::Table = s
            .parse()
            .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: Self = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String, BenchError> {
        toml::to_string(self).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        match (&self.problem, &self.dataset) {
            (Some(_), Some(_)) => return bad("give either [problem] or [dataset], not both".into()),
            (None, None) => return bad("a [problem] or [dataset] table is required".into()),
            _ => {}
        }
        if let Some(spec) = &self.problem {
            check_registry_ids(spec)?;
        }
        if let Some(ds) = &self.dataset {
            if let DataSource::Synthetic(g) = &ds.data {
                g.validate()
                    .map_err(|e| BenchError::Config(e.to_string()))?;
            }
            match &ds.data {
                DataSource::Synthetic(g) => {
                    ds.set.build(g.d, Some(&vec![1.0; g.d]))?;
                }
                DataSource::Libsvm { .. } => {
                    ds.set.build(1, None)?;
                }
            }
            if !(ds.lambda >= 0.0 && ds.lambda.is_finite()) {
                return bad(format!(
                    "dataset.lambda must be finite and nonnegative, got {}",
                    ds.lambda
                ));
            }
            adasa_core::data::part_sizes(1, ds.ratios)
                .map_err(|e| BenchError::Config(e.to_string()))?;
            if ds.ratios[0] <= 0.0 || ds.ratios[2] <= 0.0 {
                return bad("dataset.ratios needs nonempty train and test parts".into());
            }
        }
        if self.n_grid.is_empty() || self.n_grid.contains(&0) {
            return bad("n_grid must be nonempty with positive entries".into());
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if self.algorithms.is_empty() {
            return bad("at least one [[algorithms]] entry is required".into());
        }
        let mut names = std::collections::BTreeSet::new();
        for (i, a) in self.algorithms.iter().enumerate() {
            if a.id.is_none() {
                return bad(format!("algorithms[{i}] needs an id"));
            }
            if !names.insert(a.name()) {
                return bad(format!("duplicate algorithm label '{}'", a.name()));
            }
            if a.name().is_empty() || a.name().contains(['/', '\\', ',', '"', '\n']) {
                return bad(format!(
                    "algorithm label '{}' is not file-name safe",
                    a.name()
                ));
            }
            for (k, v) in [
                ("gamma", a.gamma),
                ("beta", a.beta),
                ("r0", a.r0),
                ("g", a.g),
                ("step", a.step),
            ] {
                if let Some(v) = v {
                    if !(v > 0.0 && v.is_finite()) {
                        return bad(format!("algorithms[{i}].{k} must be positive, got {v}"));
                    }
                }
            }
            if let Some(rho) = a.rho {
                if !(rho >= 0.0 && rho.is_finite()) {
                    return bad(format!(
                        "algorithms[{i}].rho must be nonnegative, got {rho}"
                    ));
                }
            }
            if a.p.is_some_and(|p| !(p >= 2.0)) {
                return bad(format!("algorithms[{i}].p must be at least 2"));
            }
            if a.epochs == Some(0) {
                return bad(format!("algorithms[{i}].epochs must be positive"));
            }
            if a.algorithm() == AlgorithmId::Sag && self.dataset.is_none() {
                return bad("sag runs on a [dataset] only".into());
            }
        }
        Ok(())
    }
}

fn check_registry_ids(spec: &ProblemSpec) -> Result<(), BenchError> {
    match spec {
        ProblemSpec::Registry { id } => {
            if registry_ids().contains(&id.as_str()) || id == "two_point_ls_zero_noise" {
                Ok(())
            } else {
                Err(BenchError::Config(format!(
                    "unknown problem id '{id}' (see list-problems)"
                )))
            }
        }
        ProblemSpec::L1Regularized { base, .. } => check_registry_ids(base),
        _ => Ok(()),
    }
}

fn apply_override(root: &mut toml::Table, item: &str) -> Result<(), BenchError> {
    let bad = |m: String| BenchError::Config(format!("override '{item}': {m}"));
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| bad("expected key=value".into()))?;
    let value = parse_value(raw.trim());
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty key segment".into()));
    }
    let mut cur: &mut toml::Value = root
        .entry(parts[0].to_string())
        .or_insert_with(|| toml::Value::Table(Default::default()));
    for part in &parts[1..] {
        cur = match cur {
            toml::Value::Table(t) => t
                .entry(part.to_string())
                .or_insert_with(|| toml::Value::Table(Default::default())),
            toml::Value::Array(a) => {
                let i: usize = part
                    .parse()
                    .map_err(|_| bad(format!("'{part}' is not an array index")))?;
                let len = a.len();
                a.get_mut(i)
                    .ok_or_else(|| bad(format!("index {i} out of range (len {len})")))?
            }
            _ => return Err(bad(format!("'{part}' indexes into a scalar"))),
        };
    }
    *cur = value;
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
seed = 7
replicates = 3
n_grid = [1000, 10000]

[problem]
kind = "registry"
id = "two_point_ls"

[[algorithms]]
id = "asa"

[[algorithms]]
id = "ssg"
gamma = 0.01
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(BASIC).unwrap();
        assert_eq!(cfg.algorithms.len(), 2);
        assert_eq!(cfg.delta, 0.1);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn overrides() {
        let o = vec![
            "replicates=5".to_string(),
            "algorithms.1.gamma=0.5".into(),
            "title=hello".into(),
        ];
        let cfg = ExperimentConfig::from_toml_with_overrides(BASIC, &o).unwrap();
        assert_eq!(cfg.replicates, 5);
        assert_eq!(cfg.algorithms[1].gamma, Some(0.5));
        assert_eq!(cfg.title.as_deref(), Some("hello"));
        assert!(ExperimentConfig::from_toml_with_overrides(
            BASIC,
            &["algorithms.9.gamma=1".into()]
        )
        .is_err());
        assert!(ExperimentConfig::from_toml_with_overrides(BASIC, &["nokey".into()]).is_err());
    }

    #[test]
    fn rejects_bad_configs() {
        for bad in [
            BASIC.replace("two_point_ls", "nope"),
            BASIC.replace("n_grid = [1000, 10000]", "n_grid = []"),
            BASIC.replace("gamma = 0.01", "gamma = -1.0"),
            BASIC.replace("id = \"ssg\"", "id = \"asa\""),
            BASIC.replace("replicates = 3", "replicates = 3\nunknown = 1"),
            BASIC.replace("id = \"ssg\"", "id = \"sag\""),
        ] {
            assert!(ExperimentConfig::from_toml_str(&bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn dataset_config() {
        let src = r#"
seed = 1
n_grid = [500]
[dataset]
loss = "square"
lambda = 0.001
set = { kind = "l1_ball" }
data = { source = "synthetic", d = 3, rows = 60, density = 0.5, support = 2, noise_sd = 0.1 }
[[algorithms]]
id = "sag"
step = 0.01
"#;
        let cfg = ExperimentConfig::from_toml_str(src).unwrap();
        assert_eq!(cfg.dataset.as_ref().unwrap().ratios, [4.0, 1.0, 1.0]);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}
