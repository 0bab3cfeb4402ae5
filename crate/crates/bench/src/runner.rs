//! Executes every `(algorithm, n, replicate)` cell of a config.
//!
//! Cells run on a rayon pool and return their results in memory; a single
//! collector then writes `traces/<algorithm>_n<n>_r<rep>.csv` per cell and
//! `summary.csv`, in cell order. Cell `(i, r)` draws from
//! `stream(seed, i · replicates + r)` for every algorithm, so algorithms
//! compared at the same `(n, r)` see the same random numbers.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use adasa_core::data::{read_libsvm, split, EmpiricalProblem, SparseDataset};
use adasa_core::geometry::default_p;
use adasa_core::problems::{SharedProblem, StochasticProblem};
use adasa_core::rng::stream;
use adasa_core::solvers::{self, default_r0, default_rho, Domain, RunTrace};
use rayon::prelude::*;

use crate::config::{AlgorithmId, AlgorithmSpec, DataSource, ExperimentConfig};
use crate::summary::{write_summary, write_trace, SummaryRow, TraceRow};
use crate::BenchError;

/// The problem a config resolves to.
pub enum Target {
    Problem(SharedProblem),
    Dataset {
        problem: Arc<EmpiricalProblem>,
        validation: SparseDataset,
        test: SparseDataset,
        label: String,
    },
}

impl Target {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, BenchError> {
        if let Some(spec) = &cfg.problem {
            return Ok(Self::Problem(spec.build()?));
        }
        let ds = cfg
            .dataset
            .as_ref()
            .ok_or_else(|| BenchError::Config("no problem or dataset".into()))?;
        let (mut data, truth, label) = match &ds.data {
            DataSource::Libsvm { path } => {
                let label = path
                    .file_stem()
                    .map_or("dataset".into(), |s| s.to_string_lossy().into_owned());
                (read_libsvm(path)?, None, label)
            }
            DataSource::Synthetic(g) => {
                let (data, truth) = g.generate(cfg.seed)?;
                (data, Some(truth), "synthetic".to_string())
            }
        };
        if let Some(d) = ds.dim {
            data = data.with_dim(d)?;
        }
        let set = ds.set.build(data.dim, truth.as_deref())?;
        if ds.max_abs_scale {
            data.max_abs_scale();
        }
        let (train, validation, test) = split(&data, ds.ratios, cfg.seed)?;
        let problem = EmpiricalProblem::new(Arc::new(train), ds.loss, set, ds.lambda)?;
        Ok(Self::Dataset {
            problem: Arc::new(problem),
            validation,
            test,
            label,
        })
    }

    pub fn problem(&self) -> &dyn StochasticProblem {
        match self {
            Self::Problem(p) => p.as_ref(),
            Self::Dataset { problem, .. } => problem.as_ref(),
        }
    }

    pub fn label(&self, cfg: &ExperimentConfig) -> String {
        match (self, &cfg.problem) {
            (Self::Problem(_), Some(spec)) => spec.label(),
            (Self::Problem(p), None) => p.name().to_string(),
            (Self::Dataset { label, .. }, _) => label.clone(),
        }
    }

    fn test_error(&self, w: &[f64]) -> Option<f64> {
        match self {
            Self::Problem(_) => None,
            Self::Dataset { problem, test, .. } => Some(problem.test_error(test, w)),
        }
    }
}

/// Parameters of one algorithm after defaults are filled in.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub id: AlgorithmId,
    pub w1: Vec<f64>,
    pub r0: f64,
    pub g: f64,
    pub gamma: Option<f64>,
    pub beta: Option<f64>,
    pub rho: f64,
    pub p: f64,
    pub step: f64,
    pub epochs: usize,
}

/// Fills in defaults for `spec` on `problem`. `gamma` and `beta` depend on
/// the budget and are finished in [`run_one`].
pub fn resolve(
    spec: &AlgorithmSpec,
    problem: &dyn StochasticProblem,
    dataset: bool,
) -> Result<Resolved, BenchError> {
    let id = spec.algorithm();
    let meta = problem.meta();
    let w1 = match &spec.w1 {
        Some(w) => w.clone(),
        None if dataset => problem.set().project(&vec![0.0; meta.d])?,
        None => problem.set().corner(),
    };
    let g = spec.g.unwrap_or(match id {
        AlgorithmId::Psg | AlgorithmId::Asa3 => meta.lipschitz_g,
        _ => meta.total_lipschitz(),
    });
    let l = meta.smoothness_l.unwrap_or(f64::NAN);
    let step = spec.step.unwrap_or(1.0 / (16.0 * l));
    if id == AlgorithmId::Sag && !(step > 0.0 && step.is_finite()) {
        return Err(BenchError::Config(
            "sag needs a step when the problem has no smoothness constant".into(),
        ));
    }
    Ok(Resolved {
        id,
        w1,
        r0: spec.r0.unwrap_or_else(|| default_r0(problem)),
        g,
        gamma: spec.gamma,
        beta: spec.beta,
        rho: spec.rho.unwrap_or_else(|| default_rho(problem)),
        p: spec.p.unwrap_or_else(|| default_p(meta.d)),
        step,
        epochs: spec.epochs.unwrap_or(1),
    })
}

/// Runs one algorithm with budget `n` on `target`.
pub fn run_one(
    target: &Target,
    a: &Resolved,
    n: u64,
    rng: &mut dyn rand::RngCore,
) -> Result<RunTrace, BenchError> {
    let p = target.problem();
    let t = n as usize;
    let gamma = a.gamma.unwrap_or(a.r0 / (a.g * ((n + 1) as f64).sqrt()));
    let set = Domain::Set(p.set().clone());
    let (_, trace) = match a.id {
        AlgorithmId::Asa => solvers::asa(p, &a.w1, n, a.r0, a.g, rng)?,
        AlgorithmId::Asa2 => solvers::asa2(p, &a.w1, n, a.r0, a.g, rng)?,
        AlgorithmId::Asa3 => solvers::asa3(p, &a.w1, n, a.r0, a.g, a.rho, rng)?,
        AlgorithmId::Ssg => solvers::ssg(p, &set, &a.w1, gamma, t, rng)?,
        AlgorithmId::Ssgs => {
            let beta = a.beta.unwrap_or(a.r0 * (n as f64).sqrt() / (2.0 * a.g));
            solvers::ssgs(p, &a.w1, beta, t, rng)?
        }
        AlgorithmId::Psg => solvers::psg(p, &set, &a.w1, gamma, t, rng)?,
        AlgorithmId::Smd => solvers::smd_pnorm(p, &a.w1, gamma, t, a.p, rng)?,
        AlgorithmId::Sag => match target {
            Target::Dataset { problem, .. } => solvers::sag(problem, &a.w1, a.step, a.epochs, rng)?,
            Target::Problem(_) => {
                return Err(BenchError::Config("sag runs on a dataset only".into()))
            }
        },
    };
    Ok(trace)
}

pub struct RunOutcome {
    pub summary_path: PathBuf,
    pub rows: Vec<SummaryRow>,
    pub failed_cells: usize,
}

struct CellResult {
    row: SummaryRow,
    trace: Vec<TraceRow>,
}

/// Runs every cell and writes the outputs under `out_dir`. `threads = None`
/// uses the global rayon pool.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<RunOutcome, BenchError> {
    cfg.validate()?;
    let target = Target::from_config(cfg)?;
    let label = target.label(cfg);
    let dataset = matches!(target, Target::Dataset { .. });
    let resolved: Vec<Result<Resolved, String>> = cfg
        .algorithms
        .iter()
        .map(|a| resolve(a, target.problem(), dataset).map_err(|e| e.to_string()))
        .collect();
    let reps = cfg.replicates;
    let cells: Vec<(usize, usize, usize)> = (0..cfg.algorithms.len())
        .flat_map(|a| (0..cfg.n_grid.len()).flat_map(move |i| (0..reps).map(move |r| (a, i, r))))
        .collect();

    let work = |&(a, i, r): &(usize, usize, usize)| -> CellResult {
        let n = cfg.n_grid[i];
        let name = cfg.algorithms[a].name();
        let stream_index = (i * reps + r) as u64;
        let mut row = SummaryRow {
            problem: label.clone(),
            algorithm: name.clone(),
            n,
            replicate: r,
            seed: cfg.seed,
            stream: stream_index,
            samples_used: None,
            excess_risk: None,
            test_error: None,
            wall_ms: Some(0.0),
            stage_count: None,
            trace_file: None,
            error: None,
        };
        let started = Instant::now();
        let result = resolved[a]
            .clone()
            .map_err(BenchError::Config)
            .and_then(|alg| {
                let mut rng = stream(cfg.seed, stream_index);
                run_one(&target, &alg, n, &mut rng)
            });
        match result {
            Ok(trace) => {
                if cfg.timing {
                    row.wall_ms = Some(started.elapsed().as_secs_f64() * 1e3);
                }
                row.samples_used = Some(trace.samples_used);
                row.stage_count = Some(trace.stage_count);
                row.excess_risk = trace.final_excess();
                row.test_error = target.test_error(&trace.final_iterate);
                row.trace_file = Some(format!("traces/{name}_n{n}_r{r}.csv"));
                let rows = trace
                    .records
                    .iter()
                    .map(|c| TraceRow {
                        samples: c.samples,
                        stage: c.stage,
                        excess_risk: c.excess,
                        test_error: target.test_error(&c.iterate),
                    })
                    .collect();
                CellResult { row, trace: rows }
            }
            Err(e) => {
                log::error!("{name} n={n} replicate={r}: {e}");
                row.error = Some(e.to_string());
                CellResult {
                    row,
                    trace: Vec::new(),
                }
            }
        }
    };

    let results: Vec<CellResult> = match threads {
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| BenchError::Input(format!("thread pool: {e}")))?;
            pool.install(|| cells.par_iter().map(work).collect())
        }
        None => cells.par_iter().map(work).collect(),
    };

    let traces_dir = out_dir.join("traces");
    std::fs::create_dir_all(&traces_dir).map_err(|e| BenchError::io(&traces_dir, e))?;
    for c in &results {
        if let Some(f) = &c.row.trace_file {
            write_trace(&out_dir.join(f), &c.trace)?;
        }
    }
    let rows: Vec<SummaryRow> = results.into_iter().map(|c| c.row).collect();
    let summary_path = out_dir.join("summary.csv");
    write_summary(&summary_path, &rows)?;
    let failed_cells = rows.iter().filter(|r| !r.ok()).count();
    Ok(RunOutcome {
        summary_path,
        rows,
        failed_cells,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ExperimentConfig {
        let src = format!(
            "seed = 3\nreplicates = 2\nn_grid = [200, 400]\n[problem]\nkind = \"registry\"\nid = \"two_point_ls\"\n{extra}"
        );
        ExperimentConfig::from_toml_str(&src).unwrap()
    }

    #[test]
    fn one_cell_one_trace() {
        let mut cfg = config("[[algorithms]]\nid = \"ssg\"\n");
        cfg.n_grid = vec![100];
        cfg.replicates = 1;
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, dir.path(), Some(1)).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert_eq!(
            std::fs::read_dir(dir.path().join("traces"))
                .unwrap()
                .count(),
            1
        );
        assert_eq!(out.rows[0].samples_used, Some(100));
        assert!(out.rows[0].excess_risk.unwrap() >= 0.0);
    }

    #[test]
    fn failed_cells_are_recorded() {
        // n = 4 is below the smallest asa2 budget
        let mut cfg = config("[[algorithms]]\nid = \"asa2\"\n[[algorithms]]\nid = \"ssg\"\n");
        cfg.n_grid = vec![4];
        let dir = tempfile::tempdir().unwrap();
        let out = run_experiment(&cfg, dir.path(), Some(1)).unwrap();
        assert_eq!(out.failed_cells, 2);
        assert!(out.rows[0].error.is_some() && out.rows[2].ok());
    }

    #[test]
    fn default_steps() {
        let cfg = config("[[algorithms]]\nid = \"ssg\"\n");
        let t = Target::from_config(&cfg).unwrap();
        let a = resolve(&cfg.algorithms[0], t.problem(), false).unwrap();
        assert_eq!(a.r0, 2.0 * t.problem().meta().diameter_r);
        assert_eq!(a.w1, t.problem().set().corner());
        assert_eq!(a.g, t.problem().meta().total_lipschitz());
    }
}
