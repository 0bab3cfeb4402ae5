use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adasa_bench::config::ExperimentConfig;
use adasa_bench::{emit_plot, fit_rate, read_summary, run_experiment, BenchError, PlotKind};
use adasa_core::conditions::{
    check_bernstein_many, check_central, default_bernstein_b, ebc_points, estimate_ebc, EbcOptions,
};
use adasa_core::erm::erm_rate_study;
use adasa_core::problems::{registry, ProblemSpec, SharedProblem};
use adasa_core::rng::stream;
use clap::{Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "adasa",
    version,
    about = "Adaptive stochastic approximation experiments"
)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// `key=value` applied to the config before validation; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run every (algorithm, n, replicate) cell of the config.
    Run,
    /// Fit the log-log slope of median excess risk against n.
    Fit {
        /// Summary CSV; defaults to <out>/summary.csv.
        #[arg(long)]
        summary: Option<PathBuf>,
        #[arg(long)]
        algorithm: String,
        /// EBC exponent used to report the predicted slope.
        #[arg(long)]
        theta: Option<f64>,
    },
    /// Write an SVG plot of a summary.
    Plot {
        #[arg(long)]
        summary: Option<PathBuf>,
        /// excess-vs-n or testerror-vs-iteration.
        #[arg(long)]
        kind: String,
        /// Comma-separated algorithm labels; all when omitted.
        #[arg(long, value_delimiter = ',')]
        algorithms: Option<Vec<String>>,
        #[arg(long)]
        title: Option<String>,
        /// Output file; defaults to <summary dir>/<kind>.svg.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Estimate the EBC exponent of a problem from sampled points.
    EstimateEbc {
        /// Registry id; defaults to the config's problem.
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, default_value_t = 2000)]
        points: usize,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        cap: Option<f64>,
    },
    /// Monte-Carlo checks of the Bernstein and central conditions; CSV on stdout.
    CheckConditions {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 20000)]
        mc: usize,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
    },
    /// ERM excess risk against n with a log-log fit.
    ErmStudy {
        #[arg(long)]
        problem: Option<String>,
        #[arg(long, value_delimiter = ',', default_value = "100,300,1000,3000,10000")]
        n_grid: Vec<u64>,
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Parse and validate the config.
    Validate,
    /// List the registry instances with their metadata.
    ListProblems,
}

enum Failure {
    Config(String),
    Runtime(String),
    Cells(usize),
}

impl From<BenchError> for Failure {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Config(_) => Self::Config(e.to_string()),
            other => Self::Runtime(other.to_string()),
        }
    }
}

impl From<adasa_core::Error> for Failure {
    fn from(e: adasa_core::Error) -> Self {
        Self::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(k) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
        {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Cells(k)) => {
            eprintln!("error: {k} cell(s) failed; see the error column of the summary");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path, &cli.overrides)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = Some(o.clone());
    }
    Ok(cfg)
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("results"))
}

fn problem_for(cli: &Cli, id: &Option<String>) -> Result<SharedProblem, Failure> {
    if let Some(id) = id {
        return Ok(ProblemSpec::registry(id).build()?);
    }
    let cfg = load_config(cli)?;
    let spec = cfg.problem.ok_or_else(|| {
        Failure::Config("pass --problem or a config with a [problem] table".into())
    })?;
    Ok(spec.build()?)
}

fn summary_path(cli: &Cli, given: &Option<PathBuf>) -> PathBuf {
    given
        .clone()
        .unwrap_or_else(|| out_dir(cli).join("summary.csv"))
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Run => {
            let cfg = load_config(cli)?;
            let dir = cfg
                .out_dir
                .clone()
                .unwrap_or_else(|| PathBuf::from("results"));
            std::fs::create_dir_all(&dir)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            std::fs::write(dir.join("config.toml"), cfg.to_toml_string()?)
                .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
            let out = run_experiment(&cfg, &dir, None)?;
            println!(
                "{} cells, summary at {}",
                out.rows.len(),
                out.summary_path.display()
            );
            if out.failed_cells > 0 {
                return Err(Failure::Cells(out.failed_cells));
            }
        }
        Command::Fit {
            summary,
            algorithm,
            theta,
        } => {
            let rows = read_summary(&summary_path(cli, summary))?;
            let f = fit_rate(&rows, algorithm, *theta)?;
            println!("algorithm  {algorithm}");
            for (n, e) in &f.points {
                println!("n {n:>12}  median {e:.6e}");
            }
            println!("slope      {:.4} ± {:.4}", f.slope, f.slope_stderr);
            println!("intercept  {:.4}", f.intercept);
            println!("residual   {:.4}", f.residual);
            if let Some(p) = f.predicted {
                println!("predicted  {p:.4}");
            }
        }
        Command::Plot {
            summary,
            kind,
            algorithms,
            title,
            file,
        } => {
            let summary = summary_path(cli, summary);
            let k: PlotKind = kind.parse()?;
            let file = file.clone().unwrap_or_else(|| {
                summary
                    .parent()
                    .unwrap_or(Path::new("."))
                    .join(format!("{kind}.svg"))
            });
            let title = match (title, &cli.config) {
                (Some(t), _) => t.clone(),
                (None, Some(_)) => load_config(cli)?.title.unwrap_or_else(|| kind.clone()),
                (None, None) => kind.clone(),
            };
            let series = emit_plot(&summary, k, algorithms.as_deref(), &title, &file)?;
            println!("{} series written to {}", series.len(), file.display());
        }
        Command::EstimateEbc {
            problem,
            points,
            floor,
            cap,
        } => {
            let p = problem_for(cli, problem)?;
            let pts = ebc_points(p.as_ref(), *points, &mut stream(seed, 0))?;
            let opts = EbcOptions {
                excess_floor: *floor,
                alpha_cap: *cap,
                ..Default::default()
            };
            let est = estimate_ebc(p.as_ref(), &pts, &opts)?;
            println!(
                "problem {}  admitted {}  floor {:.3e}  cap {:.3e}",
                p.name(),
                est.admitted,
                est.excess_floor,
                est.alpha_cap
            );
            for (t, a) in est.theta_grid.iter().zip(&est.alpha_hat) {
                println!("theta {t:.2}  alpha_hat {a:.6e}");
            }
            match (est.recommended_theta, p.meta().ebc) {
                (Some(t), Some(truth)) => {
                    println!("recommended theta {t:.2} (metadata {:.2})", truth.theta)
                }
                (Some(t), None) => println!("recommended theta {t:.2}"),
                (None, _) => println!("no theta on the grid keeps alpha_hat under the cap"),
            }
        }
        Command::CheckConditions {
            problem,
            points,
            mc,
            epsilon,
            b,
        } => {
            let p = problem_for(cli, problem)?;
            let mut rng = stream(seed, 0);
            let pts = ebc_points(p.as_ref(), *points, &mut rng)?;
            let ebc = p
                .meta()
                .ebc
                .ok_or_else(|| Failure::Runtime(format!("{} has no EBC metadata", p.name())))?;
            let bb = default_bernstein_b(p.as_ref()).expect("EBC metadata present");
            let bern = check_bernstein_many(p.as_ref(), &pts, ebc.theta, bb, *mc, &mut rng)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let mut all_pass = bern.pass;
            for r in bern.rows() {
                w.serialize(r)
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
            }
            for x in &pts {
                let c = check_central(p.as_ref(), x, *epsilon, *b, *mc, &mut rng)?;
                all_pass &= c.pass;
                for r in c.rows() {
                    w.serialize(r)
                        .map_err(|e| Failure::Runtime(e.to_string()))?;
                }
            }
            w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
            eprintln!(
                "{}: {}",
                p.name(),
                if all_pass {
                    "all checks pass"
                } else {
                    "some checks fail"
                }
            );
        }
        Command::ErmStudy {
            problem,
            n_grid,
            replicates,
            tolerance,
        } => {
            let p = problem_for(cli, problem)?;
            let r = erm_rate_study(p.as_ref(), n_grid, *replicates, *tolerance, seed)?;
            println!("problem {}  tolerance {:.3e}", r.problem, r.tolerance);
            for (n, m) in r.n_grid.iter().zip(&r.medians) {
                println!("n {n:>10}  median excess {m:.6e}");
            }
            match (&r.fit, &r.fit_error) {
                (Some(f), _) => println!("slope {:.4} ± {:.4}", f.slope, f.slope_stderr),
                (None, Some(e)) => println!("no fit: {e}"),
                (None, None) => {}
            }
            if let (Some(a), Some(b)) = (r.predicted, r.predicted_optimistic) {
                println!("predicted {a:.4} (small P*: {b:.4})");
            }
            if let Some(dir) = &cli.out {
                std::fs::create_dir_all(dir)
                    .map_err(|e| Failure::Runtime(format!("{}: {e}", dir.display())))?;
                let path = dir.join("erm_study.csv");
                let mut w =
                    csv::Writer::from_path(&path).map_err(|e| Failure::Runtime(e.to_string()))?;
                w.write_record(["n", "replicate", "excess_risk"])
                    .map_err(|e| Failure::Runtime(e.to_string()))?;
                for (n, row) in r.n_grid.iter().zip(&r.excess) {
                    for (k, e) in row.iter().enumerate() {
                        w.write_record([n.to_string(), k.to_string(), e.to_string()])
                            .map_err(|e| Failure::Runtime(e.to_string()))?;
                    }
                }
                w.flush().map_err(|e| Failure::Runtime(e.to_string()))?;
            }
        }
        Command::Validate => {
            let cfg = load_config(cli)?;
            println!(
                "ok: {} algorithm(s), {} n value(s), {} replicate(s)",
                cfg.algorithms.len(),
                cfg.n_grid.len(),
                cfg.replicates
            );
        }
        Command::ListProblems => {
            println!(
                "{:<20} {:>3} {:>10} {:>8} {:>6} {:>8}",
                "id", "d", "G", "R", "theta", "alpha"
            );
            for p in registry()? {
                let m = p.meta();
                let (t, a) = m.ebc.map_or((f64::NAN, f64::NAN), |e| (e.theta, e.alpha));
                println!(
                    "{:<20} {:>3} {:>10.4} {:>8.4} {:>6.2} {:>8.4}",
                    p.name(),
                    m.d,
                    m.total_lipschitz(),
                    m.diameter_r,
                    t,
                    a
                );
            }
        }
    }
    Ok(())
}
