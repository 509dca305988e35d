use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use zosaddle::harness::{
    self, ensure_dir, format_f64, run_ladder, run_replicas, unbiasedness_check, variance_study,
    write_experiment, write_json, write_trace_csv, BaselineConfig, ExperimentConfig, LadderConfig,
    VarianceConfig,
};
use zosaddle::{deterministic_saddle_search, Error, RngStream};

#[derive(Parser)]
#[command(name = "zosaddle", version, about = "Derivative-free saddle-point search experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Config file, as an alternative to the positional argument.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for replicas (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Overrides the seed of the first replica.
    #[arg(long, global = true)]
    seed_base: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Only print warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated zeroth-order saddle searches.
    Run {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Run an (l, alpha) ladder and tabulate plateau errors.
    Table {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Compare the spread of the Hessian and Hessian-vector estimators.
    Variance {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Run the deterministic discretized saddle dynamics.
    Baseline {
        #[arg(value_name = "CONFIG")]
        path: Option<PathBuf>,
    },
    /// Monte-Carlo check of estimator means on a quadratic.
    EstimatorCheck {
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-3)]
        l: f64,
    },
}

enum Failure {
    Config(Error),
    Runtime(Error),
    Replicas(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

fn config_path(positional: Option<PathBuf>, global: &Global) -> Result<PathBuf, Failure> {
    positional.or_else(|| global.config.clone()).ok_or_else(|| {
        Failure::Config(Error::Config {
            context: "command line".into(),
            message: "a config file is required".into(),
        })
    })
}

fn out_dir(global: &Global, from_config: Option<&Path>) -> PathBuf {
    global
        .out
        .clone()
        .or_else(|| from_config.map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn say(global: &Global, msg: impl AsRef<str>) {
    if !global.quiet {
        println!("{}", msg.as_ref());
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3e}")).unwrap_or_else(|| "-".into())
}

fn cmd_run(path: &Path, g: &Global) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::from_path(path).map_err(Failure::Config)?;
    if let Some(seed) = g.seed_base {
        cfg.seed_base = seed;
    }
    let outcomes = run_replicas(&cfg, g.jobs).map_err(Failure::Config)?;
    let prefix = cfg.output.as_ref().map_or("run".to_string(), |o| o.prefix.clone());
    let dir = out_dir(g, cfg.output.as_ref().map(|o| o.dir.as_path()));
    let summary = write_experiment(&cfg, &outcomes, &dir, &prefix)?;
    for r in &summary.replicas {
        say(
            g,
            format!(
                "seed {:>6}  iters {:>7}  evals {:>10}  min dist_sq {}  final grad_norm_sq {}  {:?}",
                r.seed,
                r.iterations,
                r.cumulative_evals,
                fmt_opt(r.min_dist_sq),
                fmt_opt(r.final_grad_norm_sq),
                r.termination
            ),
        );
    }
    if let Some(p) = summary.plateau {
        say(g, format!("plateau (mean min dist_sq): {p:.3e}"));
    }
    say(g, format!("wrote {}", dir.display()));
    match summary.failures {
        0 => Ok(()),
        n => Err(Failure::Replicas(n)),
    }
}

fn cmd_table(path: &Path, g: &Global) -> Result<(), Failure> {
    let mut cfg = LadderConfig::from_path(path).map_err(Failure::Config)?;
    if let Some(seed) = g.seed_base {
        cfg.base.seed_base = seed;
    }
    let (summary, outcomes) = run_ladder(&cfg, g.jobs).map_err(Failure::Config)?;
    let dir = ensure_dir(&out_dir(g, cfg.base.output.as_ref().map(|o| o.dir.as_path())))?;
    for ((l, alpha, rung), out) in cfg.rungs().into_iter().zip(&outcomes) {
        let sub = dir.join(format!("l{}_alpha{}", format_f64(l), format_f64(alpha)));
        write_experiment(&rung, out, &sub, "run")?;
    }
    write_json(&summary, &dir.join("ladder_summary.json"))?;
    say(g, format!("{:>12} {:>10} {:>12} {:>8}", "l", "alpha", "plateau", "order"));
    for row in &summary.table.rows {
        say(
            g,
            format!(
                "{:>12.4e} {:>10.1e} {:>12.3e} {:>8}",
                row.l,
                row.alpha,
                row.plateau,
                row.order.map_or("".into(), |o| format!("{o:.2}"))
            ),
        );
    }
    for (alpha, order) in &summary.decay_orders {
        say(g, format!("alpha {alpha:e}: fitted decay order {}", order.map_or("-".into(), |o| format!("{o:.3}"))));
    }
    match summary.failures {
        0 => Ok(()),
        n => Err(Failure::Replicas(n)),
    }
}

fn cmd_variance(path: Option<PathBuf>, g: &Global) -> Result<(), Failure> {
    let mut cfg = match path {
        Some(p) => harness::load_json::<VarianceConfig>(&p).map_err(Failure::Config)?,
        None => VarianceConfig::default(),
    };
    if let Some(seed) = g.seed_base {
        cfg.seed = seed;
    }
    let mut rng = RngStream::new(cfg.seed);
    let mut setup = RngStream::new(cfg.seed.wrapping_add(1));
    let family = cfg.family.clone();
    let rows = variance_study(|d| family.make(d, &mut setup), &cfg.dims, cfg.samples, cfg.l, &mut rng)
        .map_err(Failure::Config)?;
    let dir = ensure_dir(&out_dir(g, None))?;
    write_json(&serde_json::json!({ "config": cfg, "rows": rows }), &dir.join("variance.json"))?;
    say(g, format!("{:>6} {:>14} {:>14} {:>14} {:>14}", "d", "std(Hv)", "std(H_v)", "E|H|^2", "E|H_v|^2"));
    for r in &rows {
        say(
            g,
            format!(
                "{:>6} {:>14.4e} {:>14.4e} {:>14.4e} {:>14.4e}",
                r.d, r.hessian_std, r.hess_vec_std, r.hessian_second_moment, r.hess_vec_second_moment
            ),
        );
    }
    Ok(())
}

fn cmd_baseline(path: &Path, g: &Global) -> Result<(), Failure> {
    let cfg = BaselineConfig::from_path(path).map_err(Failure::Config)?;
    let (obj, x0) = cfg.validate().map_err(Failure::Config)?;
    let rec = deterministic_saddle_search(&obj, &x0, cfg.k, &cfg.alpha, cfg.n_max, cfg.record_every)
        .map_err(Failure::Config)?;
    let prefix = cfg.output.as_ref().map_or("baseline".to_string(), |o| o.prefix.clone());
    let dir = ensure_dir(&out_dir(g, cfg.output.as_ref().map(|o| o.dir.as_path())))?;
    write_trace_csv(&rec, x0.len(), &dir.join(format!("{prefix}.csv")))?;
    write_json(
        &serde_json::json!({ "config": cfg, "termination": rec.termination, "metadata": rec.metadata }),
        &dir.join(format!("{prefix}_summary.json")),
    )?;
    if let Some(last) = rec.last() {
        say(
            g,
            format!(
                "n {}  dist_sq {}  grad_norm_sq {}  {:?}",
                last.n,
                fmt_opt(last.dist_sq),
                fmt_opt(last.grad_norm_sq),
                rec.termination
            ),
        );
    }
    if rec.termination.is_success() {
        Ok(())
    } else {
        Err(Failure::Replicas(1))
    }
}

fn cmd_estimator_check(samples: usize, l: f64, g: &Global) -> Result<(), Failure> {
    let a = DMatrix::from_diagonal(&DVector::from_column_slice(&[2.0, -2.0]));
    let x = DVector::from_column_slice(&[0.3, -0.4]);
    let v = DVector::from_column_slice(&[1.0, 0.0]);
    let seed = g.seed_base.unwrap_or(0);
    let checks = unbiasedness_check(&a, &x, &v, l, samples, seed).map_err(Failure::Config)?;
    let mut worst: f64 = 0.0;
    for c in &checks {
        worst = worst.max(c.z_score().abs());
        say(
            g,
            format!(
                "{:<15} {:<6} mean {:>12.6} expected {:>8.4} z {:>6.2}",
                c.estimator,
                c.component,
                c.mean,
                c.expected,
                c.z_score()
            ),
        );
    }
    if worst <= 3.0 {
        say(g, "PASS: every component within 3 standard errors");
        Ok(())
    } else {
        println!("FAIL: largest deviation {worst:.2} standard errors");
        Err(Failure::Replicas(1))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let g = &cli.global;
    let result = match cli.command {
        Command::Run { path } => config_path(path, g).and_then(|p| cmd_run(&p, g)),
        Command::Table { path } => config_path(path, g).and_then(|p| cmd_table(&p, g)),
        Command::Variance { path } => cmd_variance(path.or_else(|| g.config.clone()), g),
        Command::Baseline { path } => config_path(path, g).and_then(|p| cmd_baseline(&p, g)),
        Command::EstimatorCheck { samples, l } => cmd_estimator_check(samples, l, g),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            log::error!("{e}");
            ExitCode::from(1)
        }
        Err(Failure::Replicas(n)) => {
            log::error!("{n} run(s) failed");
            ExitCode::from(1)
        }
    }
}
