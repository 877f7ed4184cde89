//! Thin CLI over the library: `pretrain`, `transfer`, `sweep`, `evaluate`,
//! and `param-count`. Config files use flat `key = value` lines; any flag
//! given here overrides the file.

use clap::{Args, Parser, Subcommand};
use pinn_transfer::harness::{
    cmd_evaluate, cmd_param_count, cmd_pretrain, cmd_sweep, cmd_transfer, EvaluateArgs, RunConfig,
};
use pinn_transfer::pde::ProblemKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pinn-transfer", version, about = "PINN solvers with singular-value transfer learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from scratch on the eps = 0 family member.
    Pretrain(RunArgs),
    /// Adapt a pretrained model to the configured epsilon.
    Transfer(TransferCli),
    /// Run a grid of sigma optimizers / learning rates / modes.
    Sweep(TransferCli),
    /// Report the relative error of a stored checkpoint.
    Evaluate(EvaluateCli),
    /// Storage accounting for n models with and without shared bases.
    ParamCount(ParamCountCli),
}

#[derive(Args)]
struct RunArgs {
    /// Flat key = value config file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct TransferCli {
    #[command(flatten)]
    run: RunArgs,
    /// Pretrained checkpoint (theta0.ckpt).
    #[arg(long)]
    theta0: PathBuf,
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    #[arg(long)]
    width: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    n_interior: Option<String>,
    #[arg(long)]
    n_boundary: Option<String>,
    #[arg(long)]
    n_initial: Option<String>,
    #[arg(long)]
    n_test: Option<String>,
    #[arg(long)]
    resample_every: Option<String>,
    #[arg(long)]
    iters: Option<String>,
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    sigma_optimizer: Option<String>,
    #[arg(long)]
    sigma_lr: Option<String>,
    #[arg(long)]
    main_lr: Option<String>,
    #[arg(long)]
    log_every: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    #[arg(long)]
    sweep_cells: Option<String>,
    #[arg(long)]
    sweep_modes: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut push = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v.clone()));
            }
        };
        push("problem", &self.problem);
        push("dim", &self.dim);
        push("epsilon", &self.epsilon);
        push("width", &self.width);
        push("nu", &self.nu);
        push("seed", &self.seed);
        push("n_interior", &self.n_interior);
        push("n_boundary", &self.n_boundary);
        push("n_initial", &self.n_initial);
        push("n_test", &self.n_test);
        push("resample_every", &self.resample_every);
        push("iters", &self.iters);
        push("mode", &self.mode);
        push("sigma_optimizer", &self.sigma_optimizer);
        push("sigma_lr", &self.sigma_lr);
        push("main_lr", &self.main_lr);
        push("log_every", &self.log_every);
        push("out_dir", &self.out_dir);
        push("sweep_cells", &self.sweep_cells);
        push("sweep_modes", &self.sweep_modes);
        out
    }
}

#[derive(Args)]
struct EvaluateCli {
    /// Checkpoint to evaluate.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Basis archive for sigma-mode checkpoints (default: basis.svd next to
    /// the checkpoint).
    #[arg(long)]
    basis: Option<PathBuf>,
    /// Override the problem family stored in the checkpoint.
    #[arg(long)]
    problem: Option<String>,
    /// Override the spatial dimension stored in the checkpoint.
    #[arg(long)]
    dim: Option<usize>,
    /// Override the family parameter stored in the checkpoint.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 4096)]
    n_test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Where eval.csv is appended (default: the checkpoint's directory).
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ParamCountCli {
    /// Number of PDEs solved.
    #[arg(long, default_value_t = 10)]
    n_pdes: u64,
    /// Hidden width m.
    #[arg(long, default_value_t = 100)]
    width: u64,
    /// Output dimension r.
    #[arg(long, default_value_t = 1)]
    r: u64,
    /// Network input dimension (spatial dimension + 1 for time).
    #[arg(long, default_value_t = 11)]
    d_in: u64,
}

fn load_config(args: &RunArgs) -> Result<RunConfig, Box<dyn std::error::Error>> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    cfg.apply_pairs(&args.overrides.pairs())?;
    Ok(cfg)
}

fn run() -> Result<(), Box<dyn std::error::Error>> {
    match Cli::parse().command {
        Command::Pretrain(args) => {
            let cfg = load_config(&args)?;
            let out = cmd_pretrain(&cfg)?;
            println!("checkpoint: {}", out.checkpoint.display());
            println!("log: {}", out.csv.display());
            println!("final relative error: {}", out.final_rel_err);
        }
        Command::Transfer(args) => {
            let cfg = load_config(&args.run)?;
            let out = cmd_transfer(&cfg, &args.theta0)?;
            println!("checkpoint: {}", out.checkpoint.display());
            println!("log: {}", out.csv.display());
            if let Some(basis) = &out.basis {
                println!("basis: {}", basis.display());
            }
            println!("final relative error: {}", out.final_rel_err);
            println!("best relative error: {}", out.best_rel_err);
        }
        Command::Sweep(args) => {
            let cfg = load_config(&args.run)?;
            let out = cmd_sweep(&cfg, &args.theta0)?;
            println!("summary: {}", out.summary.display());
            for row in &out.rows {
                let final_err =
                    row.final_rel_err.map(|v| v.to_string()).unwrap_or_else(|| "-".to_string());
                println!("{}: {} final_rel_err={}", row.cell, row.status, final_err);
            }
        }
        Command::Evaluate(args) => {
            let problem = match &args.problem {
                Some(p) => Some(
                    ProblemKind::parse(p).ok_or_else(|| format!("unknown problem '{p}'"))?,
                ),
                None => None,
            };
            let report = cmd_evaluate(&EvaluateArgs {
                checkpoint: args.checkpoint,
                basis: args.basis,
                problem,
                dim: args.dim,
                epsilon: args.epsilon,
                n_test: args.n_test,
                seed: args.seed,
                out_dir: args.out_dir,
            })?;
            println!(
                "problem={} epsilon={} n_points={} iteration={} rel_err={}",
                report.problem.id(),
                report.epsilon,
                report.n_points,
                report.iteration,
                report.relative_error
            );
        }
        Command::ParamCount(args) => {
            let (standard, shared) = cmd_param_count(args.n_pdes, args.width, args.r, args.d_in);
            println!(
                "standard: per_model={} total={} (n={}, m={}, r={}, d_in={})",
                standard.per_model, standard.total, args.n_pdes, args.width, args.r, args.d_in
            );
            println!("svd-shared: per_model={} total={}", shared.per_model, shared.total);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
