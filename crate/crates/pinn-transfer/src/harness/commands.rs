//! The operations behind the CLI subcommands: pretrain, transfer, sweep,
//! evaluate, and param-count.

use super::checkpoint::{
    build_checkpoint, params_from_checkpoint, BasisArchive, Checkpoint, CheckpointError,
};
use super::config::{ConfigError, RunConfig};
use super::csvlog::{append_eval_csv, write_run_csv, write_summary_csv, SweepRow};
use crate::eval::{evaluate, param_count, CountModel, ErrorReport, EvalError, ParamCounts};
use crate::network::{HiddenWeight, NetworkParams};
use crate::pde::{allen_cahn, linear_parabolic, PdeProblem, ProblemKind};
use crate::sampling::{sample_test, stream, StreamLabel};
use crate::transfer::{
    svd_split, transfer_train, TrainMode, TrainRun, TransferError, SIGMA_HEAD,
};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error(transparent)]
    Transfer(#[from] TransferError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("basis archive {path} belongs to a different pretrained model (expected {expected:#018x}, found {found:#018x})")]
    StaleBasis { path: String, expected: u64, found: u64 },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io { path: path.display().to_string(), source }
}

pub fn build_problem(kind: ProblemKind, d: usize, epsilon: f64) -> PdeProblem {
    match kind {
        ProblemKind::Parabolic => linear_parabolic(d, epsilon),
        ProblemKind::AllenCahn => allen_cahn(d, epsilon),
    }
}

/// `0.5 -> "0.5"`, `2.0 -> "2"`; used in artifact file names.
pub fn format_eps(eps: f64) -> String {
    format!("{eps}")
}

fn base_meta(cfg: &RunConfig, mode: TrainMode, epsilon: f64, iteration: u64) -> Vec<(String, String)> {
    vec![
        ("problem".to_string(), cfg.problem.id().to_string()),
        ("dim".to_string(), cfg.dim.to_string()),
        ("width".to_string(), cfg.width.to_string()),
        ("r".to_string(), "1".to_string()),
        ("epsilon".to_string(), format!("{epsilon}")),
        ("mode".to_string(), mode.id().to_string()),
        ("iteration".to_string(), iteration.to_string()),
        ("rng_seed".to_string(), cfg.seed.to_string()),
    ]
}

#[derive(Debug)]
pub struct PretrainArtifacts {
    pub checkpoint: PathBuf,
    pub csv: PathBuf,
    pub final_rel_err: f64,
}

/// Pretrain at `eps = 0` and persist `theta0.ckpt` plus `pretrain.csv`.
pub fn cmd_pretrain(cfg: &RunConfig) -> Result<PretrainArtifacts, HarnessError> {
    cfg.validate()?;
    let problem = build_problem(cfg.problem, cfg.dim, 0.0);
    let run = crate::transfer::pretrain(&problem, &cfg.train_options(), cfg.seed)?;
    let ckpt_path = cfg.out_dir.join("theta0.ckpt");
    let csv_path = cfg.out_dir.join("pretrain.csv");
    let ckpt = build_checkpoint(
        &run.params,
        Some(&run.main_optimizer),
        None,
        cfg.hash(),
        base_meta(cfg, TrainMode::Full, 0.0, cfg.iters),
        None,
    );
    ckpt.save(&ckpt_path)?;
    write_run_csv(&csv_path, &run.records, 0).map_err(io_err(&csv_path))?;
    let final_rel_err = run.records.last().map(|r| r.rel_err).unwrap_or(f64::NAN);
    Ok(PretrainArtifacts { checkpoint: ckpt_path, csv: csv_path, final_rel_err })
}

#[derive(Debug)]
pub struct TransferArtifacts {
    pub checkpoint: PathBuf,
    pub csv: PathBuf,
    pub basis: Option<PathBuf>,
    pub final_rel_err: f64,
    pub best_rel_err: f64,
}

fn load_theta0(cfg: &RunConfig, theta0_path: &Path) -> Result<NetworkParams, HarnessError> {
    let ckpt = Checkpoint::load(theta0_path)?;
    ckpt.check_structure(cfg.problem.id(), cfg.dim, cfg.width, 1)?;
    Ok(params_from_checkpoint(&ckpt, None)?)
}

/// Write the shared basis archive if absent; verify it matches otherwise.
fn ensure_basis(out_dir: &Path, split: &NetworkParams) -> Result<(PathBuf, u64), HarnessError> {
    let (u, v) = match &split.hidden {
        HiddenWeight::Factored { u, v, .. } => (u.clone(), v.clone()),
        HiddenWeight::Dense(_) => unreachable!("split model is factored"),
    };
    let basis = BasisArchive::new(u, v);
    let path = out_dir.join("basis.svd");
    if path.exists() {
        let existing = BasisArchive::load(&path)?;
        if existing.id != basis.id {
            return Err(HarnessError::StaleBasis {
                path: path.display().to_string(),
                expected: basis.id,
                found: existing.id,
            });
        }
    } else {
        basis.save(&path)?;
    }
    Ok((path, basis.id))
}

/// Run one transfer and persist `theta_eps<eps>.ckpt`, `run_eps<eps>.csv`,
/// and (for sigma training) the shared `basis.svd`.
pub fn cmd_transfer(cfg: &RunConfig, theta0_path: &Path) -> Result<TransferArtifacts, HarnessError> {
    cfg.validate()?;
    let theta0 = load_theta0(cfg, theta0_path)?;
    let problem = build_problem(cfg.problem, cfg.dim, cfg.epsilon);
    let eps_tag = format_eps(cfg.epsilon);

    let (start, basis) = if cfg.mode == TrainMode::SvdTransfer {
        let split = svd_split(&theta0)?;
        let (path, id) = ensure_basis(&cfg.out_dir, &split)?;
        (split, Some((path, id)))
    } else {
        (theta0, None)
    };

    let run = transfer_train(&start, cfg.mode, &problem, &cfg.train_options(), cfg.seed)?;
    persist_transfer_run(cfg, &run, &eps_tag, basis, &cfg.out_dir)
}

fn persist_transfer_run(
    cfg: &RunConfig,
    run: &TrainRun,
    eps_tag: &str,
    basis: Option<(PathBuf, u64)>,
    dir: &Path,
) -> Result<TransferArtifacts, HarnessError> {
    let ckpt_path = dir.join(format!("theta_eps{eps_tag}.ckpt"));
    let csv_path = dir.join(format!("run_eps{eps_tag}.csv"));
    let ckpt = build_checkpoint(
        &run.params,
        Some(&run.main_optimizer),
        run.sigma_optimizer.as_ref(),
        cfg.hash(),
        base_meta(cfg, cfg.mode, cfg.epsilon, cfg.iters),
        basis.as_ref().map(|(_, id)| *id),
    );
    ckpt.save(&ckpt_path)?;
    write_run_csv(&csv_path, &run.records, SIGMA_HEAD.min(cfg.width)).map_err(io_err(&csv_path))?;
    let final_rel_err = run.records.last().map(|r| r.rel_err).unwrap_or(f64::NAN);
    let best_rel_err = run.records.iter().map(|r| r.rel_err).fold(f64::INFINITY, f64::min);
    Ok(TransferArtifacts {
        checkpoint: ckpt_path,
        csv: csv_path,
        basis: basis.map(|(p, _)| p),
        final_rel_err,
        best_rel_err,
    })
}

#[derive(Debug)]
pub struct SweepArtifacts {
    pub summary: PathBuf,
    pub rows: Vec<SweepRow>,
}

/// Run every grid cell (sigma optimizer x learning rate x mode) with derived
/// seeds `seed + cell_index`; cell failures are recorded and the sweep
/// continues.
pub fn cmd_sweep(cfg: &RunConfig, theta0_path: &Path) -> Result<SweepArtifacts, HarnessError> {
    cfg.validate()?;
    let theta0 = load_theta0(cfg, theta0_path)?;
    let problem = build_problem(cfg.problem, cfg.dim, cfg.epsilon);
    let eps_tag = format_eps(cfg.epsilon);
    let grid = cfg.sweep_grid();

    let split_and_basis = if grid.iter().any(|(m, _)| *m == TrainMode::SvdTransfer) {
        let split = svd_split(&theta0)?;
        let basis = ensure_basis(&cfg.out_dir, &split)?;
        Some((split, basis))
    } else {
        None
    };

    let mut rows = Vec::with_capacity(grid.len());
    for (i, (mode, cell)) in grid.iter().enumerate() {
        let cell_seed = cfg.seed.wrapping_add(i as u64);
        let cell_name = format!("cell{:02}_{}_{}_{}", i, mode.id(), cell.optimizer.id(), cell.lr);
        let cell_dir = cfg.out_dir.join("sweep").join(&cell_name);
        let mut cell_cfg = cfg.clone();
        cell_cfg.mode = *mode;
        cell_cfg.sigma_optimizer = cell.optimizer;
        cell_cfg.sigma_lr = cell.lr;
        cell_cfg.seed = cell_seed;

        let start = match (mode, &split_and_basis) {
            (TrainMode::SvdTransfer, Some((split, _))) => split.clone(),
            _ => theta0.clone(),
        };
        let outcome = transfer_train(&start, *mode, &problem, &cell_cfg.train_options(), cell_seed)
            .map_err(HarnessError::from)
            .and_then(|run| {
                let basis = split_and_basis
                    .as_ref()
                    .filter(|_| *mode == TrainMode::SvdTransfer)
                    .map(|(_, (p, id))| (p.clone(), *id));
                persist_transfer_run(&cell_cfg, &run, &eps_tag, basis, &cell_dir)
            });
        let row = match outcome {
            Ok(artifacts) => SweepRow {
                cell: cell_name,
                mode: mode.id(),
                sigma_optimizer: cell.optimizer.id(),
                sigma_lr: cell.lr,
                seed: cell_seed,
                status: "ok".to_string(),
                final_rel_err: Some(artifacts.final_rel_err),
                best_rel_err: Some(artifacts.best_rel_err),
            },
            Err(e) => SweepRow {
                cell: cell_name,
                mode: mode.id(),
                sigma_optimizer: cell.optimizer.id(),
                sigma_lr: cell.lr,
                seed: cell_seed,
                status: format!("error: {}", e.to_string().replace(',', ";")),
                final_rel_err: None,
                best_rel_err: None,
            },
        };
        rows.push(row);
    }
    let summary = cfg.out_dir.join("summary.csv");
    write_summary_csv(&summary, &rows).map_err(io_err(&summary))?;
    Ok(SweepArtifacts { summary, rows })
}

#[derive(Debug, Clone)]
pub struct EvaluateArgs {
    pub checkpoint: PathBuf,
    /// Defaults to `basis.svd` next to the checkpoint when needed.
    pub basis: Option<PathBuf>,
    /// Override the problem family recorded in the checkpoint.
    pub problem: Option<ProblemKind>,
    /// Override the spatial dimension recorded in the checkpoint.
    pub dim: Option<usize>,
    /// Override the family parameter recorded in the checkpoint.
    pub epsilon: Option<f64>,
    pub n_test: usize,
    pub seed: u64,
    /// Where `eval.csv` is appended; defaults to the checkpoint's directory.
    pub out_dir: Option<PathBuf>,
}

/// Evaluate a stored model on a fresh seeded test batch.
pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<ErrorReport, HarnessError> {
    let ckpt = Checkpoint::load(&args.checkpoint)?;
    let basis = if ckpt.has_block("sigma") {
        let default = args
            .checkpoint
            .parent()
            .map(|p| p.join("basis.svd"))
            .unwrap_or_else(|| PathBuf::from("basis.svd"));
        let path = args.basis.clone().unwrap_or(default);
        Some(BasisArchive::load(&path)?)
    } else {
        None
    };
    let params = params_from_checkpoint(&ckpt, basis.as_ref())?;

    let kind = match args.problem {
        Some(k) => k,
        None => ProblemKind::parse(ckpt.meta_value("problem")?)
            .ok_or_else(|| CheckpointError::MissingMeta("problem".to_string()))?,
    };
    let dim = match args.dim {
        Some(d) => d,
        None => ckpt
            .meta_value("dim")?
            .parse()
            .map_err(|_| CheckpointError::MissingMeta("dim".to_string()))?,
    };
    if params.input_dim() != dim + 1 {
        return Err(CheckpointError::Structural {
            field: "dim",
            ckpt: (params.input_dim() - 1).to_string(),
            cfg: dim.to_string(),
        }
        .into());
    }
    let epsilon = match args.epsilon {
        Some(e) => e,
        None => ckpt
            .meta_value("epsilon")?
            .parse()
            .map_err(|_| CheckpointError::MissingMeta("epsilon".to_string()))?,
    };
    let iteration: u64 = ckpt.meta_value("iteration").map(|v| v.parse().unwrap_or(0)).unwrap_or(0);

    let problem = build_problem(kind, dim, epsilon);
    let batch = sample_test(args.n_test, dim, &mut stream(args.seed, StreamLabel::Test));
    let report = evaluate(&params, &problem, &batch, iteration)?;

    let out_dir = args
        .out_dir
        .clone()
        .or_else(|| args.checkpoint.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    let eval_csv = out_dir.join("eval.csv");
    append_eval_csv(&eval_csv, &report, &args.checkpoint.display().to_string())
        .map_err(io_err(&eval_csv))?;
    Ok(report)
}

/// Both storage models at the given sizes.
pub fn cmd_param_count(n_pdes: u64, m: u64, r: u64, d_in: u64) -> (ParamCounts, ParamCounts) {
    (
        param_count(CountModel::Standard, n_pdes, m, r, d_in),
        param_count(CountModel::SvdShared, n_pdes, m, r, d_in),
    )
}
