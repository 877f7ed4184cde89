//! CLI plumbing: configuration files, binary checkpoints, the shared basis
//! archive, CSV logs, and sweep orchestration.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod csvlog;

pub use checkpoint::{
    build_checkpoint, params_from_checkpoint, BasisArchive, Block, Checkpoint, CheckpointError,
};
pub use commands::{
    build_problem, cmd_evaluate, cmd_param_count, cmd_pretrain, cmd_sweep, cmd_transfer, format_eps,
    EvaluateArgs, HarnessError, PretrainArtifacts, SweepArtifacts, TransferArtifacts,
};
pub use config::{ConfigError, RunConfig, SweepCell, OUT_ROOT_ENV};
pub use csvlog::{append_eval_csv, write_run_csv, write_summary_csv, SweepRow, RUN_HEADER};
