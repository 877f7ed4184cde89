//! Fixed-schema CSV logs. Floats are printed with Rust's shortest
//! round-trip formatting, so parsed values reproduce the computed ones
//! bit-for-bit.

use crate::eval::ErrorReport;
use crate::transfer::RunRecord;
use std::io::Write;
use std::path::Path;

/// Base columns of every run log.
pub const RUN_HEADER: &str = "iter,loss_total,loss_int,loss_bc,loss_ic,rel_err,wall_ms";

/// Write a full training log. `sigma_cols > 0` appends `sigma_0..` columns
/// (transfer runs); pretraining logs carry none.
pub fn write_run_csv(path: &Path, records: &[RunRecord], sigma_cols: usize) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut header = RUN_HEADER.to_string();
    for k in 0..sigma_cols {
        header.push_str(&format!(",sigma_{k}"));
    }
    writeln!(f, "{header}")?;
    for r in records {
        write!(
            f,
            "{},{},{},{},{},{},{}",
            r.iteration,
            r.loss.total,
            r.loss.interior_term,
            r.loss.boundary_term,
            r.loss.initial_term,
            r.rel_err,
            r.wall_ms
        )?;
        for k in 0..sigma_cols {
            match r.sigma_head.get(k) {
                Some(s) => write!(f, ",{s}")?,
                None => write!(f, ",")?,
            }
        }
        writeln!(f)?;
    }
    f.flush()
}

/// Append one evaluation row, writing the header first when the file is new.
pub fn append_eval_csv(path: &Path, report: &ErrorReport, checkpoint: &str) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let fresh = !path.exists();
    let mut f = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    if fresh {
        writeln!(f, "problem,epsilon,dim_points,iteration,rel_err,checkpoint")?;
    }
    writeln!(
        f,
        "{},{},{},{},{},{}",
        report.problem.id(),
        report.epsilon,
        report.n_points,
        report.iteration,
        report.relative_error,
        checkpoint
    )
}

/// One row of a sweep summary.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub cell: String,
    pub mode: &'static str,
    pub sigma_optimizer: &'static str,
    pub sigma_lr: f64,
    pub seed: u64,
    pub status: String,
    pub final_rel_err: Option<f64>,
    pub best_rel_err: Option<f64>,
}

pub fn write_summary_csv(path: &Path, rows: &[SweepRow]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "cell,mode,sigma_optimizer,sigma_lr,seed,status,final_rel_err,best_rel_err")?;
    for r in rows {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        writeln!(
            f,
            "{},{},{},{},{},{},{},{}",
            r.cell,
            r.mode,
            r.sigma_optimizer,
            r.sigma_lr,
            r.seed,
            r.status,
            fmt(r.final_rel_err),
            fmt(r.best_rel_err)
        )?;
    }
    f.flush()
}
