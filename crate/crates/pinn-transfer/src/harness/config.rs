//! Run configuration: a flat `key = value` text format with `#` comments,
//! overridable by CLI flags.

use crate::optim::OptimKind;
use crate::pde::ProblemKind;
use crate::transfer::{TrainMode, TrainOptions};
use std::fmt::Write as _;
use std::path::PathBuf;
use thiserror::Error;

/// Environment variable naming the default output root.
pub const OUT_ROOT_ENV: &str = "PINN_TRANSFER_OUT";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("cannot read config file {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// One sigma-optimizer cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub optimizer: OptimKind,
    pub lr: f64,
}

/// Everything a run needs, with defaults for every key.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub dim: usize,
    pub epsilon: f64,
    pub width: usize,
    pub nu: f64,
    pub seed: u64,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub n_initial: usize,
    pub n_test: usize,
    pub resample_every: u64,
    pub iters: u64,
    pub mode: TrainMode,
    pub sigma_optimizer: OptimKind,
    pub sigma_lr: f64,
    pub main_lr: f64,
    pub log_every: u64,
    pub out_dir: PathBuf,
    /// `optimizer:lr` cells tried by `sweep`; empty means "the single cell
    /// given by `sigma_optimizer` and `sigma_lr`".
    pub sweep_cells: Vec<SweepCell>,
    /// Modes crossed with the sweep cells; sigma cells only apply to
    /// `svd_transfer` entries.
    pub sweep_modes: Vec<TrainMode>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let out_root = std::env::var(OUT_ROOT_ENV).unwrap_or_else(|_| "runs".to_string());
        RunConfig {
            problem: ProblemKind::Parabolic,
            dim: 10,
            epsilon: 0.5,
            width: 64,
            nu: 1.0,
            seed: 0,
            n_interior: 4000,
            n_boundary: 1000,
            n_initial: 1000,
            n_test: 4096,
            resample_every: 0,
            iters: 5000,
            mode: TrainMode::SvdTransfer,
            sigma_optimizer: OptimKind::Gd,
            sigma_lr: 0.1,
            main_lr: 1e-3,
            log_every: 10,
            out_dir: PathBuf::from(out_root),
            sweep_cells: Vec::new(),
            sweep_modes: vec![TrainMode::SvdTransfer],
        }
    }
}

impl RunConfig {
    /// Parse a config file on top of the defaults.
    pub fn from_file(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Apply `key = value` lines; `#` starts a comment. All offending keys
    /// are reported together.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut pairs = Vec::new();
        let mut bad = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once('=') {
                Some((k, v)) => pairs.push((k.trim().to_string(), v.trim().to_string())),
                None => bad.push(format!("line {}: expected 'key = value', got '{line}'", lineno + 1)),
            }
        }
        if !bad.is_empty() {
            return Err(ConfigError::Invalid(bad.join("; ")));
        }
        self.apply_pairs(&pairs)
    }

    /// Apply `(key, value)` overrides; all offending keys are reported
    /// together.
    pub fn apply_pairs(&mut self, pairs: &[(String, String)]) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        for (key, value) in pairs {
            if let Err(msg) = self.set(key, value) {
                bad.push(msg);
            }
        }
        if !bad.is_empty() {
            return Err(ConfigError::Invalid(bad.join("; ")));
        }
        self.validate()
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
            value.parse().map_err(|_| format!("key '{key}': cannot parse '{value}'"))
        }
        match key {
            "problem" => {
                self.problem =
                    ProblemKind::parse(value).ok_or(format!("key 'problem': unknown problem '{value}'"))?
            }
            "dim" => self.dim = num(key, value)?,
            "epsilon" => self.epsilon = num(key, value)?,
            "width" => self.width = num(key, value)?,
            "nu" => self.nu = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "n_interior" => self.n_interior = num(key, value)?,
            "n_boundary" => self.n_boundary = num(key, value)?,
            "n_initial" => self.n_initial = num(key, value)?,
            "n_test" => self.n_test = num(key, value)?,
            "resample_every" => self.resample_every = num(key, value)?,
            "iters" => self.iters = num(key, value)?,
            "mode" => {
                self.mode = TrainMode::parse(value).ok_or(format!("key 'mode': unknown mode '{value}'"))?
            }
            "sigma_optimizer" => {
                self.sigma_optimizer = OptimKind::parse(value)
                    .ok_or(format!("key 'sigma_optimizer': unknown optimizer '{value}'"))?
            }
            "sigma_lr" => self.sigma_lr = num(key, value)?,
            "main_lr" => self.main_lr = num(key, value)?,
            "log_every" => self.log_every = num(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            "sweep_cells" => self.sweep_cells = parse_cells(value)?,
            "sweep_modes" => {
                let mut modes = Vec::new();
                for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                    modes.push(
                        TrainMode::parse(part).ok_or(format!("key 'sweep_modes': unknown mode '{part}'"))?,
                    );
                }
                if modes.is_empty() {
                    return Err("key 'sweep_modes': empty list".to_string());
                }
                self.sweep_modes = modes;
            }
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        if self.dim == 0 {
            bad.push("key 'dim': must be at least 1".to_string());
        }
        if self.width == 0 {
            bad.push("key 'width': must be at least 1".to_string());
        }
        if !(self.nu > 0.0) {
            bad.push(format!("key 'nu': must be positive, got {}", self.nu));
        }
        for (key, n) in [
            ("n_interior", self.n_interior),
            ("n_boundary", self.n_boundary),
            ("n_initial", self.n_initial),
            ("n_test", self.n_test),
        ] {
            if n == 0 {
                bad.push(format!("key '{key}': must be at least 1"));
            }
        }
        if self.log_every == 0 {
            bad.push("key 'log_every': must be at least 1".to_string());
        }
        if !(self.main_lr > 0.0) {
            bad.push(format!("key 'main_lr': must be positive, got {}", self.main_lr));
        }
        if !(self.sigma_lr >= 0.0) {
            bad.push(format!("key 'sigma_lr': must be nonnegative, got {}", self.sigma_lr));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad.join("; ")))
        }
    }

    pub fn train_options(&self) -> TrainOptions {
        TrainOptions {
            iters: self.iters,
            log_every: self.log_every,
            nu: self.nu,
            width: self.width,
            n_interior: self.n_interior,
            n_boundary: self.n_boundary,
            n_initial: self.n_initial,
            n_test: self.n_test,
            resample_every: self.resample_every,
            main_lr: self.main_lr,
            sigma_optimizer: self.sigma_optimizer,
            sigma_lr: self.sigma_lr,
        }
    }

    /// Sweep grid: explicit cells (or the scalar sigma settings) crossed
    /// with the sweep modes.
    pub fn sweep_grid(&self) -> Vec<(TrainMode, SweepCell)> {
        let cells = if self.sweep_cells.is_empty() {
            vec![SweepCell { optimizer: self.sigma_optimizer, lr: self.sigma_lr }]
        } else {
            self.sweep_cells.clone()
        };
        let mut grid = Vec::new();
        for mode in &self.sweep_modes {
            for cell in &cells {
                grid.push((*mode, *cell));
            }
        }
        grid
    }

    /// Canonical `key = value` rendering; also the input of [`Self::hash`].
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "problem = {}", self.problem.id());
        let _ = writeln!(s, "dim = {}", self.dim);
        let _ = writeln!(s, "epsilon = {}", self.epsilon);
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "nu = {}", self.nu);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "n_interior = {}", self.n_interior);
        let _ = writeln!(s, "n_boundary = {}", self.n_boundary);
        let _ = writeln!(s, "n_initial = {}", self.n_initial);
        let _ = writeln!(s, "n_test = {}", self.n_test);
        let _ = writeln!(s, "resample_every = {}", self.resample_every);
        let _ = writeln!(s, "iters = {}", self.iters);
        let _ = writeln!(s, "mode = {}", self.mode.id());
        let _ = writeln!(s, "sigma_optimizer = {}", self.sigma_optimizer.id());
        let _ = writeln!(s, "sigma_lr = {}", self.sigma_lr);
        let _ = writeln!(s, "main_lr = {}", self.main_lr);
        let _ = writeln!(s, "log_every = {}", self.log_every);
        s
    }

    /// FNV-1a hash of the canonical rendering, stored in checkpoints.
    pub fn hash(&self) -> u64 {
        fnv1a(self.canonical().as_bytes())
    }
}

fn parse_cells(value: &str) -> Result<Vec<SweepCell>, String> {
    let mut cells = Vec::new();
    for part in value.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (opt, lr) = part
            .split_once(':')
            .ok_or(format!("key 'sweep_cells': expected 'optimizer:lr', got '{part}'"))?;
        let optimizer = OptimKind::parse(opt.trim())
            .ok_or(format!("key 'sweep_cells': unknown optimizer '{opt}'"))?;
        let lr: f64 = lr
            .trim()
            .parse()
            .map_err(|_| format!("key 'sweep_cells': cannot parse learning rate '{lr}'"))?;
        if lr < 0.0 {
            return Err(format!("key 'sweep_cells': negative learning rate {lr}"));
        }
        cells.push(SweepCell { optimizer, lr });
    }
    if cells.is_empty() {
        return Err("key 'sweep_cells': empty list".to_string());
    }
    Ok(cells)
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in bytes {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
