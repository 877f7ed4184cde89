//! Training orchestration: pretraining from scratch, splitting the hidden
//! weight into frozen singular vectors plus trainable singular values, and
//! the transfer trainer with its comparison modes.
//!
//! One iteration evaluates the loss gradient once at the iteration-start
//! parameters, updates the non-sigma trainable group (always Adam), then
//! updates sigma with its own optimizer and clips it to stay nonnegative.
//! Frozen groups are never touched.

use crate::eval::{evaluate, EvalError};
use crate::linalg::LinalgError;
use crate::loss::{pinn_loss, pinn_loss_grad, LossError, LossReport, TrainingBatches};
use crate::network::{HiddenGrad, HiddenWeight, NetworkError, NetworkParams, ParamGrad};
use crate::optim::{project_nonnegative, GradBlock, OptimError, OptimizerState};
use crate::pde::PdeProblem;
use crate::sampling::{
    sample_boundary, sample_initial, sample_interior, sample_test, stream, SampleBatch, StreamLabel,
};
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransferError {
    #[error("loss diverged (non-finite) at iteration {iteration}")]
    Diverged { iteration: u64, records: Vec<RunRecord> },
    #[error("{mode:?} requires a dense hidden weight; got a factored one")]
    NeedsDense { mode: TrainMode },
    #[error("model input dimension {got} does not match problem dimension + 1 = {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Which parameter groups are trainable during a transfer run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    /// Everything trainable, dense hidden weight.
    Full,
    /// Only the output weight `W2`; all other blocks (including `b2`) frozen.
    FrozenHidden,
    /// Dense `W1` frozen; all other blocks trainable.
    FrozenW1,
    /// `U`, `V` frozen; `sigma` and the non-hidden blocks trainable.
    SvdTransfer,
}

impl TrainMode {
    pub fn id(&self) -> &'static str {
        match self {
            TrainMode::Full => "full",
            TrainMode::FrozenHidden => "frozen_hidden",
            TrainMode::FrozenW1 => "frozen_w1",
            TrainMode::SvdTransfer => "svd_transfer",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(TrainMode::Full),
            "frozen_hidden" => Some(TrainMode::FrozenHidden),
            "frozen_w1" => Some(TrainMode::FrozenW1),
            "svd_transfer" => Some(TrainMode::SvdTransfer),
            _ => None,
        }
    }
}

/// Knobs of one training run. Width is used when initializing from scratch;
/// transfer runs inherit shapes from the pretrained model.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub iters: u64,
    pub log_every: u64,
    pub nu: f64,
    pub width: usize,
    pub n_interior: usize,
    pub n_boundary: usize,
    pub n_initial: usize,
    pub n_test: usize,
    /// 0 keeps the training sets fixed for the whole run; `k > 0` redraws
    /// them every `k` iterations.
    pub resample_every: u64,
    pub main_lr: f64,
    pub sigma_optimizer: crate::optim::OptimKind,
    pub sigma_lr: f64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            iters: 5000,
            log_every: 10,
            nu: 1.0,
            width: 64,
            n_interior: 4000,
            n_boundary: 1000,
            n_initial: 1000,
            n_test: 4096,
            resample_every: 0,
            main_lr: 1e-3,
            sigma_optimizer: crate::optim::OptimKind::Gd,
            sigma_lr: 0.1,
        }
    }
}

/// Number of leading singular values kept in run logs.
pub const SIGMA_HEAD: usize = 16;

/// One logged row of a training run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub iteration: u64,
    pub loss: LossReport,
    pub rel_err: f64,
    /// Largest singular values of the hidden weight, descending; empty when
    /// the run does not log them (pretraining).
    pub sigma_head: Vec<f64>,
    pub wall_ms: u64,
}

/// A finished training run: final parameters, the logged trajectory, and the
/// optimizer states (persisted into checkpoints).
#[derive(Debug)]
pub struct TrainRun {
    pub params: NetworkParams,
    pub records: Vec<RunRecord>,
    pub main_optimizer: OptimizerState,
    /// Present only for [`TrainMode::SvdTransfer`].
    pub sigma_optimizer: Option<OptimizerState>,
}

/// Pretrain a fresh Glorot-initialized model on the given problem (the
/// transfer workflow pretrains at `eps = 0`). All parameters are trainable
/// and optimized by Adam.
pub fn pretrain(problem: &PdeProblem, opts: &TrainOptions, seed: u64) -> Result<TrainRun, TransferError> {
    let mut rng = stream(seed, StreamLabel::WeightInit);
    let params = NetworkParams::glorot_init(problem.d + 1, opts.width, problem.r, &mut rng);
    run_loop(params, TrainMode::Full, problem, opts, seed, true)
}

/// Split a dense pretrained model into frozen singular vectors and trainable
/// singular values: `W1 = U * diag(sigma) * V^T`.
pub fn svd_split(params: &NetworkParams) -> Result<NetworkParams, TransferError> {
    let w1 = match &params.hidden {
        HiddenWeight::Dense(w) => w,
        HiddenWeight::Factored { .. } => {
            return Err(TransferError::NeedsDense { mode: TrainMode::SvdTransfer })
        }
    };
    let f = crate::linalg::svd(w1)?;
    let mut split = params.clone();
    split.hidden = HiddenWeight::factored(f.u, f.v, f.sigma)?;
    Ok(split)
}

/// Adapt a pretrained model to a new family member, starting from
/// `theta_eps(0) = theta0`.
pub fn transfer_train(
    theta0: &NetworkParams,
    mode: TrainMode,
    problem: &PdeProblem,
    opts: &TrainOptions,
    seed: u64,
) -> Result<TrainRun, TransferError> {
    if theta0.input_dim() != problem.d + 1 {
        return Err(TransferError::DimensionMismatch { got: theta0.input_dim(), expected: problem.d + 1 });
    }
    let params = match (mode, &theta0.hidden) {
        (TrainMode::SvdTransfer, HiddenWeight::Dense(_)) => svd_split(theta0)?,
        (TrainMode::SvdTransfer, HiddenWeight::Factored { .. }) => theta0.clone(),
        (m, HiddenWeight::Factored { .. }) => return Err(TransferError::NeedsDense { mode: m }),
        (_, HiddenWeight::Dense(_)) => theta0.clone(),
    };
    run_loop(params, mode, problem, opts, seed, false)
}

fn run_loop(
    mut params: NetworkParams,
    mode: TrainMode,
    problem: &PdeProblem,
    opts: &TrainOptions,
    seed: u64,
    is_pretrain: bool,
) -> Result<TrainRun, TransferError> {
    let d = problem.d;
    let log_sigma = !is_pretrain;
    let mut rng_int = stream(seed, StreamLabel::Interior);
    let mut rng_bdy = stream(seed, StreamLabel::Boundary);
    let mut rng_ini = stream(seed, StreamLabel::Initial);
    let mut rng_test = stream(seed, StreamLabel::Test);

    let mut batches = draw_batches(opts, d, &mut rng_int, &mut rng_bdy, &mut rng_ini);
    let test_batch = sample_test(opts.n_test, d, &mut rng_test);

    let mut main_opt = OptimizerState::adam(opts.main_lr);
    let mut sigma_opt = (mode == TrainMode::SvdTransfer)
        .then(|| OptimizerState::new(opts.sigma_optimizer, opts.sigma_lr));

    let start = Instant::now();
    let mut records = Vec::new();
    records.push(make_record(0, &params, problem, opts, &batches, &test_batch, log_sigma, &start)?);

    for it in 1..=opts.iters {
        if opts.resample_every > 0 && it > 1 && (it - 1) % opts.resample_every == 0 {
            batches = draw_batches(opts, d, &mut rng_int, &mut rng_bdy, &mut rng_ini);
        }
        let (report, grad) = pinn_loss_grad(&params, problem, &batches, opts.nu)?;
        if !report.total.is_finite() {
            return Err(TransferError::Diverged { iteration: it, records });
        }
        apply_updates(&mut params, &grad, mode, &mut main_opt, sigma_opt.as_mut())?;
        if it % opts.log_every == 0 || it == opts.iters {
            records.push(make_record(it, &params, problem, opts, &batches, &test_batch, log_sigma, &start)?);
        }
    }
    Ok(TrainRun { params, records, main_optimizer: main_opt, sigma_optimizer: sigma_opt })
}

fn draw_batches(
    opts: &TrainOptions,
    d: usize,
    rng_int: &mut rand_chacha::ChaCha8Rng,
    rng_bdy: &mut rand_chacha::ChaCha8Rng,
    rng_ini: &mut rand_chacha::ChaCha8Rng,
) -> TrainingBatches {
    TrainingBatches {
        interior: sample_interior(opts.n_interior, d, rng_int),
        boundary: sample_boundary(opts.n_boundary, d, rng_bdy),
        initial: sample_initial(opts.n_initial, d, rng_ini),
    }
}

#[allow(clippy::too_many_arguments)]
fn make_record(
    iteration: u64,
    params: &NetworkParams,
    problem: &PdeProblem,
    opts: &TrainOptions,
    batches: &TrainingBatches,
    test_batch: &SampleBatch,
    log_sigma: bool,
    start: &Instant,
) -> Result<RunRecord, TransferError> {
    let loss = pinn_loss(params, problem, batches, opts.nu)?;
    let rel_err = evaluate(params, problem, test_batch, iteration)?.relative_error;
    let sigma_head = if log_sigma { sigma_snapshot(params)? } else { Vec::new() };
    Ok(RunRecord { iteration, loss, rel_err, sigma_head, wall_ms: start.elapsed().as_millis() as u64 })
}

/// The `SIGMA_HEAD` largest singular values of the hidden weight,
/// descending. Dense weights are decomposed on the fly.
pub fn sigma_snapshot(params: &NetworkParams) -> Result<Vec<f64>, TransferError> {
    let mut sigma = match &params.hidden {
        HiddenWeight::Factored { sigma, .. } => sigma.clone(),
        HiddenWeight::Dense(w) => crate::linalg::svd(w)?.sigma,
    };
    sigma.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sigma.truncate(SIGMA_HEAD);
    Ok(sigma)
}

/// Apply one optimizer step to the trainable groups of the given mode.
fn apply_updates(
    params: &mut NetworkParams,
    grad: &ParamGrad,
    mode: TrainMode,
    main_opt: &mut OptimizerState,
    sigma_opt: Option<&mut OptimizerState>,
) -> Result<(), TransferError> {
    let NetworkParams { w0, b0, hidden, b1, w2, b2, .. } = params;
    let mut main_blocks: Vec<GradBlock> = Vec::with_capacity(6);
    let mut sigma_block: Option<GradBlock> = None;

    match mode {
        TrainMode::FrozenHidden => {
            main_blocks.push(GradBlock { name: "w2", params: w2.as_mut_slice(), grad: grad.w2.as_slice() });
        }
        TrainMode::Full | TrainMode::FrozenW1 | TrainMode::SvdTransfer => {
            main_blocks.push(GradBlock { name: "w0", params: w0.as_mut_slice(), grad: grad.w0.as_slice() });
            main_blocks.push(GradBlock { name: "b0", params: b0, grad: &grad.b0 });
            match (mode, hidden, &grad.hidden) {
                (TrainMode::Full, HiddenWeight::Dense(w), HiddenGrad::Dense(gw)) => {
                    main_blocks.push(GradBlock { name: "w1", params: w.as_mut_slice(), grad: gw.as_slice() });
                }
                (TrainMode::SvdTransfer, HiddenWeight::Factored { sigma, .. }, HiddenGrad::Sigma(gs)) => {
                    sigma_block = Some(GradBlock { name: "sigma", params: sigma, grad: gs });
                }
                (TrainMode::FrozenW1, _, _) => {}
                _ => unreachable!("hidden representation does not match mode"),
            }
            main_blocks.push(GradBlock { name: "b1", params: b1, grad: &grad.b1 });
            main_blocks.push(GradBlock { name: "w2", params: w2.as_mut_slice(), grad: grad.w2.as_slice() });
            main_blocks.push(GradBlock { name: "b2", params: b2, grad: &grad.b2 });
        }
    }

    main_opt.step(&mut main_blocks)?;
    if let Some(mut sb) = sigma_block {
        let opt = sigma_opt.expect("sigma optimizer present in SvdTransfer mode");
        opt.step(std::slice::from_mut(&mut sb))?;
        project_nonnegative(sb.params);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::OptimKind;
    use crate::pde::{allen_cahn, linear_parabolic};

    fn tiny_opts(iters: u64) -> TrainOptions {
        TrainOptions {
            iters,
            log_every: 5,
            width: 6,
            n_interior: 16,
            n_boundary: 8,
            n_initial: 8,
            n_test: 32,
            ..TrainOptions::default()
        }
    }

    #[test]
    fn zero_iterations_returns_initialization() {
        let problem = linear_parabolic(2, 0.0);
        let opts = tiny_opts(0);
        let run = pretrain(&problem, &opts, 3).unwrap();
        let mut rng = stream(3, StreamLabel::WeightInit);
        let init = NetworkParams::glorot_init(3, opts.width, 1, &mut rng);
        assert_eq!(run.params, init);
        assert_eq!(run.records.len(), 1);
        assert_eq!(run.records[0].iteration, 0);
    }

    #[test]
    fn pretrain_is_deterministic() {
        let problem = linear_parabolic(2, 0.0);
        let opts = tiny_opts(12);
        let a = pretrain(&problem, &opts, 7).unwrap();
        let b = pretrain(&problem, &opts, 7).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.records.len(), b.records.len());
        for (x, y) in a.records.iter().zip(&b.records) {
            assert_eq!(x.loss.total, y.loss.total);
            assert_eq!(x.rel_err, y.rel_err);
        }
    }

    #[test]
    fn record_count_matches_schedule() {
        let problem = linear_parabolic(1, 0.0);
        let mut opts = tiny_opts(23);
        opts.log_every = 10;
        let run = pretrain(&problem, &opts, 1).unwrap();
        // Iterations 0, 10, 20, 23.
        let iters: Vec<u64> = run.records.iter().map(|r| r.iteration).collect();
        assert_eq!(iters, vec![0, 10, 20, 23]);
    }

    #[test]
    fn svd_split_round_trip() {
        let problem = linear_parabolic(2, 0.0);
        let theta0 = pretrain(&problem, &tiny_opts(5), 11).unwrap().params;
        let split = svd_split(&theta0).unwrap();
        let w1 = theta0.hidden.effective();
        let rec = split.hidden.effective();
        let mut diff = 0.0f64;
        for (a, b) in w1.as_slice().iter().zip(rec.as_slice()) {
            diff = diff.max((a - b).abs());
        }
        assert!(diff <= 1e-10 * (1.0 + w1.max_abs()), "{diff:e}");
        match &split.hidden {
            HiddenWeight::Factored { sigma, .. } => {
                for w in sigma.windows(2) {
                    assert!(w[0] >= w[1]);
                }
                assert!(sigma.iter().all(|s| *s >= 0.0));
            }
            _ => panic!("expected factored hidden weight"),
        }
        // Twin evaluation.
        let mut rng = stream(5, StreamLabel::Test);
        let pts = sample_test(100, 2, &mut rng);
        for (t, x) in pts.iter() {
            let mut z = vec![t];
            z.extend_from_slice(x);
            let yd = theta0.forward(&z).unwrap()[0];
            let yf = split.forward(&z).unwrap()[0];
            assert!((yd - yf).abs() <= 1e-9, "{yd} vs {yf}");
        }
    }

    fn block_bits(p: &NetworkParams) -> Vec<(String, Vec<u64>)> {
        let mut out: Vec<(String, Vec<u64>)> = p
            .blocks()
            .iter()
            .map(|(n, b)| (n.to_string(), b.iter().map(|v| v.to_bits()).collect()))
            .collect();
        if let HiddenWeight::Factored { u, v, .. } = &p.hidden {
            out.push(("basis_u".into(), u.as_slice().iter().map(|v| v.to_bits()).collect()));
            out.push(("basis_v".into(), v.as_slice().iter().map(|x| x.to_bits()).collect()));
        }
        out
    }

    #[test]
    fn frozen_groups_are_bit_identical() {
        let problem = allen_cahn(1, 0.5);
        let theta0 = pretrain(&problem, &tiny_opts(8), 2).unwrap().params;
        let frozen_by_mode: &[(TrainMode, &[&str])] = &[
            (TrainMode::Full, &[]),
            (TrainMode::FrozenHidden, &["w0", "b0", "w1", "b1", "b2"]),
            (TrainMode::FrozenW1, &["w1"]),
            (TrainMode::SvdTransfer, &["basis_u", "basis_v"]),
        ];
        let target = allen_cahn(1, 0.7);
        for (mode, frozen) in frozen_by_mode {
            let run = transfer_train(&theta0, *mode, &target, &tiny_opts(10), 2).unwrap();
            let before: std::collections::HashMap<_, _> = if *mode == TrainMode::SvdTransfer {
                block_bits(&svd_split(&theta0).unwrap()).into_iter().collect()
            } else {
                block_bits(&theta0).into_iter().collect()
            };
            let after: std::collections::HashMap<_, _> = block_bits(&run.params).into_iter().collect();
            for name in *frozen {
                assert_eq!(before[*name], after[*name], "{mode:?}: block {name} changed");
            }
            // And the trainable output layer must actually have moved.
            assert_ne!(before["w2"], after["w2"], "{mode:?}: w2 never trained");
        }
    }

    #[test]
    fn sigma_stays_nonnegative_and_is_logged() {
        let problem = allen_cahn(1, 0.5);
        let theta0 = pretrain(&problem, &tiny_opts(8), 4).unwrap().params;
        let mut opts = tiny_opts(30);
        opts.sigma_optimizer = OptimKind::Gd;
        opts.sigma_lr = 0.5; // aggressive on purpose
        let run = transfer_train(&theta0, TrainMode::SvdTransfer, &problem, &opts, 4).unwrap();
        for r in &run.records {
            assert!(!r.sigma_head.is_empty());
            assert!(r.sigma_head.iter().all(|s| *s >= 0.0), "iter {}: {:?}", r.iteration, r.sigma_head);
        }
        if let HiddenWeight::Factored { sigma, .. } = &run.params.hidden {
            assert!(sigma.iter().all(|s| *s >= 0.0));
        }
    }

    #[test]
    fn sigma_lr_zero_matches_frozen_w1() {
        let problem = linear_parabolic(2, 0.5);
        let theta0 = pretrain(&linear_parabolic(2, 0.0), &tiny_opts(10), 6).unwrap().params;
        let mut opts = tiny_opts(50);
        opts.log_every = 5;
        opts.sigma_lr = 0.0;
        let ra = transfer_train(&theta0, TrainMode::SvdTransfer, &problem, &opts, 6).unwrap().records;
        let rb = transfer_train(&theta0, TrainMode::FrozenW1, &problem, &opts, 6).unwrap().records;
        assert_eq!(ra.len(), rb.len());
        for (a, b) in ra.iter().zip(&rb) {
            assert!(
                (a.rel_err - b.rel_err).abs() <= 1e-6,
                "iter {}: {} vs {}",
                a.iteration,
                a.rel_err,
                b.rel_err
            );
        }
    }

    #[test]
    fn warm_start_beats_fresh_network() {
        let pre_problem = linear_parabolic(2, 0.0);
        let mut opts = tiny_opts(400);
        opts.width = 12;
        opts.n_interior = 128;
        opts.n_boundary = 32;
        opts.n_initial = 32;
        let theta0 = pretrain(&pre_problem, &opts, 9).unwrap().params;
        let target = linear_parabolic(2, 0.5);
        let records = transfer_train(&theta0, TrainMode::SvdTransfer, &target, &tiny_opts(0), 9)
            .unwrap()
            .records;
        let warm_err = records[0].rel_err;

        let mut rng = stream(10, StreamLabel::WeightInit);
        let fresh = NetworkParams::glorot_init(3, opts.width, 1, &mut rng);
        let mut rng_test = stream(9, StreamLabel::Test);
        let test = sample_test(tiny_opts(0).n_test, 2, &mut rng_test);
        let fresh_err = evaluate(&fresh, &target, &test, 0).unwrap().relative_error;
        assert!(warm_err < fresh_err, "warm {warm_err} vs fresh {fresh_err}");
    }

    #[test]
    fn factored_theta0_rejected_for_dense_modes() {
        let problem = linear_parabolic(1, 0.0);
        let theta0 = pretrain(&problem, &tiny_opts(2), 5).unwrap().params;
        let split = svd_split(&theta0).unwrap();
        assert!(matches!(
            transfer_train(&split, TrainMode::Full, &problem, &tiny_opts(2), 5),
            Err(TransferError::NeedsDense { .. })
        ));
        // Already-split models are accepted for sigma training.
        assert!(transfer_train(&split, TrainMode::SvdTransfer, &problem, &tiny_opts(2), 5).is_ok());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let theta0 = pretrain(&linear_parabolic(1, 0.0), &tiny_opts(2), 5).unwrap().params;
        assert!(matches!(
            transfer_train(&theta0, TrainMode::Full, &linear_parabolic(3, 0.0), &tiny_opts(2), 5),
            Err(TransferError::DimensionMismatch { .. })
        ));
    }
}
