//! Physics-informed neural network (PINN) solvers for parametric PDE
//! families, plus transfer learning across right-hand sides.
//!
//! A two-hidden-layer tanh network is trained so that PDE interior residuals
//! and boundary/initial residuals vanish at sampled collocation points. Once
//! a model is pretrained on one member of a right-hand-side family, it can be
//! adapted to nearby members by freezing the singular vectors of the hidden
//! weight matrix `W1 = U * diag(sigma) * V^T` and retraining only the
//! singular values `sigma` (projected to stay nonnegative), alongside the
//! input/output layers. Full-training and frozen-layer baselines are included
//! for comparison.
//!
//! The crate is organized as a library with one thin CLI binary; see the
//! `examples/` directory for one runnable example per capability:
//!
//! - [`linalg`] — dense matrices and a one-sided Jacobi SVD
//! - [`network`] — the MLP, derivative jets, and parameter gradients
//! - [`pde`] — linear parabolic and Allen-Cahn problem families
//! - [`sampling`] — seeded collocation point generation on (0,1) x unit ball
//! - [`loss`] — the residual objective and its gradient
//! - [`optim`] — GD / RMSProp / Adam and the nonnegativity projection
//! - [`transfer`] — pretraining, SVD splitting, and the transfer trainer
//! - [`eval`] — relative error and storage accounting
//! - [`harness`] — config files, checkpoints, CSV logs, sweeps

pub mod eval;
pub mod harness;
pub mod linalg;
pub mod loss;
pub mod network;
pub mod optim;
pub mod pde;
pub mod sampling;
pub mod transfer;

pub use eval::{evaluate, param_count, relative_error, CountModel, ErrorReport, ParamCounts};
pub use linalg::{reconstruct, svd, Matrix, SvdFactors};
pub use loss::{pinn_loss, pinn_loss_grad, LossReport, TrainingBatches};
pub use network::{HiddenWeight, Jet, JetCotangent, NetworkParams, ParamGrad};
pub use optim::{project_nonnegative, GradBlock, OptimKind, OptimizerState};
pub use pde::{allen_cahn, linear_parabolic, rhs_consistency_check, PdeProblem, ProblemKind};
pub use sampling::{sample_boundary, sample_initial, sample_interior, sample_test, BatchKind, SampleBatch};
pub use transfer::{pretrain, svd_split, transfer_train, RunRecord, TrainMode, TrainOptions};
