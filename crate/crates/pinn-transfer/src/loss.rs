//! The collocation objective: mean squared interior residual weighted by
//! `nu`, plus mean squared boundary and initial residuals, and its full
//! parameter gradient via backpropagation through the derivative jets.

use crate::network::{EvalCtx, NetworkParams, ParamGrad};
use crate::pde::{PdeError, PdeProblem};
use crate::sampling::SampleBatch;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("empty {0} batch")]
    EmptyBatch(&'static str),
    #[error("nu must be positive, got {0}")]
    NonPositiveNu(f64),
    #[error(transparent)]
    Pde(#[from] PdeError),
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
}

/// Loss decomposition: `total = nu * interior + boundary + initial`.
#[derive(Debug, Clone, Copy)]
pub struct LossReport {
    pub interior_term: f64,
    pub boundary_term: f64,
    pub initial_term: f64,
    pub total: f64,
    pub nu: f64,
}

/// The three training batches of one iteration.
#[derive(Debug, Clone)]
pub struct TrainingBatches {
    pub interior: SampleBatch,
    pub boundary: SampleBatch,
    pub initial: SampleBatch,
}

impl TrainingBatches {
    fn validate(&self) -> Result<(), LossError> {
        if self.interior.is_empty() {
            return Err(LossError::EmptyBatch("interior"));
        }
        if self.boundary.is_empty() {
            return Err(LossError::EmptyBatch("boundary"));
        }
        if self.initial.is_empty() {
            return Err(LossError::EmptyBatch("initial"));
        }
        Ok(())
    }
}

pub fn pinn_loss(
    params: &NetworkParams,
    problem: &PdeProblem,
    batches: &TrainingBatches,
    nu: f64,
) -> Result<LossReport, LossError> {
    evaluate_loss(params, problem, batches, nu, false).map(|(report, _)| report)
}

pub fn pinn_loss_grad(
    params: &NetworkParams,
    problem: &PdeProblem,
    batches: &TrainingBatches,
    nu: f64,
) -> Result<(LossReport, ParamGrad), LossError> {
    let (report, grad) = evaluate_loss(params, problem, batches, nu, true)?;
    Ok((report, grad.expect("gradient requested")))
}

fn evaluate_loss(
    params: &NetworkParams,
    problem: &PdeProblem,
    batches: &TrainingBatches,
    nu: f64,
    with_grad: bool,
) -> Result<(LossReport, Option<ParamGrad>), LossError> {
    if !(nu > 0.0) {
        return Err(LossError::NonPositiveNu(nu));
    }
    batches.validate()?;
    let ctx = EvalCtx::new(params);
    let mut grad = with_grad.then(|| ParamGrad::zeros_like(params));

    // Interior: residuals need the full jet, and the gradient flows through
    // the operator's jet pullback.
    let n1 = batches.interior.len() as f64;
    let mut interior_term = 0.0;
    for (t, x) in batches.interior.iter() {
        let mut z = Vec::with_capacity(x.len() + 1);
        z.push(t);
        z.extend_from_slice(x);
        let trace = ctx.jet_trace(&z);
        let jet = ctx.jet_from_trace(&trace);
        let rho = problem.interior_residual(&jet, t, x)?[0];
        interior_term += 0.5 * rho * rho;
        if let Some(g) = grad.as_mut() {
            let cot = problem.interior_pullback(&jet, t, x, &[nu / n1 * rho])?;
            g.add(&ctx.backward_jet_from_trace(&trace, &cot));
        }
    }
    interior_term /= n1;

    // Boundary and initial residuals depend on the value only; use the plain
    // forward/backward path.
    let value_stream = |batch: &SampleBatch,
                            target: &dyn Fn(f64, &[f64]) -> f64,
                            grad: &mut Option<ParamGrad>|
     -> Result<f64, LossError> {
        let n = batch.len() as f64;
        let mut term = 0.0;
        for (t, x) in batch.iter() {
            let mut z = Vec::with_capacity(x.len() + 1);
            z.push(t);
            z.extend_from_slice(x);
            let trace = ctx.value_trace(&z);
            let rho = trace.value()[0] - target(t, x);
            term += 0.5 * rho * rho;
            if let Some(g) = grad.as_mut() {
                g.add(&ctx.backward_value(&trace, &[rho / n]));
            }
        }
        Ok(term / n)
    };

    let boundary_term = value_stream(&batches.boundary, &|t, x| problem.boundary_data(t, x), &mut grad)?;
    let initial_term = value_stream(&batches.initial, &|_, x| problem.initial_data(x), &mut grad)?;

    let total = nu * interior_term + boundary_term + initial_term;
    let report = LossReport { interior_term, boundary_term, initial_term, total, nu };
    Ok((report, grad))
}
