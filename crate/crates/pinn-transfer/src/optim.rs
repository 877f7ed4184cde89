//! First-order optimizers applied per parameter group, plus the
//! nonnegativity projection for singular values.
//!
//! Updates, with gradient `g` and learning rate `eta`:
//!
//! ```text
//! GD:      theta -= eta * g
//! RMSProp: v = beta v + (1-beta) g^2;          theta -= eta g / (sqrt(v) + eps)
//! Adam:    m = b1 m + (1-b1) g; v = b2 v + (1-b2) g^2
//!          mhat = m / (1 - b1^t); vhat = v / (1 - b2^t)
//!          theta -= eta mhat / (sqrt(vhat) + eps)
//! ```

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("non-finite gradient in group '{group}'")]
    NonFiniteGradient { group: String },
    #[error("shape mismatch in group '{group}': params {params}, grad {grad}")]
    Shape { group: String, params: usize, grad: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimKind {
    Gd,
    RmsProp,
    Adam,
}

impl OptimKind {
    pub fn id(&self) -> &'static str {
        match self {
            OptimKind::Gd => "gd",
            OptimKind::RmsProp => "rmsprop",
            OptimKind::Adam => "adam",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gd" => Some(OptimKind::Gd),
            "rmsprop" => Some(OptimKind::RmsProp),
            "adam" => Some(OptimKind::Adam),
            _ => None,
        }
    }
}

/// One mutable parameter block paired with its gradient.
pub struct GradBlock<'a> {
    pub name: &'static str,
    pub params: &'a mut [f64],
    pub grad: &'a [f64],
}

/// State of one optimizer instance covering one parameter group.
///
/// Accumulators are keyed by block name and allocated on first use; their
/// shapes are pinned thereafter. Each group owns its own state: stepping one
/// group never touches another's accumulators.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub kind: OptimKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub rms_beta: f64,
    pub eps: f64,
    pub step_count: u64,
    first_moment: Vec<(&'static str, Vec<f64>)>,
    second_moment: Vec<(&'static str, Vec<f64>)>,
}

impl OptimizerState {
    pub fn new(kind: OptimKind, lr: f64) -> Self {
        OptimizerState {
            kind,
            lr,
            beta1: 0.9,
            beta2: 0.999,
            rms_beta: 0.9,
            eps: 1e-8,
            step_count: 0,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
        }
    }

    pub fn gd(lr: f64) -> Self {
        Self::new(OptimKind::Gd, lr)
    }

    pub fn rmsprop(lr: f64) -> Self {
        Self::new(OptimKind::RmsProp, lr)
    }

    pub fn adam(lr: f64) -> Self {
        Self::new(OptimKind::Adam, lr)
    }

    /// Accumulated first moments by block name (Adam).
    pub fn first_moments(&self) -> &[(&'static str, Vec<f64>)] {
        &self.first_moment
    }

    /// Accumulated second moments by block name (Adam, RMSProp).
    pub fn second_moments(&self) -> &[(&'static str, Vec<f64>)] {
        &self.second_moment
    }

    /// Apply one update to every block of the group.
    pub fn step(&mut self, blocks: &mut [GradBlock<'_>]) -> Result<(), OptimError> {
        for b in blocks.iter() {
            if b.params.len() != b.grad.len() {
                return Err(OptimError::Shape {
                    group: b.name.to_string(),
                    params: b.params.len(),
                    grad: b.grad.len(),
                });
            }
            if b.grad.iter().any(|g| !g.is_finite()) {
                return Err(OptimError::NonFiniteGradient { group: b.name.to_string() });
            }
        }
        self.step_count += 1;
        let t = self.step_count;
        for b in blocks.iter_mut() {
            match self.kind {
                OptimKind::Gd => {
                    for (p, g) in b.params.iter_mut().zip(b.grad) {
                        *p -= self.lr * g;
                    }
                }
                OptimKind::RmsProp => {
                    let v = fetch(&mut self.second_moment, b.name, b.params.len());
                    for ((p, g), vi) in b.params.iter_mut().zip(b.grad).zip(v) {
                        *vi = self.rms_beta * *vi + (1.0 - self.rms_beta) * g * g;
                        *p -= self.lr * g / (vi.sqrt() + self.eps);
                    }
                }
                OptimKind::Adam => {
                    let bc1 = 1.0 - self.beta1.powi(t as i32);
                    let bc2 = 1.0 - self.beta2.powi(t as i32);
                    // Split borrows: moments live in separate vectors.
                    let m = fetch(&mut self.first_moment, b.name, b.params.len());
                    let m_ptr: &mut [f64] = m;
                    let v = fetch(&mut self.second_moment, b.name, b.params.len());
                    for (((p, g), vi), mi) in
                        b.params.iter_mut().zip(b.grad).zip(v.iter_mut()).zip(m_ptr.iter_mut())
                    {
                        *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                        *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                        let mhat = *mi / bc1;
                        let vhat = *vi / bc2;
                        *p -= self.lr * mhat / (vhat.sqrt() + self.eps);
                    }
                }
            }
        }
        Ok(())
    }
}

fn fetch<'a>(store: &'a mut Vec<(&'static str, Vec<f64>)>, name: &'static str, len: usize) -> &'a mut Vec<f64> {
    if let Some(idx) = store.iter().position(|(n, _)| *n == name) {
        let buf = &mut store[idx].1;
        assert_eq!(buf.len(), len, "accumulator shape for block '{name}'");
        return &mut store[idx].1;
    }
    store.push((name, vec![0.0; len]));
    let idx = store.len() - 1;
    &mut store[idx].1
}

/// Elementwise `max(sigma, 0)`, applied after every optimizer step on the
/// singular-value group.
pub fn project_nonnegative(sigma: &mut [f64]) {
    for s in sigma.iter_mut() {
        if *s < 0.0 {
            *s = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_one(state: &mut OptimizerState, params: &mut [f64], grad: &[f64]) {
        let mut blocks = [GradBlock { name: "p", params, grad }];
        state.step(&mut blocks).unwrap();
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        for kind in [OptimKind::Gd, OptimKind::RmsProp, OptimKind::Adam] {
            let mut state = OptimizerState::new(kind, 0.1);
            let mut p = [1.0, -2.0, 0.5];
            let orig = p;
            step_one(&mut state, &mut p, &[0.0; 3]);
            assert_eq!(p, orig, "{kind:?}");
        }
    }

    #[test]
    fn gd_single_step() {
        let mut state = OptimizerState::gd(0.1);
        let mut p = [1.0];
        step_one(&mut state, &mut p, &[0.5]);
        assert!((p[0] - 0.95).abs() <= 1e-16);
    }

    #[test]
    fn rmsprop_single_step_from_zero_state() {
        let mut state = OptimizerState::rmsprop(0.01);
        let mut p = [0.0];
        step_one(&mut state, &mut p, &[1.0]);
        // v = 0.1, step = 0.01 / (sqrt(0.1) + 1e-8)
        let expected = 0.01 / (0.1f64.sqrt() + 1e-8);
        assert!((p[0] + expected).abs() <= 1e-15, "{} vs {expected}", p[0]);
        assert!((expected - 0.0316227).abs() <= 1e-6);
    }

    #[test]
    fn gd_contracts_quadratic() {
        // On f = |theta|^2 / 2 the gradient is theta itself.
        let mut state = OptimizerState::gd(0.1);
        let mut p = [3.0, -4.0];
        for _ in 0..5 {
            let g = p;
            step_one(&mut state, &mut p, &g);
        }
        let norm = (p[0] * p[0] + p[1] * p[1]).sqrt();
        let expected = 5.0 * 0.9f64.powi(5);
        assert!((norm - expected).abs() <= 1e-12 * expected);
    }

    #[test]
    fn adam_step_is_bounded() {
        let mut state = OptimizerState::adam(1e-3);
        let mut p = [0.0; 4];
        let mut rng_state = 123u64;
        for _ in 0..200 {
            let g: Vec<f64> = (0..4)
                .map(|_| {
                    // Tiny xorshift so the trajectory is deterministic.
                    rng_state ^= rng_state << 13;
                    rng_state ^= rng_state >> 7;
                    rng_state ^= rng_state << 17;
                    (rng_state % 2000) as f64 / 1000.0 - 1.0
                })
                .collect();
            let before = p;
            step_one(&mut state, &mut p, &g);
            for (b, a) in before.iter().zip(&p) {
                assert!((a - b).abs() <= 10.0 * 1e-3, "step {}", (a - b).abs());
            }
        }
    }

    #[test]
    fn per_group_state_is_independent() {
        let mut a = OptimizerState::adam(0.01);
        let mut b = OptimizerState::adam(0.01);
        let mut pa1 = [1.0];
        let mut pa2 = [1.0];
        let mut pb = [5.0];
        // Group A stepped alone vs stepped alongside an active group B.
        step_one(&mut a, &mut pa1, &[0.3]);
        step_one(&mut b, &mut pb, &[7.0]);
        step_one(&mut b, &mut pa2, &[0.3]);
        // Same kind and lr but B's accumulators were warmed by a different
        // gradient; the states must differ while A's standalone result is
        // unaffected by B's existence.
        let mut a2 = OptimizerState::adam(0.01);
        let mut pa3 = [1.0];
        step_one(&mut a2, &mut pa3, &[0.3]);
        assert_eq!(pa1, pa3);
        assert_ne!(pa1, pa2);
    }

    #[test]
    fn projection() {
        let mut v = [-1.0, 0.0, 2.0];
        project_nonnegative(&mut v);
        assert_eq!(v, [0.0, 0.0, 2.0]);
        let mut w = [0.5, 1.5];
        project_nonnegative(&mut w);
        assert_eq!(w, [0.5, 1.5]);
        let mut z = [-3.0, 4.0];
        project_nonnegative(&mut z);
        let once = z;
        project_nonnegative(&mut z);
        assert_eq!(z, once);
    }

    #[test]
    fn projection_after_steps_keeps_sigma_nonnegative() {
        let mut state = OptimizerState::gd(0.5);
        let mut sigma = [0.1, 0.02, 1.0];
        for i in 0..20 {
            let g = [(i as f64 * 0.3).sin() + 0.5, 1.0, -0.2];
            let mut blocks = [GradBlock { name: "sigma", params: &mut sigma, grad: &g }];
            state.step(&mut blocks).unwrap();
            project_nonnegative(&mut sigma);
            assert!(sigma.iter().all(|s| *s >= 0.0), "{sigma:?}");
        }
    }

    #[test]
    fn non_finite_gradient_names_the_group() {
        let mut state = OptimizerState::adam(0.01);
        let mut p = [1.0];
        let g = [f64::NAN];
        let mut blocks = [GradBlock { name: "w2", params: &mut p, grad: &g }];
        match state.step(&mut blocks) {
            Err(OptimError::NonFiniteGradient { group }) => assert_eq!(group, "w2"),
            other => panic!("expected non-finite gradient error, got {other:?}"),
        }
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut state = OptimizerState::gd(0.1);
        let mut p = [1.0, 2.0];
        let g = [1.0];
        let mut blocks = [GradBlock { name: "b1", params: &mut p, grad: &g }];
        assert!(matches!(state.step(&mut blocks), Err(OptimError::Shape { .. })));
    }
}
