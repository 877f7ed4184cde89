//! Two-hidden-layer tanh MLP, its forward pass, an extended pass producing
//! input-derivative jets (value, time derivative, spatial gradient, spatial
//! Laplacian), and parameter-gradient backpropagation through that pass.
//!
//! Derivatives are propagated by second-order forward tangents, one seed per
//! input coordinate. Through a linear layer `(z, z', z'') -> (Wz+b, Wz', Wz'')`;
//! through tanh, with `a = tanh(z)` and `s = 1 - a^2`:
//!
//! ```text
//! a'  = s * z'
//! a'' = s * z'' - 2 a s (z')^2
//! ```
//!
//! All seeds share one primal evaluation, so the tangents of every input
//! coordinate travel together as `m x d_in` matrices.

use crate::linalg::{dot, Matrix};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("factor orthonormality defect {defect:e} exceeds 1e-8")]
    Orthonormality { defect: f64 },
    #[error("negative singular value {value} at index {index}")]
    NegativeSigma { index: usize, value: f64 },
}

/// Hidden weight matrix, either stored densely or factored as
/// `U * diag(sigma) * V^T` with `U`, `V` frozen and `sigma` trainable.
#[derive(Debug, Clone, PartialEq)]
pub enum HiddenWeight {
    Dense(Matrix),
    Factored { u: Matrix, v: Matrix, sigma: Vec<f64> },
}

impl HiddenWeight {
    /// Checked factored constructor: `u`, `v` must be orthonormal within
    /// 1e-8 and `sigma` nonnegative.
    pub fn factored(u: Matrix, v: Matrix, sigma: Vec<f64>) -> Result<Self, NetworkError> {
        let m = sigma.len();
        if u.rows() != m || u.cols() != m || v.rows() != m || v.cols() != m {
            return Err(NetworkError::Dimension(format!(
                "factored hidden weight: u {}x{}, v {}x{}, sigma {}",
                u.rows(),
                u.cols(),
                v.rows(),
                v.cols(),
                m
            )));
        }
        for mat in [&u, &v] {
            let defect = crate::linalg::orthonormality_defect(mat);
            if defect > 1e-8 {
                return Err(NetworkError::Orthonormality { defect });
            }
        }
        if let Some((index, &value)) = sigma.iter().enumerate().find(|(_, s)| **s < 0.0) {
            return Err(NetworkError::NegativeSigma { index, value });
        }
        Ok(HiddenWeight::Factored { u, v, sigma })
    }

    pub fn width(&self) -> usize {
        match self {
            HiddenWeight::Dense(w) => w.rows(),
            HiddenWeight::Factored { sigma, .. } => sigma.len(),
        }
    }

    /// Materialize the effective `m x m` matrix.
    pub fn effective(&self) -> Matrix {
        match self {
            HiddenWeight::Dense(w) => w.clone(),
            HiddenWeight::Factored { u, v, sigma } => {
                let m = sigma.len();
                let mut scaled = u.clone();
                for i in 0..m {
                    for j in 0..m {
                        scaled.set(i, j, scaled.get(i, j) * sigma[j]);
                    }
                }
                scaled.matmul(&v.transpose())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
}

/// All weights and biases of the two-hidden-layer MLP
/// `W2 tanh(W1 tanh(W0 x + b0) + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkParams {
    pub w0: Matrix,
    pub b0: Vec<f64>,
    pub hidden: HiddenWeight,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
    pub activation: Activation,
}

impl NetworkParams {
    pub fn new(
        w0: Matrix,
        b0: Vec<f64>,
        hidden: HiddenWeight,
        b1: Vec<f64>,
        w2: Matrix,
        b2: Vec<f64>,
    ) -> Result<Self, NetworkError> {
        let m = hidden.width();
        if w0.rows() != m || b0.len() != m || b1.len() != m || w2.cols() != m || w2.rows() != b2.len() {
            return Err(NetworkError::Dimension(format!(
                "w0 {}x{}, b0 {}, hidden width {}, b1 {}, w2 {}x{}, b2 {}",
                w0.rows(),
                w0.cols(),
                b0.len(),
                m,
                b1.len(),
                w2.rows(),
                w2.cols(),
                b2.len()
            )));
        }
        let p = NetworkParams { w0, b0, hidden, b1, w2, b2, activation: Activation::Tanh };
        for (name, block) in p.blocks() {
            if block.iter().any(|e| !e.is_finite()) {
                return Err(NetworkError::NonFinite(name.to_string()));
            }
        }
        Ok(p)
    }

    /// Glorot-uniform weights (`+-sqrt(6 / (fan_in + fan_out))`), zero biases.
    pub fn glorot_init(d_in: usize, m: usize, r: usize, rng: &mut impl Rng) -> Self {
        let bound0 = (6.0 / (d_in + m) as f64).sqrt();
        let w0 = Matrix::from_fn(m, d_in, |_, _| rng.gen_range(-bound0..bound0));
        let bound1 = (6.0 / (2 * m) as f64).sqrt();
        let w1 = Matrix::from_fn(m, m, |_, _| rng.gen_range(-bound1..bound1));
        let bound2 = (6.0 / (m + r) as f64).sqrt();
        let w2 = Matrix::from_fn(r, m, |_, _| rng.gen_range(-bound2..bound2));
        NetworkParams {
            w0,
            b0: vec![0.0; m],
            hidden: HiddenWeight::Dense(w1),
            b1: vec![0.0; m],
            w2,
            b2: vec![0.0; r],
            activation: Activation::Tanh,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w0.cols()
    }

    pub fn width(&self) -> usize {
        self.hidden.width()
    }

    pub fn output_dim(&self) -> usize {
        self.w2.rows()
    }

    /// Named views of every parameter block, factored hidden weights exposing
    /// only `sigma` (the frozen bases are not parameters).
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = vec![("w0", self.w0.as_slice()), ("b0", self.b0.as_slice())];
        match &self.hidden {
            HiddenWeight::Dense(w) => out.push(("w1", w.as_slice())),
            HiddenWeight::Factored { sigma, .. } => out.push(("sigma", sigma.as_slice())),
        }
        out.push(("b1", self.b1.as_slice()));
        out.push(("w2", self.w2.as_slice()));
        out.push(("b2", self.b2.as_slice()));
        out
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, NetworkError> {
        if x.len() != self.input_dim() {
            return Err(NetworkError::Dimension(format!(
                "input length {} for input dimension {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(EvalCtx::new(self).forward(x))
    }

    /// Evaluate at `(t, x)` and return the jet of derivatives needed by the
    /// PDE residuals.
    pub fn forward_jet(&self, t: f64, x: &[f64]) -> Result<Jet, NetworkError> {
        self.check_tx(x)?;
        let ctx = EvalCtx::new(self);
        let trace = ctx.jet_trace(&assemble(t, x));
        let jet = ctx.jet_from_trace(&trace);
        if !jet.is_finite() {
            return Err(NetworkError::NonFinite("jet".to_string()));
        }
        Ok(jet)
    }

    /// Gradient of `<cotangent, jet>` with respect to every trainable
    /// parameter. For a factored hidden weight the gradient of `sigma_k` is
    /// `u_k^T (dL/dW1) v_k`.
    pub fn backward_jet(&self, t: f64, x: &[f64], cot: &JetCotangent) -> Result<ParamGrad, NetworkError> {
        self.check_tx(x)?;
        let (r, d) = (self.output_dim(), self.input_dim() - 1);
        if cot.value.len() != r || cot.dt.len() != r || cot.laplacian_x.len() != r {
            return Err(NetworkError::Dimension("cotangent output length".to_string()));
        }
        if cot.grad_x.rows() != r || cot.grad_x.cols() != d {
            return Err(NetworkError::Dimension("cotangent gradient shape".to_string()));
        }
        let ctx = EvalCtx::new(self);
        let trace = ctx.jet_trace(&assemble(t, x));
        Ok(ctx.backward_jet_from_trace(&trace, cot))
    }

    fn check_tx(&self, x: &[f64]) -> Result<(), NetworkError> {
        if x.len() + 1 != self.input_dim() {
            return Err(NetworkError::Dimension(format!(
                "spatial input length {} for input dimension {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }
}

fn assemble(t: f64, x: &[f64]) -> Vec<f64> {
    let mut z = Vec::with_capacity(x.len() + 1);
    z.push(t);
    z.extend_from_slice(x);
    z
}

/// Network output jet at one point: value, time derivative, spatial gradient
/// (`r x d`), and spatial Laplacian.
#[derive(Debug, Clone)]
pub struct Jet {
    pub value: Vec<f64>,
    pub dt: Vec<f64>,
    pub grad_x: Matrix,
    pub laplacian_x: Vec<f64>,
}

impl Jet {
    pub fn is_finite(&self) -> bool {
        self.value.iter().all(|v| v.is_finite())
            && self.dt.iter().all(|v| v.is_finite())
            && self.grad_x.as_slice().iter().all(|v| v.is_finite())
            && self.laplacian_x.iter().all(|v| v.is_finite())
    }
}

/// Cotangents paired with each jet component.
#[derive(Debug, Clone)]
pub struct JetCotangent {
    pub value: Vec<f64>,
    pub dt: Vec<f64>,
    pub grad_x: Matrix,
    pub laplacian_x: Vec<f64>,
}

impl JetCotangent {
    pub fn zeros(r: usize, d: usize) -> Self {
        JetCotangent { value: vec![0.0; r], dt: vec![0.0; r], grad_x: Matrix::zeros(r, d), laplacian_x: vec![0.0; r] }
    }

    /// Cotangent on the value only (boundary/initial residuals).
    pub fn value_only(vbar: Vec<f64>, d: usize) -> Self {
        let r = vbar.len();
        JetCotangent { value: vbar, dt: vec![0.0; r], grad_x: Matrix::zeros(r, d), laplacian_x: vec![0.0; r] }
    }
}

/// Gradient of the hidden weight: dense `dL/dW1`, or `dL/dsigma` when the
/// bases are frozen.
#[derive(Debug, Clone)]
pub enum HiddenGrad {
    Dense(Matrix),
    Sigma(Vec<f64>),
}

/// Parameter gradients, shape-mirroring [`NetworkParams`].
#[derive(Debug, Clone)]
pub struct ParamGrad {
    pub w0: Matrix,
    pub b0: Vec<f64>,
    pub hidden: HiddenGrad,
    pub b1: Vec<f64>,
    pub w2: Matrix,
    pub b2: Vec<f64>,
}

impl ParamGrad {
    pub fn zeros_like(p: &NetworkParams) -> Self {
        let hidden = match &p.hidden {
            HiddenWeight::Dense(w) => HiddenGrad::Dense(Matrix::zeros(w.rows(), w.cols())),
            HiddenWeight::Factored { sigma, .. } => HiddenGrad::Sigma(vec![0.0; sigma.len()]),
        };
        ParamGrad {
            w0: Matrix::zeros(p.w0.rows(), p.w0.cols()),
            b0: vec![0.0; p.b0.len()],
            hidden,
            b1: vec![0.0; p.b1.len()],
            w2: Matrix::zeros(p.w2.rows(), p.w2.cols()),
            b2: vec![0.0; p.b2.len()],
        }
    }

    pub fn add(&mut self, other: &ParamGrad) {
        self.w0.add_assign(&other.w0);
        add_slices(&mut self.b0, &other.b0);
        match (&mut self.hidden, &other.hidden) {
            (HiddenGrad::Dense(a), HiddenGrad::Dense(b)) => a.add_assign(b),
            (HiddenGrad::Sigma(a), HiddenGrad::Sigma(b)) => add_slices(a, b),
            _ => panic!("mixed hidden gradient representations"),
        }
        add_slices(&mut self.b1, &other.b1);
        self.w2.add_assign(&other.w2);
        add_slices(&mut self.b2, &other.b2);
    }

    pub fn scale(&mut self, alpha: f64) {
        self.w0.scale(alpha);
        scale_slice(&mut self.b0, alpha);
        match &mut self.hidden {
            HiddenGrad::Dense(a) => a.scale(alpha),
            HiddenGrad::Sigma(a) => scale_slice(a, alpha),
        }
        scale_slice(&mut self.b1, alpha);
        self.w2.scale(alpha);
        scale_slice(&mut self.b2, alpha);
    }

    /// Named views mirroring [`NetworkParams::blocks`].
    pub fn blocks(&self) -> Vec<(&'static str, &[f64])> {
        let mut out = vec![("w0", self.w0.as_slice()), ("b0", self.b0.as_slice())];
        match &self.hidden {
            HiddenGrad::Dense(w) => out.push(("w1", w.as_slice())),
            HiddenGrad::Sigma(s) => out.push(("sigma", s.as_slice())),
        }
        out.push(("b1", self.b1.as_slice()));
        out.push(("w2", self.w2.as_slice()));
        out.push(("b2", self.b2.as_slice()));
        out
    }
}

fn add_slices(a: &mut [f64], b: &[f64]) {
    debug_assert_eq!(a.len(), b.len());
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

fn scale_slice(a: &mut [f64], alpha: f64) {
    for x in a.iter_mut() {
        *x *= alpha;
    }
}

// ============================================================================
// Evaluation context: one effective-W1 materialization shared by a batch
// ============================================================================

pub(crate) struct EvalCtx<'a> {
    p: &'a NetworkParams,
    /// Effective hidden matrix, materialized once per batch.
    w1: Matrix,
    w1_t: Matrix,
    w2_t: Matrix,
    /// `w0 (.) w0`, the squared seed tangents of the first layer.
    w0_sq: Matrix,
    /// `(U^T, V^T)` when the hidden weight is factored.
    basis_t: Option<(Matrix, Matrix)>,
}

/// Intermediates of one extended forward pass. Tangent matrices are `m x D`
/// (`D = d_in`), one column per input-coordinate seed.
pub(crate) struct JetTrace {
    input: Vec<f64>,
    a0: Vec<f64>,
    s0: Vec<f64>,
    a0p: Matrix,
    a0pp: Matrix,
    a1: Vec<f64>,
    s1: Vec<f64>,
    v1: Matrix,
    w1t: Matrix,
    a1p: Matrix,
    a1pp: Matrix,
    value: Vec<f64>,
    yp: Matrix,
    ypp: Matrix,
}

/// Intermediates of a plain value pass (boundary/initial residuals need no
/// derivatives, so the tangent matrices are skipped).
pub(crate) struct ValueTrace {
    input: Vec<f64>,
    a0: Vec<f64>,
    s0: Vec<f64>,
    a1: Vec<f64>,
    s1: Vec<f64>,
    value: Vec<f64>,
}

impl ValueTrace {
    pub(crate) fn value(&self) -> &[f64] {
        &self.value
    }
}

impl<'a> EvalCtx<'a> {
    pub(crate) fn new(p: &'a NetworkParams) -> Self {
        let w1 = p.hidden.effective();
        let basis_t = match &p.hidden {
            HiddenWeight::Factored { u, v, .. } => Some((u.transpose(), v.transpose())),
            HiddenWeight::Dense(_) => None,
        };
        EvalCtx {
            p,
            w1_t: w1.transpose(),
            w2_t: p.w2.transpose(),
            w0_sq: hadamard(&p.w0, &p.w0),
            w1,
            basis_t,
        }
    }

    pub(crate) fn forward(&self, z: &[f64]) -> Vec<f64> {
        self.value_trace(z).value
    }

    pub(crate) fn value_trace(&self, z: &[f64]) -> ValueTrace {
        let p = self.p;
        let mut z0 = p.w0.matvec(z);
        add_slices(&mut z0, &p.b0);
        let a0: Vec<f64> = z0.iter().map(|v| v.tanh()).collect();
        let s0: Vec<f64> = a0.iter().map(|a| 1.0 - a * a).collect();
        let mut z1 = self.w1.matvec(&a0);
        add_slices(&mut z1, &p.b1);
        let a1: Vec<f64> = z1.iter().map(|v| v.tanh()).collect();
        let s1: Vec<f64> = a1.iter().map(|a| 1.0 - a * a).collect();
        let mut value = p.w2.matvec(&a1);
        add_slices(&mut value, &p.b2);
        ValueTrace { input: z.to_vec(), a0, s0, a1, s1, value }
    }

    pub(crate) fn jet_trace(&self, z: &[f64]) -> JetTrace {
        let p = self.p;
        let vt = self.value_trace(z);
        // Seed tangents: z0' columns are W0 e_i, i.e. W0 itself; z0'' = 0.
        let a0p = scale_rows(&p.w0, &vt.s0);
        let coeff0: Vec<f64> = vt.a0.iter().zip(&vt.s0).map(|(a, s)| -2.0 * a * s).collect();
        let a0pp = scale_rows(&self.w0_sq, &coeff0);

        let v1 = self.w1.matmul(&a0p);
        let w1t = self.w1.matmul(&a0pp);
        let a1p = scale_rows(&v1, &vt.s1);
        let coeff1: Vec<f64> = vt.a1.iter().zip(&vt.s1).map(|(a, s)| -2.0 * a * s).collect();
        let mut a1pp = scale_rows(&w1t, &vt.s1);
        let v1sq_scaled = scale_rows(&hadamard(&v1, &v1), &coeff1);
        a1pp.add_assign(&v1sq_scaled);

        let yp = p.w2.matmul(&a1p);
        let ypp = p.w2.matmul(&a1pp);
        JetTrace {
            input: vt.input,
            a0: vt.a0,
            s0: vt.s0,
            a0p,
            a0pp,
            a1: vt.a1,
            s1: vt.s1,
            v1,
            w1t,
            a1p,
            a1pp,
            value: vt.value,
            yp,
            ypp,
        }
    }

    pub(crate) fn jet_from_trace(&self, tr: &JetTrace) -> Jet {
        let r = self.p.output_dim();
        let d = self.p.input_dim() - 1;
        let dt = tr.yp.column(0);
        let grad_x = Matrix::from_fn(r, d, |i, j| tr.yp.get(i, j + 1));
        let laplacian_x = (0..r)
            .map(|i| (1..=d).map(|j| tr.ypp.get(i, j)).sum())
            .collect();
        Jet { value: tr.value.clone(), dt, grad_x, laplacian_x }
    }

    pub(crate) fn backward_jet_from_trace(&self, tr: &JetTrace, cot: &JetCotangent) -> ParamGrad {
        let p = self.p;
        let (r, dim) = (p.output_dim(), p.input_dim());

        // Output-level cotangent matrices: column 0 is the time seed.
        let ybar = &cot.value;
        let ypbar = Matrix::from_fn(r, dim, |i, j| if j == 0 { cot.dt[i] } else { cot.grad_x.get(i, j - 1) });
        let yppbar = Matrix::from_fn(r, dim, |i, j| if j == 0 { 0.0 } else { cot.laplacian_x[i] });

        // Output layer.
        let mut dw2 = Matrix::zeros(r, p.width());
        dw2.add_outer(1.0, ybar, &tr.a1);
        dw2.add_assign(&ypbar.matmul_transb(&tr.a1p));
        dw2.add_assign(&yppbar.matmul_transb(&tr.a1pp));
        let db2 = ybar.clone();
        let a1bar = p.w2.matvec_t(ybar);
        let a1pbar = self.w2_t.matmul(&ypbar);
        let a1ppbar = self.w2_t.matmul(&yppbar);

        // tanh layer 1. With a = tanh(z), s = 1 - a^2:
        //   d(a')/dz  = -2 a s z',   d(a'')/dz = -2 a s z'' - 2 s (1 - 3a^2) (z')^2
        let z1bar = tanh_layer_zbar(&tr.a1, &tr.s1, &a1bar, &a1pbar, &a1ppbar, &tr.v1, &tr.w1t);
        let v1bar = tangent_bar(&tr.s1, &tr.a1, &a1pbar, &a1ppbar, &tr.v1);
        let w1tbar = scale_rows(&a1ppbar, &tr.s1);

        // Hidden linear layer: z1 = W1 a0 + b1, v1 = W1 a0', w1t = W1 a0''.
        let db1 = z1bar.clone();
        let a0bar = self.w1.matvec_t(&z1bar);
        let a0pbar = self.w1_t.matmul(&v1bar);
        let a0ppbar = self.w1_t.matmul(&w1tbar);
        let hidden = match &p.hidden {
            HiddenWeight::Dense(_) => {
                // dW1 is a sum of 1 + 2D rank-one terms; outer products keep
                // the m x m accumulation loops contiguous.
                let mut dw1 = Matrix::zeros(p.width(), p.width());
                dw1.add_outer(1.0, &z1bar, &tr.a0);
                let mut xcol = vec![0.0; p.width()];
                let mut ycol = vec![0.0; p.width()];
                for d in 0..dim {
                    v1bar.copy_col_into(d, &mut xcol);
                    tr.a0p.copy_col_into(d, &mut ycol);
                    dw1.add_outer(1.0, &xcol, &ycol);
                    w1tbar.copy_col_into(d, &mut xcol);
                    tr.a0pp.copy_col_into(d, &mut ycol);
                    dw1.add_outer(1.0, &xcol, &ycol);
                }
                HiddenGrad::Dense(dw1)
            }
            HiddenWeight::Factored { u, v, .. } => {
                // dL/dsigma_k = u_k^T (dL/dW1) v_k, assembled per outer-product
                // term without materializing the dense gradient.
                let (ut, vt) = self.basis_t.as_ref().expect("factored context");
                let mut sbar = hadamard_vec(&u.matvec_t(&z1bar), &v.matvec_t(&tr.a0));
                add_slices(&mut sbar, &row_dots(&ut.matmul(&v1bar), &vt.matmul(&tr.a0p)));
                add_slices(&mut sbar, &row_dots(&ut.matmul(&w1tbar), &vt.matmul(&tr.a0pp)));
                HiddenGrad::Sigma(sbar)
            }
        };

        // tanh layer 0: z0'' = 0, so a0'' = -2 a0 s0 (z0')^2 and the z''
        // cotangent path is absent.
        let z0bar = tanh_layer_zbar(&tr.a0, &tr.s0, &a0bar, &a0pbar, &a0ppbar, &p.w0, &Matrix::zeros(p.width(), dim));
        let u0bar = tangent_bar(&tr.s0, &tr.a0, &a0pbar, &a0ppbar, &p.w0);

        // Input layer: z0 = W0 z + b0 and the seed matrix is W0 itself.
        let mut dw0 = u0bar;
        dw0.add_outer(1.0, &z0bar, &tr.input);
        let db0 = z0bar;

        ParamGrad { w0: dw0, b0: db0, hidden, b1: db1, w2: dw2, b2: db2 }
    }

    /// Classic value-only backprop (used for boundary/initial residuals).
    pub(crate) fn backward_value(&self, tr: &ValueTrace, ybar: &[f64]) -> ParamGrad {
        let p = self.p;
        let mut dw2 = Matrix::zeros(p.output_dim(), p.width());
        dw2.add_outer(1.0, ybar, &tr.a1);
        let db2 = ybar.to_vec();
        let a1bar = p.w2.matvec_t(ybar);
        let z1bar: Vec<f64> = a1bar.iter().zip(&tr.s1).map(|(g, s)| g * s).collect();
        let db1 = z1bar.clone();
        let hidden = match &p.hidden {
            HiddenWeight::Dense(_) => {
                let mut dw1 = Matrix::zeros(p.width(), p.width());
                dw1.add_outer(1.0, &z1bar, &tr.a0);
                HiddenGrad::Dense(dw1)
            }
            HiddenWeight::Factored { u, v, .. } => {
                HiddenGrad::Sigma(hadamard_vec(&u.matvec_t(&z1bar), &v.matvec_t(&tr.a0)))
            }
        };
        let a0bar = self.w1.matvec_t(&z1bar);
        let z0bar: Vec<f64> = a0bar.iter().zip(&tr.s0).map(|(g, s)| g * s).collect();
        let mut dw0 = Matrix::zeros(p.width(), p.input_dim());
        dw0.add_outer(1.0, &z0bar, &tr.input);
        let db0 = z0bar;
        ParamGrad { w0: dw0, b0: db0, hidden, b1: db1, w2: dw2, b2: db2 }
    }
}

/// Cotangent on the pre-activation `z` of a tanh layer whose outputs are
/// `(a, a'_i, a''_i)` with seed tangents `zp_i` (`v`) and `zpp_i` (`w`).
fn tanh_layer_zbar(
    a: &[f64],
    s: &[f64],
    abar: &[f64],
    apbar: &Matrix,
    appbar: &Matrix,
    v: &Matrix,
    w: &Matrix,
) -> Vec<f64> {
    let m = a.len();
    let mut out = vec![0.0; m];
    let ap_v = row_dots(apbar, v);
    let app_w = row_dots(appbar, w);
    let app_vv = row_dots_sq(appbar, v);
    for i in 0..m {
        let (ai, si) = (a[i], s[i]);
        out[i] = abar[i] * si
            - 2.0 * ai * si * (ap_v[i] + app_w[i])
            - 2.0 * si * (1.0 - 3.0 * ai * ai) * app_vv[i];
    }
    out
}

/// Cotangent on the first-order tangents `z'` of a tanh layer:
/// `s * abar' - 4 a s (abar'' . z')` per seed column.
fn tangent_bar(s: &[f64], a: &[f64], apbar: &Matrix, appbar: &Matrix, v: &Matrix) -> Matrix {
    let mut out = scale_rows(apbar, s);
    let mut second = hadamard(appbar, v);
    let coeff: Vec<f64> = a.iter().zip(s).map(|(ai, si)| -4.0 * ai * si).collect();
    second = scale_rows(&second, &coeff);
    out.add_assign(&second);
    out
}

fn scale_rows(m: &Matrix, s: &[f64]) -> Matrix {
    debug_assert_eq!(m.rows(), s.len());
    let mut out = m.clone();
    for i in 0..out.rows() {
        let si = s[i];
        for e in out.row_mut(i) {
            *e *= si;
        }
    }
    out
}

fn hadamard(a: &Matrix, b: &Matrix) -> Matrix {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    let mut out = a.clone();
    for (x, y) in out.as_mut_slice().iter_mut().zip(b.as_slice()) {
        *x *= y;
    }
    out
}

fn hadamard_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

/// Per-row dot products of two equally shaped matrices.
fn row_dots(a: &Matrix, b: &Matrix) -> Vec<f64> {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    (0..a.rows()).map(|i| dot(a.row(i), b.row(i))).collect()
}

/// Per-row sums of `a_ij * b_ij^2`.
fn row_dots_sq(a: &Matrix, b: &Matrix) -> Vec<f64> {
    debug_assert_eq!((a.rows(), a.cols()), (b.rows(), b.cols()));
    (0..a.rows())
        .map(|i| a.row(i).iter().zip(b.row(i)).map(|(x, y)| x * y * y).sum())
        .collect()
}
