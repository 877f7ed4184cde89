//! Problem definitions: differential operators, domains, exact solutions,
//! and the derived right-hand sides for the linear parabolic family and the
//! Allen-Cahn family on `(0,1) x {|x| < 1}`, generic in the spatial
//! dimension `d`.
//!
//! Each family is generated from a closed-form exact solution `u_eps`; the
//! closed-form derivatives below are hand-derived by the chain rule, and the
//! right-hand sides are the differential operators applied to those exact
//! jets, so the residual of the exact solution vanishes identically.
//! [`rhs_consistency_check`] guards the derivations, and the unit tests
//! cross-check every closed-form derivative against finite differences.

use crate::linalg::Matrix;
use crate::network::{Jet, JetCotangent};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use thiserror::Error;

/// Points closer to the origin than this are rejected: the parabolic
/// diffusion coefficient gradient and both exact-solution gradients are
/// singular at `|x| = 0`.
pub const ORIGIN_REJECT_RADIUS: f64 = 1e-8;

/// Allen-Cahn exact derivatives are rejected within this distance of the
/// unit sphere, where the 2.5-power term loses smoothness.
pub const BOUNDARY_REJECT_MARGIN: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum PdeError {
    #[error("point rejected: |x| = {radius:e} is within {margin:e} of a singular shell")]
    PointRejected { radius: f64, margin: f64 },
    #[error("dimension mismatch: point has {got} coordinates, problem has {expected}")]
    Dimension { got: usize, expected: usize },
    #[error(transparent)]
    Network(#[from] crate::network::NetworkError),
}

/// Which PDE family a problem belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `du/dt - div(a(x) grad u) = f` with `a(x) = 1 + |x|/2`.
    Parabolic,
    /// `du/dt - lap u - u + u^3 = f`.
    AllenCahn,
}

impl ProblemKind {
    pub fn id(&self) -> &'static str {
        match self {
            ProblemKind::Parabolic => "parabolic",
            ProblemKind::AllenCahn => "allen_cahn",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "parabolic" => Some(ProblemKind::Parabolic),
            "allen_cahn" => Some(ProblemKind::AllenCahn),
            _ => None,
        }
    }
}

/// Closed-form exact solution of one family member, with its hand-derived
/// time derivative, spatial gradient, and spatial Laplacian.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    kind: ProblemKind,
    d: usize,
    epsilon: f64,
}

impl ExactSolution {
    pub fn value(&self, t: f64, x: &[f64]) -> f64 {
        let rho = norm(x);
        match self.kind {
            // u = exp(|x| sqrt(1-t) + eps (1-t))
            ProblemKind::Parabolic => {
                let s = (1.0 - t).max(0.0).sqrt();
                (rho * s + self.epsilon * s * s).exp()
            }
            // u = exp(-t) (sin(pi/2 (1-|x|)^2.5) + eps sin(pi/2 (1-|x|)))
            ProblemKind::AllenCahn => (-t).exp() * self.ac_w(rho),
        }
    }

    pub fn dt(&self, t: f64, x: &[f64]) -> Result<f64, PdeError> {
        let rho = self.check_radius(x)?;
        match self.kind {
            ProblemKind::Parabolic => {
                // du/dt = u * (-|x| / (2 sqrt(1-t)) - eps)
                let s = (1.0 - t).sqrt();
                Ok(self.value(t, x) * (-rho / (2.0 * s) - self.epsilon))
            }
            ProblemKind::AllenCahn => Ok(-self.value(t, x)),
        }
    }

    pub fn grad(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, PdeError> {
        let rho = self.check_radius(x)?;
        let radial = match self.kind {
            // du/drho = u * sqrt(1-t)
            ProblemKind::Parabolic => self.value(t, x) * (1.0 - t).sqrt(),
            ProblemKind::AllenCahn => (-t).exp() * self.ac_wp(rho),
        };
        Ok(x.iter().map(|xi| radial * xi / rho).collect())
    }

    pub fn laplacian(&self, t: f64, x: &[f64]) -> Result<f64, PdeError> {
        let rho = self.check_radius(x)?;
        let dm1 = (self.d - 1) as f64;
        match self.kind {
            // lap u = u s^2 + (d-1) u s / rho, s = sqrt(1-t)
            ProblemKind::Parabolic => {
                let s = (1.0 - t).sqrt();
                Ok(self.value(t, x) * s * (s + dm1 / rho))
            }
            // lap u = e^{-t} (w'' + (d-1) w' / rho)
            ProblemKind::AllenCahn => {
                Ok((-t).exp() * (self.ac_wpp(rho) + dm1 * self.ac_wp(rho) / rho))
            }
        }
    }

    /// Full exact jet at `(t, x)` in the same shape the network produces.
    pub fn jet(&self, t: f64, x: &[f64]) -> Result<Jet, PdeError> {
        let grad = self.grad(t, x)?;
        Ok(Jet {
            value: vec![self.value(t, x)],
            dt: vec![self.dt(t, x)?],
            grad_x: Matrix::from_fn(1, x.len(), |_, j| grad[j]),
            laplacian_x: vec![self.laplacian(t, x)?],
        })
    }

    /// Radial profile w(rho) of the Allen-Cahn solution at t = 0.
    fn ac_w(&self, rho: f64) -> f64 {
        // (1-rho) can round slightly negative on boundary samples; the
        // 2.5 power is only defined for nonnegative bases.
        let q = (1.0 - rho).max(0.0);
        (PI / 2.0 * q.powf(2.5)).sin() + self.epsilon * (PI / 2.0 * (1.0 - rho)).sin()
    }

    /// w'(rho) = -(5 pi / 4)(1-rho)^{3/2} cos(pi/2 (1-rho)^{5/2})
    ///           - (eps pi / 2) cos(pi/2 (1-rho))
    fn ac_wp(&self, rho: f64) -> f64 {
        let q = (1.0 - rho).max(0.0);
        let a = PI / 2.0 * q.powf(2.5);
        -(5.0 * PI / 4.0) * q.powf(1.5) * a.cos()
            - self.epsilon * PI / 2.0 * (PI / 2.0 * (1.0 - rho)).cos()
    }

    /// w''(rho) = (15 pi / 8)(1-rho)^{1/2} cos A - (25 pi^2 / 16)(1-rho)^3 sin A
    ///            - (eps pi^2 / 4) sin B
    fn ac_wpp(&self, rho: f64) -> f64 {
        let q = (1.0 - rho).max(0.0);
        let a = PI / 2.0 * q.powf(2.5);
        (15.0 * PI / 8.0) * q.sqrt() * a.cos() - (25.0 * PI * PI / 16.0) * q.powi(3) * a.sin()
            - self.epsilon * PI * PI / 4.0 * (PI / 2.0 * (1.0 - rho)).sin()
    }

    fn check_radius(&self, x: &[f64]) -> Result<f64, PdeError> {
        let rho = norm(x);
        if rho < ORIGIN_REJECT_RADIUS {
            return Err(PdeError::PointRejected { radius: rho, margin: ORIGIN_REJECT_RADIUS });
        }
        if self.kind == ProblemKind::AllenCahn && (rho - 1.0).abs() < BOUNDARY_REJECT_MARGIN {
            return Err(PdeError::PointRejected { radius: rho, margin: BOUNDARY_REJECT_MARGIN });
        }
        Ok(rho)
    }
}

/// One member of a PDE family: the differential operator, boundary/initial
/// operators, derived right-hand sides, and the exact solution.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub d: usize,
    pub r: usize,
    pub epsilon: f64,
    pub kind: ProblemKind,
    exact: ExactSolution,
    /// Test-only forcing corruption; stays 0 in production paths.
    f_bias: f64,
}

/// Linear parabolic family: `du/dt - div(a grad u) = f_eps` with
/// `a(x) = 1 + |x|/2`, Dirichlet data on the unit sphere, and the initial
/// condition at `t = 0`, all generated from
/// `u_eps = exp(|x| sqrt(1-t) + eps (1-t))`.
pub fn linear_parabolic(d: usize, epsilon: f64) -> PdeProblem {
    assert!(d >= 1, "spatial dimension must be at least 1");
    PdeProblem {
        d,
        r: 1,
        epsilon,
        kind: ProblemKind::Parabolic,
        exact: ExactSolution { kind: ProblemKind::Parabolic, d, epsilon },
        f_bias: 0.0,
    }
}

/// Allen-Cahn family: `du/dt - lap u - u + u^3 = f_eps`, same domain, from
/// `u_eps = exp(-t) (sin(pi/2 (1-|x|)^2.5) + eps sin(pi/2 (1-|x|)))`.
pub fn allen_cahn(d: usize, epsilon: f64) -> PdeProblem {
    assert!(d >= 1, "spatial dimension must be at least 1");
    PdeProblem {
        d,
        r: 1,
        epsilon,
        kind: ProblemKind::AllenCahn,
        exact: ExactSolution { kind: ProblemKind::AllenCahn, d, epsilon },
        f_bias: 0.0,
    }
}

impl PdeProblem {
    pub fn exact(&self) -> &ExactSolution {
        &self.exact
    }

    /// Interior operator applied to a jet. Shared verbatim between the
    /// residual and the derived forcing so the exact solution cancels
    /// bit-for-bit.
    fn apply_interior(&self, jet: &Jet, x: &[f64], rho: f64) -> f64 {
        match self.kind {
            ProblemKind::Parabolic => {
                // dt - a lap - grad(a) . grad, with grad(a) = x / (2 rho)
                let a = 1.0 + 0.5 * rho;
                let mut adv = 0.0;
                for (xi, gi) in x.iter().zip(jet.grad_x.row(0)) {
                    adv += xi / (2.0 * rho) * gi;
                }
                jet.dt[0] - a * jet.laplacian_x[0] - adv
            }
            ProblemKind::AllenCahn => {
                let u = jet.value[0];
                jet.dt[0] - jet.laplacian_x[0] - u + u * u * u
            }
        }
    }

    /// Forcing `f_eps(t, x)`: the interior operator applied to the exact jet.
    pub fn forcing(&self, t: f64, x: &[f64]) -> Result<f64, PdeError> {
        let rho = norm(x);
        let jet = self.exact.jet(t, x)?;
        Ok(self.apply_interior(&jet, x, rho) + self.f_bias)
    }

    /// Dirichlet boundary data `g_eps(t, x)` on the unit sphere.
    pub fn boundary_data(&self, t: f64, x: &[f64]) -> f64 {
        self.exact.value(t, x)
    }

    /// Initial data `h_eps(x)` at `t = 0`.
    pub fn initial_data(&self, x: &[f64]) -> f64 {
        self.exact.value(0.0, x)
    }

    pub fn interior_residual(&self, jet: &Jet, t: f64, x: &[f64]) -> Result<Vec<f64>, PdeError> {
        self.check_dim(x)?;
        let rho = norm(x);
        if rho < ORIGIN_REJECT_RADIUS {
            return Err(PdeError::PointRejected { radius: rho, margin: ORIGIN_REJECT_RADIUS });
        }
        Ok(vec![self.apply_interior(jet, x, rho) - self.forcing(t, x)?])
    }

    /// Pullback of the interior residual: maps the residual cotangent to a
    /// jet cotangent. For Allen-Cahn the cubic term contributes
    /// `3 u^2 - 1` into the value slot.
    pub fn interior_pullback(&self, jet: &Jet, _t: f64, x: &[f64], rbar: &[f64]) -> Result<JetCotangent, PdeError> {
        self.check_dim(x)?;
        let rho = norm(x);
        if rho < ORIGIN_REJECT_RADIUS {
            return Err(PdeError::PointRejected { radius: rho, margin: ORIGIN_REJECT_RADIUS });
        }
        let g = rbar[0];
        let mut cot = JetCotangent::zeros(1, self.d);
        cot.dt[0] = g;
        match self.kind {
            ProblemKind::Parabolic => {
                let a = 1.0 + 0.5 * rho;
                cot.laplacian_x[0] = -g * a;
                for (j, xi) in x.iter().enumerate() {
                    cot.grad_x.set(0, j, -g * xi / (2.0 * rho));
                }
            }
            ProblemKind::AllenCahn => {
                let u = jet.value[0];
                cot.laplacian_x[0] = -g;
                cot.value[0] = g * (3.0 * u * u - 1.0);
            }
        }
        Ok(cot)
    }

    /// `u - g_eps` on the boundary; needs only the jet value.
    pub fn boundary_residual(&self, jet: &Jet, t: f64, x: &[f64]) -> Result<Vec<f64>, PdeError> {
        self.check_dim(x)?;
        Ok(vec![jet.value[0] - self.boundary_data(t, x)])
    }

    /// `u(0, .) - h_eps`; needs only the jet value.
    pub fn initial_residual(&self, jet: &Jet, x: &[f64]) -> Result<Vec<f64>, PdeError> {
        self.check_dim(x)?;
        Ok(vec![jet.value[0] - self.initial_data(x)])
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), PdeError> {
        if x.len() != self.d {
            return Err(PdeError::Dimension { got: x.len(), expected: self.d });
        }
        Ok(())
    }

    #[cfg(test)]
    pub(crate) fn with_forcing_bias(mut self, bias: f64) -> Self {
        self.f_bias = bias;
        self
    }
}

/// Max absolute residual of the exact solution's own jets over a fixed
/// seeded cloud of 1000 interior, boundary, and initial points. Values above
/// ~1e-12 indicate a broken derivation.
pub fn rhs_consistency_check(problem: &PdeProblem) -> Result<f64, PdeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c10d);
    let d = problem.d;
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        // Interior point, away from the singular shells.
        let (t, x) = loop {
            let t: f64 = rng.gen_range(0.0..1.0);
            let x = ball_point(d, &mut rng);
            let rho = norm(&x);
            if rho > ORIGIN_REJECT_RADIUS && (rho - 1.0).abs() > BOUNDARY_REJECT_MARGIN && t > 0.0 {
                break (t, x);
            }
        };
        let jet = problem.exact.jet(t, &x)?;
        worst = worst.max(problem.interior_residual(&jet, t, &x)?[0].abs());

        // Boundary point (value only; no derivative shells involved).
        let xb = sphere_point(d, &mut rng);
        let tb: f64 = rng.gen_range(0.0..1.0);
        let jet_b = Jet {
            value: vec![problem.exact.value(tb, &xb)],
            dt: vec![0.0],
            grad_x: Matrix::zeros(1, d),
            laplacian_x: vec![0.0],
        };
        worst = worst.max(problem.boundary_residual(&jet_b, tb, &xb)?[0].abs());

        // Initial point.
        let xi = loop {
            let x = ball_point(d, &mut rng);
            if norm(&x) > ORIGIN_REJECT_RADIUS {
                break x;
            }
        };
        let jet_i = Jet {
            value: vec![problem.exact.value(0.0, &xi)],
            dt: vec![0.0],
            grad_x: Matrix::zeros(1, d),
            laplacian_x: vec![0.0],
        };
        worst = worst.max(problem.initial_residual(&jet_i, &xi)?[0].abs());
    }
    Ok(worst)
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; the uniform draw is in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn ball_point(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
    let n = norm(&g);
    if n == 0.0 {
        return vec![0.0; d];
    }
    let radius: f64 = rng.gen::<f64>().powf(1.0 / d as f64);
    g.iter().map(|gi| gi / n * radius).collect()
}

fn sphere_point(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let n = norm(&g);
        if n > 1e-12 {
            return g.iter().map(|gi| gi / n).collect();
        }
    }
}
