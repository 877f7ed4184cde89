//! Seeded Monte-Carlo collocation points on `(0,1) x B(0,1)` and its
//! boundary, in arbitrary spatial dimension.
//!
//! All generators are deterministic functions of the RNG state. A master
//! seed is split into independent streams by fixed labels, so the interior,
//! boundary, initial, and test sets of one run are reproducible in isolation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

/// Minimum radius kept when sampling the ball; the PDE operators are
/// singular at the origin.
pub const MIN_RADIUS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BatchKind {
    Interior,
    Boundary,
    Initial,
    Test,
}

/// A batch of collocation points: `times[i]` pairs with `points[i]`.
#[derive(Debug, Clone)]
pub struct SampleBatch {
    pub kind: BatchKind,
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> {
        self.times.iter().copied().zip(self.points.iter().map(|p| p.as_slice()))
    }
}

/// Fixed stream labels for splitting one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamLabel {
    WeightInit = 0,
    Interior = 1,
    Boundary = 2,
    Initial = 3,
    Test = 4,
}

/// Counter-based generator for `(seed, label)`; streams with different
/// labels are independent.
pub fn stream(seed: u64, label: StreamLabel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(label as u64);
    rng
}

/// Interior batch: `t` uniform on (0,1), `x` uniform on the unit ball via
/// `x = g * u^{1/d} / |g|` with `g` standard Gaussian and `u` uniform;
/// points inside the origin shell are rejected and redrawn.
pub fn sample_interior(n: usize, d: usize, rng: &mut impl Rng) -> SampleBatch {
    let (times, points) = interior_draws(n, d, rng);
    SampleBatch { kind: BatchKind::Interior, times, points }
}

/// Boundary batch: `t` uniform on (0,1), `x = g / |g|` on the unit sphere.
pub fn sample_boundary(n: usize, d: usize, rng: &mut impl Rng) -> SampleBatch {
    let mut times = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(open_unit(rng));
        points.push(sphere_point(d, rng));
    }
    SampleBatch { kind: BatchKind::Boundary, times, points }
}

/// Initial batch: `t = 0` exactly, `x` uniform on the unit ball.
pub fn sample_initial(n: usize, d: usize, rng: &mut impl Rng) -> SampleBatch {
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        points.push(ball_point(d, rng));
    }
    SampleBatch { kind: BatchKind::Initial, times: vec![0.0; n], points }
}

/// Test batch: interior-distributed points at mixed times.
pub fn sample_test(n: usize, d: usize, rng: &mut impl Rng) -> SampleBatch {
    let (times, points) = interior_draws(n, d, rng);
    SampleBatch { kind: BatchKind::Test, times, points }
}

fn interior_draws(n: usize, d: usize, rng: &mut impl Rng) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut times = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(open_unit(rng));
        points.push(ball_point(d, rng));
    }
    (times, points)
}

/// Uniform on the open interval (0, 1).
fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let t: f64 = rng.gen();
        if t > 0.0 {
            return t;
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller with u1 in (0, 1].
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn ball_point(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let gn = norm(&g);
        if gn == 0.0 {
            continue;
        }
        let radius: f64 = rng.gen::<f64>().powf(1.0 / d as f64);
        if radius <= MIN_RADIUS {
            continue;
        }
        return g.iter().map(|gi| gi / gn * radius).collect();
    }
}

fn sphere_point(d: usize, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| gaussian(rng)).collect();
        let gn = norm(&g);
        if gn > 1e-12 {
            return g.iter().map(|gi| gi / gn).collect();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_invariants() {
        let mut rng = stream(1, StreamLabel::Interior);
        let b = sample_interior(2000, 4, &mut rng);
        assert_eq!(b.len(), 2000);
        for (t, x) in b.iter() {
            assert!(t > 0.0 && t < 1.0);
            let r = norm(x);
            assert!(r > MIN_RADIUS && r < 1.0, "radius {r}");
        }
    }

    #[test]
    fn boundary_invariants() {
        let mut rng = stream(1, StreamLabel::Boundary);
        let b = sample_boundary(2000, 5, &mut rng);
        for (t, x) in b.iter() {
            assert!(t > 0.0 && t < 1.0);
            assert!((norm(x) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn initial_time_is_exactly_zero() {
        let mut rng = stream(1, StreamLabel::Initial);
        let b = sample_initial(500, 3, &mut rng);
        assert!(b.times.iter().all(|t| *t == 0.0));
        for (_, x) in b.iter() {
            assert!(norm(x) < 1.0 && norm(x) > MIN_RADIUS);
        }
    }

    #[test]
    fn fixed_seed_reproduces_batches() {
        let mut a = stream(42, StreamLabel::Interior);
        let mut b = stream(42, StreamLabel::Interior);
        let ba = sample_interior(100, 3, &mut a);
        let bb = sample_interior(100, 3, &mut b);
        assert_eq!(ba.times, bb.times);
        assert_eq!(ba.points, bb.points);
    }

    #[test]
    fn streams_are_independent_of_draw_order() {
        // Drawing interior first must not change the boundary stream.
        let mut i1 = stream(7, StreamLabel::Interior);
        let mut b1 = stream(7, StreamLabel::Boundary);
        let _ = sample_interior(50, 2, &mut i1);
        let bd1 = sample_boundary(50, 2, &mut b1);

        let mut b2 = stream(7, StreamLabel::Boundary);
        let bd2 = sample_boundary(50, 2, &mut b2);
        assert_eq!(bd1.points, bd2.points);
    }

    #[test]
    fn d1_interior_mean_radius_is_half() {
        let mut rng = stream(3, StreamLabel::Interior);
        let b = sample_interior(100_000, 1, &mut rng);
        let mean: f64 = b.points.iter().map(|x| x[0].abs()).sum::<f64>() / b.len() as f64;
        assert!((mean - 0.5).abs() <= 0.01, "mean |x| = {mean}");
    }

    #[test]
    fn d2_boundary_mean_is_centered() {
        let mut rng = stream(4, StreamLabel::Boundary);
        let b = sample_boundary(100_000, 2, &mut rng);
        let mean: f64 = b.points.iter().map(|x| x[0]).sum::<f64>() / b.len() as f64;
        assert!(mean.abs() <= 0.02, "mean x1 = {mean}");
    }

    /// Radial CDF of the uniform ball is rho^d; check the Kolmogorov-Smirnov
    /// distance at 1e5 samples.
    #[test]
    fn radial_distribution_matches_ball_cdf() {
        for d in [1usize, 3, 10] {
            let mut rng = stream(5, StreamLabel::Interior);
            let b = sample_interior(100_000, d, &mut rng);
            let mut radii: Vec<f64> = b.points.iter().map(|x| norm(x)).collect();
            radii.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = radii.len() as f64;
            let mut ks = 0.0f64;
            for (i, r) in radii.iter().enumerate() {
                let cdf = r.powi(d as i32);
                let emp_hi = (i + 1) as f64 / n;
                let emp_lo = i as f64 / n;
                ks = ks.max((cdf - emp_hi).abs()).max((cdf - emp_lo).abs());
            }
            assert!(ks <= 0.02, "d={d}: KS distance {ks}");
        }
    }

    #[test]
    fn initial_radial_cdf() {
        let mut rng = stream(6, StreamLabel::Initial);
        let b = sample_initial(100_000, 3, &mut rng);
        let frac = b.points.iter().filter(|x| norm(x) <= 0.5).count() as f64 / b.len() as f64;
        assert!((frac - 0.125).abs() <= 0.01, "P(r <= 1/2) = {frac}");
    }
}
