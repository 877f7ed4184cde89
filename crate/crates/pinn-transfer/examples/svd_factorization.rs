//! Decompose a random square matrix with the one-sided Jacobi SVD and verify
//! the factor invariants.
//!
//! ```bash
//! cargo run --example svd_factorization
//! ```

use pinn_transfer::linalg::{orthonormality_defect, reconstruct, svd, Matrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let n = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let a = Matrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));

    let f = svd(&a).expect("square finite matrix");
    println!("singular values of a random {n}x{n} matrix:");
    for (k, s) in f.sigma.iter().enumerate() {
        println!("  sigma[{k}] = {s:.12}");
    }

    let rec = reconstruct(&f).unwrap();
    let mut residual = 0.0f64;
    for (x, y) in rec.as_slice().iter().zip(a.as_slice()) {
        residual += (x - y) * (x - y);
    }
    let rel = residual.sqrt() / a.frobenius_norm();
    println!("\nreconstruction |U S V^T - A|_F / |A|_F = {rel:.3e}");
    println!("orthonormality defect of U: {:.3e}", orthonormality_defect(&f.u));
    println!("orthonormality defect of V: {:.3e}", orthonormality_defect(&f.v));

    // Rank-deficient corner: the all-ones matrix has one nonzero singular
    // value equal to n; the remaining U columns are completed orthonormally.
    let ones = Matrix::from_fn(4, 4, |_, _| 1.0);
    let f = svd(&ones).unwrap();
    println!("\nall-ones 4x4: sigma = {:?}", f.sigma);
    println!("orthonormality defect of completed U: {:.3e}", orthonormality_defect(&f.u));
}
