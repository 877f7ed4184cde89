//! Desk-scale pretraining: fit the 2-d linear parabolic problem at eps = 0
//! from scratch and watch the loss and relative error fall.
//!
//! ```bash
//! cargo run --release --example pretrain_parabolic
//! ```

use pinn_transfer::pde::linear_parabolic;
use pinn_transfer::transfer::{pretrain, TrainOptions};

fn main() {
    let problem = linear_parabolic(2, 0.0);
    let opts = TrainOptions {
        iters: 600,
        log_every: 100,
        width: 24,
        n_interior: 1024,
        n_boundary: 256,
        n_initial: 256,
        n_test: 1024,
        ..TrainOptions::default()
    };

    println!("pretraining on the parabolic family at eps = 0 (d = 2, m = {})", opts.width);
    println!("{:>6} {:>12} {:>12} {:>12} {:>12} {:>10}", "iter", "loss", "interior", "boundary", "initial", "rel_err");
    let run = pretrain(&problem, &opts, 7).expect("training converges");
    for r in &run.records {
        println!(
            "{:>6} {:>12.5e} {:>12.5e} {:>12.5e} {:>12.5e} {:>10.4}",
            r.iteration, r.loss.total, r.loss.interior_term, r.loss.boundary_term, r.loss.initial_term, r.rel_err
        );
    }
    let final_err = run.records.last().unwrap().rel_err;
    println!("\nfinal test relative error: {final_err:.4}");
}
