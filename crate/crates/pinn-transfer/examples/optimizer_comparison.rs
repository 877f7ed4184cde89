//! Try different optimizers and learning rates on the singular values while
//! the rest of the network trains with Adam, mirroring the sweep protocol:
//! GD and RMSProp cells against the frozen baseline (lr = 0).
//!
//! ```bash
//! cargo run --release --example optimizer_comparison
//! ```

use pinn_transfer::optim::OptimKind;
use pinn_transfer::pde::allen_cahn;
use pinn_transfer::transfer::{pretrain, svd_split, transfer_train, TrainMode, TrainOptions};

fn main() {
    let seed = 3;
    let opts = TrainOptions {
        iters: 500,
        log_every: 100,
        width: 24,
        n_interior: 1024,
        n_boundary: 256,
        n_initial: 256,
        n_test: 1024,
        ..TrainOptions::default()
    };

    println!("pretraining allen-cahn at eps = 0 ...");
    let theta0 = pretrain(&allen_cahn(2, 0.0), &opts, seed).unwrap().params;
    let split = svd_split(&theta0).unwrap();
    let target = allen_cahn(2, 0.5);

    let cells: &[(OptimKind, f64)] = &[
        (OptimKind::Gd, 1e-1),
        (OptimKind::Gd, 1e-2),
        (OptimKind::RmsProp, 1e-2),
        (OptimKind::RmsProp, 1e-3),
        (OptimKind::Adam, 1e-3),
        (OptimKind::Gd, 0.0), // frozen-basis baseline
    ];

    println!("\nsigma optimizer sweep on the eps = 0.5 member ({} iterations):", opts.iters);
    println!("{:>10} {:>8} {:>14} {:>14}", "optimizer", "lr", "final rel_err", "best rel_err");
    for (kind, lr) in cells {
        let mut cell_opts = opts.clone();
        cell_opts.sigma_optimizer = *kind;
        cell_opts.sigma_lr = *lr;
        match transfer_train(&split, TrainMode::SvdTransfer, &target, &cell_opts, seed) {
            Ok(run) => {
                let last = run.records.last().unwrap().rel_err;
                let best = run.records.iter().map(|r| r.rel_err).fold(f64::INFINITY, f64::min);
                println!("{:>10} {:>8} {:>14.5} {:>14.5}", kind.id(), lr, last, best);
            }
            Err(e) => println!("{:>10} {:>8} failed: {e}", kind.id(), lr),
        }
    }
}
