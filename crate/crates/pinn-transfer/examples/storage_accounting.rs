//! Storage accounting for solving a family of n PDEs: independent dense
//! models versus shared singular vectors with per-model singular values.
//!
//! ```bash
//! cargo run --example storage_accounting
//! ```

use pinn_transfer::eval::{param_count, CountModel};

fn main() {
    let (m, r, d_in) = (100u64, 1u64, 11u64);
    println!("hidden width m = {m}, output r = {r}, input d_in = {d_in}\n");
    println!("{:>6} {:>16} {:>16} {:>9}", "n PDEs", "standard", "shared bases", "ratio");
    for n in [1u64, 2, 5, 10, 20, 50] {
        let std = param_count(CountModel::Standard, n, m, r, d_in);
        let svd = param_count(CountModel::SvdShared, n, m, r, d_in);
        println!(
            "{:>6} {:>16} {:>16} {:>9.3}",
            n,
            std.total,
            svd.total,
            svd.total as f64 / std.total as f64
        );
    }

    let std = param_count(CountModel::Standard, 10, m, r, d_in);
    let svd = param_count(CountModel::SvdShared, 10, m, r, d_in);
    println!("\nper-model storage: standard {} vs sigma-mode {}", std.per_model, svd.per_model);
    println!("the shared bases cost 2 m^2 = {} once; sharing pays off for n > 2", 2 * m * m);
    println!("\n(the `param-count` subcommand prints the same accounting)");
}
