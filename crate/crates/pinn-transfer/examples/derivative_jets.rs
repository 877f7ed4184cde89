//! Evaluate a network's derivative jet (value, du/dt, spatial gradient,
//! spatial Laplacian) and check it against central finite differences.
//!
//! ```bash
//! cargo run --example derivative_jets
//! ```

use pinn_transfer::network::NetworkParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let d = 3;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let net = NetworkParams::glorot_init(d + 1, 16, 1, &mut rng);

    let t = 0.4;
    let x = [0.25, -0.3, 0.1];
    let jet = net.forward_jet(t, &x).expect("in-range point");

    println!("jet at t = {t}, x = {x:?}");
    println!("  value       = {:+.10}", jet.value[0]);
    println!("  du/dt       = {:+.10}", jet.dt[0]);
    for j in 0..d {
        println!("  du/dx[{j}]    = {:+.10}", jet.grad_x.get(0, j));
    }
    println!("  laplacian_x = {:+.10}", jet.laplacian_x[0]);

    // Central differences of the plain forward pass.
    let h = 1e-4;
    let f = |t: f64, x: &[f64]| {
        let mut z = vec![t];
        z.extend_from_slice(x);
        net.forward(&z).unwrap()[0]
    };
    let fd_dt = (f(t + h, &x) - f(t - h, &x)) / (2.0 * h);
    println!("\nfinite differences (h = {h}):");
    println!("  du/dt: analytic {:+.10} vs fd {fd_dt:+.10}", jet.dt[0]);
    let mut fd_lap = 0.0;
    for j in 0..d {
        let mut xp = x;
        xp[j] += h;
        let mut xm = x;
        xm[j] -= h;
        let fd_g = (f(t, &xp) - f(t, &xm)) / (2.0 * h);
        println!("  du/dx[{j}]: analytic {:+.10} vs fd {fd_g:+.10}", jet.grad_x.get(0, j));
        fd_lap += (f(t, &xp) - 2.0 * f(t, &x) + f(t, &xm)) / (h * h);
    }
    println!("  laplacian: analytic {:+.10} vs fd {fd_lap:+.10}", jet.laplacian_x[0]);
}
