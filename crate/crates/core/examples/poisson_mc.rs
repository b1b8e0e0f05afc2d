//! Monte-Carlo estimate of a Poisson divergence next to its closed form.
//!
//! `cargo run --release --example poisson_mc -- [samples] [seed]`

use renyi::families::{poisson_divergence, poisson_mc_divergence, Intensity};
use renyi::Order;

fn main() -> renyi::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200_000);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let f = Intensity::piecewise(vec![0.3, 0.7], vec![2.0, 0.5, 1.5])?;
    let g = Intensity::Constant(1.0);
    for a in [0.5, 2.0] {
        let o = Order::new(a)?;
        let exact = poisson_divergence(&f, &g, 1.0, o, 1e-12)?;
        let mc = poisson_mc_divergence(&f, &g, 1.0, o, n, seed)?;
        let z = (mc.estimate - exact) / mc.stderr;
        println!("α={a}: exact {exact:.8} estimate {:.8} ± {:.2e} ({z:+.2}σ)", mc.estimate, mc.stderr);
    }
    Ok(())
}
