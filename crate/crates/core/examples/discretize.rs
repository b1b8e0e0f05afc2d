//! Finite channels from binned Poisson counts give lower bounds on the
//! capacity of the continuous-time family, tightening as the bins refine.
//!
//! `cargo run --release --example discretize`

use renyi::capacity::{solve_capacity, DEFAULT_MAX_ITER};
use renyi::families::{poisson_bounded_capacity, poisson_discretize, PoissonFamilySpec};
use renyi::Order;

fn main() -> renyi::Result<()> {
    let o = Order::new(2.0)?;
    let spec = PoissonFamilySpec::bounded(1.0, 0.0, 1.0);
    println!("closed form: {:.10}", poisson_bounded_capacity(1.0, 0.0, 1.0, o)?.capacity);
    for bins in [1, 2, 4, 6] {
        let ch = poisson_discretize(&spec, bins, 2)?;
        let s = solve_capacity(&ch, o, 1e-10, DEFAULT_MAX_ITER)?;
        println!("{bins} bins, {} rows × {} outputs: {:.10}", ch.n_rows(), ch.n_outputs(), s.capacity);
    }
    Ok(())
}
