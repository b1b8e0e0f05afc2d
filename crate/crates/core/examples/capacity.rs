//! Certified capacity of a channel: the solver returns a bracket
//! `lower ≤ C_α ≤ upper` along with the optimal prior and the center.
//!
//! `cargo run --example capacity -- [alpha]`

use renyi::capacity::{solve_capacity, DEFAULT_MAX_ITER};
use renyi::measures::FiniteChannel;
use renyi::Order;

fn main() -> renyi::Result<()> {
    let alpha: Order = std::env::args().nth(1).as_deref().unwrap_or("2").parse()?;
    let ch = FiniteChannel::new(vec![
        vec![0.8, 0.1, 0.1, 0.0],
        vec![0.1, 0.8, 0.0, 0.1],
        vec![0.3, 0.3, 0.2, 0.2],
        vec![0.0, 0.1, 0.1, 0.8],
    ])?;
    let s = solve_capacity(&ch, alpha, 1e-12, DEFAULT_MAX_ITER)?;
    println!("C_{} = {:.12}", alpha.value(), s.capacity);
    println!("bracket [{:.12}, {:.12}] after {} iterations", s.lower_bound, s.upper_bound, s.iterations);
    println!("prior  {:?}", s.prior.probs());
    println!("center {:?}", s.center.probs());
    Ok(())
}
