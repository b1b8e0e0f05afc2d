//! Capacity under a linear cost budget, against the unconstrained value.
//!
//! `cargo run --example constrained`

use renyi::capacity::{solve_capacity, solve_constrained_capacity, ConstraintSet, CostDirection, DEFAULT_MAX_ITER};
use renyi::measures::FiniteChannel;
use renyi::Order;

fn main() -> renyi::Result<()> {
    let ch = FiniteChannel::identity(3);
    let o = Order::new(1.5)?;
    let free = solve_capacity(&ch, o, 1e-10, DEFAULT_MAX_ITER)?;
    println!("unconstrained: {:.10} prior {:?}", free.capacity, free.prior.probs());
    for budget in [0.2, 0.5, 1.0] {
        let cs = ConstraintSet::LinearCost { costs: vec![0.0, 1.0, 2.0], budget, dir: CostDirection::Le };
        let s = solve_constrained_capacity(&ch, o, &cs, 1e-10, DEFAULT_MAX_ITER)?;
        println!("cost ≤ {budget}: {:.10} prior {:?}", s.capacity, s.prior.probs());
    }
    Ok(())
}
