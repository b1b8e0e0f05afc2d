//! Capacity of mod-1 shift channels. For the power density with exponent β
//! the capacity is finite exactly when α < 1/β.
//!
//! `cargo run --example shift`

use renyi::families::{shift_capacity, DensityOnCircle};
use renyi::Order;

fn main() -> renyi::Result<()> {
    let beta = 0.4;
    let f = DensityOnCircle::power(beta)?;
    for a in [0.5, 1.0, 2.0, 2.4, 2.5, 3.0] {
        println!("{} α={a:<4} C={}", f.name(), shift_capacity(&f, Order::new(a)?, 1e-10)?);
    }
    let step = DensityOnCircle::piecewise(vec![0.25], vec![3.0, 1.0 / 3.0])?;
    println!("step α=2    C={}", shift_capacity(&step, Order::new(2.0)?, 1e-10)?);
    Ok(())
}
