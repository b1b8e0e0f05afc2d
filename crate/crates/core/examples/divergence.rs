//! Rényi divergence of two measures across orders, including the atoms.
//!
//! `cargo run --example divergence`

use renyi::measures::{renyi_divergence, FiniteMeasure};
use renyi::Order;

fn main() -> renyi::Result<()> {
    let w = FiniteMeasure::new(vec![0.7, 0.2, 0.1])?;
    let q = FiniteMeasure::new(vec![0.3, 0.3, 0.4])?;
    for o in [Order::Zero, Order::new(0.5)?, Order::One, Order::new(2.0)?, Order::Infinity] {
        println!("D_{:<4} = {:.12}", o.value(), renyi_divergence(&w, &q, o)?);
    }

    // mass outside the reference's support makes every order above 1 infinite
    let p = FiniteMeasure::new(vec![0.5, 0.5, 0.0])?;
    let r = FiniteMeasure::new(vec![1.0, 0.0, 0.0])?;
    println!("D_0.5(p‖r) = {:.12}", renyi_divergence(&p, &r, Order::new(0.5)?)?);
    println!("D_2(p‖r)   = {}", renyi_divergence(&p, &r, Order::new(2.0)?)?);
    Ok(())
}
