//! Sibson information and Rényi mean of a binary symmetric channel.
//!
//! `cargo run --example information`

use renyi::measures::{renyi_information, renyi_mean, FiniteChannel, Prior};
use renyi::Order;

fn main() -> renyi::Result<()> {
    let d = 0.11;
    let bsc = FiniteChannel::new(vec![vec![1.0 - d, d], vec![d, 1.0 - d]])?;
    let p = Prior::new(vec![0.8, 0.2])?;
    for a in [0.5, 1.0, 2.0, f64::INFINITY] {
        let o = Order::new(a)?;
        let q = renyi_mean(&bsc, &p, o)?;
        println!("α={a:<4} I={:.10} mean={:?}", renyi_information(&bsc, &p, o)?, q.probs());
    }
    Ok(())
}
