//! Capacities and centers of Poisson point-process families.
//!
//! `cargo run --example poisson`

use renyi::families::{
    poisson_bounded_capacity, poisson_mean_capacity, poisson_product_capacity, Intensity, MeanConstraint,
    PoissonFamilySpec,
};
use renyi::Order;

fn main() -> renyi::Result<()> {
    for a in [0.5, 1.0, 2.0] {
        let o = Order::new(a)?;
        let s = poisson_bounded_capacity(1.0, 0.0, 1.0, o)?;
        println!("[0,1] α={a}: C={:.12} center={:?} mean={:?}", s.capacity, s.center, s.mean);
    }

    let spec = PoissonFamilySpec::bounded(2.0, 0.5, 3.0).with_constraint(MeanConstraint::Eq(1.0));
    let s = poisson_mean_capacity(&spec, Order::new(2.0)?)?;
    println!("mean-constrained: {}", s.to_json());

    let envelope = Intensity::piecewise(vec![0.5], vec![1.0, 4.0])?;
    let s = poisson_product_capacity(1.0, 0.0, &envelope, Order::new(2.0)?, 1e-10)?;
    println!("envelope: {}", s.to_json());
    Ok(())
}
