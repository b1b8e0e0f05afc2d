//! Capacity as a function of the order, printed as CSV.
//!
//! `cargo run --example curve > curve.csv`

use renyi::capacity::capacity_curve;
use renyi::measures::FiniteChannel;
use renyi::output::csv;
use renyi::{Error, Order};

fn main() -> renyi::Result<()> {
    let d = 0.1;
    let ch = FiniteChannel::new(vec![vec![1.0 - d, d, 0.0], vec![0.0, 1.0 - d, d], vec![d, 0.0, 1.0 - d]])?;
    let mut orders: Vec<Order> = (0..=40).map(|i| Order::new(10f64.powf(-2.0 + i as f64 / 10.0))).collect::<Result<_, _>>()?;
    orders.push(Order::Infinity);
    let report = capacity_curve(&ch, &orders, 1e-10)?;
    let mut rows = Vec::new();
    for (o, p) in report.orders.iter().zip(report.points) {
        let s = match p {
            Ok(s) => s,
            Err(Error::NotConverged(s)) => *s,
            Err(e) => return Err(e),
        };
        rows.push(vec![o.value(), s.capacity, s.gap]);
    }
    print!("{}", csv(&["alpha", "capacity", "gap"], &rows));
    eprintln!("monotonicity violations: {}", report.diagnostics.total_violations());
    Ok(())
}
