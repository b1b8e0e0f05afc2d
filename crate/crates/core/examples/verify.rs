//! Runs every property suite and prints one line per suite.
//!
//! `cargo run --release --example verify -- [instances] [seed]`

use std::time::Instant;

use renyi::verify::{run_suite, suite_ids, Tolerances};

fn main() -> renyi::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(200);
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(0);
    let tol = Tolerances::default();
    let start = Instant::now();
    let mut failed = 0;
    for id in suite_ids() {
        let t = Instant::now();
        let r = run_suite(id, n, seed, &tol)?;
        failed += usize::from(!r.passed());
        println!(
            "{:<36} {} violations={:<3} skipped={:<4} worst={:<12.4e} threshold={:.1e} {:.2}s",
            r.id,
            if r.passed() { "ok  " } else { "FAIL" },
            r.violations,
            r.skipped,
            r.worst_margin,
            r.threshold,
            t.elapsed().as_secs_f64(),
        );
        if let Some(f) = &r.first_failure {
            println!("    {f}");
        }
    }
    println!("{failed} failing suites, {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
