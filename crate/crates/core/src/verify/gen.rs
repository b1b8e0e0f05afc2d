//! Random instances: pmfs, channels, priors and orders.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::measures::{FiniteChannel, Pmf, Prior};
use crate::order::Order;

pub const ALL_ATOMS: &[Order] = &[Order::Zero, Order::One, Order::Infinity];
pub const POSITIVE_ATOMS: &[Order] = &[Order::One, Order::Infinity];
pub const FINITE_ATOMS: &[Order] = &[Order::One];

/// Probability of each allowed atom.
const ATOM_PROB: f64 = 0.06;
/// Entry-wise zero probability of sparse vectors.
const ZERO_PROB: f64 = 0.25;
/// Rows closer than this in total variation count as near-duplicates.
const DISTINCT_TV: f64 = 1e-6;

/// Flat Dirichlet weights; with `sparse`, entries vanish at random but at
/// least one survives.
pub fn dirichlet(rng: &mut ChaCha8Rng, m: usize, sparse: bool) -> Vec<f64> {
    loop {
        let w: Vec<f64> = (0..m)
            .map(|_| if sparse && rng.random_bool(ZERO_PROB) { 0.0 } else { rng.sample::<f64, _>(Exp1) })
            .collect();
        let s: f64 = w.iter().sum();
        if s > 0.0 {
            return w.into_iter().map(|x| x / s).collect();
        }
    }
}

pub fn pmf(rng: &mut ChaCha8Rng, m: usize, sparse: bool) -> Pmf {
    Pmf::normalized(dirichlet(rng, m, sparse)).expect("positive mass")
}

pub fn maybe_sparse_pmf(rng: &mut ChaCha8Rng, m: usize) -> Pmf {
    let sparse = rng.random_bool(0.3);
    pmf(rng, m, sparse)
}

pub fn prior(rng: &mut ChaCha8Rng, n: usize) -> Prior {
    Prior::from_pmf(maybe_sparse_pmf(rng, n))
}

/// A second prior: unrelated, or a small perturbation of `p`.
pub fn nearby_prior(rng: &mut ChaCha8Rng, p: &Prior) -> Prior {
    let n = p.len();
    if rng.random_bool(0.5) {
        return prior(rng, n);
    }
    let t = 10f64.powf(rng.random_range(-8.0..-1.0));
    let q = dirichlet(rng, n, false);
    let mix: Vec<f64> = p.probs().iter().zip(&q).map(|(a, b)| (1.0 - t) * a + t * b).collect();
    Prior::from_pmf(Pmf::normalized(mix).expect("positive mass"))
}

pub fn size(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn tv(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Random channel with `n ∈ [1, max_n]` rows over `m ∈ [1, max_m]` outputs.
///
/// Half of the channels keep their rows at least `1e-6` apart in total
/// variation; the other half contain exact or near-duplicate rows.
pub fn channel(rng: &mut ChaCha8Rng, max_n: usize, max_m: usize) -> FiniteChannel {
    let n = size(rng, 1, max_n);
    let m = size(rng, 1, max_m);
    channel_of_size(rng, n, m)
}

pub fn channel_of_size(rng: &mut ChaCha8Rng, n: usize, m: usize) -> FiniteChannel {
    let sparse = rng.random_bool(0.3);
    let duplicates = n >= 2 && rng.random_bool(0.5);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        if duplicates && !rows.is_empty() && rng.random_bool(0.4) {
            let base = rows[rng.random_range(0..rows.len())].clone();
            let t = [0.0, 1e-12, 1e-9, 1e-7][rng.random_range(0..4)];
            let noise = dirichlet(rng, m, false);
            rows.push(base.iter().zip(&noise).map(|(a, b)| (1.0 - t) * a + t * b).collect());
            continue;
        }
        let r = dirichlet(rng, m, sparse);
        if !duplicates && rows.iter().any(|x| tv(x, &r) < DISTINCT_TV) && m > 1 {
            continue;
        }
        rows.push(r);
    }
    let pmfs = rows.into_iter().map(|r| Pmf::normalized(r).expect("positive mass")).collect();
    FiniteChannel::from_pmfs(pmfs).expect("consistent rows")
}

/// Log-uniform order in `[1e-2, 1e2]`, or one of `atoms`.
pub fn order(rng: &mut ChaCha8Rng, atoms: &[Order]) -> Order {
    for &a in atoms {
        if rng.random_bool(ATOM_PROB) {
            return a;
        }
    }
    log_uniform_order(rng, 1e-2, 1e2)
}

pub fn log_uniform_order(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Order {
    let v = (rng.random_range(lo.ln()..hi.ln())).exp();
    Order::new(v).expect("positive order")
}

pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo.ln()..hi.ln()).exp()
}

/// Two orders `α ≤ β`.
pub fn order_pair(rng: &mut ChaCha8Rng, atoms: &[Order]) -> (Order, Order) {
    let a = order(rng, atoms);
    let b = order(rng, atoms);
    if a.value() <= b.value() {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn channels_are_stochastic() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let ch = channel(&mut rng, 6, 6);
            assert!((1..=6).contains(&ch.n_rows()) && (1..=6).contains(&ch.n_outputs()));
            for r in ch.rows() {
                assert!((r.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orders_cover_atoms_and_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let os: Vec<Order> = (0..2000).map(|_| order(&mut rng, ALL_ATOMS)).collect();
        for atom in ALL_ATOMS {
            assert!(os.contains(atom));
        }
        assert!(os.iter().all(|o| matches!(o, Order::Zero | Order::One | Order::Infinity)
            || (1e-2..=1e2).contains(&o.value())));
    }
}
