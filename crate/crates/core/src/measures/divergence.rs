use crate::error::{Error, Result};
use crate::numeric::{ln0, log_sum_exp};
use crate::order::Order;

use super::types::{FiniteChannel, FiniteMeasure, Pmf};

/// Order-α Rényi divergence `D_α(w‖q)` in nats. `+∞` is a regular value.
pub fn renyi_divergence(w: &FiniteMeasure, q: &FiniteMeasure, order: Order) -> Result<f64> {
    if w.len() != q.len() {
        return Err(Error::AlphabetMismatch { left: w.len(), right: q.len() });
    }
    if w.is_zero() || q.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    Ok(divergence_raw(w.weights(), q.weights(), order))
}

/// Unchecked divergence on raw weight slices of equal length.
pub(crate) fn divergence_raw(w: &[f64], q: &[f64], order: Order) -> f64 {
    debug_assert_eq!(w.len(), q.len());
    match order.branch() {
        Order::Zero => {
            let mass: f64 = w.iter().zip(q).filter(|(&a, _)| a > 0.0).map(|(_, &b)| b).sum();
            0.0 - ln0(mass)
        }
        Order::One => {
            let mut s = 0.0;
            for (&a, &b) in w.iter().zip(q) {
                if a > 0.0 {
                    if b <= 0.0 {
                        return f64::INFINITY;
                    }
                    s += a * (a.ln() - b.ln());
                }
            }
            s
        }
        Order::Infinity => {
            let mut best = f64::NEG_INFINITY;
            for (&a, &b) in w.iter().zip(q) {
                if a > 0.0 {
                    if b <= 0.0 {
                        return f64::INFINITY;
                    }
                    best = best.max(a.ln() - b.ln());
                }
            }
            best
        }
        Order::Finite(alpha) => finite_divergence(w, q, alpha),
    }
}

fn finite_divergence(w: &[f64], q: &[f64], alpha: f64) -> f64 {
    let am1 = alpha - 1.0;
    let mut ws = Vec::with_capacity(w.len());
    let mut lr = Vec::with_capacity(w.len());
    for (&a, &b) in w.iter().zip(q) {
        if a > 0.0 {
            if b > 0.0 {
                ws.push(a);
                lr.push(a.ln() - b.ln());
            } else if alpha > 1.0 {
                return f64::INFINITY;
            }
        }
    }
    if ws.is_empty() {
        // w ⟂ q with α < 1
        return f64::INFINITY;
    }
    let max_x = lr.iter().map(|l| (am1 * l).abs()).fold(0.0, f64::max);
    let log_sum = if max_x <= 0.5 {
        // ln Σ w e^{(α-1)L} = ln Σw + log1p(Σ ŵ expm1((α-1)L)), accurate near α = 1
        let s: f64 = ws.iter().sum();
        let t: f64 = ws.iter().zip(&lr).map(|(a, l)| a / s * (am1 * l).exp_m1()).sum();
        s.ln() + t.ln_1p()
    } else {
        log_sum_exp(ws.iter().zip(&lr).map(|(a, l)| a.ln() + am1 * l))
    };
    log_sum / am1
}

/// Binary Rényi entropy `h_α(δ)` in nats.
pub fn binary_renyi_entropy(delta: f64, order: Order) -> Result<f64> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::DomainError(format!("delta must be in [0,1], got {delta}")));
    }
    let p = [delta, 1.0 - delta];
    Ok(match order.branch() {
        Order::Zero => {
            if delta > 0.0 && delta < 1.0 {
                std::f64::consts::LN_2
            } else {
                0.0
            }
        }
        Order::One => -p.iter().map(|&x| crate::numeric::xlnx(x)).sum::<f64>(),
        Order::Infinity => -delta.max(1.0 - delta).ln(),
        // h_α(p) = -D_α(p‖counting measure)
        Order::Finite(a) => -finite_divergence(&p, &[1.0, 1.0], a),
    }
    .max(0.0))
}

/// Merges output symbols by the cells of `partition`.
pub fn coarsen_channel(ch: &FiniteChannel, partition: &[Vec<usize>]) -> Result<FiniteChannel> {
    let m = ch.n_outputs();
    let mut seen = vec![false; m];
    for cell in partition {
        if cell.is_empty() {
            return Err(Error::InvalidPartition("empty cell".into()));
        }
        for &y in cell {
            if y >= m {
                return Err(Error::InvalidPartition(format!("symbol {y} out of range")));
            }
            if seen[y] {
                return Err(Error::InvalidPartition(format!("symbol {y} appears twice")));
            }
            seen[y] = true;
        }
    }
    if let Some(y) = seen.iter().position(|s| !s) {
        return Err(Error::InvalidPartition(format!("symbol {y} not covered")));
    }
    let rows = ch
        .rows()
        .iter()
        .map(|r| Pmf::normalized(coarsen_vec(r.probs(), partition)))
        .collect::<Result<Vec<_>>>()?;
    FiniteChannel::from_pmfs(rows)?.with_labels(ch.labels().to_vec())
}

pub(crate) fn coarsen_vec(v: &[f64], partition: &[Vec<usize>]) -> Vec<f64> {
    partition.iter().map(|cell| cell.iter().map(|&y| v[y]).sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fm(v: &[f64]) -> FiniteMeasure {
        FiniteMeasure::new(v.to_vec()).unwrap()
    }

    #[test]
    fn identical_measures_have_zero_divergence() {
        let w = fm(&[0.2, 0.3, 0.5]);
        for a in [0.0, 0.01, 0.5, 1.0, 1.0 + 1e-7, 2.0, 50.0, f64::INFINITY] {
            let d = renyi_divergence(&w, &w, Order::new(a).unwrap()).unwrap();
            assert!(d.abs() < 1e-14, "alpha {a}: {d}");
        }
    }

    #[test]
    fn point_mass_vs_uniform_is_ln2() {
        let w = fm(&[1.0, 0.0]);
        let q = fm(&[0.5, 0.5]);
        for a in [0.0, 0.3, 1.0, 2.0, f64::INFINITY] {
            let d = renyi_divergence(&w, &q, Order::new(a).unwrap()).unwrap();
            assert!((d - 2f64.ln()).abs() < 1e-14, "alpha {a}: {d}");
        }
    }

    #[test]
    fn kl_hand_value() {
        let d = renyi_divergence(&fm(&[0.9, 0.1]), &fm(&[0.5, 0.5]), Order::One).unwrap();
        let want = 0.9 * 1.8f64.ln() + 0.1 * 0.2f64.ln();
        assert!((d - want).abs() < 1e-15);
        // the finite branch tends to the same value
        let near = renyi_divergence(&fm(&[0.9, 0.1]), &fm(&[0.5, 0.5]), Order::Finite(1.0 + 1e-7)).unwrap();
        assert!((near - want).abs() < 1e-7);
    }

    #[test]
    fn infinite_cases() {
        let w = fm(&[0.5, 0.5]);
        let q = fm(&[1.0, 0.0]);
        assert_eq!(renyi_divergence(&w, &q, Order::Finite(2.0)).unwrap(), f64::INFINITY);
        assert_eq!(renyi_divergence(&w, &q, Order::One).unwrap(), f64::INFINITY);
        assert!(renyi_divergence(&w, &q, Order::Finite(0.5)).unwrap().is_finite());
        let a = fm(&[1.0, 0.0]);
        let b = fm(&[0.0, 1.0]);
        assert_eq!(renyi_divergence(&a, &b, Order::Finite(0.5)).unwrap(), f64::INFINITY);
        assert_eq!(renyi_divergence(&a, &b, Order::Zero).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tiny_masses_do_not_underflow() {
        let w = fm(&[1e-300, 1.0 - 1e-300]);
        let q = fm(&[1e-310, 1.0]);
        let d = renyi_divergence(&w, &q, Order::Finite(3.0)).unwrap();
        assert!(d.is_finite() && d > 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            renyi_divergence(&fm(&[1.0]), &fm(&[0.5, 0.5]), Order::One),
            Err(Error::AlphabetMismatch { .. })
        ));
        assert!(matches!(renyi_divergence(&fm(&[0.0]), &fm(&[1.0]), Order::One), Err(Error::ZeroMeasure)));
    }

    #[test]
    fn binary_entropy_values() {
        for a in [0.0, 0.3, 1.0, 2.0, f64::INFINITY] {
            let o = Order::new(a).unwrap();
            assert!((binary_renyi_entropy(0.5, o).unwrap() - 2f64.ln()).abs() < 1e-15);
            assert_eq!(binary_renyi_entropy(0.0, o).unwrap(), 0.0);
            assert_eq!(binary_renyi_entropy(1.0, o).unwrap(), 0.0);
        }
        let h = binary_renyi_entropy(0.2, Order::One).unwrap();
        assert!((h - (-0.2 * 0.2f64.ln() - 0.8 * 0.8f64.ln())).abs() < 1e-15);
        assert!(binary_renyi_entropy(1.5, Order::One).is_err());
    }

    #[test]
    fn coarsening() {
        let ch = FiniteChannel::new(vec![vec![0.1, 0.2, 0.7], vec![0.3, 0.3, 0.4]]).unwrap();
        let same = coarsen_channel(&ch, &[vec![0], vec![1], vec![2]]).unwrap();
        assert_eq!(same.rows(), ch.rows());
        let one = coarsen_channel(&ch, &[vec![0, 1, 2]]).unwrap();
        assert_eq!(one.n_outputs(), 1);
        assert!(coarsen_channel(&ch, &[vec![0, 1]]).is_err());
        assert!(coarsen_channel(&ch, &[vec![0, 1], vec![1, 2]]).is_err());
        assert!(coarsen_channel(&ch, &[vec![0, 1, 2], vec![]]).is_err());
    }
}
