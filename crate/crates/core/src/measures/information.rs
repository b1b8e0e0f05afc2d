use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::order::Order;

use super::divergence::divergence_raw;
use super::mean::log_mean;
use super::types::{FiniteChannel, FiniteMeasure, Pmf, Prior};

/// Order-α Rényi (Sibson) information `I_α(P)` in nats.
pub fn renyi_information(ch: &FiniteChannel, p: &Prior, order: Order) -> Result<f64> {
    p.check(ch)?;
    Ok(information_unchecked(ch, p, order))
}

pub(crate) fn information_unchecked(ch: &FiniteChannel, p: &Prior, order: Order) -> f64 {
    let pr = p.probs();
    let supp = p.support();
    let v = match order.branch() {
        Order::Zero => {
            let m = ch.n_outputs();
            (0..m)
                .filter(|&y| supp.iter().any(|&w| ch.row(w)[y] > 0.0))
                .map(|y| {
                    let s: f64 = supp.iter().filter(|&&w| ch.row(w)[y] > 0.0).map(|&w| pr[w]).sum();
                    -s.ln()
                })
                .fold(f64::INFINITY, f64::min)
        }
        Order::One => {
            let m1: Vec<f64> = log_mean(ch, p, Order::One).iter().map(|l| l.exp()).collect();
            supp.iter().map(|&w| pr[w] * divergence_raw(ch.row(w), &m1, Order::One)).sum()
        }
        Order::Infinity => log_sum_exp(log_mean(ch, p, Order::Infinity)),
        Order::Finite(a) => a / (a - 1.0) * log_norm_ratio(ch, p, a),
    };
    v.max(0.0)
}

/// `ln(‖m_α‖/‖m_1‖)`. Dividing by `‖m_1‖ = 1` removes normalization noise
/// that the factor `α/(α-1)` would amplify near α = 1.
pub(crate) fn log_norm_ratio(ch: &FiniteChannel, p: &Prior, alpha: f64) -> f64 {
    let l1 = log_mean(ch, p, Order::One);
    let am1 = alpha - 1.0;
    if am1.abs() <= 0.25 {
        if let Some(v) = log_norm_ratio_near_one(ch, p, alpha, &l1) {
            return v;
        }
    }
    let la = log_mean(ch, p, Order::Finite(alpha));
    log_sum_exp(la) - log_sum_exp(l1)
}

fn log_norm_ratio_near_one(ch: &FiniteChannel, p: &Prior, alpha: f64, l1: &[f64]) -> Option<f64> {
    let am1 = alpha - 1.0;
    let pr = p.probs();
    let ln_norm1 = log_sum_exp(l1.iter().copied());
    let mut acc = 0.0;
    for (y, &lm1) in l1.iter().enumerate() {
        if lm1 == f64::NEG_INFINITY {
            continue;
        }
        // n_α(y)^α = Σ_w T_1(w|y) e^{(α-1)λ}, λ = ln W(y|w) - ln m_1(y)
        let mut s = 0.0;
        for &w in p.support() {
            let x = ch.row(w)[y];
            if x <= 0.0 {
                continue;
            }
            let lam = x.ln() - lm1;
            let e = am1 * lam;
            if e.abs() > 50.0 {
                return None;
            }
            let t1 = (pr[w].ln() + lam).exp();
            s += t1 * e.exp_m1();
        }
        let ln_n = s.ln_1p() / alpha;
        acc += (lm1 - ln_norm1).exp() * ln_n.exp_m1();
    }
    Some(acc.ln_1p())
}

/// `dI_α/dα` at a finite positive order.
pub fn information_derivative(ch: &FiniteChannel, p: &Prior, order: Order) -> Result<f64> {
    p.check(ch)?;
    if !order.is_finite_positive() {
        return Err(Error::OrderOutOfRange {
            order: order.value(),
            reason: "the derivative is taken at finite positive orders",
        });
    }
    let alpha = order.value();
    if (alpha - 1.0).abs() < 1e-5 {
        return Ok(half_variance_at_one(ch, p));
    }
    let pr = p.probs();
    let la = log_mean(ch, p, Order::Finite(alpha));
    let ln_norm = log_sum_exp(la.iter().copied());
    // ν̆/‖m‖ = Σ_y q(y) Σ_w T_α ln(T_α/P) / α²
    let mut nu = 0.0;
    for (y, &lm) in la.iter().enumerate() {
        if lm == f64::NEG_INFINITY {
            continue;
        }
        let mut psi = 0.0;
        for &w in p.support() {
            let x = ch.row(w)[y];
            if x > 0.0 {
                let lt = alpha * (x.ln() - lm); // ln(T_α/P)
                psi += pr[w] * lt.exp() * lt;
            }
        }
        nu += (lm - ln_norm).exp() * psi / (alpha * alpha);
    }
    let am1 = alpha - 1.0;
    Ok(alpha / am1 * nu - log_norm_ratio(ch, p, alpha) / (am1 * am1))
}

/// At α = 1 the derivative is half the variance of `ln(W/m_1)` under `P ⋊ W`.
fn half_variance_at_one(ch: &FiniteChannel, p: &Prior) -> f64 {
    let pr = p.probs();
    let l1 = log_mean(ch, p, Order::One);
    let (mut e1, mut e2) = (0.0, 0.0);
    for &w in p.support() {
        for (y, &x) in ch.row(w).iter().enumerate() {
            if x > 0.0 {
                let i = x.ln() - l1[y];
                e1 += pr[w] * x * i;
                e2 += pr[w] * x * i * i;
            }
        }
    }
    0.5 * (e2 - e1 * e1).max(0.0)
}

/// Gallager's function `E0(ρ, P)`.
pub fn gallager_e0(rho: f64, ch: &FiniteChannel, p: &Prior) -> Result<f64> {
    if !(rho > -1.0) || !rho.is_finite() {
        return Err(Error::RhoOutOfRange(rho));
    }
    p.check(ch)?;
    if rho == 0.0 {
        return Ok(0.0);
    }
    let order = Order::new(1.0 / (1.0 + rho))?;
    Ok(-log_sum_exp(log_mean(ch, p, order)))
}

/// `D_α(P ⋊ W ‖ P ⊗ Q)`.
pub fn joint_divergence(ch: &FiniteChannel, p: &Prior, q: &FiniteMeasure, order: Order) -> Result<f64> {
    p.check(ch)?;
    if q.len() != ch.n_outputs() {
        return Err(Error::AlphabetMismatch { left: ch.n_outputs(), right: q.len() });
    }
    if q.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    let (joint, prod) = joint_pair(ch, p, q.weights());
    Ok(divergence_raw(&joint, &prod, order))
}

pub(crate) fn joint_pair(ch: &FiniteChannel, p: &Prior, q: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let pr = p.probs();
    let mut joint = Vec::with_capacity(ch.n_rows() * q.len());
    let mut prod = Vec::with_capacity(ch.n_rows() * q.len());
    for w in 0..ch.n_rows() {
        for (y, &qy) in q.iter().enumerate() {
            joint.push(pr[w] * ch.row(w)[y]);
            prod.push(pr[w] * qy);
        }
    }
    (joint, prod)
}

/// Decomposition of two distinct pmfs through their common part:
/// `P_i = (1-δ) S_∧ + δ S_i` with `δ = ‖P_1 - P_2‖/2` and `S_1 ⟂ S_2`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDecomposition {
    pub common: Pmf,
    pub first: Pmf,
    pub second: Pmf,
    pub delta: f64,
}

pub fn prior_decomposition(p1: &Pmf, p2: &Pmf) -> Result<PriorDecomposition> {
    let tv = p1.total_variation(p2)?;
    if tv == 0.0 {
        return Err(Error::DomainError("the priors are identical".into()));
    }
    let a = p1.probs();
    let b = p2.probs();
    let meet: Vec<f64> = a.iter().zip(b).map(|(x, y)| x.min(*y)).collect();
    let delta = tv / 2.0;
    let common = if delta < 1.0 {
        Pmf::normalized(meet.iter().map(|m| m / (1.0 - delta)).collect())?
    } else {
        // disjoint supports: the common part carries no weight
        Pmf::uniform(a.len())
    };
    let first = Pmf::normalized(a.iter().zip(&meet).map(|(x, m)| (x - m) / delta).collect())?;
    let second = Pmf::normalized(b.iter().zip(&meet).map(|(y, m)| (y - m) / delta).collect())?;
    Ok(PriorDecomposition { common, first, second, delta })
}

/// `ln ‖m_{α,P}‖`, exposed for the log-convexity checks.
pub fn log_mean_norm(ch: &FiniteChannel, p: &Prior, order: Order) -> Result<f64> {
    p.check(ch)?;
    Ok(log_sum_exp(log_mean(ch, p, order)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{binary_renyi_entropy, renyi_mean};

    fn bsc(d: f64) -> FiniteChannel {
        FiniteChannel::new(vec![vec![1.0 - d, d], vec![d, 1.0 - d]]).unwrap()
    }

    fn coupled_pair(d: f64) -> FiniteChannel {
        FiniteChannel::new(vec![
            vec![d, d, 0.5 - d, 0.5 - d],
            vec![0.5 - d, 0.5 - d, d, d],
            vec![d, 0.5 - d, 0.5 - d, d],
            vec![0.5 - d, d, d, 0.5 - d],
        ])
        .unwrap()
    }

    #[test]
    fn coupled_pair_at_quarter_has_zero_information() {
        let ch = coupled_pair(0.25);
        for beta in [0.0, 0.3, 1.0] {
            let p = Prior::new(vec![beta / 2.0, beta / 2.0, (1.0 - beta) / 2.0, (1.0 - beta) / 2.0]).unwrap();
            for a in [0.0, 0.4, 1.0, 3.0, f64::INFINITY] {
                let i = renyi_information(&ch, &p, Order::new(a).unwrap()).unwrap();
                assert!(i.abs() < 1e-15, "beta {beta} alpha {a}: {i}");
            }
        }
    }

    #[test]
    fn point_prior_has_zero_information() {
        let ch = bsc(0.2);
        for a in [0.0, 0.5, 1.0, 2.0, f64::INFINITY] {
            assert!(renyi_information(&ch, &Prior::point(2, 0), Order::new(a).unwrap()).unwrap() < 1e-15);
        }
    }

    #[test]
    fn noiseless_half_order() {
        let i = renyi_information(&FiniteChannel::identity(2), &Prior::uniform(2), Order::Finite(0.5)).unwrap();
        assert!((i - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn bsc_information_matches_binary_entropy() {
        for a in [0.2, 0.5, 1.0, 1.0 + 1e-7, 2.0, 9.0] {
            let o = Order::new(a).unwrap();
            let i = renyi_information(&bsc(0.1), &Prior::uniform(2), o).unwrap();
            let want = 2f64.ln() - binary_renyi_entropy(0.1, o).unwrap();
            assert!((i - want).abs() < 1e-12, "alpha {a}: {i} vs {want}");
        }
    }

    #[test]
    fn near_one_is_continuous() {
        let ch = FiniteChannel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let p = Prior::new(vec![0.4, 0.6]).unwrap();
        let i1 = renyi_information(&ch, &p, Order::One).unwrap();
        let d = information_derivative(&ch, &p, Order::One).unwrap();
        for eps in [1e-8, 1e-6, 1e-4] {
            let ip = renyi_information(&ch, &p, Order::Finite(1.0 + eps)).unwrap();
            assert!((ip - i1 - d * eps).abs() < 1e-13 + 10.0 * eps * eps, "eps {eps}");
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let ch = FiniteChannel::new(vec![vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6], vec![0.3, 0.3, 0.4]]).unwrap();
        let p = Prior::new(vec![0.3, 0.5, 0.2]).unwrap();
        for a in [0.3, 0.9, 1.0, 1.5, 4.0] {
            let h = 1e-5 * a;
            let fp = renyi_information(&ch, &p, Order::new(a + h).unwrap()).unwrap();
            let fm = renyi_information(&ch, &p, Order::new(a - h).unwrap()).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let an = information_derivative(&ch, &p, Order::new(a).unwrap()).unwrap();
            assert!(((fd - an) / an).abs() < 1e-4, "alpha {a}: fd {fd} an {an}");
        }
    }

    #[test]
    fn e0_examples() {
        let ch = bsc(0.1);
        let p = Prior::uniform(2);
        assert_eq!(gallager_e0(0.0, &ch, &p).unwrap(), 0.0);
        // ρ = 1: both outputs get ((√0.9 + √0.1)/2)², so E0 = ln 2 - 2 ln(√0.9 + √0.1) + 2 ln 2 - ln 2
        let e0 = gallager_e0(1.0, &ch, &p).unwrap();
        let s = 0.9f64.sqrt() + 0.1f64.sqrt();
        let want = -(2.0 * (s / 2.0).powi(2)).ln();
        assert!((e0 - want).abs() < 1e-15);
        let i = renyi_information(&ch, &p, Order::Finite(0.5)).unwrap();
        assert!((e0 - i).abs() < 1e-14);
        assert!(matches!(gallager_e0(-1.0, &ch, &p), Err(Error::RhoOutOfRange(_))));
    }

    #[test]
    fn joint_divergence_cases() {
        let ch = bsc(0.1);
        let p = Prior::uniform(2);
        let q = FiniteMeasure::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(joint_divergence(&ch, &p, &q, Order::Finite(2.0)).unwrap(), f64::INFINITY);
        let center = renyi_mean(&ch, &p, Order::Finite(2.0)).unwrap();
        let d = joint_divergence(&ch, &p, center.as_measure(), Order::Finite(2.0)).unwrap();
        let i = renyi_information(&ch, &p, Order::Finite(2.0)).unwrap();
        assert!((d - i).abs() < 1e-14);
    }

    #[test]
    fn decomposition_reconstructs() {
        let p1 = Pmf::new(vec![0.5, 0.3, 0.2, 0.0]).unwrap();
        let p2 = Pmf::new(vec![0.1, 0.3, 0.2, 0.4]).unwrap();
        let d = prior_decomposition(&p1, &p2).unwrap();
        for i in 0..4 {
            let r1 = (1.0 - d.delta) * d.common.probs()[i] + d.delta * d.first.probs()[i];
            let r2 = (1.0 - d.delta) * d.common.probs()[i] + d.delta * d.second.probs()[i];
            assert!((r1 - p1.probs()[i]).abs() < 1e-15);
            assert!((r2 - p2.probs()[i]).abs() < 1e-15);
            assert_eq!(d.first.probs()[i] * d.second.probs()[i], 0.0);
        }
        assert!(prior_decomposition(&p1, &p1).is_err());
    }
}
