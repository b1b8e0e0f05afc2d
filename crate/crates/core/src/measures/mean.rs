use crate::error::{Error, Result};
use crate::numeric::{ln0, log_sum_exp};
use crate::order::Order;

use super::divergence::divergence_raw;
use super::types::{FiniteChannel, FiniteMeasure, MeanMeasure, Pmf, PosteriorMatrix, Prior};

/// Relative tolerance for ties of `ϑ_P` in the order-0 mean.
pub const THETA_TIE_TOL: f64 = 1e-12;

/// `ln m_{α,P}(y)` for every output.
pub(crate) fn log_mean(ch: &FiniteChannel, p: &Prior, order: Order) -> Vec<f64> {
    let supp = p.support();
    let pr = p.probs();
    (0..ch.n_outputs())
        .map(|y| match order.branch() {
            Order::Zero => {
                let mut s = 0.0;
                for &w in supp {
                    let x = ch.row(w)[y];
                    if x <= 0.0 {
                        return f64::NEG_INFINITY;
                    }
                    s += pr[w] * x.ln();
                }
                s
            }
            Order::One => ln0(supp.iter().map(|&w| pr[w] * ch.row(w)[y]).sum()),
            Order::Infinity => ln0(supp.iter().map(|&w| ch.row(w)[y]).fold(0.0, f64::max)),
            Order::Finite(a) => {
                let l = log_sum_exp(
                    supp.iter()
                        .filter(|&&w| ch.row(w)[y] > 0.0)
                        .map(|&w| pr[w].ln() + a * ch.row(w)[y].ln()),
                );
                l / a
            }
        })
        .collect()
}

/// Order-α mean measure `m_{α,P}`.
pub fn mean_measure(ch: &FiniteChannel, p: &Prior, order: Order) -> Result<MeanMeasure> {
    p.check(ch)?;
    let log_weights = log_mean(ch, p, order);
    let measure = FiniteMeasure::new(log_weights.iter().map(|l| l.exp()).collect())?;
    Ok(MeanMeasure {
        order,
        measure,
        log_weights,
        prior: p.clone(),
        channel_fingerprint: ch.fingerprint(),
    })
}

/// Density `n_{α,P} = m_{α,P}/m_{1,P}` (defined where `m_{1,P} > 0`) and the
/// order-α posterior.
pub fn mean_density_and_posterior(
    ch: &FiniteChannel,
    p: &Prior,
    order: Order,
) -> Result<(Vec<Option<f64>>, PosteriorMatrix)> {
    p.check(ch)?;
    if !order.is_finite_positive() {
        return Err(Error::OrderOutOfRange {
            order: order.value(),
            reason: "densities and posteriors need a finite positive order",
        });
    }
    let la = log_mean(ch, p, order);
    let l1 = log_mean(ch, p, Order::One);
    let alpha = order.value();
    let density = la
        .iter()
        .zip(&l1)
        .map(|(&a, &b)| (b > f64::NEG_INFINITY).then(|| (a - b).exp()))
        .collect();
    Ok((density, posterior_from_log_mean(ch, p, alpha, &la, order)))
}

pub(crate) fn posterior_from_log_mean(
    ch: &FiniteChannel,
    p: &Prior,
    alpha: f64,
    la: &[f64],
    order: Order,
) -> PosteriorMatrix {
    let pr = p.probs();
    let entries = (0..ch.n_outputs())
        .map(|y| {
            if la[y] == f64::NEG_INFINITY {
                return None;
            }
            let a = if order.branch() == Order::One { 1.0 } else { alpha };
            Some(
                (0..ch.n_rows())
                    .map(|w| {
                        let x = ch.row(w)[y];
                        if pr[w] > 0.0 && x > 0.0 {
                            (pr[w].ln() + a * (x.ln() - la[y])).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
        })
        .collect();
    PosteriorMatrix { order, entries }
}

/// Rényi mean `q_{α,P}`.
pub fn renyi_mean(ch: &FiniteChannel, p: &Prior, order: Order) -> Result<Pmf> {
    p.check(ch)?;
    if order == Order::Zero {
        return order_zero_mean(ch, p);
    }
    let lm = log_mean(ch, p, order);
    let ln_norm = log_sum_exp(lm.iter().copied());
    Pmf::normalized(lm.iter().map(|l| (l - ln_norm).exp()).collect())
}

fn order_zero_mean(ch: &FiniteChannel, p: &Prior) -> Result<Pmf> {
    let pr = p.probs();
    let supp = p.support();
    let m = ch.n_outputs();
    let m1: Vec<f64> = (0..m).map(|y| supp.iter().map(|&w| pr[w] * ch.row(w)[y]).sum()).collect();
    let theta: Vec<f64> = (0..m)
        .map(|y| supp.iter().filter(|&&w| ch.row(w)[y] > 0.0).map(|&w| pr[w]).sum())
        .collect();
    let best = (0..m).filter(|&y| m1[y] > 0.0).map(|y| theta[y]).fold(0.0, f64::max);
    let weights: Vec<f64> = (0..m)
        .map(|y| {
            if m1[y] <= 0.0 || theta[y] < best * (1.0 - THETA_TIE_TOL) {
                return 0.0;
            }
            let t0: Vec<f64> = (0..ch.n_rows())
                .map(|w| if pr[w] > 0.0 && ch.row(w)[y] > 0.0 { pr[w] / theta[y] } else { 0.0 })
                .collect();
            let t1: Vec<f64> = (0..ch.n_rows()).map(|w| pr[w] * ch.row(w)[y] / m1[y]).collect();
            (-divergence_raw(&t0, &t1, Order::One)).exp() * m1[y]
        })
        .collect();
    Pmf::normalized(weights)
}
