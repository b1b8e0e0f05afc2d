//! Certified capacity solver.
//!
//! A multiplicative update `P'(w) ∝ P(w) exp(s·D_α(W_w‖q_{α,P}))` with
//! adaptive step finds the active rows; an active-set Newton iteration on the
//! concave objective `sign(α-1)·‖m_{α,P}‖` then polishes the prior. Neither
//! phase is trusted: every reported bound is recomputed from the final prior.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::measures::{divergence_raw, information_unchecked, log_mean, FiniteChannel, Pmf, Prior};
use crate::numeric::{log_sum_exp, mix_seed, solve_linear};
use crate::order::Order;

use super::CapacitySolution;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// Rows whose divergence trails the lower bound by more than this decay twice
/// as fast.
const PRUNE_EPS: f64 = 1e-3;
const RESTARTS: usize = 8;
const MASS_FLOOR: f64 = 1e-280;
const STEP_MAX: f64 = 256.0;

/// Quantities derived from one prior.
#[derive(Debug, Clone)]
pub(crate) struct Eval {
    pub lower: f64,
    pub upper: f64,
    /// `D_α(W_w‖q_{α,P})` for every row.
    pub d: Vec<f64>,
    pub lm: Vec<f64>,
    pub ln_norm: f64,
}

impl Eval {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// A linear face `Σ P(w) c(w) = Γ` of the simplex.
#[derive(Debug, Clone)]
pub(crate) struct Face {
    pub costs: Vec<f64>,
    pub budget: f64,
}

impl Face {
    fn mean(&self, p: &[f64]) -> f64 {
        p.iter().zip(&self.costs).map(|(a, b)| a * b).sum()
    }

    /// KL projection of `u` onto the face: the exponential tilt `u e^{-λc}`.
    pub fn project(&self, logu: &[f64]) -> Vec<f64> {
        let tilt = |lam: f64| -> Vec<f64> {
            let lw: Vec<f64> = logu.iter().zip(&self.costs).map(|(l, c)| l - lam * c).collect();
            let z = log_sum_exp(lw.iter().copied());
            lw.iter().map(|l| (l - z).exp()).collect()
        };
        let scale = self.costs.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1e-300);
        let f = |lam: f64| self.mean(&tilt(lam)) - self.budget;
        let (mut lo, mut hi) = (-1.0 / scale, 1.0 / scale);
        while f(lo) < 0.0 && lo > -1e300 {
            lo *= 4.0;
        }
        while f(hi) > 0.0 && hi < 1e300 {
            hi *= 4.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
        }
        tilt(0.5 * (lo + hi))
    }
}

pub(crate) fn prior_of(p: &[f64]) -> Prior {
    Prior::from_pmf(Pmf::normalized(p.to_vec()).expect("positive prior mass"))
}

/// Evaluates the prior; `upper` maps the row divergences to an upper bound.
pub(crate) fn evaluate(ch: &FiniteChannel, p: &[f64], order: Order, upper: &dyn Fn(&[f64]) -> f64) -> Eval {
    let prior = prior_of(p);
    let lm = log_mean(ch, &prior, order);
    let ln_norm = log_sum_exp(lm.iter().copied());
    let q: Vec<f64> = lm.iter().map(|l| (l - ln_norm).exp()).collect();
    let d: Vec<f64> = (0..ch.n_rows()).map(|w| divergence_raw(ch.row(w), &q, order)).collect();
    let lower = information_unchecked(ch, &prior, order);
    let upper = upper(&d).max(lower);
    Eval { lower, upper, d, lm, ln_norm }
}

pub(crate) fn max_upper(d: &[f64]) -> f64 {
    d.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub(crate) struct Run {
    pub p: Vec<f64>,
    pub ev: Eval,
    pub iterations: usize,
}

pub(crate) struct Problem<'a> {
    pub ch: &'a FiniteChannel,
    pub order: Order,
    pub tol: f64,
    pub max_iter: usize,
    pub face: Option<&'a Face>,
    pub upper: &'a dyn Fn(&[f64]) -> f64,
}

impl Problem<'_> {
    fn eval(&self, p: &[f64]) -> Eval {
        evaluate(self.ch, p, self.order, self.upper)
    }

    fn alpha(&self) -> f64 {
        match self.order.branch() {
            Order::Finite(a) => a,
            _ => 1.0,
        }
    }

    pub fn run(&self, p0: Vec<f64>) -> Run {
        let mut p = p0;
        let mut ev = self.eval(&p);
        let mut best = (p.clone(), ev.clone());
        let mut s = 1.0;
        let mut it = 0;
        let mut next_polish = 8;
        while it < self.max_iter && best.1.gap() > self.tol {
            if it >= next_polish {
                next_polish = 2 * next_polish + 8;
                let pp = self.polish(&p);
                let ep = self.eval(&pp);
                if ep.gap() < best.1.gap() {
                    best = (pp.clone(), ep.clone());
                    if ep.gap() <= self.tol {
                        break;
                    }
                }
                if ep.lower >= ev.lower {
                    p = self.floor(&pp);
                    ev = self.eval(&p);
                }
            }
            let cand = self.step(&p, &ev, s);
            let ec = self.eval(&cand);
            it += 1;
            if ec.lower >= ev.lower - 1e-15 * (1.0 + ev.lower.abs()) {
                p = cand;
                ev = ec;
                s = (s * 1.25).min(STEP_MAX);
                if ev.gap() < best.1.gap() {
                    best = (p.clone(), ev.clone());
                }
            } else {
                s *= 0.5;
                if s < 1e-12 {
                    s = 1.0;
                }
            }
        }
        Run { p: best.0, ev: best.1, iterations: it }
    }

    /// Lifts exact zeros so the multiplicative phase can revive rows.
    fn floor(&self, p: &[f64]) -> Vec<f64> {
        let lifted: Vec<f64> = p.iter().map(|&x| x.max(1e-14)).collect();
        match self.face {
            Some(f) => f.project(&lifted.iter().map(|x| x.ln()).collect::<Vec<_>>()),
            None => {
                let s: f64 = lifted.iter().sum();
                lifted.iter().map(|x| x / s).collect()
            }
        }
    }

    fn step(&self, p: &[f64], ev: &Eval, s: f64) -> Vec<f64> {
        let logu: Vec<f64> = p
            .iter()
            .zip(&ev.d)
            .map(|(&x, &d)| {
                if x <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                let mut g = (d - ev.lower).min(30.0);
                if g < -PRUNE_EPS {
                    g *= 2.0;
                }
                x.ln() + (s * g).max(-700.0)
            })
            .collect();
        let out = match self.face {
            Some(f) => f.project(&logu),
            None => {
                let z = log_sum_exp(logu.iter().copied());
                logu.iter().map(|l| (l - z).exp()).collect()
            }
        };
        out.into_iter().map(|x| x.max(MASS_FLOOR)).collect::<Vec<_>>().normalize()
    }

    /// Scaled gradient and Hessian of `sign(α-1)‖m‖/|α-1|` on the rows `act`.
    fn newton_system(&self, ev: &Eval, act: &[usize]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let a = self.alpha();
        let one = self.order.branch() == Order::One;
        let norm = ev.ln_norm.exp();
        let g: Vec<f64> = act
            .iter()
            .map(|&w| {
                let x = ev.d[w] - ev.lower;
                if one {
                    x
                } else {
                    norm * ((a - 1.0) * x).min(700.0).exp_m1() / (a * (a - 1.0))
                }
            })
            .collect();
        let m = self.ch.n_outputs();
        let t: Vec<Vec<f64>> = act
            .iter()
            .map(|&w| {
                (0..m)
                    .map(|y| {
                        let x = self.ch.row(w)[y];
                        if x > 0.0 && ev.lm[y] > f64::NEG_INFINITY {
                            (a * (x.ln() - ev.lm[y])).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        let my: Vec<f64> = ev.lm.iter().map(|l| l.exp()).collect();
        let k = act.len();
        let mut h = vec![vec![0.0; k]; k];
        for i in 0..k {
            for j in i..k {
                let v: f64 = (0..m).map(|y| my[y] * t[i][y] * t[j][y]).sum::<f64>() / (a * a);
                h[i][j] = -v;
                h[j][i] = -v;
            }
        }
        (g, h)
    }

    /// Active-set Newton polish. Returns a feasible prior; may contain zeros.
    fn polish(&self, p0: &[f64]) -> Vec<f64> {
        let n = self.ch.n_rows();
        let pmax = p0.iter().copied().fold(0.0, f64::max);
        let mut p: Vec<f64> = p0.iter().map(|&x| if x > 1e-9 * pmax { x } else { 0.0 }).collect();
        p = match self.face {
            Some(f) if (f.mean(&p) - f.budget).abs() > 1e-12 * (1.0 + f.budget.abs()) => p0.to_vec(),
            _ => p.normalize(),
        };
        for _round in 0..(2 * n + 4) {
            self.newton(&mut p);
            let ev = self.eval(&p);
            let act: Vec<usize> = (0..n).filter(|&w| p[w] > 0.0).collect();
            let (nu, mu) = self.multipliers(&ev, &act);
            let reduced = |w: usize| -> f64 {
                let c = self.face.map_or(0.0, |f| f.costs[w]);
                ev.d[w] - ev.lower - nu - mu * c
            };
            let cand = (0..n)
                .filter(|&w| p[w] == 0.0)
                .map(|w| (w, reduced(w)))
                .filter(|&(_, r)| r > 1e-13)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            let Some((w, _)) = cand else { break };
            // admit the row with a little mass, keeping the face constraint
            let mut q = p.clone();
            q[w] = 1e-6;
            p = match self.face {
                Some(f) => f.project(&q.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect::<Vec<_>>()),
                None => q.normalize(),
            };
        }
        p
    }

    /// Lagrange multipliers in D-units for the active rows (least squares).
    fn multipliers(&self, ev: &Eval, act: &[usize]) -> (f64, f64) {
        let r: Vec<f64> = act.iter().map(|&w| ev.d[w] - ev.lower).collect();
        match self.face {
            None => (r.iter().sum::<f64>() / r.len().max(1) as f64, 0.0),
            Some(f) => {
                let c: Vec<f64> = act.iter().map(|&w| f.costs[w]).collect();
                let k = c.len() as f64;
                let (sc, scc): (f64, f64) = (c.iter().sum(), c.iter().map(|x| x * x).sum());
                let (sr, scr): (f64, f64) = (r.iter().sum(), c.iter().zip(&r).map(|(a, b)| a * b).sum());
                let det = k * scc - sc * sc;
                if det.abs() <= 1e-14 * (k * scc).max(1e-300) {
                    (sr / k, 0.0)
                } else {
                    ((scc * sr - sc * scr) / det, (k * scr - sc * sr) / det)
                }
            }
        }
    }

    fn newton(&self, p: &mut Vec<f64>) {
        let n = p.len();
        for _ in 0..60 {
            let act: Vec<usize> = (0..n).filter(|&w| p[w] > 0.0).collect();
            let k = act.len();
            if k <= 1 {
                return;
            }
            let ev = self.eval(p);
            let (g, mut h) = self.newton_system(&ev, &act);
            let diag = (0..k).map(|i| h[i][i].abs()).fold(0.0, f64::max);
            let mu = 1e-10 * diag + 1e-300;
            for (i, row) in h.iter_mut().enumerate() {
                row[i] -= mu;
            }
            let cost: Option<Vec<f64>> = self.face.map(|f| act.iter().map(|&w| f.costs[w]).collect());
            let Some(delta) = kkt_step(&h, &g, cost.as_deref()) else { return };
            let dmax = delta.iter().fold(0.0f64, |a, d| a.max(d.abs()));
            if dmax < 1e-16 {
                return;
            }
            let mut tmax = 1.0f64;
            for (i, &w) in act.iter().enumerate() {
                if delta[i] < 0.0 {
                    tmax = tmax.min(-p[w] / delta[i]);
                }
            }
            // rows that hit zero when the full step is blocked
            let blocking: Vec<usize> = act
                .iter()
                .enumerate()
                .filter(|&(i, &w)| tmax < 1.0 && delta[i] < 0.0 && -p[w] / delta[i] <= tmax * (1.0 + 1e-12))
                .map(|(_, &w)| w)
                .collect();
            let mut step = tmax;
            let mut accepted = false;
            for _ in 0..50 {
                let mut cand = p.clone();
                for (i, &w) in act.iter().enumerate() {
                    cand[w] = (p[w] + step * delta[i]).max(0.0);
                }
                if step == tmax {
                    for &w in &blocking {
                        cand[w] = 0.0;
                    }
                }
                let cand = self.renormalize(cand);
                let ec = self.eval(&cand);
                if ec.lower >= ev.lower - 1e-15 * (1.0 + ev.lower.abs()) {
                    let moved = cand.iter().zip(p.iter()).any(|(a, b)| a != b);
                    *p = cand;
                    accepted = moved;
                    break;
                }
                step *= 0.5;
            }
            if !accepted || dmax < 1e-14 {
                return;
            }
        }
    }

    fn renormalize(&self, p: Vec<f64>) -> Vec<f64> {
        let p = p.normalize();
        if let Some(f) = self.face {
            // restore Σ P c = Γ exactly by moving mass along the cheapest and
            // dearest active rows
            let err = f.mean(&p) - f.budget;
            if err.abs() > 1e-14 * (1.0 + f.budget.abs()) {
                let log: Vec<f64> = p.iter().map(|&x| if x > 0.0 { x.ln() } else { f64::NEG_INFINITY }).collect();
                return f.project(&log);
            }
        }
        p
    }
}

fn kkt_step(h: &[Vec<f64>], g: &[f64], cost: Option<&[f64]>) -> Option<Vec<f64>> {
    let k = g.len();
    let extra = if cost.is_some() { 2 } else { 1 };
    let dim = k + extra;
    let mut a = vec![vec![0.0; dim]; dim];
    let mut b = vec![0.0; dim];
    for i in 0..k {
        a[i][..k].copy_from_slice(&h[i]);
        a[i][k] = 1.0;
        a[k][i] = 1.0;
        b[i] = -g[i];
        if let Some(c) = cost {
            a[i][k + 1] = c[i];
            a[k + 1][i] = c[i];
        }
    }
    match solve_linear(a, b) {
        Some(x) => Some(x[..k].to_vec()),
        // constant costs on the active rows make the face row redundant
        None if cost.is_some() => kkt_step(h, g, None),
        None => None,
    }
}

trait Normalize {
    fn normalize(self) -> Self;
}

impl Normalize for Vec<f64> {
    fn normalize(self) -> Self {
        let s: f64 = self.iter().sum();
        self.into_iter().map(|x| x / s).collect()
    }
}

/// Random starting points for orders in (0,1), seeded from the channel and order.
pub(crate) fn restart_points(ch: &FiniteChannel, order: Order) -> Vec<Vec<f64>> {
    let base = mix_seed(ch.fingerprint(), order.value().to_bits());
    (0..RESTARTS)
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(base, k as u64 + 1));
            let v: Vec<f64> = (0..ch.n_rows()).map(|_| Exp1.sample(&mut rng)).map(|x: f64| x.max(1e-12)).collect();
            v.normalize()
        })
        .collect()
}

pub(crate) fn uses_restarts(order: Order) -> bool {
    matches!(order.branch(), Order::Finite(a) if a < 1.0)
}

pub(crate) fn build_solution(
    ch: &FiniteChannel,
    order: Order,
    run: &Run,
    restarts: Vec<super::Bracket>,
) -> Result<CapacitySolution> {
    let prior = prior_of(&run.p);
    let center = crate::measures::renyi_mean(ch, &prior, order)?;
    let lower = run.ev.lower;
    let upper = run.ev.upper.max(lower);
    Ok(CapacitySolution {
        order,
        capacity: 0.5 * (lower + upper),
        center,
        prior,
        lower_bound: lower,
        upper_bound: upper,
        gap: upper - lower,
        iterations: run.iterations,
        restarts,
    })
}

pub(crate) fn check_args(order: Order, tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::DomainError(format!("tolerance must be positive, got {tol}")));
    }
    if order == Order::Zero {
        return Err(Error::OrderOutOfRange {
            order: 0.0,
            reason: "capacity is computed for orders in (0, inf]",
        });
    }
    Ok(())
}

/// Runs the single or multi-start solve and packages the result.
pub(crate) fn solve_problem(prob: &Problem, p0: Vec<f64>, starts: Vec<Vec<f64>>) -> Result<CapacitySolution> {
    let mut runs = vec![prob.run(p0)];
    for s in starts {
        runs.push(prob.run(s));
    }
    let brackets: Vec<super::Bracket> = if runs.len() > 1 {
        runs.iter()
            .map(|r| super::Bracket { lower: r.ev.lower, upper: r.ev.upper.max(r.ev.lower) })
            .collect()
    } else {
        Vec::new()
    };
    let iterations: usize = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.ev.gap().total_cmp(&b.ev.gap()).then(b.ev.lower.total_cmp(&a.ev.lower)))
        .expect("at least one run");
    let run = Run { iterations, ..best };
    let sol = build_solution(prob.ch, prob.order, &run, brackets)?;
    if sol.gap > prob.tol {
        return Err(Error::NotConverged(Box::new(sol)));
    }
    Ok(sol)
}
