use crate::error::{Error, Result};
use crate::measures::{divergence_raw, FiniteChannel, Pmf, Prior};
use crate::numeric::log_sum_exp;
use crate::order::Order;

use super::solver::{self, evaluate, restart_points, uses_restarts, Face, Problem, Run};
use super::{solve_capacity, CapacitySolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostDirection {
    /// `Σ P(w) c(w) ≤ Γ`
    Le,
    /// `Σ P(w) c(w) ≥ Γ`
    Ge,
}

/// Convex set of admissible priors.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    Unconstrained,
    SupportRestriction(Vec<usize>),
    LinearCost { costs: Vec<f64>, budget: f64, dir: CostDirection },
}

impl ConstraintSet {
    /// Checks shape and non-emptiness against `ch`.
    pub fn validate(&self, ch: &FiniteChannel) -> Result<()> {
        let n = ch.n_rows();
        match self {
            ConstraintSet::Unconstrained => Ok(()),
            ConstraintSet::SupportRestriction(s) => {
                if s.is_empty() {
                    return Err(Error::InfeasibleConstraint("empty support".into()));
                }
                if let Some(&w) = s.iter().find(|&&w| w >= n) {
                    return Err(Error::InfeasibleConstraint(format!("row {w} out of range")));
                }
                Ok(())
            }
            ConstraintSet::LinearCost { costs, budget, dir } => {
                if costs.len() != n {
                    return Err(Error::AlphabetMismatch { left: n, right: costs.len() });
                }
                if costs.iter().any(|c| !c.is_finite()) || !budget.is_finite() {
                    return Err(Error::DomainError("costs and budget must be finite".into()));
                }
                let (lo, hi) = min_max(costs);
                let feasible = match dir {
                    CostDirection::Le => lo <= *budget,
                    CostDirection::Ge => hi >= *budget,
                };
                if feasible {
                    Ok(())
                } else {
                    Err(Error::InfeasibleConstraint(format!("no prior meets the budget {budget}")))
                }
            }
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        match self {
            ConstraintSet::Unconstrained => true,
            ConstraintSet::SupportRestriction(s) => p.iter().enumerate().all(|(w, &x)| x == 0.0 || s.contains(&w)),
            ConstraintSet::LinearCost { costs, budget, dir } => {
                let m: f64 = p.iter().zip(costs).map(|(a, b)| a * b).sum();
                match dir {
                    CostDirection::Le => m <= *budget,
                    CostDirection::Ge => m >= *budget,
                }
            }
        }
    }

    /// `sup_{P∈Λ} D_α(P ⋊ W ‖ P ⊗ Q)`, given the row divergences `D_α(W_w‖Q)`.
    ///
    /// The supremum of a monotone transform of a linear function of `P` is
    /// attained at a vertex of `Λ`, so the vertices are enumerated.
    pub fn sup_joint_divergence(&self, d: &[f64], order: Order) -> f64 {
        let n = d.len();
        let mut best = f64::NEG_INFINITY;
        let mut consider = |pts: &[(usize, f64)]| {
            best = best.max(mixture_divergence(d, pts, order));
        };
        match self {
            ConstraintSet::Unconstrained => (0..n).for_each(|w| consider(&[(w, 1.0)])),
            ConstraintSet::SupportRestriction(s) => s.iter().for_each(|&w| consider(&[(w, 1.0)])),
            ConstraintSet::LinearCost { costs, budget, dir } => {
                let ok = |c: f64| match dir {
                    CostDirection::Le => c <= *budget,
                    CostDirection::Ge => c >= *budget,
                };
                for w in 0..n {
                    if ok(costs[w]) {
                        consider(&[(w, 1.0)]);
                    }
                }
                for i in 0..n {
                    for j in 0..n {
                        if costs[i] < *budget && *budget < costs[j] {
                            let t = (costs[j] - budget) / (costs[j] - costs[i]);
                            consider(&[(i, t), (j, 1.0 - t)]);
                        }
                    }
                }
            }
        }
        best
    }

    /// `sup_{P∈Λ} D_α(P ⋊ W ‖ P ⊗ Q)` for an output measure `q`.
    pub fn radius(&self, ch: &FiniteChannel, q: &Pmf, order: Order) -> Result<f64> {
        self.validate(ch)?;
        if q.len() != ch.n_outputs() {
            return Err(Error::AlphabetMismatch { left: ch.n_outputs(), right: q.len() });
        }
        let d: Vec<f64> = (0..ch.n_rows()).map(|w| divergence_raw(ch.row(w), q.probs(), order)).collect();
        Ok(self.sup_joint_divergence(&d, order))
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

/// `D_α(P ⋊ W ‖ P ⊗ Q)` from the row divergences, for a prior given as
/// `(row, mass)` pairs.
fn mixture_divergence(d: &[f64], pts: &[(usize, f64)], order: Order) -> f64 {
    let pts: Vec<(usize, f64)> = pts.iter().copied().filter(|&(_, m)| m > 0.0).collect();
    match order.branch() {
        Order::One => pts.iter().map(|&(w, m)| m * d[w]).sum(),
        Order::Finite(a) => {
            let l = log_sum_exp(pts.iter().map(|&(w, m)| m.ln() + (a - 1.0) * d[w]));
            l / (a - 1.0)
        }
        _ => pts.iter().map(|&(w, _)| d[w]).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Capacity over a convex set of priors, with the constrained certificate:
/// `lower = I_α(P)` for a feasible `P`, `upper = sup_{P∈Λ} D_α(P⋊W‖P⊗q_{α,P*})`.
pub fn solve_constrained_capacity(
    ch: &FiniteChannel,
    order: Order,
    constraint: &ConstraintSet,
    tol: f64,
    max_iter: usize,
) -> Result<CapacitySolution> {
    solver::check_args(order, tol)?;
    if order == Order::Infinity {
        return Err(Error::OrderOutOfRange {
            order: f64::INFINITY,
            reason: "constrained capacity is computed for finite orders",
        });
    }
    constraint.validate(ch)?;
    match constraint {
        ConstraintSet::Unconstrained => solve_capacity(ch, order, tol, max_iter),
        ConstraintSet::SupportRestriction(s) => solve_on_support(ch, order, s, tol, max_iter),
        ConstraintSet::LinearCost { costs, budget, dir } => {
            let (lo, hi) = min_max(costs);
            let slack = match dir {
                CostDirection::Le => *budget >= hi,
                CostDirection::Ge => *budget <= lo,
            };
            if slack {
                return solve_capacity(ch, order, tol, max_iter);
            }
            let edge = match dir {
                CostDirection::Le => (*budget == lo).then_some(lo),
                CostDirection::Ge => (*budget == hi).then_some(hi),
            };
            if let Some(e) = edge {
                let s: Vec<usize> = (0..ch.n_rows()).filter(|&w| costs[w] == e).collect();
                return solve_on_support(ch, order, &s, tol, max_iter);
            }
            solve_linear_cost(ch, order, constraint, costs, *budget, *dir, tol, max_iter)
        }
    }
}

fn solve_on_support(
    ch: &FiniteChannel,
    order: Order,
    support: &[usize],
    tol: f64,
    max_iter: usize,
) -> Result<CapacitySolution> {
    let mut s = support.to_vec();
    s.sort_unstable();
    s.dedup();
    let sub = ch.select_rows(&s)?;
    let embed = |sol: CapacitySolution| -> Result<CapacitySolution> {
        let mut p = vec![0.0; ch.n_rows()];
        for (k, &w) in s.iter().enumerate() {
            p[w] = sol.prior.probs()[k];
        }
        Ok(CapacitySolution { prior: Prior::from_pmf(Pmf::normalized(p)?), ..sol })
    };
    match solve_capacity(&sub, order, tol, max_iter) {
        Ok(sol) => embed(sol),
        Err(Error::NotConverged(sol)) => Err(Error::NotConverged(Box::new(embed(*sol)?))),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn solve_linear_cost(
    ch: &FiniteChannel,
    order: Order,
    constraint: &ConstraintSet,
    costs: &[f64],
    budget: f64,
    dir: CostDirection,
    tol: f64,
    max_iter: usize,
) -> Result<CapacitySolution> {
    let upper = |d: &[f64]| constraint.sup_joint_divergence(d, order);
    let n = ch.n_rows();
    // If some unconstrained optimum is feasible, it is a constrained optimum.
    let free = match solve_capacity(ch, order, tol, max_iter) {
        Ok(s) => Some(s),
        Err(Error::NotConverged(s)) => Some(*s),
        Err(e) => return Err(e),
    };
    if let Some(s) = free.filter(|s| constraint.contains(s.prior.probs())) {
        let ev = evaluate(ch, s.prior.probs(), order, &upper);
        if ev.gap() <= tol {
            let run = Run { p: s.prior.probs().to_vec(), ev, iterations: s.iterations };
            return solver::build_solution(ch, order, &run, Vec::new());
        }
    }
    // Otherwise the optimum lies on the face Σ P c = Γ.
    let face = Face { costs: costs.to_vec(), budget };
    let prob = Problem { ch, order, tol, max_iter, face: Some(&face), upper: &upper };
    let p0 = face.project(&vec![0.0; n]);
    let starts: Vec<Vec<f64>> = if uses_restarts(order) {
        restart_points(ch, order).into_iter().map(|p| face.project(&p.iter().map(|x| x.ln()).collect::<Vec<_>>())).collect()
    } else {
        Vec::new()
    };
    let mut runs = vec![prob.run(p0)];
    runs.extend(starts.into_iter().map(|s| prob.run(s)));
    let iterations = runs.iter().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .min_by(|a, b| a.ev.gap().total_cmp(&b.ev.gap()))
        .expect("at least one run");
    let p = make_feasible(best.p, costs, budget, dir);
    let ev = evaluate(ch, &p, order, &upper);
    let sol = solver::build_solution(ch, order, &Run { p, ev, iterations }, Vec::new())?;
    if sol.gap > tol {
        return Err(Error::NotConverged(Box::new(sol)));
    }
    Ok(sol)
}

/// Removes rounding-level budget violations by mixing in the cheapest (or
/// dearest) row.
fn make_feasible(mut p: Vec<f64>, costs: &[f64], budget: f64, dir: CostDirection) -> Vec<f64> {
    let mean: f64 = p.iter().zip(costs).map(|(a, b)| a * b).sum();
    let (excess, target) = match dir {
        CostDirection::Le => (mean - budget, argext(costs, |a, b| a < b)),
        CostDirection::Ge => (budget - mean, argext(costs, |a, b| a > b)),
    };
    if excess > 0.0 {
        let t = (excess / (mean - costs[target]).abs() * (1.0 + 1e-12)).min(1.0);
        for x in p.iter_mut() {
            *x *= 1.0 - t;
        }
        p[target] += t;
    }
    p
}

fn argext(v: &[f64], better: impl Fn(f64, f64) -> bool) -> usize {
    (1..v.len()).fold(0, |b, i| if better(v[i], v[b]) { i } else { b })
}
