//! Rényi capacity, radius and center of finite channels.

mod constrained;
mod ops;
mod solver;

pub use constrained::{solve_constrained_capacity, ConstraintSet, CostDirection};
pub use ops::{
    capacity_curve, center_continuity_check, convex_hull_augment, ehb_gap, epsilon_core, product_channel,
    radius_bruteforce, relative_radius, union_channel, CenterContinuityReport, CurveDiagnostics, CurveReport,
};
pub(crate) use ops::radius_raw;
pub use solver::{DEFAULT_MAX_ITER, DEFAULT_TOL};

use crate::error::{Error, Result};
use crate::measures::{FiniteChannel, Pmf, Prior};
use crate::order::Order;
use crate::output::Json;

use solver::{evaluate, max_upper, restart_points, solve_problem, uses_restarts, Problem, Run};

/// A two-sided bound on the capacity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

impl Bracket {
    /// `true` when the brackets are separated by more than rounding: the
    /// bounds are floating-point evaluations, each off by a few ulps.
    pub fn disjoint(&self, other: &Bracket) -> bool {
        let slack = |x: f64, y: f64| 16.0 * f64::EPSILON * x.abs().max(y.abs()).max(1.0);
        self.upper + slack(self.upper, other.lower) < other.lower
            || other.upper + slack(other.upper, self.lower) < self.lower
    }
}

/// Capacity with its certificate: `lower_bound = I_α(prior)` and
/// `upper_bound` = the relative radius at `center`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacitySolution {
    pub order: Order,
    pub capacity: f64,
    pub center: Pmf,
    pub prior: Prior,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Brackets of the individual starts of a multi-start solve.
    pub restarts: Vec<Bracket>,
}

impl CapacitySolution {
    pub fn bracket(&self) -> Bracket {
        Bracket { lower: self.lower_bound, upper: self.upper_bound }
    }

    pub fn to_json_value(&self) -> Json {
        Json::obj([
            ("order", order_json(self.order)),
            ("capacity", Json::Num(self.capacity)),
            ("lower", Json::Num(self.lower_bound)),
            ("upper", Json::Num(self.upper_bound)),
            ("gap", Json::Num(self.gap)),
            ("iterations", Json::Int(self.iterations as i64)),
            ("prior", Json::nums(self.prior.probs())),
            ("center", Json::nums(self.center.probs())),
        ])
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().render()
    }
}

pub(crate) fn order_json(o: Order) -> Json {
    Json::Num(o.value())
}

/// Certificate for a given prior, without optimization.
pub fn certificate(ch: &FiniteChannel, prior: &Prior, order: Order) -> Result<CapacitySolution> {
    prior.check(ch)?;
    solver::check_args(order, 1.0)?;
    let ev = evaluate(ch, prior.probs(), order, &max_upper);
    let run = Run { p: prior.probs().to_vec(), ev, iterations: 0 };
    solver::build_solution(ch, order, &run, Vec::new())
}

/// Certified order-α capacity. Returns [`Error::NotConverged`] with the best
/// bracket when the gap is still above `tol` after `max_iter` iterations.
pub fn solve_capacity(ch: &FiniteChannel, order: Order, tol: f64, max_iter: usize) -> Result<CapacitySolution> {
    solver::check_args(order, tol)?;
    let n = ch.n_rows();
    if order == Order::Infinity || n == 1 {
        // C_∞ = ln ‖∨_W W‖ is attained by every full-support prior
        let sol = certificate(ch, &Prior::uniform(n), order)?;
        if sol.gap > tol {
            return Err(Error::NotConverged(Box::new(sol)));
        }
        return Ok(sol);
    }
    let prob = Problem { ch, order, tol, max_iter, face: None, upper: &max_upper };
    let starts = if uses_restarts(order) { restart_points(ch, order) } else { Vec::new() };
    solve_problem(&prob, vec![1.0 / n as f64; n], starts)
}
