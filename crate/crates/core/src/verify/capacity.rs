//! Suites on capacity, radius and center.
//!
//! Capacity comparisons use the certified bracket `[lower, upper]` of every
//! solution, so a reported violation cannot be an artifact of solver slack.

use rand::Rng;

use crate::capacity::{
    convex_hull_augment, epsilon_core, product_channel, radius_raw, relative_radius, solve_capacity,
    solve_constrained_capacity, union_channel, CapacitySolution, ConstraintSet, CostDirection,
};
use crate::error::{Error, Result};
use crate::measures::{
    binary_renyi_entropy, divergence_raw, l1_distance, renyi_information, renyi_mean, FiniteChannel, Pmf, Prior,
};
use crate::numeric::log_sum_exp;
use crate::order::Order;

use super::gen::{self, FINITE_ATOMS, POSITIVE_ATOMS};
use super::{le, Ctx, Outcome, Suite, TolKind};

/// Iteration cap inside the suites; brackets stay valid when it is hit.
const MAX_ITER: usize = 20_000;
/// Resolution of the coarse simplex grid in the minimax oracle.
const GRID_RES: usize = 60;
/// Zoom steps of the oracle, each a local grid of `(2·ZOOM_SPAN+1)^{m−1}`
/// points with a quarter of the previous spacing.
const ZOOM_LEVELS: usize = 6;
const ZOOM_SPAN: i64 = 8;

pub(super) fn suites() -> Vec<Suite> {
    let s = |id, kind, run| Suite { id, kind, run };
    vec![
        s("capacity-order-monotone", TolKind::Solver, capacity_order_monotone),
        s("capacity-convex-transform", TolKind::Solver, capacity_convex_transform),
        s("uec-prior", TolKind::Solver, uec_prior),
        s("uec-order", TolKind::Solver, uec_order),
        s("minimax-bruteforce", TolKind::Grid, minimax_bruteforce),
        s("optimality-condition", TolKind::Identity, optimality_condition),
        s("ehb", TolKind::Solver, ehb),
        s("center-continuity", TolKind::Solver, center_continuity),
        s("union-bounds", TolKind::Solver, union_bounds),
        s("product-additivity", TolKind::Solver, product_additivity),
        s("epsilon-core", TolKind::Solver, epsilon_core_suite),
        s("convex-hull-invariance", TolKind::Solver, convex_hull_invariance),
        s("constrained-slack", TolKind::Solver, constrained_slack),
        s("constrained-ehb", TolKind::Solver, constrained_ehb),
    ]
}

fn accept(r: Result<CapacitySolution>) -> Result<CapacitySolution> {
    match r {
        Err(Error::NotConverged(s)) => Ok(*s),
        r => r,
    }
}

fn solve(c: &Ctx, ch: &FiniteChannel, o: Order) -> Result<CapacitySolution> {
    accept(solve_capacity(ch, o, c.tol.solver, MAX_ITER))
}

fn capacity_order_monotone(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let (a, b) = gen::order_pair(&mut c.rng, POSITIVE_ATOMS);
    let (sa, sb) = (solve(c, &ch, a)?, solve(c, &ch, b)?);
    Ok(Outcome::Margin(le(sa.lower_bound, sb.upper_bound)))
}

fn capacity_convex_transform(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    if c.rng.random_bool(0.5) {
        // ((1-α)/α) C_α nonincreasing on (0,1]
        let mut x = [gen::log_uniform(&mut c.rng, 1e-2, 1.0), gen::log_uniform(&mut c.rng, 1e-2, 1.0)];
        if c.rng.random_bool(0.1) {
            x[1] = 1.0;
        }
        x.sort_by(f64::total_cmp);
        let s0 = solve(c, &ch, Order::new(x[0])?)?;
        let s1 = solve(c, &ch, Order::new(x[1])?)?;
        let g = |x: f64, v: f64| (1.0 - x) / x * v;
        return Ok(Outcome::Margin(le(g(x[1], s1.lower_bound), g(x[0], s0.upper_bound))));
    }
    // (α-1) C_α convex on [1,∞)
    let mut x: Vec<f64> = (0..3).map(|_| 1.0 + gen::log_uniform(&mut c.rng, 1e-2, 99.0)).collect();
    if c.rng.random_bool(0.1) {
        x[0] = 1.0;
    }
    x.sort_by(f64::total_cmp);
    if x[2] == x[0] {
        return Ok(Outcome::Skipped);
    }
    let s: Vec<CapacitySolution> = x.iter().map(|&a| solve(c, &ch, Order::new(a)?)).collect::<Result<_>>()?;
    let f = |i: usize, v: f64| (x[i] - 1.0) * v;
    let t = (x[1] - x[0]) / (x[2] - x[0]);
    let chord = (1.0 - t) * f(0, s[0].upper_bound) + t * f(2, s[2].upper_bound);
    Ok(Outcome::Margin(le(f(1, s[1].lower_bound), chord)))
}

/// Bound on `sup_{α∈[0,ν]} |I_α(P1) − I_α(P2)|` in terms of `δ = ‖P1−P2‖/2`
/// and `C_ν`, for `ν > 0`.
pub(crate) fn uec_prior_bound(nu: Order, delta: f64, c_nu: f64) -> Result<f64> {
    if delta == 0.0 {
        return Ok(0.0);
    }
    let head = (delta * c_nu.exp_m1()).ln_1p();
    match nu.branch() {
        Order::One => Ok(binary_renyi_entropy(delta, Order::One)? + delta * c_nu + head),
        Order::Finite(v) => {
            let inner = log_sum_exp([(1.0 - delta).ln() / v, delta.ln() / v + (v - 1.0) / v * c_nu]);
            Ok(head - v / (1.0 - v) * inner)
        }
        _ => Err(Error::OrderOutOfRange { order: nu.value(), reason: "the bound is stated for 0 < ν < ∞" }),
    }
}

/// `(ε_ν, γ_ν)` of the common Lipschitz constant `γ_ν/ε²` on `[ε, ν−ε]`.
pub(crate) fn uec_order_constants(nu: f64, c_nu: f64) -> (f64, f64) {
    if nu <= 1.0 {
        (nu / 2.0, c_nu)
    } else {
        let e2 = std::f64::consts::E * std::f64::consts::E;
        ((nu - 1.0) / (8.0 * nu), nu * c_nu + 5.0 * (2.0 * c_nu).exp() / (2.0 * e2))
    }
}

fn uec_prior(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let nu = gen::order(&mut c.rng, FINITE_ATOMS);
    let c_nu = solve(c, &ch, nu)?.upper_bound;
    let p1 = gen::prior(&mut c.rng, ch.n_rows());
    let p2 = gen::nearby_prior(&mut c.rng, &p1);
    let delta = l1_distance(p1.probs(), p2.probs()) / 2.0;
    let a = match c.rng.random_range(0..10) {
        0 => Order::Zero,
        1 => nu,
        _ => Order::new(nu.value() * gen::log_uniform(&mut c.rng, 1e-3, 1.0))?,
    };
    let diff = (renyi_information(&ch, &p1, a)? - renyi_information(&ch, &p2, a)?).abs();
    Ok(Outcome::Margin(le(diff, uec_prior_bound(nu, delta, c_nu)?)))
}

fn uec_order(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let nu = gen::order(&mut c.rng, FINITE_ATOMS).value();
    let c_nu = solve(c, &ch, Order::new(nu)?)?.upper_bound;
    let (eps_nu, gamma) = uec_order_constants(nu, c_nu);
    let eps = eps_nu * c.rng.random_range(0.05..=1.0);
    let a = c.rng.random_range(eps..=nu - eps);
    let b = c.rng.random_range(eps..=nu - eps);
    let p = gen::prior(&mut c.rng, ch.n_rows());
    let diff = (renyi_information(&ch, &p, Order::new(a)?)? - renyi_information(&ch, &p, Order::new(b)?)?).abs();
    Ok(Outcome::Margin(le(diff, gamma / (eps * eps) * (a - b).abs())))
}

fn minimax_bruteforce(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 3);
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let s = solve(c, &ch, o)?;
    let grid = grid_radius(&ch, o);
    Ok(Outcome::Margin(le(s.lower_bound, grid).min(le(grid, s.upper_bound))))
}

/// Points `q` of the simplex with `q[i] = base[i] + step·k[i]` for the first
/// `m−1` coordinates and `|k[i]| ≤ span`.
fn local_grid(base: &[f64], step: f64, span: i64, visit: &mut dyn FnMut(&[f64])) {
    let m = base.len();
    let mut k = vec![-span; m - 1];
    let mut q = vec![0.0; m];
    loop {
        for i in 0..m - 1 {
            q[i] = base[i] + step * k[i] as f64;
        }
        let head: f64 = q[..m - 1].iter().sum();
        q[m - 1] = 1.0 - head;
        if q.iter().all(|&x| x >= 0.0) {
            visit(&q);
        }
        let mut i = 0;
        while i < m - 1 {
            k[i] += 1;
            if k[i] <= span {
                break;
            }
            k[i] = -span;
            i += 1;
        }
        if i == m - 1 {
            return;
        }
    }
}

/// Smallest radius over a coarse simplex grid refined by local zooms; an
/// upper bound on the capacity that does not use the solver.
fn grid_radius(ch: &FiniteChannel, o: Order) -> f64 {
    let m = ch.n_outputs();
    let uniform = vec![1.0 / m as f64; m];
    let mut best = (radius_raw(ch, &uniform, o), uniform);
    if m == 1 {
        return best.0;
    }
    let corner = {
        let mut v = vec![0.0; m];
        v[m - 1] = 1.0;
        v
    };
    let coarse = 1.0 / GRID_RES as f64;
    let consider = |q: &[f64], best: &mut (f64, Vec<f64>)| {
        let r = radius_raw(ch, q, o);
        if r < best.0 {
            *best = (r, q.to_vec());
        }
    };
    local_grid(&corner, coarse, GRID_RES as i64, &mut |q| consider(q, &mut best));
    let mut step = coarse;
    for _ in 0..ZOOM_LEVELS {
        step /= 4.0;
        let base = best.1.clone();
        local_grid(&base, step, ZOOM_SPAN, &mut |q| consider(q, &mut best));
    }
    best.0
}

fn optimality_condition(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let o = gen::order(&mut c.rng, FINITE_ATOMS);
    let s = solve(c, &ch, o)?;
    let q = renyi_mean(&ch, &s.prior, o)?;
    let d: Vec<f64> = (0..ch.n_rows()).map(|w| divergence_raw(ch.row(w), q.probs(), o)).collect();
    let upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lower = renyi_information(&ch, &s.prior, o)?;
    // Σ P(w) e^{(α−1)(D_w − U)} = e^{(α−1)(I − U)} with every term on one side of 1
    let mut margin = le(lower, upper);
    for (w, &p) in s.prior.probs().iter().enumerate() {
        let (lhs, rhs) = match o.branch() {
            Order::Finite(a) => (p * ((a - 1.0) * (d[w] - upper)).exp_m1().abs(), ((a - 1.0) * (lower - upper)).exp_m1().abs()),
            _ => (p * (upper - d[w]), upper - lower),
        };
        margin = margin.min(le(lhs, rhs));
    }
    Ok(Outcome::Margin(margin))
}

/// A random output distribution or a perturbation of `center`.
fn probe(c: &mut Ctx, center: &Pmf) -> Pmf {
    if c.rng.random_bool(0.5) {
        return gen::maybe_sparse_pmf(&mut c.rng, center.len());
    }
    let t = gen::log_uniform(&mut c.rng, 1e-8, 0.5);
    let noise = gen::dirichlet(&mut c.rng, center.len(), false);
    Pmf::normalized(center.probs().iter().zip(&noise).map(|(a, b)| (1.0 - t) * a + t * b).collect()).expect("mass")
}

fn ehb(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let s = solve(c, &ch, o)?;
    let q = probe(c, &s.center);
    let r = relative_radius(&ch, q.as_measure(), o)?;
    let d = divergence_raw(s.center.probs(), q.probs(), o);
    Ok(Outcome::Margin(le(s.lower_bound + d, r)))
}

/// Pinsker radius of the center error implied by a certificate gap.
fn center_error(s: &CapacitySolution) -> f64 {
    (2.0 * s.gap.max(0.0) / s.order.value().min(1.0)).sqrt()
}

fn center_continuity(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let (a, e) = gen::order_pair(&mut c.rng, FINITE_ATOMS);
    let (sa, se) = (solve(c, &ch, a)?, solve(c, &ch, e)?);
    let inc = se.upper_bound - sa.lower_bound;
    let div = divergence_raw(sa.center.probs(), se.center.probs(), a);
    let dist = l1_distance(sa.center.probs(), se.center.probs());
    let bound = (2.0 * inc.max(0.0) / a.value().min(1.0)).sqrt() + center_error(&sa) + center_error(&se);
    Ok(Outcome::Margin(le(div, inc).min(le(dist, bound))))
}

fn union_bounds(c: &mut Ctx) -> Result<Outcome> {
    let ch1 = gen::channel(&mut c.rng, 6, 6);
    let n2 = gen::size(&mut c.rng, 1, 6);
    let ch2 = gen::channel_of_size(&mut c.rng, n2, ch1.n_outputs());
    let u = union_channel(&ch1, &ch2)?;
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let (s1, s2, su) = (solve(c, &ch1, o)?, solve(c, &ch2, o)?, solve(c, &u, o)?);
    let lo = le(s1.lower_bound.max(s2.lower_bound), su.upper_bound);
    let hi = le(su.lower_bound, log_sum_exp([s1.upper_bound, s2.upper_bound]));
    Ok(Outcome::Margin(lo.min(hi)))
}

fn product_additivity(c: &mut Ctx) -> Result<Outcome> {
    let ch1 = gen::channel(&mut c.rng, 3, 3);
    let ch2 = gen::channel(&mut c.rng, 3, 3);
    let p = product_channel(&ch1, &ch2)?;
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let (s1, s2, sp) = (solve(c, &ch1, o)?, solve(c, &ch2, o)?, solve(c, &p, o)?);
    let lo = le(s1.lower_bound + s2.lower_bound, sp.upper_bound);
    let hi = le(sp.lower_bound, s1.upper_bound + s2.upper_bound);
    Ok(Outcome::Margin(lo.min(hi)))
}

fn epsilon_core_suite(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let eps = gen::log_uniform(&mut c.rng, 1e-6, 1.0);
    let s = solve(c, &ch, o)?;
    let core = epsilon_core(&ch, o, eps, &s)?;
    let sc = solve(c, &core, o)?;
    let mut margin = le(sc.lower_bound, s.upper_bound).min(le(s.lower_bound, sc.upper_bound));
    // priors on the core: 0 ≤ C − I(P) − D(q_P‖center) ≤ ε
    let p = gen::prior(&mut c.rng, core.n_rows());
    let i = renyi_information(&core, &p, o)?;
    let d = divergence_raw(renyi_mean(&core, &p, o)?.probs(), s.center.probs(), o);
    margin = margin.min(le(i + d, s.upper_bound));
    margin = margin.min(le(s.upper_bound - i - d, eps + s.gap + (s.upper_bound - s.capacity)));
    Ok(Outcome::Margin(margin))
}

fn convex_hull_invariance(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let k = gen::size(&mut c.rng, 1, 3);
    let priors: Vec<Prior> = (0..k).map(|_| gen::prior(&mut c.rng, ch.n_rows())).collect();
    let aug = convex_hull_augment(&ch, &priors)?;
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let (s, sa) = (solve(c, &ch, o)?, solve(c, &aug, o)?);
    Ok(Outcome::Margin(le(sa.lower_bound, s.upper_bound).min(le(s.lower_bound, sa.upper_bound))))
}

fn random_constraint(c: &mut Ctx, n: usize) -> ConstraintSet {
    if c.rng.random_bool(0.3) {
        let mut s: Vec<usize> = (0..n).filter(|_| c.rng.random_bool(0.6)).collect();
        if s.is_empty() {
            s.push(c.rng.random_range(0..n));
        }
        return ConstraintSet::SupportRestriction(s);
    }
    let costs: Vec<f64> = (0..n).map(|_| c.rng.random_range(0.0..1.0)).collect();
    let (lo, hi) = costs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let budget = lo + (hi - lo) * c.rng.random_range(0.0..=1.0);
    let dir = if c.rng.random_bool(0.5) { CostDirection::Le } else { CostDirection::Ge };
    ConstraintSet::LinearCost { costs, budget, dir }
}

/// Margin of `P ∈ Λ`.
fn feasibility(cs: &ConstraintSet, p: &[f64]) -> f64 {
    match cs {
        ConstraintSet::Unconstrained => f64::INFINITY,
        ConstraintSet::SupportRestriction(s) => {
            let outside: f64 = p.iter().enumerate().filter(|(w, _)| !s.contains(w)).map(|(_, x)| x).sum();
            le(outside, 0.0)
        }
        ConstraintSet::LinearCost { costs, budget, dir } => {
            let m: f64 = p.iter().zip(costs).map(|(a, b)| a * b).sum();
            match dir {
                CostDirection::Le => le(m, *budget),
                CostDirection::Ge => le(*budget, m),
            }
        }
    }
}

struct Constrained {
    ch: FiniteChannel,
    order: Order,
    cs: ConstraintSet,
    sol: CapacitySolution,
}

fn constrained_instance(c: &mut Ctx) -> Result<Constrained> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let order = gen::order(&mut c.rng, FINITE_ATOMS);
    let cs = random_constraint(c, ch.n_rows());
    let sol = accept(solve_constrained_capacity(&ch, order, &cs, c.tol.solver, MAX_ITER))?;
    Ok(Constrained { ch, order, cs, sol })
}

fn constrained_slack(c: &mut Ctx) -> Result<Outcome> {
    let k = constrained_instance(c)?;
    let free = solve(c, &k.ch, k.order)?;
    let mut margin = feasibility(&k.cs, k.sol.prior.probs()).min(le(k.sol.lower_bound, free.upper_bound));
    // minimax: every output distribution has constrained radius at least C_Λ
    let q = probe(c, &k.sol.center);
    margin = margin.min(le(k.sol.lower_bound, k.cs.radius(&k.ch, &q, k.order)?));
    // a slack constraint does not lower the capacity
    if k.cs.contains(free.prior.probs()) {
        margin = margin.min(le(free.lower_bound, k.sol.upper_bound));
    }
    Ok(Outcome::Margin(margin))
}

fn constrained_ehb(c: &mut Ctx) -> Result<Outcome> {
    let k = constrained_instance(c)?;
    let q = probe(c, &k.sol.center);
    let r = k.cs.radius(&k.ch, &q, k.order)?;
    let d = divergence_raw(k.sol.center.probs(), q.probs(), k.order);
    Ok(Outcome::Margin(le(k.sol.lower_bound + d, r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uec_prior_bound_vanishes_at_zero_distance_and_grows() {
        let nu = Order::Finite(2.0);
        assert_eq!(uec_prior_bound(nu, 0.0, 1.0).unwrap(), 0.0);
        let a = uec_prior_bound(nu, 0.1, 1.0).unwrap();
        let b = uec_prior_bound(nu, 0.2, 1.0).unwrap();
        assert!(0.0 < a && a < b);
        // the order-one branch is the limit of the others
        let one = uec_prior_bound(Order::One, 0.1, 0.7).unwrap();
        let near = uec_prior_bound(Order::Finite(1.0 + 1e-6), 0.1, 0.7).unwrap();
        assert!((one - near).abs() < 1e-5, "{one} {near}");
    }

    #[test]
    fn uec_order_constants_branches() {
        assert_eq!(uec_order_constants(0.5, 0.3), (0.25, 0.3));
        let (e, g) = uec_order_constants(2.0, 0.0);
        assert_eq!(e, 1.0 / 16.0);
        assert!((g - 2.5 / (std::f64::consts::E.powi(2))).abs() < 1e-15);
    }
}
