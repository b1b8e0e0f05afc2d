use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{divergence_raw, l1_distance, log_mean, FiniteChannel, FiniteMeasure, Pmf, Prior};
use crate::order::Order;

use super::{solve_capacity, CapacitySolution, DEFAULT_MAX_ITER};

/// `max_W D_α(W‖q)`.
pub fn relative_radius(ch: &FiniteChannel, q: &FiniteMeasure, order: Order) -> Result<f64> {
    if q.len() != ch.n_outputs() {
        return Err(Error::AlphabetMismatch { left: ch.n_outputs(), right: q.len() });
    }
    if q.is_zero() {
        return Err(Error::ZeroMeasure);
    }
    Ok(radius_raw(ch, q.weights(), order))
}

pub(crate) fn radius_raw(ch: &FiniteChannel, q: &[f64], order: Order) -> f64 {
    ch.rows()
        .iter()
        .map(|r| divergence_raw(r.probs(), q, order))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Minimum of the relative radius over the grid `{k/res}` on the output
/// simplex. Only for alphabets of size at most 4.
pub fn radius_bruteforce(ch: &FiniteChannel, order: Order, grid_resolution: usize) -> Result<f64> {
    let m = ch.n_outputs();
    if m > 4 {
        return Err(Error::AlphabetTooLarge { size: m, max: 4 });
    }
    if order == Order::Zero {
        return Err(Error::OrderOutOfRange { order: 0.0, reason: "the radius is defined for orders in (0, inf]" });
    }
    if grid_resolution == 0 {
        return Err(Error::DomainError("grid resolution must be positive".into()));
    }
    if ch.n_rows() == 1 {
        return Ok(0.0);
    }
    let res = grid_resolution;
    let mut best = f64::INFINITY;
    let mut counts = vec![0usize; m];
    enumerate(&mut counts, 0, res, &mut |c| {
        let q: Vec<f64> = c.iter().map(|&k| k as f64 / res as f64).collect();
        best = best.min(radius_raw(ch, &q, order));
    });
    Ok(best)
}

fn enumerate(counts: &mut Vec<usize>, i: usize, left: usize, f: &mut dyn FnMut(&[usize])) {
    if i + 1 == counts.len() {
        counts[i] = left;
        f(counts);
        return;
    }
    for k in 0..=left {
        counts[i] = k;
        enumerate(counts, i + 1, left - k, f);
    }
}

/// Order-sweep diagnostics. Index `i` in a violation list refers to the pair
/// or triple of grid points starting at `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CurveDiagnostics {
    pub monotonicity_violations: Vec<usize>,
    pub convexity_violations: Vec<usize>,
    pub small_order_violations: Vec<usize>,
    pub continuity_violations: Vec<usize>,
    pub max_adjacent_jump: f64,
    /// The order `ν` whose capacity feeds the Lipschitz bound.
    pub lipschitz_order: Option<f64>,
}

impl CurveDiagnostics {
    pub fn total_violations(&self) -> usize {
        self.monotonicity_violations.len()
            + self.convexity_violations.len()
            + self.small_order_violations.len()
            + self.continuity_violations.len()
    }
}

#[derive(Debug, Clone)]
pub struct CurveReport {
    pub orders: Vec<Order>,
    pub points: Vec<Result<CapacitySolution>>,
    pub diagnostics: CurveDiagnostics,
}

/// Capacity at every order of a sorted grid, solved in parallel.
pub fn capacity_curve(ch: &FiniteChannel, alphas: &[Order], tol: f64) -> Result<CurveReport> {
    if alphas.windows(2).any(|w| w[0].value() > w[1].value()) {
        return Err(Error::DomainError("orders must be sorted".into()));
    }
    if let Some(o) = alphas.iter().find(|o| **o == Order::Zero) {
        return Err(Error::OrderOutOfRange { order: o.value(), reason: "capacity is computed for orders in (0, inf]" });
    }
    let points: Vec<Result<CapacitySolution>> =
        alphas.par_iter().map(|&o| solve_capacity(ch, o, tol, DEFAULT_MAX_ITER)).collect();
    let diagnostics = diagnose(ch, alphas, &points, tol);
    Ok(CurveReport { orders: alphas.to_vec(), points, diagnostics })
}

fn diagnose(ch: &FiniteChannel, alphas: &[Order], points: &[Result<CapacitySolution>], tol: f64) -> CurveDiagnostics {
    let mut d = CurveDiagnostics::default();
    let slack = 2.0 * tol;
    let ok: Vec<Option<&CapacitySolution>> = points.iter().map(|p| p.as_ref().ok()).collect();
    for i in 0..alphas.len().saturating_sub(1) {
        if let (Some(a), Some(b)) = (ok[i], ok[i + 1]) {
            if b.upper_bound < a.lower_bound - slack {
                d.monotonicity_violations.push(i);
            }
            d.max_adjacent_jump = d.max_adjacent_jump.max((b.capacity - a.capacity).abs());
        }
    }
    // (α-1) C_α convex on (1,∞)
    for i in 0..alphas.len().saturating_sub(2) {
        let (x0, x1, x2) = (alphas[i].value(), alphas[i + 1].value(), alphas[i + 2].value());
        if !(x0 > 1.0 && x2.is_finite() && x0 < x1 && x1 < x2) {
            continue;
        }
        if let (Some(a), Some(b), Some(c)) = (ok[i], ok[i + 1], ok[i + 2]) {
            let f = |x: f64, s: &CapacitySolution| (x - 1.0) * s.capacity;
            let chord = f(x0, a) + (x1 - x0) / (x2 - x0) * (f(x2, c) - f(x0, a));
            if f(x1, b) > chord + slack * (x2 - 1.0) {
                d.convexity_violations.push(i);
            }
        }
    }
    // ((1-α)/α) C_α nonincreasing on (0,1)
    for i in 0..alphas.len().saturating_sub(1) {
        let (x0, x1) = (alphas[i].value(), alphas[i + 1].value());
        if !(x0 > 0.0 && x1 < 1.0) {
            continue;
        }
        if let (Some(a), Some(b)) = (ok[i], ok[i + 1]) {
            let g = |x: f64, s: &CapacitySolution| (1.0 - x) / x * s.capacity;
            if g(x1, b) > g(x0, a) + slack * (1.0 - x0) / x0 {
                d.small_order_violations.push(i);
            }
        }
    }
    // common Lipschitz constant on compact subsets of (0, ν)
    let max_finite = alphas.iter().map(|o| o.value()).filter(|v| v.is_finite()).fold(0.0, f64::max);
    if max_finite > 0.0 {
        let nu = 2.0 * max_finite;
        if let Ok(s) = solve_capacity(ch, Order::new(nu).expect("positive"), tol, DEFAULT_MAX_ITER) {
            d.lipschitz_order = Some(nu);
            let c_nu = s.upper_bound;
            let (eps_nu, gamma) = if nu <= 1.0 {
                (nu / 2.0, c_nu)
            } else {
                ((nu - 1.0) / (8.0 * nu), nu * c_nu + 5.0 * (2.0 * c_nu).exp() / (2.0 * std::f64::consts::E.powi(2)))
            };
            for i in 0..alphas.len().saturating_sub(1) {
                let (x0, x1) = (alphas[i].value(), alphas[i + 1].value());
                if !x1.is_finite() {
                    continue;
                }
                if let (Some(a), Some(b)) = (ok[i], ok[i + 1]) {
                    let eps = eps_nu.min(x0).min(nu - x1);
                    let bound = gamma / (eps * eps) * (x1 - x0);
                    if (b.capacity - a.capacity).abs() > bound + slack {
                        d.continuity_violations.push(i);
                    }
                }
            }
        }
    }
    d
}

/// `R(q) - C_α - D_α(center‖q)`; nonnegative up to the solver slack.
pub fn ehb_gap(ch: &FiniteChannel, q: &Pmf, order: Order, solution: &CapacitySolution) -> Result<f64> {
    let r = relative_radius(ch, q.as_measure(), order)?;
    if r == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    let d = divergence_raw(solution.center.probs(), q.probs(), order);
    Ok(r - solution.capacity - d)
}

/// Rows `W1 ⊗ W2` on the product alphabet, with `y = y1·m2 + y2`.
pub fn product_channel(ch1: &FiniteChannel, ch2: &FiniteChannel) -> Result<FiniteChannel> {
    let mut rows = Vec::with_capacity(ch1.n_rows() * ch2.n_rows());
    let mut labels = Vec::with_capacity(rows.capacity());
    for (i, a) in ch1.rows().iter().enumerate() {
        for (j, b) in ch2.rows().iter().enumerate() {
            let v: Vec<f64> = a.probs().iter().flat_map(|x| b.probs().iter().map(move |y| x * y)).collect();
            rows.push(Pmf::normalized(v)?);
            labels.push(format!("{}x{}", ch1.labels()[i], ch2.labels()[j]));
        }
    }
    FiniteChannel::from_pmfs(rows)?.with_labels(labels)
}

/// Rows of both channels, exact duplicates removed.
pub fn union_channel(ch1: &FiniteChannel, ch2: &FiniteChannel) -> Result<FiniteChannel> {
    if ch1.n_outputs() != ch2.n_outputs() {
        return Err(Error::AlphabetMismatch { left: ch1.n_outputs(), right: ch2.n_outputs() });
    }
    let mut rows: Vec<Pmf> = Vec::new();
    let mut labels = Vec::new();
    for ch in [ch1, ch2] {
        for (r, l) in ch.rows().iter().zip(ch.labels()) {
            if !rows.contains(r) {
                rows.push(r.clone());
                labels.push(l.clone());
            }
        }
    }
    FiniteChannel::from_pmfs(rows)?.with_labels(labels)
}

/// Rows with `D_α(W‖center) ≥ C_α - ε`; the threshold is widened by the
/// certificate gap.
pub fn epsilon_core(ch: &FiniteChannel, order: Order, eps: f64, solution: &CapacitySolution) -> Result<FiniteChannel> {
    if !(eps >= 0.0) {
        return Err(Error::DomainError(format!("epsilon must be nonnegative, got {eps}")));
    }
    let threshold = solution.capacity - eps - solution.gap;
    let keep: Vec<usize> = (0..ch.n_rows())
        .filter(|&w| divergence_raw(ch.row(w), solution.center.probs(), order) >= threshold)
        .collect();
    if keep.is_empty() {
        return Err(Error::EmptyCore);
    }
    ch.select_rows(&keep)
}

/// Appends the mixtures `m_{1,P}` for each prior.
pub fn convex_hull_augment(ch: &FiniteChannel, priors: &[Prior]) -> Result<FiniteChannel> {
    let mut rows = ch.rows().to_vec();
    let mut labels = ch.labels().to_vec();
    for (k, p) in priors.iter().enumerate() {
        p.check(ch)?;
        let mix: Vec<f64> = log_mean(ch, p, Order::One).iter().map(|l| l.exp()).collect();
        rows.push(Pmf::normalized(mix)?);
        labels.push(format!("mix{k}"));
    }
    FiniteChannel::from_pmfs(rows)?.with_labels(labels)
}

/// Both sides of the center-continuity inequalities for orders `α ≤ η`.
#[derive(Debug, Clone, PartialEq)]
pub struct CenterContinuityReport {
    pub capacity_increase: f64,
    pub center_divergence: f64,
    pub center_distance: f64,
    pub distance_bound: f64,
    pub slack: f64,
    pub holds: bool,
}

/// Checks `C_η - C_α ≥ D_α(q_α‖q_η)` and the Pinsker consequence
/// `‖q_η - q_α‖ ≤ sqrt(2(C_η - C_α)/min(1,α))`.
pub fn center_continuity_check(at_alpha: &CapacitySolution, at_eta: &CapacitySolution) -> Result<CenterContinuityReport> {
    let (a, e) = (at_alpha.order.value(), at_eta.order.value());
    if a > e {
        return Err(Error::DomainError(format!("need alpha <= eta, got {a} > {e}")));
    }
    let slack = 10.0 * (at_alpha.gap + at_eta.gap) + 1e-12;
    let inc = at_eta.capacity - at_alpha.capacity;
    let div = divergence_raw(at_alpha.center.probs(), at_eta.center.probs(), at_alpha.order);
    let dist = l1_distance(at_alpha.center.probs(), at_eta.center.probs());
    let bound = (2.0 * (inc + slack).max(0.0) / a.min(1.0)).sqrt();
    let holds = inc >= div - slack && dist <= bound + slack;
    Ok(CenterContinuityReport {
        capacity_increase: inc,
        center_divergence: div,
        center_distance: dist,
        distance_bound: bound,
        slack,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::DEFAULT_TOL;
    use crate::measures::binary_renyi_entropy;

    fn bsc(d: f64) -> FiniteChannel {
        FiniteChannel::new(vec![vec![1.0 - d, d], vec![d, 1.0 - d]]).unwrap()
    }

    #[test]
    fn radius_examples() {
        let ch = FiniteChannel::new(vec![vec![0.3, 0.7]]).unwrap();
        assert_eq!(relative_radius(&ch, &FiniteMeasure::new(vec![0.3, 0.7]).unwrap(), Order::Finite(2.0)).unwrap(), 0.0);
        let q = FiniteMeasure::new(vec![0.5, 0.5]).unwrap();
        for a in [0.5, 1.0, 3.0, f64::INFINITY] {
            let r = relative_radius(&FiniteChannel::identity(2), &q, Order::new(a).unwrap()).unwrap();
            assert!((r - 2f64.ln()).abs() < 1e-15);
        }
        let d = 0.1;
        let u = FiniteChannel::new(vec![vec![0.0, 0.0, 1.0 - d, d], vec![0.0, 0.0, d, 1.0 - d]]).unwrap();
        let c = FiniteMeasure::new(vec![0.0, 0.0, 0.5, 0.5]).unwrap();
        let r = relative_radius(&u, &c, Order::Finite(0.5)).unwrap();
        let want = 2f64.ln() - binary_renyi_entropy(d, Order::Finite(0.5)).unwrap();
        assert!((r - want).abs() < 1e-14);
    }

    #[test]
    fn bruteforce_examples() {
        let r = radius_bruteforce(&FiniteChannel::identity(2), Order::One, 1000).unwrap();
        assert!((r - 2f64.ln()).abs() < 2e-3);
        let single = FiniteChannel::new(vec![vec![0.2, 0.3, 0.5]]).unwrap();
        assert_eq!(radius_bruteforce(&single, Order::One, 10).unwrap(), 0.0);
        assert!(matches!(
            radius_bruteforce(&FiniteChannel::identity(5), Order::One, 10),
            Err(Error::AlphabetTooLarge { .. })
        ));
    }

    #[test]
    fn curve_of_identity_is_flat() {
        let orders: Vec<Order> = [0.5, 1.0, 2.0, 4.0].iter().map(|&a| Order::new(a).unwrap()).collect();
        let rep = capacity_curve(&FiniteChannel::identity(3), &orders, 1e-9).unwrap();
        for p in &rep.points {
            assert!((p.as_ref().unwrap().capacity - 3f64.ln()).abs() < 1e-9);
        }
        assert_eq!(rep.diagnostics.total_violations(), 0);
    }

    #[test]
    fn ehb_at_center_is_zero() {
        let s = solve_capacity(&bsc(0.2), Order::Finite(2.0), 1e-12, 10_000).unwrap();
        let g = ehb_gap(&bsc(0.2), &s.center, Order::Finite(2.0), &s).unwrap();
        assert!(g.abs() <= 10.0 * s.gap + 1e-14);
        let q = Pmf::new(vec![0.9, 0.1]).unwrap();
        assert!(ehb_gap(&bsc(0.2), &q, Order::Finite(2.0), &s).unwrap() >= -1e-12);
    }

    #[test]
    fn ehb_off_center_symmetric_channel() {
        let d = 0.1;
        let u = FiniteChannel::new(vec![vec![0.0, 0.0, 1.0 - d, d], vec![0.0, 0.0, d, 1.0 - d]]).unwrap();
        let s = solve_capacity(&u, Order::Finite(0.5), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let q = Pmf::new(vec![0.0, 0.0, 1.0, 0.0]).unwrap();
        let g = ehb_gap(&u, &q, Order::Finite(0.5), &s).unwrap();
        assert!(g.is_finite() && g > 0.0);
    }

    #[test]
    fn union_and_product() {
        let u = union_channel(&bsc(0.1), &bsc(0.1)).unwrap();
        assert_eq!(u.n_rows(), 2);
        let p = product_channel(&bsc(0.1), &FiniteChannel::identity(2)).unwrap();
        assert_eq!((p.n_rows(), p.n_outputs()), (4, 4));
        assert!(union_channel(&bsc(0.1), &FiniteChannel::identity(3)).is_err());
    }

    #[test]
    fn core_of_symmetric_channel_keeps_all_rows() {
        let s = solve_capacity(&bsc(0.1), Order::One, 1e-10, 10_000).unwrap();
        assert_eq!(epsilon_core(&bsc(0.1), Order::One, 1e-6, &s).unwrap().n_rows(), 2);
        assert_eq!(epsilon_core(&bsc(0.1), Order::One, s.capacity, &s).unwrap().n_rows(), 2);
    }

    #[test]
    fn dominated_row_leaves_core() {
        let ch = FiniteChannel::new(vec![vec![0.9, 0.1], vec![0.1, 0.9], vec![0.5, 0.5]]).unwrap();
        let s = solve_capacity(&ch, Order::One, 1e-10, 10_000).unwrap();
        let core = epsilon_core(&ch, Order::One, 1e-3, &s).unwrap();
        assert_eq!(core.n_rows(), 2);
        let sc = solve_capacity(&core, Order::One, 1e-10, 10_000).unwrap();
        assert!((sc.capacity - s.capacity).abs() < 1e-9);
    }

    #[test]
    fn hull_with_uniform_mixture() {
        let ch = bsc(0.1);
        let aug = convex_hull_augment(&ch, &[Prior::uniform(2)]).unwrap();
        for a in [0.5, 1.0, 3.0] {
            let o = Order::new(a).unwrap();
            let c0 = solve_capacity(&ch, o, 1e-10, 10_000).unwrap().capacity;
            let c1 = solve_capacity(&aug, o, 1e-10, 10_000).unwrap().capacity;
            assert!((c0 - c1).abs() < 2e-10);
        }
    }

    #[test]
    fn center_continuity_bsc() {
        let s1 = solve_capacity(&bsc(0.1), Order::Finite(0.5), 1e-10, 10_000).unwrap();
        let s2 = solve_capacity(&bsc(0.1), Order::Finite(2.0), 1e-10, 10_000).unwrap();
        assert!(center_continuity_check(&s1, &s2).unwrap().holds);
        let same = center_continuity_check(&s1, &s1).unwrap();
        assert!(same.holds && same.capacity_increase == 0.0);
    }
}
