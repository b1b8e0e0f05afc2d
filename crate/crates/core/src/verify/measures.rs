//! Suites on divergences, mean measures and information.

use rand::Rng;

use crate::error::{Error, Result};
use crate::measures::{
    coarsen_vec, divergence_raw, gallager_e0, information_derivative, joint_pair, l1_distance, log_mean_norm,
    mean_measure, prior_decomposition, renyi_information, renyi_mean, FiniteChannel, Pmf, Prior,
};
use crate::order::Order;

use super::gen::{self, ALL_ATOMS, FINITE_ATOMS, POSITIVE_ATOMS};
use super::{eq, le, Ctx, Outcome, Suite, TolKind};

pub(super) fn suites() -> Vec<Suite> {
    let s = |id, kind, run| Suite { id, kind, run };
    vec![
        s("pinsker", TolKind::Identity, pinsker),
        s("divergence-order-monotone", TolKind::Identity, divergence_order_monotone),
        s("divergence-scaling", TolKind::Identity, divergence_scaling),
        s("divergence-convexity-q", TolKind::Identity, divergence_convexity_q),
        s("divergence-joint-quasiconvexity", TolKind::Identity, divergence_joint_quasiconvexity),
        s("dpi-coarsening", TolKind::Identity, dpi_coarsening),
        s("mean-lipschitz", TolKind::Identity, mean_lipschitz),
        s("mean-norm-logconvex", TolKind::Identity, mean_norm_logconvex),
        s("prior-decomposition", TolKind::Identity, prior_decomposition_suite),
        s("info-order-monotone", TolKind::Identity, info_order_monotone),
        s("info-derivative-fd", TolKind::FiniteDifference, info_derivative_fd),
        s("e0-identity", TolKind::Identity, e0_identity),
        s("sibson-identity", TolKind::Identity, sibson_identity),
        s("info-min-over-q", TolKind::Identity, info_min_over_q),
        s("info-prior-concavity", TolKind::Identity, info_prior_concavity),
    ]
}

fn div(w: &[f64], q: &[f64], o: Order) -> f64 {
    divergence_raw(w, q, o)
}

/// An unrelated pmf or a perturbation of `w` of random size.
fn partner(c: &mut Ctx, w: &Pmf) -> Pmf {
    if c.rng.random_bool(0.6) {
        return gen::maybe_sparse_pmf(&mut c.rng, w.len());
    }
    let t = gen::log_uniform(&mut c.rng, 1e-9, 0.5);
    let noise = gen::dirichlet(&mut c.rng, w.len(), false);
    Pmf::normalized(w.probs().iter().zip(&noise).map(|(a, b)| (1.0 - t) * a + t * b).collect()).expect("mass")
}

fn mix(a: &[f64], b: &[f64], beta: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| beta * x + (1.0 - beta) * y).collect()
}

fn pinsker(c: &mut Ctx) -> Result<Outcome> {
    let m = gen::size(&mut c.rng, 1, 6);
    let w = gen::maybe_sparse_pmf(&mut c.rng, m);
    let q = partner(c, &w);
    let o = gen::order(&mut c.rng, ALL_ATOMS);
    let l1 = l1_distance(w.probs(), q.probs());
    Ok(Outcome::Margin(le(o.value().min(1.0) / 2.0 * l1 * l1, div(w.probs(), q.probs(), o))))
}

fn divergence_order_monotone(c: &mut Ctx) -> Result<Outcome> {
    let m = gen::size(&mut c.rng, 1, 6);
    let w = gen::maybe_sparse_pmf(&mut c.rng, m);
    let q = partner(c, &w);
    let (a, b) = gen::order_pair(&mut c.rng, ALL_ATOMS);
    Ok(Outcome::Margin(le(div(w.probs(), q.probs(), a), div(w.probs(), q.probs(), b))))
}

fn divergence_scaling(c: &mut Ctx) -> Result<Outcome> {
    let m = gen::size(&mut c.rng, 1, 6);
    let w = gen::maybe_sparse_pmf(&mut c.rng, m);
    let scale = gen::log_uniform(&mut c.rng, 0.1, 10.0);
    let v: Vec<f64> = gen::maybe_sparse_pmf(&mut c.rng, m).probs().iter().map(|x| x * scale).collect();
    let gamma = gen::log_uniform(&mut c.rng, (-3f64).exp(), 3f64.exp());
    let extra_scale = gen::log_uniform(&mut c.rng, 1e-6, 10.0);
    let extra = gen::maybe_sparse_pmf(&mut c.rng, m);
    let bigger: Vec<f64> = v.iter().zip(extra.probs()).map(|(a, b)| a + extra_scale * b).collect();
    let gv: Vec<f64> = v.iter().map(|x| gamma * x).collect();
    let o = gen::order(&mut c.rng, ALL_ATOMS);
    let d_v = div(w.probs(), &v, o);
    let shifted = eq(div(w.probs(), &gv, o), d_v - gamma.ln());
    let monotone = le(div(w.probs(), &bigger, o), d_v);
    Ok(Outcome::Margin(shifted.min(monotone)))
}

fn divergence_convexity_q(c: &mut Ctx) -> Result<Outcome> {
    let m = gen::size(&mut c.rng, 1, 6);
    let w = gen::maybe_sparse_pmf(&mut c.rng, m);
    let q0 = partner(c, &w);
    let q1 = gen::maybe_sparse_pmf(&mut c.rng, m);
    let beta = c.rng.random_range(0.0..1.0);
    let o = gen::order(&mut c.rng, ALL_ATOMS);
    let qb = mix(q1.probs(), q0.probs(), beta);
    let lhs = div(w.probs(), &qb, o);
    let (d0, d1) = (div(w.probs(), q0.probs(), o), div(w.probs(), q1.probs(), o));
    let rhs = if d0 == f64::INFINITY || d1 == f64::INFINITY { f64::INFINITY } else { beta * d1 + (1.0 - beta) * d0 };
    Ok(Outcome::Margin(le(lhs, rhs)))
}

fn divergence_joint_quasiconvexity(c: &mut Ctx) -> Result<Outcome> {
    let m = gen::size(&mut c.rng, 1, 6);
    let w0 = gen::maybe_sparse_pmf(&mut c.rng, m);
    let w1 = gen::maybe_sparse_pmf(&mut c.rng, m);
    let q0 = partner(c, &w0);
    let q1 = partner(c, &w1);
    let beta = c.rng.random_range(0.0..1.0);
    let o = gen::order(&mut c.rng, ALL_ATOMS);
    let lhs = div(&mix(w1.probs(), w0.probs(), beta), &mix(q1.probs(), q0.probs(), beta), o);
    let rhs = div(w1.probs(), q1.probs(), o).max(div(w0.probs(), q0.probs(), o));
    Ok(Outcome::Margin(le(lhs, rhs)))
}

fn random_partition(c: &mut Ctx, m: usize) -> Vec<Vec<usize>> {
    let k = gen::size(&mut c.rng, 1, m);
    let mut cells = vec![Vec::new(); k];
    for y in 0..m {
        cells[c.rng.random_range(0..k)].push(y);
    }
    cells.retain(|cell| !cell.is_empty());
    cells
}

fn dpi_coarsening(c: &mut Ctx) -> Result<Outcome> {
    let m = gen::size(&mut c.rng, 1, 6);
    let w = gen::maybe_sparse_pmf(&mut c.rng, m);
    let q = partner(c, &w);
    let o = gen::order(&mut c.rng, ALL_ATOMS);
    let part = random_partition(c, m);
    let coarse = div(&coarsen_vec(w.probs(), &part), &coarsen_vec(q.probs(), &part), o);
    Ok(Outcome::Margin(le(coarse, div(w.probs(), q.probs(), o))))
}

fn mean_weights(ch: &FiniteChannel, p: &Prior, o: Order) -> Result<Vec<f64>> {
    Ok(mean_measure(ch, p, o)?.measure.into_weights())
}

fn mean_lipschitz(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let p1 = gen::prior(&mut c.rng, ch.n_rows());
    let p2 = gen::nearby_prior(&mut c.rng, &p1);
    let o = gen::order(&mut c.rng, FINITE_ATOMS);
    let a = o.value();
    let (m1, m2) = (mean_weights(&ch, &p1, o)?, mean_weights(&ch, &p2, o)?);
    let lhs = l1_distance(&m1, &m2);
    let dp = l1_distance(p1.probs(), p2.probs());
    let mut margin = f64::INFINITY;
    if a <= 1.0 {
        margin = margin.min(le(lhs, dp / a));
    }
    if a >= 1.0 && dp > 0.0 {
        let dec = prior_decomposition(p1.as_pmf(), p2.as_pmf())?;
        let s1 = mean_weights(&ch, &Prior::from_pmf(dec.first), o)?;
        let s2 = mean_weights(&ch, &Prior::from_pmf(dec.second), o)?;
        margin = margin.min(le(lhs, dec.delta.powf(1.0 / a) * l1_distance(&s1, &s2)));
    }
    // ‖m_{α,P}‖ is convex in P for α ≤ 1 and concave for α ≥ 1
    let beta = c.rng.random_range(0.0..1.0);
    let pb = Prior::from_pmf(Pmf::normalized(mix(p1.probs(), p2.probs(), beta))?);
    let nb: f64 = mean_weights(&ch, &pb, o)?.iter().sum();
    let chord = beta * m1.iter().sum::<f64>() + (1.0 - beta) * m2.iter().sum::<f64>();
    if a <= 1.0 {
        margin = margin.min(le(nb, chord));
    }
    if a >= 1.0 {
        margin = margin.min(le(chord, nb));
    }
    Ok(Outcome::Margin(margin))
}

/// A prior, supported on a group of identical rows when one exists and the
/// coin says so.
fn prior_maybe_on_duplicates(c: &mut Ctx, ch: &FiniteChannel) -> (Prior, bool) {
    let n = ch.n_rows();
    if c.rng.random_bool(0.3) {
        let w = c.rng.random_range(0..n);
        let group: Vec<usize> = (0..n).filter(|&v| ch.rows()[v] == ch.rows()[w]).collect();
        let mut p = vec![0.0; n];
        for &v in &group {
            p[v] = c.rng.random_range(0.1..1.0);
        }
        return (Prior::from_pmf(Pmf::normalized(p).expect("mass")), true);
    }
    let p = gen::prior(&mut c.rng, n);
    let first = &ch.rows()[p.support()[0]];
    let identical = p.support().iter().all(|&v| &ch.rows()[v] == first);
    (p, identical)
}

fn mean_norm_logconvex(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let (p, identical) = prior_maybe_on_duplicates(c, &ch);
    let mut os: Vec<Order> = (0..3).map(|_| gen::order(&mut c.rng, FINITE_ATOMS)).collect();
    os.sort_by(|x, y| x.value().total_cmp(&y.value()));
    let ln: Vec<f64> = os.iter().map(|&o| log_mean_norm(&ch, &p, o)).collect::<Result<_>>()?;
    let x: Vec<f64> = os.iter().map(|o| o.value()).collect();
    let g: Vec<f64> = x.iter().zip(&ln).map(|(a, l)| a * l).collect();
    let mut margin = f64::INFINITY;
    if x[2] > x[0] {
        let chord = g[0] + (x[1] - x[0]) / (x[2] - x[0]) * (g[2] - g[0]);
        margin = margin.min(le(g[1], chord));
    }
    // ‖m_α‖ nondecreasing on [0, ∞]
    let lz = log_mean_norm(&ch, &p, Order::Zero)?;
    let li = log_mean_norm(&ch, &p, Order::Infinity)?;
    let chain = [lz, ln[0], ln[1], ln[2], li];
    for w in chain.windows(2) {
        margin = margin.min(le(w[0], w[1]));
    }
    if identical {
        for v in chain {
            margin = margin.min(eq(v, 0.0));
        }
    }
    Ok(Outcome::Margin(margin))
}

fn prior_decomposition_suite(c: &mut Ctx) -> Result<Outcome> {
    let n = gen::size(&mut c.rng, 1, 6);
    let p1 = gen::maybe_sparse_pmf(&mut c.rng, n);
    let p2 = if c.rng.random_bool(0.05) { p1.clone() } else { gen::nearby_prior(&mut c.rng, &Prior::from_pmf(p1.clone())).as_pmf().clone() };
    let tv = l1_distance(p1.probs(), p2.probs());
    let dec = match prior_decomposition(&p1, &p2) {
        Err(Error::DomainError(_)) if tv == 0.0 => return Ok(Outcome::Margin(f64::INFINITY)),
        r => r?,
    };
    let d = dec.delta;
    let mut margin = eq(d, tv / 2.0);
    for (p, s) in [(&p1, &dec.first), (&p2, &dec.second)] {
        for i in 0..n {
            margin = margin.min(eq(p.probs()[i], (1.0 - d) * dec.common.probs()[i] + d * s.probs()[i]));
        }
    }
    let overlap: f64 = dec.first.probs().iter().zip(dec.second.probs()).map(|(a, b)| a.min(*b)).sum();
    Ok(Outcome::Margin(margin.min(le(overlap, 0.0))))
}

fn info(ch: &FiniteChannel, p: &Prior, o: Order) -> Result<f64> {
    renyi_information(ch, p, o)
}

fn info_order_monotone(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let p = gen::prior(&mut c.rng, ch.n_rows());
    let (a, b) = gen::order_pair(&mut c.rng, ALL_ATOMS);
    let (ia, ib) = (info(&ch, &p, a)?, info(&ch, &p, b)?);
    let i_inf = info(&ch, &p, Order::Infinity)?;
    let margin = le(ia, ib).min(le(0.0, ia)).min(le(i_inf, (p.support().len() as f64).ln()));
    Ok(Outcome::Margin(margin))
}

fn info_derivative_fd(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let p = gen::prior(&mut c.rng, ch.n_rows());
    let o = gen::order(&mut c.rng, FINITE_ATOMS);
    let a = o.value();
    let h = 1e-3 * a;
    let at = |x: f64| info(&ch, &p, Order::new(x).expect("positive"));
    let central = |h: f64| -> Result<f64> { Ok((at(a + h)? - at(a - h)?) / (2.0 * h)) };
    let fd = (4.0 * central(h / 2.0)? - central(h)?) / 3.0;
    Ok(Outcome::Margin(eq(fd, information_derivative(&ch, &p, o)?)))
}

fn e0_identity(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let p = gen::prior(&mut c.rng, ch.n_rows());
    let o = gen::order(&mut c.rng, FINITE_ATOMS);
    let a = o.value();
    let rho = (1.0 - a) / a;
    if o.branch() == Order::One {
        return Ok(Outcome::Margin(eq(gallager_e0(0.0, &ch, &p)?, 0.0)));
    }
    Ok(Outcome::Margin(eq(gallager_e0(rho, &ch, &p)? / rho, info(&ch, &p, o)?)))
}

fn sibson_identity(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let p = gen::prior(&mut c.rng, ch.n_rows());
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let mean = renyi_mean(&ch, &p, o)?;
    let q = partner(c, &mean);
    let (joint, prod) = joint_pair(&ch, &p, q.probs());
    let lhs = div(&joint, &prod, o);
    let rhs = info(&ch, &p, o)? + div(mean.probs(), q.probs(), o);
    Ok(Outcome::Margin(eq(lhs, rhs)))
}

/// Points `k/res` of the simplex in `m ≤ 3` dimensions.
fn simplex_grid(m: usize, res: usize) -> Vec<Vec<f64>> {
    let r = res as f64;
    match m {
        1 => vec![vec![1.0]],
        2 => (0..=res).map(|i| vec![i as f64 / r, (res - i) as f64 / r]).collect(),
        _ => (0..=res)
            .flat_map(|i| (0..=res - i).map(move |j| vec![i as f64 / r, j as f64 / r, (res - i - j) as f64 / r]))
            .collect(),
    }
}

fn info_min_over_q(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 3);
    let p = gen::prior(&mut c.rng, ch.n_rows());
    let o = gen::order(&mut c.rng, POSITIVE_ATOMS);
    let i = info(&ch, &p, o)?;
    let mean = renyi_mean(&ch, &p, o)?;
    let (joint, prod) = joint_pair(&ch, &p, mean.probs());
    let at_mean = div(&joint, &prod, o);
    let mut margin = eq(at_mean, i);
    let res = if ch.n_outputs() == 3 { 60 } else { 600 };
    for q in simplex_grid(ch.n_outputs(), res) {
        let (joint, prod) = joint_pair(&ch, &p, &q);
        margin = margin.min(le(at_mean, div(&joint, &prod, o)));
    }
    Ok(Outcome::Margin(margin))
}

fn info_prior_concavity(c: &mut Ctx) -> Result<Outcome> {
    let ch = gen::channel(&mut c.rng, 6, 6);
    let p0 = gen::prior(&mut c.rng, ch.n_rows());
    let p1 = gen::nearby_prior(&mut c.rng, &p0);
    let beta = c.rng.random_range(0.0..1.0);
    let pb = Prior::from_pmf(Pmf::normalized(mix(p1.probs(), p0.probs(), beta))?);
    let o = gen::order(&mut c.rng, ALL_ATOMS);
    let (i0, i1, ib) = (info(&ch, &p0, o)?, info(&ch, &p1, o)?, info(&ch, &pb, o)?);
    let floor = if o.value() >= 1.0 { beta * i1 + (1.0 - beta) * i0 } else { i0.min(i1) };
    Ok(Outcome::Margin(le(floor, ib)))
}
