//! Suites on the shift and Poisson families.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::capacity::solve_capacity;
use crate::error::{Error, Result};
use crate::families::{
    bounded_rate, constant_divergence_rate, mean_capacity_mixture, mean_center_intensity, poisson_bounded_capacity,
    poisson_capacity, poisson_constrained_capacity, poisson_discretize, poisson_divergence, poisson_mc_divergence,
    poisson_mean_capacity, poisson_product_capacity, shift_capacity, DensityOnCircle, Intensity, MeanConstraint,
    PoissonFamilySpec,
};
use crate::order::Order;
use crate::quadrature::adaptive;

use super::gen::{self, FINITE_ATOMS, POSITIVE_ATOMS};
use super::{eq, le, Ctx, Outcome, Suite, TolKind};

/// Two-sided Bonferroni critical value: `Φ⁻¹(1 − level/(2n))`.
pub(super) fn bonferroni_z(level: f64, n: usize) -> f64 {
    let normal = Normal::standard();
    normal.inverse_cdf(1.0 - level / (2.0 * n.max(1) as f64))
}

pub(super) fn suites() -> Vec<Suite> {
    let s = |id, kind, run| Suite { id, kind, run };
    vec![
        s("shift-closedform-vs-quadrature", TolKind::Quadrature, shift_closed_form),
        s("poisson-closedform-vs-quadrature", TolKind::Quadrature, poisson_closed_form),
        s("poisson-mc-vs-closedform", TolKind::Sigma, poisson_mc),
        s("poisson-discretize-lower-bound", TolKind::Solver, poisson_discretize_bound),
    ]
}

/// Orders in `[0.05, 20]` with atoms at one and, if allowed, infinity.
fn moderate_order(c: &mut Ctx, atoms: &[Order]) -> Result<Order> {
    let o = gen::order(&mut c.rng, atoms);
    match o {
        Order::Finite(_) => Order::new(gen::log_uniform(&mut c.rng, 0.05, 20.0)),
        _ => Ok(o),
    }
}

/// Random step density with 1 to 4 pieces, some possibly zero.
fn random_step_density(c: &mut Ctx) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = gen::size(&mut c.rng, 0, 3);
    let mut breaks: Vec<f64> = (0..k).map(|_| c.rng.random_range(0.05..0.95)).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    let lens: Vec<f64> = (0..=breaks.len())
        .map(|i| breaks.get(i).copied().unwrap_or(1.0) - if i == 0 { 0.0 } else { breaks[i - 1] })
        .collect();
    let raw = gen::dirichlet(&mut c.rng, lens.len(), true);
    let values: Vec<f64> = raw.iter().zip(&lens).map(|(w, l)| w / l).collect();
    Ok((breaks, values))
}

fn shift_closed_form(c: &mut Ctx) -> Result<Outcome> {
    let o = moderate_order(c, POSITIVE_ATOMS)?;
    if c.rng.random_bool(0.5) {
        let beta: f64 = c.rng.random_range(0.05..0.95);
        let exact = match o.branch() {
            Order::Infinity => f64::INFINITY,
            Order::One => (-beta).ln_1p() + beta / (1.0 - beta),
            Order::Finite(a) => {
                if (1.0 - a * beta).abs() < 0.05 {
                    return Ok(Outcome::Skipped);
                }
                if a * beta >= 1.0 {
                    f64::INFINITY
                } else {
                    (a * (-beta).ln_1p() - (-a * beta).ln_1p()) / (a - 1.0)
                }
            }
            Order::Zero => unreachable!("positive atoms only"),
        };
        let got = shift_capacity(&DensityOnCircle::power(beta)?, o, c.tol.quadrature)?;
        return Ok(Outcome::Margin(eq(got, exact)));
    }
    let (breaks, values) = random_step_density(c)?;
    let lens: Vec<f64> = (0..values.len())
        .map(|i| breaks.get(i).copied().unwrap_or(1.0) - if i == 0 { 0.0 } else { breaks[i - 1] })
        .collect();
    let exact = match o.branch() {
        Order::Infinity => values.iter().copied().fold(0.0, f64::max).ln(),
        Order::One => values.iter().zip(&lens).map(|(v, l)| if *v > 0.0 { l * v * v.ln() } else { 0.0 }).sum(),
        Order::Finite(a) => {
            let s: f64 = values.iter().zip(&lens).map(|(v, l)| if *v > 0.0 { l * v.powf(a) } else { 0.0 }).sum();
            s.ln() / (a - 1.0)
        }
        Order::Zero => unreachable!("positive atoms only"),
    };
    let f = DensityOnCircle::piecewise(breaks, values)?;
    Ok(Outcome::Margin(eq(shift_capacity(&f, o, c.tol.quadrature)?, exact)))
}

/// `f` with value `hi` on `(0, s]` and `lo` afterwards, seen only through
/// pointwise evaluation.
fn two_level_function(s: f64, hi: f64, lo: f64) -> Intensity {
    Intensity::function(move |t| if t <= s { hi } else { lo }, Some(hi.max(lo)))
}

fn poisson_closed_form(c: &mut Ctx) -> Result<Outcome> {
    let a = if c.rng.random_bool(0.2) { 0.0 } else { c.rng.random_range(0.0..2.0) };
    let b = a + c.rng.random_range(0.1..5.0);
    let t = c.rng.random_range(0.5..3.0);
    let o = moderate_order(c, FINITE_ATOMS)?;
    let qt = c.tol.quadrature;

    let sol = poisson_bounded_capacity(t, a, b, o)?;
    let (rate, x) = bounded_rate(a, b, o);
    let c_opt = sol.mean.expect("constant ceiling");
    let mut margin = f64::INFINITY;
    // the center is equidistant from the extreme intensities
    if c_opt > a && c_opt < b {
        margin = margin.min(eq(constant_divergence_rate(b, x, o), rate));
        margin = margin.min(eq(constant_divergence_rate(a, x, o), rate));
    }

    // mean family: divergence of the two-level optimizer to the center
    let cm = a + (b - a) * c.rng.random_range(0.02..0.98);
    let spec = PoissonFamilySpec::bounded(t, a, b).with_constraint(MeanConstraint::Eq(cm));
    let mean = match poisson_mean_capacity(&spec, o) {
        Err(Error::DomainError(_)) => return Ok(Outcome::Skipped),
        r => r?,
    };
    let xc = mean_center_intensity(a, b, cm, o);
    let lam = (cm - a) / (b - a);
    let extreme = two_level_function(lam * t, b, a);
    margin = margin.min(eq(poisson_divergence(&extreme, &Intensity::Constant(xc), t, o, qt)?, mean.capacity));
    margin = margin.min(eq(mean_capacity_mixture(a, b, cm, t, o)?, mean.capacity));
    margin = margin.min(le(mean.capacity, sol.capacity));
    // power-mean center against the arithmetic mean
    margin = margin.min(match o.branch() {
        Order::Finite(al) if al > 1.0 => le(cm, xc),
        Order::Finite(_) => le(xc, cm),
        _ => eq(xc, cm),
    });
    // one-sided constraints clamp the optimal average
    for (con, cc) in [(MeanConstraint::Le(cm), cm.min(c_opt)), (MeanConstraint::Ge(cm), cm.max(c_opt))] {
        let s = PoissonFamilySpec::bounded(t, a, b).with_constraint(con);
        let got = match poisson_constrained_capacity(&s, o) {
            Err(Error::DomainError(_)) => continue,
            r => r?,
        };
        margin = margin.min(eq(got.capacity, mean_capacity_mixture(a, b, cc, t, o)?));
    }

    // product family: exact sum over segments against quadrature
    let k = gen::size(&mut c.rng, 1, 3);
    let mut breaks: Vec<f64> = (1..k).map(|_| c.rng.random_range(0.05..0.95) * t).collect();
    breaks.sort_by(f64::total_cmp);
    let values: Vec<f64> = (0..k).map(|_| a + c.rng.random_range(0.1..5.0)).collect();
    let env = Intensity::piecewise(breaks.clone(), values.clone())?;
    let exact = poisson_product_capacity(t, a, &env, o, qt)?;
    let probe = {
        let (br, vs) = (breaks, values);
        let sup = vs.iter().copied().fold(0.0, f64::max);
        Intensity::function(move |s| vs[br.partition_point(|&x| x < s)], Some(sup))
    };
    let quad = poisson_product_capacity(t, a, &probe, o, qt)?;
    margin = margin.min(eq(quad.capacity, exact.capacity));
    Ok(Outcome::Margin(margin))
}

/// Largest `∫(h−1)²` of a Monte-Carlo instance; beyond it the reference
/// weights are too heavy-tailed for a normal-theory standard error.
const MC_MAX_SPREAD: f64 = 1.0;

fn random_intensity(c: &mut Ctx, t: f64) -> Result<Intensity> {
    if c.rng.random_bool(0.5) {
        return Ok(Intensity::Constant(c.rng.random_range(0.5..2.0)));
    }
    let s = c.rng.random_range(0.1..0.9) * t;
    Intensity::piecewise(vec![s], vec![c.rng.random_range(0.5..2.0), c.rng.random_range(0.5..2.0)])
}

fn poisson_mc(c: &mut Ctx) -> Result<Outcome> {
    let t = c.rng.random_range(0.5..1.5);
    let f = random_intensity(c, t)?;
    let g = random_intensity(c, t)?;
    let a = if c.rng.random_bool(0.5) { c.rng.random_range(0.3..0.9) } else { c.rng.random_range(1.1..2.0) };
    let o = Order::new(a)?;
    // the weight of a reference path has relative second moment exp(∫(h−1)²)
    let h = |s: f64| f.eval(s).powf(a) * g.eval(s).powf(1.0 - a);
    let (spread, _) = adaptive(&|s| (h(s) - 1.0).powi(2), 0.0, t, 1e-9)?;
    if spread > MC_MAX_SPREAD {
        return Ok(Outcome::Skipped);
    }
    let exact = poisson_divergence(&f, &g, t, o, c.tol.quadrature)?;
    let est = poisson_mc_divergence(&f, &g, t, o, c.tol.mc_samples, c.rng.random())?;
    let z = bonferroni_z(c.tol.mc_level, c.instances);
    let err = (est.estimate - exact).abs();
    if est.stderr == 0.0 {
        return Ok(Outcome::Margin(if err <= 1e-12 { z } else { f64::NEG_INFINITY }));
    }
    Ok(Outcome::Margin(z - err / est.stderr))
}

fn poisson_discretize_bound(c: &mut Ctx) -> Result<Outcome> {
    let a = if c.rng.random_bool(0.2) { 0.0 } else { c.rng.random_range(0.0..1.0) };
    let b = a + c.rng.random_range(0.2..3.0);
    let t = c.rng.random_range(0.3..2.0);
    let bins = gen::size(&mut c.rng, 1, 2);
    let levels = gen::size(&mut c.rng, 2, 3);
    let o = match gen::order(&mut c.rng, FINITE_ATOMS) {
        Order::One => Order::One,
        _ => Order::new(gen::log_uniform(&mut c.rng, 0.2, 10.0))?,
    };
    let mut spec = PoissonFamilySpec::bounded(t, a, b);
    if c.rng.random_bool(0.5) {
        // an average attained by some level profile keeps the constraint feasible
        let step = (b - a) / (levels - 1) as f64;
        let avg = a + step * (0..bins).map(|_| c.rng.random_range(0..levels) as f64).sum::<f64>() / bins as f64;
        let avg = avg.clamp(a, b);
        spec = spec.with_constraint(match c.rng.random_range(0..3) {
            0 => MeanConstraint::Eq(avg),
            1 => MeanConstraint::Le(avg),
            _ => MeanConstraint::Ge(avg),
        });
    }
    let closed = match poisson_capacity(&spec, o, c.tol.quadrature) {
        Err(Error::DomainError(_)) => return Ok(Outcome::Skipped),
        r => r?,
    };
    let ch = poisson_discretize(&spec, bins, levels)?;
    let s = match solve_capacity(&ch, o, c.tol.solver, 20_000) {
        Err(Error::NotConverged(s)) => *s,
        r => r?,
    };
    Ok(Outcome::Margin(le(s.lower_bound, closed.capacity)))
}
