use std::cell::Cell;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, xlnx};
use crate::order::Order;
use crate::output::Json;
use crate::quadrature::adaptive;

/// Number of grid points used when a functional intensity is serialized.
const PROFILE_SAMPLES: usize = 101;

/// An intensity function on `(0,T]`.
#[derive(Clone)]
pub enum Intensity {
    Constant(f64),
    /// Value `values[i]` on `(breaks[i-1], breaks[i]]`, with `breaks` strictly
    /// increasing; the first piece starts at 0 and the last one ends at `T`.
    PiecewiseConstant { breaks: Vec<f64>, values: Vec<f64> },
    /// Evaluator with an optional upper bound used for thinning.
    Function { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, bound: Option<f64> },
}

impl fmt::Debug for Intensity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Intensity::Constant(c) => write!(fm, "Constant({c})"),
            Intensity::PiecewiseConstant { breaks, values } => {
                fm.debug_struct("PiecewiseConstant").field("breaks", breaks).field("values", values).finish()
            }
            Intensity::Function { bound, .. } => fm.debug_struct("Function").field("bound", bound).finish(),
        }
    }
}

impl Intensity {
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::DomainError("envelope needs one more value than breaks".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return Err(Error::DomainError("breaks must be positive and strictly increasing".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::DomainError("intensity values must be finite and non-negative".into()));
        }
        Ok(Intensity::PiecewiseConstant { breaks, values })
    }

    pub fn function(f: impl Fn(f64) -> f64 + Send + Sync + 'static, bound: Option<f64>) -> Self {
        Intensity::Function { f: Arc::new(f), bound }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Intensity::Constant(c) => *c,
            Intensity::PiecewiseConstant { breaks, values } => values[breaks.partition_point(|&b| b < t)],
            Intensity::Function { f, .. } => f(t),
        }
    }

    /// Upper bound on `(0,T]`, if one is known.
    pub fn bound(&self) -> Option<f64> {
        match self {
            Intensity::Constant(c) => Some(*c),
            Intensity::PiecewiseConstant { values, .. } => Some(values.iter().copied().fold(0.0, f64::max)),
            Intensity::Function { bound, .. } => *bound,
        }
    }

    /// Constant pieces `(start, end, value)` covering `(0,T]`, or `None` for
    /// a general evaluator.
    pub fn segments(&self, horizon: f64) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            Intensity::Constant(c) => Some(vec![(0.0, horizon, *c)]),
            Intensity::PiecewiseConstant { breaks, values } => {
                let mut out = Vec::new();
                let mut lo = 0.0;
                for (i, &v) in values.iter().enumerate() {
                    let hi = breaks.get(i).copied().unwrap_or(horizon).min(horizon);
                    if hi > lo {
                        out.push((lo, hi, v));
                    }
                    lo = hi;
                    if lo >= horizon {
                        break;
                    }
                }
                Some(out)
            }
            Intensity::Function { .. } => None,
        }
    }

    /// `∫_0^T f`.
    pub fn integral(&self, horizon: f64, tol: f64) -> Result<f64> {
        match self.segments(horizon) {
            Some(s) => Ok(s.iter().map(|(lo, hi, v)| v * (hi - lo)).sum()),
            None => Ok(adaptive(&|t| self.eval(t), 0.0, horizon, tol)?.0),
        }
    }

    /// JSON form: a number, `{"breaks","values"}`, or a sampled profile.
    pub fn to_json(&self, horizon: f64) -> Json {
        match self {
            Intensity::Constant(c) => Json::Num(*c),
            Intensity::PiecewiseConstant { breaks, values } => {
                Json::obj([("breaks", Json::nums(breaks)), ("values", Json::nums(values))])
            }
            Intensity::Function { .. } => {
                let t: Vec<f64> =
                    (1..=PROFILE_SAMPLES).map(|i| horizon * i as f64 / PROFILE_SAMPLES as f64).collect();
                let x: Vec<f64> = t.iter().map(|&s| self.eval(s)).collect();
                Json::obj([("t", Json::nums(&t)), ("x", Json::nums(&x))])
            }
        }
    }
}

/// Upper limit on the intensity.
#[derive(Debug, Clone)]
pub enum Ceiling {
    Constant(f64),
    Envelope(Intensity),
}

/// Constraint on the time-average `(1/T) ∫ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeanConstraint {
    None,
    Eq(f64),
    Le(f64),
    Ge(f64),
}

/// A family of Poisson processes on `(0,T]` with intensities between `floor`
/// and `ceiling`, optionally constrained in average intensity.
#[derive(Debug, Clone)]
pub struct PoissonFamilySpec {
    pub horizon: f64,
    pub floor: f64,
    pub ceiling: Ceiling,
    pub constraint: MeanConstraint,
}

impl PoissonFamilySpec {
    pub fn bounded(horizon: f64, floor: f64, ceiling: f64) -> Self {
        PoissonFamilySpec { horizon, floor, ceiling: Ceiling::Constant(ceiling), constraint: MeanConstraint::None }
    }

    pub fn with_constraint(mut self, c: MeanConstraint) -> Self {
        self.constraint = c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (t, a) = (self.horizon, self.floor);
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::DomainError(format!("horizon must be positive, got {t}")));
        }
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::DomainError(format!("floor must be non-negative, got {a}")));
        }
        match &self.ceiling {
            Ceiling::Constant(b) => {
                if !(b.is_finite() && *b >= a) {
                    return Err(Error::DomainError(format!("ceiling {b} must be finite and at least the floor {a}")));
                }
                if let MeanConstraint::Eq(c) | MeanConstraint::Le(c) | MeanConstraint::Ge(c) = self.constraint {
                    if !(c >= a && c <= *b) {
                        return Err(Error::DomainError(format!("mean {c} outside [{a}, {b}]")));
                    }
                }
            }
            Ceiling::Envelope(g) => {
                let below = (1..=1024).map(|i| t * i as f64 / 1024.0).find(|&s| !(g.eval(s) >= a));
                if let Some(s) = below {
                    return Err(Error::DomainError(format!("envelope below the floor at t = {s}")));
                }
                if self.constraint != MeanConstraint::None {
                    return Err(Error::DomainError("mean constraints need a constant ceiling".into()));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn constant_ceiling(&self) -> Result<f64> {
        match self.ceiling {
            Ceiling::Constant(b) => Ok(b),
            Ceiling::Envelope(_) => Err(Error::DomainError("a constant ceiling is required".into())),
        }
    }
}

/// Capacity of a Poisson family with its center, a Poisson process of
/// intensity `center`.
#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub order: Order,
    pub capacity: f64,
    pub center: Intensity,
    /// Average intensity of the optimal mixture, for constant ceilings.
    pub mean: Option<f64>,
    pub horizon: f64,
}

impl PoissonSolution {
    pub fn to_json_value(&self) -> Json {
        let mut fields = vec![
            ("order", Json::Num(self.order.value())),
            ("capacity", Json::Num(self.capacity)),
            ("center_intensity", self.center.to_json(self.horizon)),
        ];
        if let Some(c) = self.mean {
            fields.push(("mean", Json::Num(c)));
        }
        Json::obj(fields)
    }

    pub fn to_json(&self) -> String {
        self.to_json_value().render()
    }
}

fn positive_finite(order: Order) -> Result<Order> {
    match order.branch() {
        o @ (Order::One | Order::Finite(_)) => Ok(o),
        _ => Err(Error::OrderOutOfRange { order: order.value(), reason: "Poisson formulas need 0 < α < ∞" }),
    }
}

/// Divergence of constant-intensity processes over unit time:
/// `(f^α g^{1−α} − f)/(α−1) − f + g`, or `f ln(f/g) − f + g` at `α = 1`.
pub fn constant_divergence_rate(f: f64, g: f64, order: Order) -> f64 {
    if f == 0.0 {
        return g;
    }
    if g == 0.0 {
        return match order.branch() {
            Order::Finite(a) if a < 1.0 => f * a / (1.0 - a),
            _ => f64::INFINITY,
        };
    }
    let l = (f / g).ln();
    match order.branch() {
        Order::Finite(a) => {
            let am1 = a - 1.0;
            f * (am1 * l).exp_m1() / am1 - f + g
        }
        _ => f * l - f + g,
    }
}

/// `D_α(W_f ‖ W_g)` for Poisson processes on `(0,T]`.
pub fn poisson_divergence(f: &Intensity, g: &Intensity, horizon: f64, order: Order, tol: f64) -> Result<f64> {
    let order = positive_finite(order)?;
    if !(horizon > 0.0) {
        return Err(Error::DomainError(format!("horizon must be positive, got {horizon}")));
    }
    if let (Some(sf), Some(sg)) = (f.segments(horizon), g.segments(horizon)) {
        let mut cuts: Vec<f64> = sf.iter().chain(&sg).flat_map(|&(lo, hi, _)| [lo, hi]).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let mut total = 0.0;
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            total += (w[1] - w[0]) * constant_divergence_rate(f.eval(mid), g.eval(mid), order);
        }
        return Ok(total);
    }
    let infinite = Cell::new(false);
    let integrand = |t: f64| {
        let v = constant_divergence_rate(f.eval(t), g.eval(t), order);
        if v.is_infinite() {
            infinite.set(true);
            0.0
        } else {
            v
        }
    };
    let (v, _) = adaptive(&integrand, 0.0, horizon, tol)?;
    Ok(if infinite.get() { f64::INFINITY } else { v })
}

/// `x_{α,c} = (λ b^α + (1−λ) a^α)^{1/α}` with `λ = (c−a)/(b−a)`.
pub fn mean_center_intensity(a: f64, b: f64, c: f64, order: Order) -> f64 {
    if b == a {
        return a;
    }
    let lam = (c - a) / (b - a);
    match order.branch() {
        Order::Finite(al) => (lam * b.powf(al) + (1.0 - lam) * a.powf(al)).powf(1.0 / al),
        _ => c,
    }
}

/// Average intensity `c_α` at which the bounded family attains its capacity.
pub fn optimal_mean(a: f64, b: f64, order: Order) -> f64 {
    if b == a {
        return a;
    }
    let c = match order.branch() {
        Order::Finite(al) => {
            let (ba, aa) = (b.powf(al), a.powf(al));
            let r = (b - a) / (ba - aa);
            al.powf(al / (1.0 - al)) * r.powf(1.0 / (1.0 - al)) + (a * ba - b * aa) / (ba - aa)
        }
        _ => log_x1(a, b).exp(),
    };
    c.clamp(a, b)
}

/// `ln x_1 = −1 + (b ln b − a ln a)/(b − a)`.
fn log_x1(a: f64, b: f64) -> f64 {
    -1.0 + (xlnx(b) - xlnx(a)) / (b - a)
}

fn check_levels(a: f64, b: f64, c: f64) -> Result<()> {
    if !(a >= 0.0 && a <= b && b.is_finite()) {
        return Err(Error::DomainError(format!("need 0 ≤ a ≤ b < ∞, got a = {a}, b = {b}")));
    }
    if !(c >= a && c <= b) {
        return Err(Error::DomainError(format!("mean {c} outside [{a}, {b}]")));
    }
    Ok(())
}

/// Capacity over intensities in `[a,b]` with average exactly `c`, per unit time.
fn mean_capacity_rate(a: f64, b: f64, c: f64, order: Order) -> f64 {
    if c == a || c == b {
        return 0.0;
    }
    let lam = (c - a) / (b - a);
    match order.branch() {
        Order::Finite(al) => al / (al - 1.0) * center_excess(a, b, c, al),
        _ => lam * b * (b / c).ln() + if a > 0.0 { (1.0 - lam) * a * (a / c).ln() } else { 0.0 },
    }
}

/// `x_{α,c} − c` without cancellation near `α = 1`, using
/// `λ b^α + (1−λ) a^α = c + λ b·expm1((α−1) ln b) + (1−λ) a·expm1((α−1) ln a)`.
/// When the correction is comparable to `c` that sum cancels instead, and the
/// power sum is taken in logs.
fn center_excess(a: f64, b: f64, c: f64, al: f64) -> f64 {
    let lam = (c - a) / (b - a);
    let am1 = al - 1.0;
    let term = |w: f64, v: f64| if w == 0.0 || v == 0.0 { 0.0 } else { w * v * (am1 * v.ln()).exp_m1() };
    let e = term(lam, b) + term(1.0 - lam, a);
    if (e / c).abs() <= 0.5 {
        return c * ((e / c).ln_1p() / al - am1 / al * c.ln()).exp_m1();
    }
    let ln_s = log_sum_exp([lam.ln() + al * b.ln(), (1.0 - lam).ln() + al * a.ln()]);
    c * (ln_s / al - c.ln()).exp_m1()
}

/// The same capacity as the two-point mixture of the divergences from `W_b`
/// and `W_a` to the center.
pub fn mean_capacity_mixture(a: f64, b: f64, c: f64, horizon: f64, order: Order) -> Result<f64> {
    check_levels(a, b, c)?;
    let order = positive_finite(order)?;
    if b == a {
        return Ok(0.0);
    }
    let lam = (c - a) / (b - a);
    let x = mean_center_intensity(a, b, c, order);
    let mix = |w: f64, f: f64| if w == 0.0 { 0.0 } else { w * constant_divergence_rate(f, x, order) };
    Ok(horizon * (mix(lam, b) + mix(1.0 - lam, a)))
}

/// Capacity and center of the family with average intensity exactly `c`.
pub fn poisson_mean_capacity(spec: &PoissonFamilySpec, order: Order) -> Result<PoissonSolution> {
    spec.validate()?;
    let order = positive_finite(order)?;
    let b = spec.constant_ceiling()?;
    let MeanConstraint::Eq(c) = spec.constraint else {
        return Err(Error::DomainError("mean capacity needs an equality constraint".into()));
    };
    mean_solution(spec.horizon, spec.floor, b, c, order)
}

fn mean_solution(t: f64, a: f64, b: f64, c: f64, order: Order) -> Result<PoissonSolution> {
    check_levels(a, b, c)?;
    let capacity = t * mean_capacity_rate(a, b, c, order);
    let mixture = mean_capacity_mixture(a, b, c, t, order)?;
    if (capacity - mixture).abs() > 1e-10 * (1.0 + capacity.abs()) {
        return Err(Error::DomainError(format!(
            "closed form {capacity} and mixture form {mixture} disagree; parameters are numerically degenerate"
        )));
    }
    let center = Intensity::Constant(mean_center_intensity(a, b, c, order));
    Ok(PoissonSolution { order, capacity, center, mean: Some(c), horizon: t })
}

/// Capacity of the family with average at most (or at least) `c`.
pub fn poisson_constrained_capacity(spec: &PoissonFamilySpec, order: Order) -> Result<PoissonSolution> {
    spec.validate()?;
    let order = positive_finite(order)?;
    let b = spec.constant_ceiling()?;
    let a = spec.floor;
    let c_opt = optimal_mean(a, b, order);
    let c = match spec.constraint {
        MeanConstraint::Le(c) => c.min(c_opt),
        MeanConstraint::Ge(c) => c.max(c_opt),
        MeanConstraint::None => c_opt,
        MeanConstraint::Eq(_) => return poisson_mean_capacity(spec, order),
    };
    mean_solution(spec.horizon, a, b, c, order)
}

/// Per-unit-time capacity and center intensity of intensities in `[a,b]`.
pub fn bounded_rate(a: f64, b: f64, order: Order) -> (f64, f64) {
    if b == a {
        return (0.0, a);
    }
    match order.branch() {
        Order::Finite(al) => {
            let (ba, aa) = (b.powf(al), a.powf(al));
            let x = (al * (b - a) / (ba - aa)).powf(1.0 / (1.0 - al));
            (x - al / (al - 1.0) * (a * ba - b * aa) / (ba - aa), x)
        }
        _ => {
            let x = log_x1(a, b).exp();
            let tail = if a > 0.0 { a * b / (b - a) * (b / a).ln() } else { 0.0 };
            (x - tail, x)
        }
    }
}

/// Capacity and center of all intensities in `[a,b]` on `(0,T]`.
pub fn poisson_bounded_capacity(horizon: f64, a: f64, b: f64, order: Order) -> Result<PoissonSolution> {
    PoissonFamilySpec::bounded(horizon, a, b).validate()?;
    let order = positive_finite(order)?;
    let (rate, x) = bounded_rate(a, b, order);
    Ok(PoissonSolution {
        order,
        capacity: horizon * rate,
        center: Intensity::Constant(x),
        mean: Some(optimal_mean(a, b, order)),
        horizon,
    })
}

/// Capacity and center of all intensities between `a` and the envelope `g`.
pub fn poisson_product_capacity(
    horizon: f64,
    a: f64,
    g: &Intensity,
    order: Order,
    tol: f64,
) -> Result<PoissonSolution> {
    let spec = PoissonFamilySpec {
        horizon,
        floor: a,
        ceiling: Ceiling::Envelope(g.clone()),
        constraint: MeanConstraint::None,
    };
    spec.validate()?;
    let order = positive_finite(order)?;
    if let Some(segs) = g.segments(horizon) {
        let mut capacity = 0.0;
        let mut breaks = Vec::new();
        let mut values = Vec::new();
        for (i, &(lo, hi, b)) in segs.iter().enumerate() {
            let (rate, x) = bounded_rate(a, b, order);
            capacity += (hi - lo) * rate;
            if i + 1 < segs.len() {
                breaks.push(hi);
            }
            values.push(x);
        }
        let center =
            if values.len() == 1 { Intensity::Constant(values[0]) } else { Intensity::PiecewiseConstant { breaks, values } };
        return Ok(PoissonSolution { order, capacity, center, mean: None, horizon });
    }
    let (capacity, _) = adaptive(&|t| bounded_rate(a, g.eval(t), order).0, 0.0, horizon, tol)?;
    let env = g.clone();
    let bound = g.bound();
    let center = Intensity::function(move |t| bounded_rate(a, env.eval(t), order).1, bound);
    Ok(PoissonSolution { order, capacity, center, mean: None, horizon })
}

/// Dispatches on the spec: envelope, mean constraint, or plain bounds.
pub fn poisson_capacity(spec: &PoissonFamilySpec, order: Order, tol: f64) -> Result<PoissonSolution> {
    spec.validate()?;
    match (&spec.ceiling, spec.constraint) {
        (Ceiling::Envelope(g), _) => poisson_product_capacity(spec.horizon, spec.floor, g, order, tol),
        (Ceiling::Constant(b), MeanConstraint::None) => poisson_bounded_capacity(spec.horizon, spec.floor, *b, order),
        (_, MeanConstraint::Eq(_)) => poisson_mean_capacity(spec, order),
        _ => poisson_constrained_capacity(spec, order),
    }
}
