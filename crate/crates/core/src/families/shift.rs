use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::xlnx;
use crate::order::Order;
use crate::quadrature::{integrate, Integral, Singular};

/// Tolerance on `∫₀¹ f = 1` for a density on the circle.
pub const UNIT_MASS_TOL: f64 = 1e-8;

const SAMPLE_POINTS: usize = 4096;

/// A probability density on `[0,1)` with respect to Lebesgue measure.
#[derive(Clone)]
pub struct DensityOnCircle {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    singular: Singular,
    ess_sup: Option<f64>,
    /// Known discontinuities inside `(0,1)`; quadrature splits there.
    breaks: Vec<f64>,
    name: String,
}

impl fmt::Debug for DensityOnCircle {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("DensityOnCircle")
            .field("name", &self.name)
            .field("singular", &self.singular)
            .field("ess_sup", &self.ess_sup)
            .finish()
    }
}

impl DensityOnCircle {
    /// Wraps `f`, checking non-negativity on a grid and the unit integral.
    ///
    /// `singular` marks endpoints where `f` is unbounded. `ess_sup` is used
    /// for `α = ∞`; when absent it is estimated by sampling.
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        singular: Singular,
        ess_sup: Option<f64>,
    ) -> Result<Self> {
        let d = DensityOnCircle { f: Arc::new(f), singular, ess_sup, breaks: Vec::new(), name: name.into() };
        for i in 0..SAMPLE_POINTS {
            let y = (i as f64 + 0.5) / SAMPLE_POINTS as f64;
            let v = d.eval(y);
            if v.is_nan() || v < 0.0 {
                return Err(Error::DomainError(format!("density {} is {v} at {y}", d.name)));
            }
        }
        let mass = integrate(&|y| d.eval(y), 0.0, 1.0, 1e-11, singular)?.value();
        if (mass - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::NotNormalized { sum: mass });
        }
        Ok(d)
    }

    pub fn uniform() -> Self {
        Self::trusted("uniform", |_| 1.0, Singular::default(), Some(1.0))
    }

    /// `(1−β) y^{−β}` for `β ∈ (0,1)`.
    pub fn power(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::DomainError(format!("beta must be in (0,1), got {beta}")));
        }
        Ok(Self::trusted(
            format!("power({beta})"),
            move |y: f64| (1.0 - beta) * y.powf(-beta),
            Singular { left: true, right: false },
            None,
        ))
    }

    /// `2y`.
    pub fn linear() -> Self {
        Self::trusted("linear", |y| 2.0 * y, Singular::default(), Some(2.0))
    }

    /// `1/(2√y)`.
    pub fn inv_sqrt() -> Self {
        Self::trusted("inv_sqrt", |y: f64| 0.5 / y.sqrt(), Singular { left: true, right: false }, None)
    }

    /// Step density with value `values[i]` on `[breaks[i-1], breaks[i])`.
    pub fn piecewise(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != breaks.len() + 1 {
            return Err(Error::DomainError("piecewise density needs one more value than breaks".into()));
        }
        if breaks.windows(2).any(|w| w[0] >= w[1]) || breaks.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(Error::DomainError("breaks must be increasing inside (0,1)".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::DomainError("density values must be finite and non-negative".into()));
        }
        let mass: f64 = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let lo = if i == 0 { 0.0 } else { breaks[i - 1] };
                let hi = breaks.get(i).copied().unwrap_or(1.0);
                v * (hi - lo)
            })
            .sum();
        if (mass - 1.0).abs() > UNIT_MASS_TOL {
            return Err(Error::NotNormalized { sum: mass });
        }
        let sup = values.iter().copied().fold(0.0, f64::max);
        let cuts = breaks.clone();
        let f = move |y: f64| values[breaks.partition_point(|&b| b <= y)];
        let mut d = Self::trusted("piecewise", f, Singular::default(), Some(sup));
        d.breaks = cuts;
        Ok(d)
    }

    fn trusted(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        singular: Singular,
        ess_sup: Option<f64>,
    ) -> Self {
        DensityOnCircle { f: Arc::new(f), singular, ess_sup, breaks: Vec::new(), name: name.into() }
    }

    pub fn eval(&self, y: f64) -> f64 {
        (self.f)(y)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn singular(&self) -> Singular {
        self.singular
    }

    fn sampled_sup(&self) -> f64 {
        (0..=SAMPLE_POINTS)
            .map(|i| self.eval((i as f64 / SAMPLE_POINTS as f64).min(1.0 - f64::EPSILON)))
            .fold(0.0, f64::max)
    }
}

/// `∫₀¹ g`, split at `breaks`; only the outer pieces inherit `sing`.
fn integrate_split(g: &dyn Fn(f64) -> f64, breaks: &[f64], tol: f64, sing: Singular) -> Result<Integral> {
    let mut pts = vec![0.0];
    pts.extend_from_slice(breaks);
    pts.push(1.0);
    let last = pts.len() - 2;
    let piece_tol = tol / (last + 1) as f64;
    let (mut value, mut error) = (0.0, 0.0);
    for (i, w) in pts.windows(2).enumerate() {
        let s = Singular { left: sing.left && i == 0, right: sing.right && i == last };
        match integrate(g, w[0], w[1], piece_tol, s)? {
            Integral::Finite { value: v, error: e } => {
                value += v;
                error += e;
            }
            Integral::Infinite => return Ok(Integral::Infinite),
        }
    }
    Ok(Integral::Finite { value, error })
}

/// Capacity of the mod-1 shift family of `f`, i.e. `D_α(w_f ‖ λ)`.
pub fn shift_capacity(f: &DensityOnCircle, order: Order, tol: f64) -> Result<f64> {
    let sing = f.singular;
    let integral = |g: &dyn Fn(f64) -> f64| integrate_split(g, &f.breaks, tol, sing);
    match order.branch() {
        Order::Zero => Err(Error::OrderOutOfRange { order: 0.0, reason: "shift capacity needs a positive order" }),
        Order::Infinity => {
            if sing.left || sing.right {
                return Ok(f64::INFINITY);
            }
            Ok(f.ess_sup.unwrap_or_else(|| f.sampled_sup()).ln())
        }
        Order::One => match integral(&|y| xlnx(f.eval(y)))? {
            Integral::Finite { value, .. } => Ok(value),
            Integral::Infinite => Ok(f64::INFINITY),
        },
        Order::Finite(a) => {
            let am1 = a - 1.0;
            if am1.abs() <= 0.5 {
                // ∫ f^α = 1 + (α−1) ∫ f·expm1((α−1) ln f)/(α−1)
                let g = |y: f64| {
                    let v = f.eval(y);
                    if v > 0.0 {
                        v * (am1 * v.ln()).exp_m1() / am1
                    } else {
                        0.0
                    }
                };
                return match integral(&g)? {
                    Integral::Finite { value, .. } => Ok((am1 * value).ln_1p() / am1),
                    Integral::Infinite if a > 1.0 => Ok(f64::INFINITY),
                    Integral::Infinite => Err(Error::QuadratureFailure("divergent integral below order one".into())),
                };
            }
            match integral(&|y| f.eval(y).powf(a))? {
                Integral::Finite { value, .. } => Ok(value.ln() / am1),
                Integral::Infinite if a > 1.0 => Ok(f64::INFINITY),
                Integral::Infinite => Err(Error::QuadratureFailure("divergent integral below order one".into())),
            }
        }
    }
}

/// Capacity of the union of the shift families of `fs`.
pub fn shift_family_capacity(fs: &[DensityOnCircle], order: Order, tol: f64) -> Result<f64> {
    if fs.is_empty() {
        return Err(Error::DomainError("empty density list".into()));
    }
    let mut best = f64::NEG_INFINITY;
    for f in fs {
        best = best.max(shift_capacity(f, order, tol)?);
    }
    Ok(best)
}
