use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::mix_seed;
use crate::order::Order;

use super::poisson::Intensity;

/// Number of independent batches an MC run is split into. Fixed so that
/// results do not depend on the thread count.
pub const MC_BATCHES: u64 = 64;

const INTEGRAL_TOL: f64 = 1e-12;

/// Arrival times of a point process on `(0,T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    times: Vec<f64>,
    horizon: f64,
}

impl SamplePath {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::DomainError(format!("horizon must be positive, got {horizon}")));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DomainError("arrival times must be strictly increasing".into()));
        }
        if times.iter().any(|&t| !(t > 0.0 && t <= horizon)) {
            return Err(Error::DomainError("arrival times must lie in (0,T]".into()));
        }
        Ok(SamplePath { times, horizon })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Arrival times of a rate-`rate` homogeneous process, sorted, in `(0,T]`.
fn homogeneous<R: Rng>(rng: &mut R, rate: f64, horizon: f64) -> Vec<f64> {
    let mean = rate * horizon;
    if mean <= 0.0 {
        return Vec::new();
    }
    let n = Poisson::new(mean).expect("positive mean").sample(rng) as usize;
    let mut t: Vec<f64> = (0..n).map(|_| horizon * (1.0 - rng.random::<f64>())).collect();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn sample_with<R: Rng>(rng: &mut R, f: &Intensity, bound: f64, horizon: f64) -> Vec<f64> {
    homogeneous(rng, bound, horizon)
        .into_iter()
        .filter(|&t| rng.random::<f64>() * bound < f.eval(t))
        .collect()
}

/// Draws a path of the process with intensity `f` by thinning.
pub fn poisson_sample(f: &Intensity, horizon: f64, seed: u64) -> Result<SamplePath> {
    let bound = f.bound().filter(|b| b.is_finite()).ok_or(Error::UnboundedIntensity)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SamplePath::new(sample_with(&mut rng, f, bound, horizon), horizon)
}

/// `ln dW_f/dν` at `path`, where `ν` is the unit-rate process.
pub fn poisson_log_rnd(path: &SamplePath, f: &Intensity) -> Result<f64> {
    let t = path.horizon;
    let integral = f.integral(t, INTEGRAL_TOL)?;
    Ok(log_product(path.times(), |s| f.eval(s).ln()) + t - integral)
}

/// `dW_f/dν = (∏ f(τ_j)) · exp(∫ (1 − f))`.
pub fn poisson_rnd(path: &SamplePath, f: &Intensity) -> Result<f64> {
    Ok(poisson_log_rnd(path, f)?.exp())
}

fn log_product(times: &[f64], ln_h: impl Fn(f64) -> f64) -> f64 {
    times.iter().map(|&s| ln_h(s)).sum()
}

/// `exp(∫ (g − 1) f)`, the expectation of `∏ g(τ_j)` under `W_f`.
pub fn poisson_expectation(f: &Intensity, g: &Intensity, horizon: f64, tol: f64) -> Result<f64> {
    let prod = Intensity::function(
        {
            let (f, g) = (f.clone(), g.clone());
            move |t| (g.eval(t) - 1.0) * f.eval(t)
        },
        None,
    );
    let v = match (f.segments(horizon), g.segments(horizon)) {
        (Some(_), Some(_)) => {
            let mut cuts: Vec<f64> = f
                .segments(horizon)
                .into_iter()
                .chain(g.segments(horizon))
                .flatten()
                .flat_map(|(lo, hi, _)| [lo, hi])
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts.windows(2).map(|w| (w[1] - w[0]) * prod.eval(0.5 * (w[0] + w[1]))).sum()
        }
        _ => prod.integral(horizon, tol)?,
    };
    Ok(v.exp())
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }

    /// Standard error of the mean.
    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return f64::INFINITY;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Per-batch sizes summing to `n`.
fn batch_sizes(n: usize) -> Vec<usize> {
    let b = MC_BATCHES as usize;
    (0..b).map(|i| n / b + usize::from(i < n % b)).collect()
}

/// Runs `draw` over deterministic batches in parallel and merges the moments
/// in batch order.
fn batched(n: usize, seed: u64, draw: impl Fn(&mut ChaCha8Rng) -> f64 + Sync) -> Moments {
    let parts: Vec<Moments> = batch_sizes(n)
        .into_par_iter()
        .enumerate()
        .map(|(i, k)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
            let mut m = Moments::default();
            for _ in 0..k {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    parts.into_iter().fold(Moments::default(), Moments::merge)
}

/// Monte-Carlo estimate of `D_α(W_f‖W_g)` from paths of the unit-rate
/// reference process, with a delta-method standard error.
pub fn poisson_mc_divergence(
    f: &Intensity,
    g: &Intensity,
    horizon: f64,
    order: Order,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    let a = match order.branch() {
        Order::Finite(a) if a > 0.0 && a <= 3.0 => a,
        _ => {
            return Err(Error::OrderOutOfRange {
                order: order.value(),
                reason: "Monte-Carlo divergence needs α in (0,1) or (1,3]",
            })
        }
    };
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::DomainError(format!("horizon must be positive, got {horizon}")));
    }
    if n < 2 {
        return Err(Error::DomainError("need at least two samples".into()));
    }
    if f.bound().is_none() || g.bound().is_none() {
        return Err(Error::UnboundedIntensity);
    }
    // (dW_f/dν)^α (dW_g/dν)^{1−α} = e^K ∏ h(τ_j)
    let k = a * (horizon - f.integral(horizon, INTEGRAL_TOL)?) + (1.0 - a) * (horizon - g.integral(horizon, INTEGRAL_TOL)?);
    let ln_h = |t: f64| {
        let (x, y) = (f.eval(t), g.eval(t));
        if x == 0.0 {
            f64::NEG_INFINITY
        } else if y == 0.0 {
            if a < 1.0 {
                f64::NEG_INFINITY
            } else {
                f64::INFINITY
            }
        } else {
            a * x.ln() + (1.0 - a) * y.ln()
        }
    };
    let m = batched(n, seed, |rng| log_product(&homogeneous(rng, 1.0, horizon), ln_h).exp());
    if m.mean == f64::INFINITY {
        return Ok(McEstimate { estimate: f64::INFINITY, stderr: f64::INFINITY, samples: n });
    }
    let se = m.stderr();
    if !(m.mean > 0.0) || !(se <= 0.5 * m.mean) {
        return Err(Error::VarianceBlowup { mean: m.mean, stderr: se });
    }
    let am1 = a - 1.0;
    Ok(McEstimate { estimate: (k + m.mean.ln()) / am1, stderr: se / (m.mean * am1.abs()), samples: n })
}

/// Monte-Carlo estimate of `E_{W_f}[∏ g(τ_j)]` from thinned paths of `f`.
pub fn poisson_mc_expectation(f: &Intensity, g: &Intensity, horizon: f64, n: usize, seed: u64) -> Result<McEstimate> {
    let bound = f.bound().filter(|b| b.is_finite()).ok_or(Error::UnboundedIntensity)?;
    let m = batched(n, seed, |rng| sample_with(rng, f, bound, horizon).iter().map(|&t| g.eval(t)).product());
    Ok(McEstimate { estimate: m.mean, stderr: m.stderr(), samples: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::poisson_divergence;

    #[test]
    fn sampler_respects_the_horizon() {
        let f = Intensity::piecewise(vec![0.5], vec![0.0, 40.0]).unwrap();
        let p = poisson_sample(&f, 2.0, 3).unwrap();
        assert!(!p.is_empty());
        assert!(p.times().iter().all(|&t| t > 0.5 && t <= 2.0));
        assert_eq!(p, poisson_sample(&f, 2.0, 3).unwrap());
    }

    #[test]
    fn unbounded_intensity_is_refused() {
        let f = Intensity::function(|t| 1.0 / t, None);
        assert!(matches!(poisson_sample(&f, 1.0, 0), Err(Error::UnboundedIntensity)));
    }

    #[test]
    fn reference_rnd_is_one() {
        let one = Intensity::Constant(1.0);
        for seed in 0..20 {
            let p = poisson_sample(&Intensity::Constant(3.0), 1.0, seed).unwrap();
            assert!((poisson_rnd(&p, &one).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_path_rnd() {
        let p = SamplePath::new(vec![], 1.0).unwrap();
        let r = poisson_rnd(&p, &Intensity::Constant(2.0)).unwrap();
        assert!((r - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn path_validation() {
        assert!(SamplePath::new(vec![0.2, 0.1], 1.0).is_err());
        assert!(SamplePath::new(vec![0.0], 1.0).is_err());
        assert!(SamplePath::new(vec![1.0], 1.0).is_ok());
    }

    #[test]
    fn expectation_identity() {
        let f = Intensity::Constant(1.0);
        let g = Intensity::Constant(1.5);
        let mc = poisson_mc_expectation(&f, &g, 1.0, 100_000, 11).unwrap();
        let want = poisson_expectation(&f, &g, 1.0, 1e-12).unwrap();
        assert!((want - 0.5f64.exp()).abs() < 1e-15);
        assert!((mc.estimate - want).abs() < 3.0 * mc.stderr, "{mc:?} vs {want}");
    }

    #[test]
    fn mc_divergence_matches_closed_form() {
        let f = Intensity::Constant(2.0);
        let g = Intensity::Constant(1.0);
        let mc = poisson_mc_divergence(&f, &g, 1.0, Order::Finite(0.5), 50_000, 5).unwrap();
        let d = poisson_divergence(&f, &g, 1.0, Order::Finite(0.5), 1e-12).unwrap();
        assert!((mc.estimate - d).abs() < 3.0 * mc.stderr, "{mc:?} vs {d}");
        let same = poisson_mc_divergence(&f, &f, 1.0, Order::Finite(2.0), 20_000, 5).unwrap();
        assert!(same.estimate.abs() < 3.0 * same.stderr, "{same:?}");
    }

    #[test]
    fn mc_is_deterministic() {
        let f = Intensity::Constant(1.7);
        let g = Intensity::Constant(0.8);
        let a = poisson_mc_divergence(&f, &g, 1.0, Order::Finite(2.0), 10_001, 99).unwrap();
        let b = poisson_mc_divergence(&f, &g, 1.0, Order::Finite(2.0), 10_001, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_order_range() {
        let f = Intensity::Constant(1.0);
        for a in [1.0, 3.5] {
            assert!(matches!(
                poisson_mc_divergence(&f, &f, 1.0, Order::new(a).unwrap(), 100, 0),
                Err(Error::OrderOutOfRange { .. })
            ));
        }
    }

    #[test]
    fn variance_blowup() {
        let f = Intensity::Constant(40.0);
        let g = Intensity::Constant(0.05);
        assert!(matches!(
            poisson_mc_divergence(&f, &g, 1.0, Order::Finite(3.0), 200, 1),
            Err(Error::VarianceBlowup { .. })
        ));
    }
}
