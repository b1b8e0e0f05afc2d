use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::measures::{FiniteChannel, Pmf};

use super::poisson::{MeanConstraint, PoissonFamilySpec};

/// Knobs of [`poisson_discretize_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizeOptions {
    /// Counts above this value share one overflow symbol per bin.
    pub max_count: usize,
    /// Rows kept; larger profile sets are subsampled uniformly.
    pub max_rows: usize,
    /// Upper limit on the number of profiles enumerated.
    pub max_profiles: usize,
    /// Upper limit on `rows × outputs`.
    pub max_entries: usize,
    pub seed: u64,
}

impl Default for DiscretizeOptions {
    fn default() -> Self {
        DiscretizeOptions { max_count: 4, max_rows: 4096, max_profiles: 1 << 22, max_entries: 1 << 24, seed: 0 }
    }
}

/// Evenly spaced intensity levels from `a` to `b`.
pub fn intensity_levels(a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
    match n {
        0 => Err(Error::DomainError("need at least one level".into())),
        1 if a == b => Ok(vec![a]),
        1 => Err(Error::DomainError("a single level needs a = b".into())),
        _ => Ok((0..n).map(|i| if i + 1 == n { b } else { a + (b - a) * i as f64 / (n - 1) as f64 }).collect()),
    }
}

/// Channel whose rows are piecewise-constant intensity profiles on
/// `n_bins` equal bins, observed through truncated per-bin counts.
pub fn poisson_discretize(spec: &PoissonFamilySpec, n_bins: usize, n_levels: usize) -> Result<FiniteChannel> {
    poisson_discretize_with(spec, n_bins, n_levels, &DiscretizeOptions::default())
}

pub fn poisson_discretize_with(
    spec: &PoissonFamilySpec,
    n_bins: usize,
    n_levels: usize,
    opts: &DiscretizeOptions,
) -> Result<FiniteChannel> {
    spec.validate()?;
    let b = spec.constant_ceiling()?;
    if n_bins == 0 {
        return Err(Error::DomainError("need at least one bin".into()));
    }
    let levels = intensity_levels(spec.floor, b, n_levels)?;
    let symbols = opts.max_count + 2;
    let n_out = checked_pow(symbols, n_bins)
        .filter(|&m| m <= opts.max_entries)
        .ok_or_else(|| Error::BudgetExceeded(format!("{symbols}^{n_bins} output symbols")))?;
    let n_prof = checked_pow(levels.len(), n_bins)
        .filter(|&p| p <= opts.max_profiles)
        .ok_or_else(|| Error::BudgetExceeded(format!("{}^{n_bins} intensity profiles", levels.len())))?;

    let feasible = |idx: &[usize]| {
        let mean = idx.iter().map(|&i| levels[i]).sum::<f64>() / n_bins as f64;
        let eps = 1e-12 * b.max(1.0);
        match spec.constraint {
            MeanConstraint::None => true,
            MeanConstraint::Eq(c) => (mean - c).abs() <= eps,
            MeanConstraint::Le(c) => mean <= c + eps,
            MeanConstraint::Ge(c) => mean >= c - eps,
        }
    };
    let mut profiles: Vec<Vec<usize>> =
        (0..n_prof).map(|p| digits(p, levels.len(), n_bins)).filter(|d| feasible(d)).collect();
    if profiles.is_empty() {
        return Err(Error::InfeasibleConstraint("no level profile meets the mean constraint".into()));
    }
    if profiles.len() > opts.max_rows {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let mut keep = sample(&mut rng, profiles.len(), opts.max_rows).into_vec();
        keep.sort_unstable();
        profiles = keep.into_iter().map(|i| profiles[i].clone()).collect();
    }
    if profiles.len().saturating_mul(n_out) > opts.max_entries {
        return Err(Error::BudgetExceeded(format!("{} rows × {n_out} outputs", profiles.len())));
    }

    let width = spec.horizon / n_bins as f64;
    let per_level: Vec<Vec<f64>> = levels.iter().map(|&v| truncated_poisson(v * width, opts.max_count)).collect();
    let mut rows = Vec::with_capacity(profiles.len());
    let mut labels = Vec::with_capacity(profiles.len());
    for prof in &profiles {
        let mut row = vec![1.0];
        for &l in prof {
            let cell = &per_level[l];
            row = row.iter().flat_map(|&p| cell.iter().map(move |&q| p * q)).collect();
        }
        rows.push(Pmf::normalized(row)?);
        labels.push(prof.iter().map(|&l| crate::output::num(levels[l])).collect::<Vec<_>>().join("|"));
    }
    FiniteChannel::from_pmfs(rows)?.with_labels(labels)
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Base-`base` digits of `p`, most significant first.
fn digits(mut p: usize, base: usize, len: usize) -> Vec<usize> {
    let mut d = vec![0; len];
    for slot in d.iter_mut().rev() {
        *slot = p % base;
        p /= base;
    }
    d
}

/// Poisson(`mean`) probabilities of `0..=k` followed by the tail mass.
fn truncated_poisson(mean: f64, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 2);
    let mut p = (-mean).exp();
    for j in 0..=k {
        out.push(p);
        p *= mean / (j + 1) as f64;
    }
    let head: f64 = out.iter().sum();
    out.push((1.0 - head).max(0.0));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::solve_capacity;
    use crate::order::Order;

    #[test]
    fn truncation_keeps_rows_stochastic() {
        let p = truncated_poisson(0.7, 4);
        assert_eq!(p.len(), 6);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(truncated_poisson(0.0, 4), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_and_labels() {
        let ch = poisson_discretize(&PoissonFamilySpec::bounded(1.0, 0.0, 1.0), 2, 2).unwrap();
        assert_eq!(ch.n_rows(), 4);
        assert_eq!(ch.n_outputs(), 36);
        assert_eq!(ch.row(0)[0], 1.0);
    }

    #[test]
    fn mean_constraint_filters_rows() {
        let s = PoissonFamilySpec::bounded(1.0, 0.0, 1.0).with_constraint(MeanConstraint::Eq(0.5));
        let ch = poisson_discretize(&s, 2, 2).unwrap();
        assert_eq!(ch.n_rows(), 2);
        let one = PoissonFamilySpec::bounded(1.0, 0.0, 1.0).with_constraint(MeanConstraint::Eq(0.5));
        assert!(matches!(poisson_discretize(&one, 1, 2), Err(Error::InfeasibleConstraint(_))));
        let le = PoissonFamilySpec::bounded(1.0, 0.0, 1.0).with_constraint(MeanConstraint::Le(0.5));
        assert_eq!(poisson_discretize(&le, 2, 3).unwrap().n_rows(), 6);
    }

    #[test]
    fn budgets() {
        let s = PoissonFamilySpec::bounded(1.0, 0.0, 1.0);
        assert!(matches!(poisson_discretize(&s, 12, 2), Err(Error::BudgetExceeded(_))));
        let opts = DiscretizeOptions { max_count: 1, max_rows: 10, ..Default::default() };
        let ch = poisson_discretize_with(&s, 3, 3, &opts).unwrap();
        assert_eq!(ch.n_rows(), 10);
    }

    #[test]
    fn refinement_approaches_the_closed_form() {
        let s = PoissonFamilySpec::bounded(1.0, 0.0, 1.0);
        let mut prev = 0.0;
        for bins in [1, 2, 4] {
            let ch = poisson_discretize(&s, bins, 2).unwrap();
            let c = solve_capacity(&ch, Order::Finite(2.0), 1e-9, 100_000).unwrap().capacity;
            assert!(c >= prev - 1e-9 && c < 0.5);
            prev = c;
        }
        assert!(prev >= 0.40, "{prev}");
    }
}
