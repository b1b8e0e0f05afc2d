use crate::error::{Error, Result};
use crate::numeric::hash_f64s;

/// Tolerance on the total mass of a [`Pmf`].
pub const PMF_TOL: f64 = 1e-12;

/// A finite measure on `{0, .., len-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasure {
    weights: Vec<f64>,
}

impl FiniteMeasure {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        for (index, &value) in weights.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidWeight { index, value });
            }
        }
        Ok(FiniteMeasure { weights })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn scaled(&self, gamma: f64) -> Result<Self> {
        FiniteMeasure::new(self.weights.iter().map(|w| w * gamma).collect())
    }

    /// Total variation norm `Σ |μ - ν|`.
    pub fn total_variation(&self, other: &FiniteMeasure) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::AlphabetMismatch { left: self.len(), right: other.len() });
        }
        Ok(l1_distance(&self.weights, &other.weights))
    }
}

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// A probability mass function: a [`FiniteMeasure`] of total mass 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf(FiniteMeasure);

impl Pmf {
    /// Validates `|Σ p - 1| ≤ 1e-12`; inputs are never renormalized.
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let m = FiniteMeasure::new(weights)?;
        if m.is_empty() {
            return Err(Error::ZeroMeasure);
        }
        let sum = m.norm();
        if (sum - 1.0).abs() > PMF_TOL {
            return Err(Error::NotNormalized { sum });
        }
        Ok(Pmf(m))
    }

    /// Divides by the total mass. For internally produced vectors only.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        let m = FiniteMeasure::new(weights)?;
        let s = m.norm();
        if !(s > 0.0) {
            return Err(Error::ZeroMeasure);
        }
        Ok(Pmf(FiniteMeasure { weights: m.weights.iter().map(|w| w / s).collect() }))
    }

    pub fn uniform(n: usize) -> Self {
        Pmf(FiniteMeasure { weights: vec![1.0 / n as f64; n] })
    }

    pub fn point(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Pmf(FiniteMeasure { weights: w })
    }

    pub fn probs(&self) -> &[f64] {
        self.0.weights()
    }

    pub fn as_measure(&self) -> &FiniteMeasure {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_variation(&self, other: &Pmf) -> Result<f64> {
        self.0.total_variation(&other.0)
    }
}

impl From<Pmf> for FiniteMeasure {
    fn from(p: Pmf) -> Self {
        p.0
    }
}

/// A finite channel: `n` probability mass functions over a common output
/// alphabet of size `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChannel {
    rows: Vec<Pmf>,
    labels: Vec<String>,
    outputs: usize,
}

impl FiniteChannel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let rows = rows.into_iter().map(Pmf::new).collect::<Result<Vec<_>>>()?;
        Self::from_pmfs(rows)
    }

    pub fn from_pmfs(rows: Vec<Pmf>) -> Result<Self> {
        let outputs = rows.first().map(|r| r.len()).ok_or(Error::ZeroMeasure)?;
        for r in &rows {
            if r.len() != outputs {
                return Err(Error::AlphabetMismatch { left: outputs, right: r.len() });
            }
        }
        let labels = (0..rows.len()).map(|i| format!("w{i}")).collect();
        Ok(FiniteChannel { rows, labels, outputs })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.rows.len() {
            return Err(Error::AlphabetMismatch { left: self.rows.len(), right: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    /// The `k × k` noiseless channel.
    pub fn identity(k: usize) -> Self {
        Self::from_pmfs((0..k).map(|i| Pmf::point(k, i)).collect()).expect("k >= 1")
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_outputs(&self) -> usize {
        self.outputs
    }

    pub fn rows(&self) -> &[Pmf] {
        &self.rows
    }

    pub fn row(&self, w: usize) -> &[f64] {
        self.rows[w].probs()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Sub-channel on the given row indices.
    pub fn select_rows(&self, idx: &[usize]) -> Result<Self> {
        let rows = idx.iter().map(|&i| self.rows[i].clone()).collect();
        let labels = idx.iter().map(|&i| self.labels[i].clone()).collect();
        Self::from_pmfs(rows)?.with_labels(labels)
    }

    /// Stable content hash, used to seed randomized restarts.
    pub fn fingerprint(&self) -> u64 {
        let flat: Vec<f64> = self.rows.iter().flat_map(|r| r.probs().iter().copied()).collect();
        hash_f64s(&flat) ^ (self.outputs as u64).rotate_left(32)
    }
}

/// A prior on the rows of a channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Prior {
    probs: Pmf,
    support: Vec<usize>,
}

impl Prior {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Ok(Self::from_pmf(Pmf::new(weights)?))
    }

    pub fn from_pmf(probs: Pmf) -> Self {
        let support = probs.probs().iter().enumerate().filter(|(_, &p)| p > 0.0).map(|(i, _)| i).collect();
        Prior { probs, support }
    }

    pub fn uniform(n: usize) -> Self {
        Self::from_pmf(Pmf::uniform(n))
    }

    pub fn point(n: usize, i: usize) -> Self {
        Self::from_pmf(Pmf::point(n, i))
    }

    pub fn probs(&self) -> &[f64] {
        self.probs.probs()
    }

    pub fn as_pmf(&self) -> &Pmf {
        &self.probs
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub(crate) fn check(&self, ch: &FiniteChannel) -> Result<()> {
        if self.len() != ch.n_rows() {
            return Err(Error::SupportMismatch(format!(
                "prior has {} entries but the channel has {} rows",
                self.len(),
                ch.n_rows()
            )));
        }
        Ok(())
    }
}

/// The order-α mean measure of a channel under a prior.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanMeasure {
    pub order: crate::Order,
    pub measure: FiniteMeasure,
    /// `ln m(y)`, exact even where `m(y)` underflows.
    pub log_weights: Vec<f64>,
    pub prior: Prior,
    pub channel_fingerprint: u64,
}

impl MeanMeasure {
    pub fn norm(&self) -> f64 {
        self.measure.norm()
    }

    /// `ln ‖m‖` computed from the log-weights.
    pub fn log_norm(&self) -> f64 {
        crate::numeric::log_sum_exp(self.log_weights.iter().copied())
    }
}

/// Order-α posteriors `T_α(w|y)`; `entries[y]` is `None` where the mean
/// measure vanishes.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    pub order: crate::Order,
    pub entries: Vec<Option<Vec<f64>>>,
}

impl PosteriorMatrix {
    pub fn column(&self, y: usize) -> Option<&[f64]> {
        self.entries[y].as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pmf_tolerance_refuses_renormalization() {
        assert!(Pmf::new(vec![0.5, 0.5 + 1e-13]).is_ok());
        assert!(matches!(Pmf::new(vec![0.5, 0.5 + 1e-10]), Err(Error::NotNormalized { .. })));
        assert!(matches!(Pmf::new(vec![1.5, -0.5]), Err(Error::InvalidWeight { index: 1, .. })));
    }

    #[test]
    fn channel_rejects_ragged_rows() {
        assert!(matches!(
            FiniteChannel::new(vec![vec![1.0], vec![0.5, 0.5]]),
            Err(Error::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn prior_support() {
        let p = Prior::new(vec![0.0, 0.3, 0.7]).unwrap();
        assert_eq!(p.support(), &[1, 2]);
    }

    #[test]
    fn fingerprint_is_content_based() {
        let a = FiniteChannel::new(vec![vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let b = FiniteChannel::new(vec![vec![0.2, 0.8], vec![0.5, 0.5]]).unwrap();
        let c = FiniteChannel::new(vec![vec![0.5, 0.5], vec![0.2, 0.8]]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
