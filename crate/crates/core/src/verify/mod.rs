//! Randomized property suites over the whole library.
//!
//! Every suite draws its instances from a deterministic stream: instance `i`
//! of suite `s` under master seed `k` uses the seed
//! `mix_seed(mix_seed(k, fnv1a(s)), i)`, so a violation is reproduced by
//! [`run_instance`] with the seed recorded in its [`PropertyReport`].
//!
//! An instance yields a margin: how far the checked statement holds, scaled by
//! `max(1, |lhs|, |rhs|)`. Negative means violated. A violation is declared
//! only when the margin is below `-slack_factor · tolerance`.

mod capacity;
mod families;
mod gen;
mod measures;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::{fnv1a, mix_seed};
use crate::output::Json;

/// Numerical tolerances handed to the suites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Target certificate gap of the capacity solver.
    pub solver: f64,
    /// Exact identities and inequalities between closed forms.
    pub identity: f64,
    /// Adaptive quadrature.
    pub quadrature: f64,
    /// Simplex-grid oracles.
    pub grid: f64,
    /// Richardson-extrapolated finite differences.
    pub finite_difference: f64,
    /// Margins must fall below `-slack_factor × tolerance` to count.
    pub slack_factor: f64,
    /// Family-wise two-sided level of the Monte-Carlo suite, split across
    /// instances by Bonferroni.
    pub mc_level: f64,
    /// Samples per Monte-Carlo instance.
    pub mc_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: 1e-10,
            identity: 1e-11,
            quadrature: 1e-11,
            grid: 5e-4,
            finite_difference: 1e-7,
            slack_factor: 10.0,
            mc_level: 0.0027,
            mc_samples: 20_000,
        }
    }
}

/// Which tolerance a suite is judged by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TolKind {
    Identity,
    Solver,
    Quadrature,
    Grid,
    FiniteDifference,
    /// Margins are in units of the Bonferroni z-score.
    Sigma,
}

/// Result of one instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Margin(f64),
    /// The drawn instance falls outside the statement's hypotheses.
    Skipped,
}

pub(crate) struct Ctx<'a> {
    pub rng: ChaCha8Rng,
    pub tol: &'a Tolerances,
    pub instances: usize,
}

type SuiteFn = fn(&mut Ctx) -> Result<Outcome>;

pub(crate) struct Suite {
    pub id: &'static str,
    pub kind: TolKind,
    pub run: SuiteFn,
}

/// Outcome of a suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub id: String,
    pub instances: usize,
    pub skipped: usize,
    pub violations: usize,
    /// Instances that raised an error; counted among the violations.
    pub errors: usize,
    /// Smallest margin seen; `+inf` when nothing was checked.
    pub worst_margin: f64,
    pub tolerance: f64,
    pub threshold: f64,
    /// Master seed of the run.
    pub seed: u64,
    /// Instance seeds of the first violations, for [`run_instance`].
    pub violation_seeds: Vec<u64>,
    pub first_failure: Option<String>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    pub fn to_json_value(&self) -> Json {
        Json::obj([
            ("id", Json::Str(self.id.clone())),
            ("instances", Json::Int(self.instances as i64)),
            ("skipped", Json::Int(self.skipped as i64)),
            ("violations", Json::Int(self.violations as i64)),
            ("errors", Json::Int(self.errors as i64)),
            ("worst_margin", Json::Num(self.worst_margin)),
            ("tolerance", Json::Num(self.tolerance)),
            ("threshold", Json::Num(self.threshold)),
            ("seed", Json::Int(self.seed as i64)),
            ("violation_seeds", Json::Arr(self.violation_seeds.iter().map(|s| Json::Str(s.to_string())).collect())),
            ("first_failure", self.first_failure.clone().map_or(Json::Null, Json::Str)),
        ])
    }
}

/// JSON array of reports.
pub fn reports_to_json(reports: &[PropertyReport]) -> String {
    Json::Arr(reports.iter().map(PropertyReport::to_json_value).collect()).render()
}

const MAX_RECORDED: usize = 16;

fn registry() -> Vec<Suite> {
    let mut v = measures::suites();
    v.extend(capacity::suites());
    v.extend(families::suites());
    v
}

/// Ids of all registered suites, in registry order.
pub fn suite_ids() -> Vec<&'static str> {
    registry().iter().map(|s| s.id).collect()
}

fn find(id: &str) -> Result<Suite> {
    registry().into_iter().find(|s| s.id == id).ok_or_else(|| Error::UnknownSuite(id.to_string()))
}

fn suite_seed(id: &str, seed: u64) -> u64 {
    mix_seed(seed, fnv1a(id.bytes()))
}

/// Seed of instance `index` of suite `id` under master seed `seed`.
pub fn instance_seed(id: &str, seed: u64, index: usize) -> u64 {
    mix_seed(suite_seed(id, seed), index as u64)
}

fn tolerance_of(kind: TolKind, tol: &Tolerances, instances: usize) -> f64 {
    match kind {
        TolKind::Identity => tol.identity,
        TolKind::Solver => tol.solver,
        TolKind::Quadrature => tol.quadrature,
        TolKind::Grid => tol.grid,
        TolKind::FiniteDifference => tol.finite_difference,
        TolKind::Sigma => families::bonferroni_z(tol.mc_level, instances),
    }
}

fn threshold_of(kind: TolKind, tol: &Tolerances, instances: usize) -> f64 {
    match kind {
        // a z-score is already the acceptance bound
        TolKind::Sigma => 0.0,
        _ => tol.slack_factor * tolerance_of(kind, tol, instances),
    }
}

fn execute(suite: &Suite, iseed: u64, tol: &Tolerances, instances: usize) -> Result<Outcome> {
    let mut ctx = Ctx { rng: ChaCha8Rng::seed_from_u64(iseed), tol, instances };
    (suite.run)(&mut ctx)
}

/// Runs `n` instances of suite `id`.
pub fn run_suite(id: &str, n: usize, seed: u64, tol: &Tolerances) -> Result<PropertyReport> {
    let suite = find(id)?;
    let threshold = threshold_of(suite.kind, tol, n);
    let outcomes: Vec<(u64, Result<Outcome>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = instance_seed(id, seed, i);
            (s, execute(&suite, s, tol, n))
        })
        .collect();
    let mut rep = PropertyReport {
        id: id.to_string(),
        instances: n,
        skipped: 0,
        violations: 0,
        errors: 0,
        worst_margin: f64::INFINITY,
        tolerance: tolerance_of(suite.kind, tol, n),
        threshold,
        seed,
        violation_seeds: Vec::new(),
        first_failure: None,
    };
    for (s, out) in outcomes {
        let failure = match out {
            Ok(Outcome::Skipped) => {
                rep.skipped += 1;
                None
            }
            Ok(Outcome::Margin(m)) => {
                rep.worst_margin = rep.worst_margin.min(if m.is_nan() { f64::NEG_INFINITY } else { m });
                (!(m >= -threshold)).then(|| format!("margin {m:e} at instance seed {s}"))
            }
            Err(e) => {
                rep.errors += 1;
                rep.worst_margin = f64::NEG_INFINITY;
                Some(format!("{} at instance seed {s}: {e}", e.kind()))
            }
        };
        if let Some(msg) = failure {
            rep.violations += 1;
            if rep.violation_seeds.len() < MAX_RECORDED {
                rep.violation_seeds.push(s);
            }
            rep.first_failure.get_or_insert(msg);
        }
    }
    Ok(rep)
}

/// Reruns one instance of suite `id` from its recorded seed. `instances` is
/// the size of the original run (it only affects the Monte-Carlo threshold).
pub fn run_instance(id: &str, instance_seed: u64, instances: usize, tol: &Tolerances) -> Result<Outcome> {
    let suite = find(id)?;
    execute(&suite, instance_seed, tol, instances)
}

/// Runs several suites concurrently; reports come back in input order.
pub fn run_suites(ids: &[&str], n: usize, seed: u64, tol: &Tolerances) -> Result<Vec<PropertyReport>> {
    for id in ids {
        find(id)?;
    }
    ids.par_iter().map(|id| run_suite(id, n, seed, tol)).collect()
}

/// A tested statement and the suites that check it.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageEntry {
    pub statement: &'static str,
    pub suites: &'static [&'static str],
    /// `false` when the statement is only implied by the listed suites.
    pub direct: bool,
}

/// Statement-to-suite coverage table.
pub fn coverage() -> Vec<CoverageEntry> {
    let e = |statement, suites, direct| CoverageEntry { statement, suites, direct };
    vec![
        e("divergence is nondecreasing in the order", &["divergence-order-monotone"], true),
        e("scaling the reference measure shifts the divergence; a smaller reference increases it", &["divergence-scaling"], true),
        e("data processing inequality under coarsening", &["dpi-coarsening"], true),
        e("Pinsker bound with constant min(1,α)/2", &["pinsker"], true),
        e("divergence is convex in its second argument", &["divergence-convexity-q"], true),
        e("divergence is jointly quasi-convex", &["divergence-joint-quasiconvexity"], true),
        e("divergence is lower semicontinuous in its arguments", &["divergence-order-monotone", "dpi-coarsening"], false),
        e("mean measure is Lipschitz in the prior for α ≤ 1 and Hölder for α ≥ 1", &["mean-lipschitz"], true),
        e("mean measure norm is convex in the prior for α ≤ 1 and concave for α ≥ 1", &["mean-lipschitz"], true),
        e("two priors decompose through their common part into singular remainders", &["prior-decomposition"], true),
        e("α ln‖m_α‖ is convex; ‖m_α‖ is nondecreasing, and equals 1 when the support rows coincide", &["mean-norm-logconvex"], true),
        e("information is nonnegative, nondecreasing in the order, and I_∞ ≤ ln|supp P|", &["info-order-monotone"], true),
        e("closed form of the derivative of the information in the order", &["info-derivative-fd"], true),
        e("information is a rescaling of Gallager's E0", &["e0-identity"], true),
        e("Sibson identity for the joint divergence", &["sibson-identity"], true),
        e("the Rényi mean is the minimizer of the joint divergence over output distributions", &["info-min-over-q", "sibson-identity"], true),
        e("information is concave in the prior for α ≥ 1 and quasi-concave for α < 1", &["info-prior-concavity"], true),
        e("capacity is nondecreasing in the order", &["capacity-order-monotone"], true),
        e("((1-α)/α)C_α is nonincreasing on (0,1) and (α-1)C_α is convex on (1,∞)", &["capacity-convex-transform"], true),
        e("uniform equicontinuity of the information in the prior", &["uec-prior"], true),
        e("common Lipschitz constant of the information in the order", &["uec-order"], true),
        e("capacity equals the radius (minimax)", &["minimax-bruteforce"], true),
        e("a prior is optimal iff its divergences to the mean reach the capacity on its support", &["optimality-condition"], true),
        e("van Erven–Harremoës bound", &["ehb"], true),
        e("center continuity in the order", &["center-continuity"], true),
        e("capacity of a union", &["union-bounds"], true),
        e("capacity of a product is the sum", &["product-additivity"], true),
        e("epsilon cores keep the capacity", &["epsilon-core"], true),
        e("convex hull keeps the capacity", &["convex-hull-invariance"], true),
        e("minimax for convex constraint sets", &["constrained-slack"], true),
        e("van Erven–Harremoës bound for convex constraint sets", &["constrained-ehb"], true),
        e("shift channel capacity closed forms", &["shift-closedform-vs-quadrature"], true),
        e("Poisson family closed forms and centers", &["poisson-closedform-vs-quadrature"], true),
        e("Poisson divergence agrees with its Monte-Carlo estimate", &["poisson-mc-vs-closedform"], true),
        e("finite discretizations of a Poisson family stay below its capacity", &["poisson-discretize-lower-bound"], true),
    ]
}

pub fn coverage_to_json() -> String {
    Json::Arr(
        coverage()
            .iter()
            .map(|c| {
                Json::obj([
                    ("statement", Json::Str(c.statement.into())),
                    ("suites", Json::Arr(c.suites.iter().map(|s| Json::Str((*s).into())).collect())),
                    ("direct", Json::Bool(c.direct)),
                ])
            })
            .collect(),
    )
    .render()
}

/// `(rhs − lhs)/max(1,|lhs|,|rhs|)` for the claim `lhs ≤ rhs`, with the
/// extended-real conventions.
pub(crate) fn le(lhs: f64, rhs: f64) -> f64 {
    if lhs.is_nan() || rhs.is_nan() {
        return f64::NEG_INFINITY;
    }
    if lhs == rhs || rhs == f64::INFINITY || lhs == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    if lhs == f64::INFINITY || rhs == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    (rhs - lhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

/// `−|a − b|/max(1,|a|,|b|)` for the claim `a = b`.
pub(crate) fn eq(a: f64, b: f64) -> f64 {
    le(a, b).min(le(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margins() {
        assert_eq!(le(1.0, 2.0), 0.5);
        assert_eq!(le(f64::INFINITY, f64::INFINITY), f64::INFINITY);
        assert_eq!(le(f64::INFINITY, 3.0), f64::NEG_INFINITY);
        assert_eq!(eq(2.0, 2.0), f64::INFINITY);
        assert!((eq(0.1, 0.2) + 0.1).abs() < 1e-15);
        assert_eq!(le(f64::NAN, 0.0), f64::NEG_INFINITY);
    }

    #[test]
    fn unknown_suite() {
        assert!(matches!(run_suite("nope", 1, 0, &Tolerances::default()), Err(Error::UnknownSuite(_))));
    }

    #[test]
    fn coverage_matches_registry() {
        let ids = suite_ids();
        let mut seen = std::collections::HashSet::new();
        for c in coverage() {
            for s in c.suites {
                assert!(ids.contains(s), "{s} is not registered");
                seen.insert(*s);
            }
        }
        for id in &ids {
            assert!(seen.contains(id), "{id} missing from the coverage table");
        }
        let unique: std::collections::HashSet<_> = ids.iter().collect();
        assert_eq!(unique.len(), ids.len());
    }

    #[test]
    fn runs_are_deterministic() {
        let t = Tolerances::default();
        let a = run_suite("sibson-identity", 40, 3, &t).unwrap();
        let b = run_suite("sibson-identity", 40, 3, &t).unwrap();
        assert_eq!(a, b);
        assert!(a.passed());
    }

    #[test]
    fn instances_replay() {
        let t = Tolerances::default();
        let s = instance_seed("pinsker", 9, 4);
        assert_eq!(run_instance("pinsker", s, 10, &t).unwrap(), run_instance("pinsker", s, 10, &t).unwrap());
    }
}
