//! Command-line front end.
//!
//! Every positional input is a file path, `-` for standard input, or the
//! content itself inline (JSON, or a bare keyword such as `uniform`).
//! Results go to standard output (or `--output`) as JSON, except `curve`,
//! which writes CSV. Numbers carry 17 significant digits; infinities are
//! written as the string `"inf"`.
//!
//! Exit codes: 0 on success, 1 on a domain error (with
//! `{"error": kind, "message": text}` on standard error) or on property
//! violations in `verify`, 2 on usage errors.

use std::io::{Read, Write};
use std::path::Path;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::capacity::{
    capacity_curve, solve_capacity, solve_constrained_capacity, CapacitySolution, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::families::{
    poisson_bounded_capacity, poisson_constrained_capacity, poisson_discretize_with, poisson_mc_divergence,
    poisson_mean_capacity, poisson_product_capacity, shift_family_capacity, Ceiling, DiscretizeOptions, Intensity,
    MeanConstraint, PoissonFamilySpec,
};
use crate::formats::{
    channel_to_json, parse_channel, parse_constraint, parse_densities, parse_family_spec, parse_intensity,
    parse_measure, parse_prior,
};
use crate::measures::{renyi_divergence, renyi_information, renyi_mean, FiniteChannel, Prior};
use crate::order::Order;
use crate::output::{csv, Json};
use crate::verify::{coverage_to_json, reports_to_json, run_suites, suite_ids, Tolerances};

/// Default quadrature tolerance of the family subcommands.
const FAMILY_TOL: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "renyi", version, about = "Rényi divergence, information, capacity, radius and center")]
struct Cli {
    /// Write the result here instead of standard output.
    #[arg(short, long, global = true, value_name = "PATH")]
    output: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// D_α(W‖Q) of two non-negative measures.
    ///
    /// Output: {"order": α, "divergence": x}
    Divergence {
        /// First measure: a JSON array or {"weights": [..]}.
        w: String,
        /// Second measure.
        q: String,
        #[command(flatten)]
        order: OrderArg,
    },
    /// Sibson information I_α(P; W).
    ///
    /// Output: {"order": α, "information": x}
    Info {
        #[command(flatten)]
        input: ChannelPrior,
        #[command(flatten)]
        order: OrderArg,
    },
    /// Rényi mean q_{α,P}.
    ///
    /// Output: {"order": α, "mean": [q_1, ..]}
    Mean {
        #[command(flatten)]
        input: ChannelPrior,
        #[command(flatten)]
        order: OrderArg,
    },
    /// Capacity, optimal prior and center of a channel.
    ///
    /// Output: {"order", "capacity", "lower", "upper", "gap",
    /// "iterations", "prior", "center"}
    Capacity {
        /// Channel: {"rows": [[..], ..]}, a JSON matrix, or a text matrix.
        channel: String,
        #[command(flatten)]
        order: OrderArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Capacity over a grid of orders, as CSV.
    ///
    /// Output columns: alpha,capacity,lower,upper,gap
    Curve {
        channel: String,
        /// Comma-separated orders and grids `lo:hi:n[:log]`; atoms `1`, `inf`.
        #[arg(long, allow_hyphen_values = true)]
        alphas: String,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Capacity with the input prior restricted to a constraint set.
    ///
    /// Output: as for `capacity`.
    Constrained {
        channel: String,
        /// {"kind":"linear_cost","costs":[..],"budget":Γ,"dir":"le"|"ge"},
        /// {"kind":"support","rows":[..]} or {"kind":"unconstrained"}.
        #[arg(long)]
        constraint: String,
        #[command(flatten)]
        order: OrderArg,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Capacity of the mod-1 shift family of a density on the circle.
    ///
    /// Output: {"order": α, "capacity": x}
    Shift {
        /// "uniform", "linear", "inv_sqrt", {"kind":"power","beta":β},
        /// {"kind":"piecewise","breaks":[..],"values":[..]}, or an array.
        density: String,
        #[command(flatten)]
        order: OrderArg,
        #[arg(long, default_value_t = FAMILY_TOL)]
        tol: f64,
    },
    /// Capacity and center of a Poisson point-process family.
    ///
    /// Output: {"order", "capacity", "center_intensity", "mean"?}
    Poisson {
        /// {"T":..,"a":..,"b": number | {"breaks":[..],"values":[..]},"c":..}
        spec: String,
        #[arg(long, value_enum)]
        mode: PoissonMode,
        #[command(flatten)]
        order: OrderArg,
        #[arg(long, default_value_t = FAMILY_TOL)]
        tol: f64,
    },
    /// Monte-Carlo estimate of D_α(W_f‖W_g) for Poisson processes.
    ///
    /// Output: {"order", "estimate", "stderr", "samples"}
    PoissonMc {
        /// Intensity f: a number or {"breaks":[..],"values":[..]}.
        #[arg(long)]
        f: String,
        #[arg(long)]
        g: String,
        /// Horizon T.
        #[arg(long = "horizon", short = 'T')]
        horizon: f64,
        #[command(flatten)]
        order: OrderArg,
        #[arg(long, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Finite channel of binned, truncated counts of a Poisson family.
    ///
    /// Output: channel JSON {"rows": [[..], ..], "labels": [..]}
    Discretize {
        spec: String,
        #[arg(long)]
        bins: usize,
        #[arg(long)]
        levels: usize,
        /// Counts above this share one overflow symbol per bin.
        #[arg(long, default_value_t = DiscretizeOptions::default().max_count)]
        max_count: usize,
        /// Rows kept; larger profile sets are subsampled.
        #[arg(long, default_value_t = DiscretizeOptions::default().max_rows)]
        max_rows: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Randomized property suites; exit code 1 on any violation.
    ///
    /// Output: JSON array of reports {"id", "instances", "skipped",
    /// "violations", "errors", "worst_margin", "tolerance", "threshold",
    /// "seed", "violation_seeds", "first_failure"}
    Verify {
        /// Suite ids; all suites when empty.
        suites: Vec<String>,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Samples per Monte-Carlo instance.
        #[arg(long, default_value_t = Tolerances::default().mc_samples)]
        mc_samples: usize,
        /// Print the suite ids and exit.
        #[arg(long)]
        list: bool,
        /// Print the statement-to-suite coverage table and exit.
        #[arg(long)]
        coverage: bool,
    },
}

#[derive(Debug, Args)]
struct OrderArg {
    /// Order α: a number in [0, ∞) or `inf`.
    #[arg(long)]
    alpha: Order,
}

#[derive(Debug, Args)]
struct ChannelPrior {
    channel: String,
    /// Prior: a JSON array or `uniform`.
    #[arg(long, default_value = "uniform")]
    prior: String,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Target certificate gap.
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PoissonMode {
    /// Average intensity exactly `c`.
    Mean,
    /// Average intensity at most `c`.
    Le,
    /// Average intensity at least `c`.
    Ge,
    /// Intensities in `[a, b]`, no average constraint.
    Bounded,
    /// Intensities between `a` and an envelope `b(t)`.
    Product,
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    configure_threads();
    match execute(&cli.command) {
        Ok((text, code)) => match emit(&cli.output, &text, out) {
            Ok(()) => code,
            Err(e) => report(&e, err),
        },
        Err(e) => report(&e, err),
    }
}

fn report(e: &Error, err: &mut dyn Write) -> i32 {
    let j = Json::obj([("error", Json::Str(e.kind().into())), ("message", Json::Str(e.to_string()))]);
    let _ = writeln!(err, "{}", j.render());
    1
}

fn emit(path: &Option<String>, text: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Parse(format!("cannot write {p}: {e}"))),
        None => out.write_all(text.as_bytes()).map_err(|e| Error::Parse(format!("cannot write output: {e}"))),
    }
}

/// `RENYI_THREADS` caps the worker pool; ignored once a pool exists.
fn configure_threads() {
    if let Some(n) = std::env::var("RENYI_THREADS").ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// The content of an input argument: a file, standard input, or inline text.
fn read_input(arg: &str) -> Result<String> {
    if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Error::Parse(format!("cannot read stdin: {e}")))?;
        return Ok(s);
    }
    let p = Path::new(arg);
    if p.is_file() {
        return std::fs::read_to_string(p).map_err(|e| Error::Parse(format!("cannot read {arg}: {e}")));
    }
    Ok(arg.to_string())
}

fn load_channel(arg: &str) -> Result<FiniteChannel> {
    parse_channel(&read_input(arg)?)
}

fn load_channel_prior(cp: &ChannelPrior) -> Result<(FiniteChannel, Prior)> {
    let ch = load_channel(&cp.channel)?;
    let p = parse_prior(&read_input(&cp.prior)?, ch.n_rows())?;
    if p.len() != ch.n_rows() {
        return Err(Error::AlphabetMismatch { left: ch.n_rows(), right: p.len() });
    }
    Ok((ch, p))
}

fn order_json(o: Order) -> Json {
    Json::Num(o.value())
}

fn scalar(o: Order, key: &str, x: f64) -> String {
    line(Json::obj([("order", order_json(o)), (key, Json::Num(x))]))
}

fn line(j: Json) -> String {
    let mut s = j.render();
    s.push('\n');
    s
}

/// Accepts a solution that stopped at the iteration cap: its bracket is
/// still certified and the gap field shows how far it got.
fn solution_text(r: Result<CapacitySolution>) -> Result<(String, i32)> {
    match r {
        Ok(s) => Ok((line(s.to_json_value()), 0)),
        Err(e) => Err(e),
    }
}

fn execute(cmd: &Command) -> Result<(String, i32)> {
    let ok = |s: String| Ok((s, 0));
    match cmd {
        Command::Divergence { w, q, order } => {
            let w = parse_measure(&read_input(w)?)?;
            let q = parse_measure(&read_input(q)?)?;
            ok(scalar(order.alpha, "divergence", renyi_divergence(&w, &q, order.alpha)?))
        }
        Command::Info { input, order } => {
            let (ch, p) = load_channel_prior(input)?;
            ok(scalar(order.alpha, "information", renyi_information(&ch, &p, order.alpha)?))
        }
        Command::Mean { input, order } => {
            let (ch, p) = load_channel_prior(input)?;
            let q = renyi_mean(&ch, &p, order.alpha)?;
            ok(line(Json::obj([("order", order_json(order.alpha)), ("mean", Json::nums(q.probs()))])))
        }
        Command::Capacity { channel, order, solver } => {
            let ch = load_channel(channel)?;
            solution_text(solve_capacity(&ch, order.alpha, solver.tol, solver.max_iter))
        }
        Command::Curve { channel, alphas, tol } => {
            let ch = load_channel(channel)?;
            let orders = parse_order_grid(alphas)?;
            let report = capacity_curve(&ch, &orders, *tol)?;
            let mut rows = Vec::with_capacity(orders.len());
            for (o, p) in report.orders.iter().zip(report.points) {
                let s = match p {
                    Ok(s) => s,
                    Err(Error::NotConverged(s)) => *s,
                    Err(e) => return Err(e),
                };
                rows.push(vec![o.value(), s.capacity, s.lower_bound, s.upper_bound, s.gap]);
            }
            ok(csv(&["alpha", "capacity", "lower", "upper", "gap"], &rows))
        }
        Command::Constrained { channel, constraint, order, solver } => {
            let ch = load_channel(channel)?;
            let cs = parse_constraint(&read_input(constraint)?)?;
            solution_text(solve_constrained_capacity(&ch, order.alpha, &cs, solver.tol, solver.max_iter))
        }
        Command::Shift { density, order, tol } => {
            let fs = parse_densities(&read_input(density)?)?;
            ok(scalar(order.alpha, "capacity", shift_family_capacity(&fs, order.alpha, *tol)?))
        }
        Command::Poisson { spec, mode, order, tol } => {
            let spec = parse_family_spec(&read_input(spec)?)?;
            ok(line(poisson(&spec, *mode, order.alpha, *tol)?.to_json_value()))
        }
        Command::PoissonMc { f, g, horizon, order, n, seed } => {
            let f = parse_intensity(&read_input(f)?)?;
            let g = parse_intensity(&read_input(g)?)?;
            let e = poisson_mc_divergence(&f, &g, *horizon, order.alpha, *n, *seed)?;
            ok(line(Json::obj([
                ("order", order_json(order.alpha)),
                ("estimate", Json::Num(e.estimate)),
                ("stderr", Json::Num(e.stderr)),
                ("samples", Json::Int(e.samples as i64)),
            ])))
        }
        Command::Discretize { spec, bins, levels, max_count, max_rows, seed } => {
            let spec = parse_family_spec(&read_input(spec)?)?;
            let opts = DiscretizeOptions { max_count: *max_count, max_rows: *max_rows, seed: *seed, ..Default::default() };
            let ch = poisson_discretize_with(&spec, *bins, *levels, &opts)?;
            ok(line(channel_to_json(&ch)))
        }
        Command::Verify { suites, n, seed, mc_samples, list, coverage } => {
            if *list {
                return ok(suite_ids().join("\n") + "\n");
            }
            if *coverage {
                return ok(coverage_to_json() + "\n");
            }
            let all = suite_ids();
            let ids: Vec<&str> = if suites.is_empty() { all } else { suites.iter().map(String::as_str).collect() };
            let tol = Tolerances { mc_samples: *mc_samples, ..Tolerances::default() };
            let reports = run_suites(&ids, *n, *seed, &tol)?;
            let code = if reports.iter().all(|r| r.passed()) { 0 } else { 1 };
            Ok((reports_to_json(&reports) + "\n", code))
        }
    }
}

fn poisson(
    spec: &PoissonFamilySpec,
    mode: PoissonMode,
    order: Order,
    tol: f64,
) -> Result<crate::families::PoissonSolution> {
    let needs_c = || match spec.constraint {
        MeanConstraint::Eq(c) | MeanConstraint::Le(c) | MeanConstraint::Ge(c) => Ok(c),
        MeanConstraint::None => Err(Error::DomainError("this mode needs an average intensity \"c\"".into())),
    };
    let with = |c: MeanConstraint| PoissonFamilySpec { constraint: c, ..spec.clone() };
    match mode {
        PoissonMode::Mean => poisson_mean_capacity(&with(MeanConstraint::Eq(needs_c()?)), order),
        PoissonMode::Le => poisson_constrained_capacity(&with(MeanConstraint::Le(needs_c()?)), order),
        PoissonMode::Ge => poisson_constrained_capacity(&with(MeanConstraint::Ge(needs_c()?)), order),
        PoissonMode::Bounded => {
            let b = match spec.ceiling {
                Ceiling::Constant(b) => b,
                Ceiling::Envelope(_) => return Err(Error::DomainError("bounded mode needs a constant \"b\"".into())),
            };
            poisson_bounded_capacity(spec.horizon, spec.floor, b, order)
        }
        PoissonMode::Product => {
            let g = match &spec.ceiling {
                Ceiling::Constant(b) => Intensity::Constant(*b),
                Ceiling::Envelope(g) => g.clone(),
            };
            poisson_product_capacity(spec.horizon, spec.floor, &g, order, tol)
        }
    }
}

/// Parses `--alphas`: comma-separated items, each an order or a grid
/// `lo:hi:n` (linear) or `lo:hi:n:log`. The result is sorted and deduplicated.
pub fn parse_order_grid(text: &str) -> Result<Vec<Order>> {
    let bad = |m: String| Error::Parse(format!("--alphas: {m}"));
    let mut values = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [one] => values.push(one.parse::<Order>()?.value()),
            [lo, hi, n] | [lo, hi, n, _] => {
                let lo = lo.parse::<Order>()?.value();
                let hi = hi.parse::<Order>()?.value();
                let n: usize = n.parse().map_err(|_| bad(format!("bad point count in \"{item}\"")))?;
                let log = match parts.get(3) {
                    None => false,
                    Some(&"log") => true,
                    Some(s) => return Err(bad(format!("unknown grid kind \"{s}\""))),
                };
                if !(lo.is_finite() && hi.is_finite() && lo <= hi) || n == 0 {
                    return Err(bad(format!("grid \"{item}\" needs finite lo ≤ hi and n ≥ 1")));
                }
                if log && lo <= 0.0 {
                    return Err(bad(format!("log grid \"{item}\" needs lo > 0")));
                }
                for i in 0..n {
                    let t = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                    let v = match (log, i + 1 == n) {
                        _ if i == 0 => lo,
                        (_, true) => hi,
                        (true, _) => (lo.ln() + t * (hi.ln() - lo.ln())).exp(),
                        (false, _) => lo + t * (hi - lo),
                    };
                    values.push(v);
                }
            }
            _ => return Err(bad(format!("cannot parse \"{item}\""))),
        }
    }
    if values.is_empty() {
        return Err(bad("no orders given".into()));
    }
    values.sort_by(f64::total_cmp);
    values.dedup();
    values.into_iter().map(Order::new).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("renyi").chain(args.iter().copied());
        let code = run(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn order_grids() {
        let g = parse_order_grid("0.5:2:4,inf,1").unwrap();
        assert_eq!(g.iter().map(|o| o.value()).collect::<Vec<_>>(), vec![0.5, 1.0, 1.5, 2.0, f64::INFINITY]);
        let l = parse_order_grid("0.01:100:5:log").unwrap();
        assert_eq!(l.len(), 5);
        assert!((l[2].value() - 1.0).abs() < 1e-12 && l[4].value() == 100.0);
        assert!(parse_order_grid("1:0:3").is_err());
        assert!(parse_order_grid("0:1:3:cubic").is_err());
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&["capacity"]).0, 2);
        assert_eq!(call(&["capacity", "[[1,0],[0,1]]", "--alpha", "1", "--bogus"]).0, 2);
        assert_eq!(call(&["nonsense"]).0, 2);
    }

    #[test]
    fn domain_errors_exit_one_with_json() {
        let (code, _, err) = call(&["divergence", "[1,0]", "[1,0,0]", "--alpha", "2"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("{\"error\":\"AlphabetMismatch\""), "{err}");
    }

    #[test]
    fn capacity_of_a_noiseless_bit() {
        let (code, out, _) = call(&["capacity", "[[1,0],[0,1]]", "--alpha", "1", "--tol", "1e-9"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["capacity"].as_f64().unwrap() - std::f64::consts::LN_2).abs() < 1e-9);
    }

    #[test]
    fn poisson_bounded_mode() {
        let (code, out, _) = call(&["poisson", "--mode", "bounded", r#"{"T":1,"a":0,"b":1}"#, "--alpha", "2"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["capacity"].as_f64().unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn infinite_results_are_strings() {
        let (code, out, _) = call(&["divergence", "[1,0]", "[0,1]", "--alpha", "2"]);
        assert_eq!(code, 0);
        assert!(out.contains("\"divergence\":\"inf\""), "{out}");
    }
}
