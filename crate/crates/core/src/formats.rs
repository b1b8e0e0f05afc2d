//! Input formats: channels, measures, constraints, intensities and family specs.
//!
//! Channels are JSON `{"rows": [[..], ..], "labels": [..]}` (labels optional),
//! a bare JSON matrix, or a whitespace-separated text matrix with `#` comments.
//! Rows whose sums are within [`ROW_SUM_TOL`] of one are renormalized unless
//! they already pass as a [`Pmf`]; larger deviations are rejected.

use serde_json::Value;

use crate::capacity::{ConstraintSet, CostDirection};
use crate::error::{Error, Result};
use crate::families::{Ceiling, DensityOnCircle, Intensity, MeanConstraint, PoissonFamilySpec};
use crate::measures::{FiniteChannel, FiniteMeasure, Pmf, Prior, PMF_TOL};
use crate::output::Json;

pub const ROW_SUM_TOL: f64 = 1e-9;

fn perr(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| perr(format!("invalid JSON: {e}")))
}

fn number(v: &Value, what: &str) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| perr(format!("{what}: not a number"))),
        Value::String(s) if matches!(s.as_str(), "inf" | "infinity" | "+inf") => Ok(f64::INFINITY),
        _ => Err(perr(format!("{what}: expected a number"))),
    }
}

fn numbers(v: &Value, what: &str) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| perr(format!("{what}: expected an array")))?
        .iter()
        .map(|x| number(x, what))
        .collect()
}

fn field<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    v.as_object().and_then(|o| o.get(key))
}

fn required<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    field(v, key).ok_or_else(|| perr(format!("missing field \"{key}\"")))
}

fn check_keys(v: &Value, allowed: &[&str], what: &str) -> Result<()> {
    if let Some(o) = v.as_object() {
        if let Some(k) = o.keys().find(|k| !allowed.contains(&k.as_str())) {
            return Err(perr(format!("{what}: unknown field \"{k}\"")));
        }
    }
    Ok(())
}

// inputs that already pass as a Pmf are kept bit-for-bit so that written
// channels read back unchanged
fn exact_or_normalized(w: Vec<f64>, sum: f64) -> Result<Pmf> {
    if (sum - 1.0).abs() <= PMF_TOL {
        Pmf::new(w)
    } else {
        Pmf::normalized(w)
    }
}

fn rows_to_channel(rows: Vec<Vec<f64>>, labels: Option<Vec<String>>) -> Result<FiniteChannel> {
    if rows.is_empty() {
        return Err(perr("channel has no rows"));
    }
    let mut pmfs = Vec::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        if let Some((j, &x)) = r.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::InvalidWeight { index: j, value: x });
        }
        let s: f64 = r.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(perr(format!("row {i} sums to {s}, not 1")));
        }
        pmfs.push(exact_or_normalized(r, s)?);
    }
    let ch = FiniteChannel::from_pmfs(pmfs)?;
    match labels {
        Some(l) => ch.with_labels(l),
        None => Ok(ch),
    }
}

/// Parses a channel from JSON or a text matrix.
pub fn parse_channel(text: &str) -> Result<FiniteChannel> {
    let t = text.trim_start();
    if t.starts_with('{') || t.starts_with('[') {
        let v = parse_json(t)?;
        let (rows, labels) = match &v {
            Value::Array(_) => (&v, None),
            Value::Object(_) => {
                check_keys(&v, &["rows", "labels"], "channel")?;
                (required(&v, "rows")?, field(&v, "labels"))
            }
            _ => unreachable!(),
        };
        let rows: Vec<Vec<f64>> = rows
            .as_array()
            .ok_or_else(|| perr("rows: expected an array of arrays"))?
            .iter()
            .map(|r| numbers(r, "row"))
            .collect::<Result<_>>()?;
        let labels = labels
            .map(|l| {
                l.as_array()
                    .ok_or_else(|| perr("labels: expected an array"))?
                    .iter()
                    .map(|s| s.as_str().map(String::from).ok_or_else(|| perr("labels: expected strings")))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        return rows_to_channel(rows, labels);
    }
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|_| perr(format!("bad number \"{s}\""))))
                .collect()
        })
        .collect::<Result<_>>()?;
    rows_to_channel(rows, None)
}

/// Channel JSON with labels, as written by `discretize`.
pub fn channel_to_json(ch: &FiniteChannel) -> Json {
    Json::obj([
        ("rows", Json::Arr(ch.rows().iter().map(|r| Json::nums(r.probs())).collect())),
        ("labels", Json::Arr(ch.labels().iter().map(|l| Json::Str(l.clone())).collect())),
    ])
}

/// A non-negative weight vector: a JSON array or `{"weights": [..]}`.
pub fn parse_measure(text: &str) -> Result<FiniteMeasure> {
    let v = parse_json(text)?;
    let w = match field(&v, "weights") {
        Some(w) => numbers(w, "weights")?,
        None => numbers(&v, "measure")?,
    };
    FiniteMeasure::new(w)
}

/// A prior: a JSON array summing to one, or `"uniform"`.
pub fn parse_prior(text: &str, n_rows: usize) -> Result<Prior> {
    if text.trim() == "uniform" {
        return Ok(Prior::uniform(n_rows));
    }
    let v = parse_json(text)?;
    let w = match field(&v, "probs") {
        Some(w) => numbers(w, "probs")?,
        None => numbers(&v, "prior")?,
    };
    let s: f64 = w.iter().sum();
    if (s - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::NotNormalized { sum: s });
    }
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::InvalidWeight { index, value });
    }
    Ok(Prior::from_pmf(exact_or_normalized(w, s)?))
}

/// `{"kind":"linear_cost","costs":[..],"budget":Γ,"dir":"le"|"ge"}`,
/// `{"kind":"support","rows":[..]}` or `{"kind":"unconstrained"}`.
pub fn parse_constraint(text: &str) -> Result<ConstraintSet> {
    let v = parse_json(text)?;
    let kind = required(&v, "kind")?.as_str().ok_or_else(|| perr("kind: expected a string"))?;
    match kind {
        "unconstrained" => {
            check_keys(&v, &["kind"], "constraint")?;
            Ok(ConstraintSet::Unconstrained)
        }
        "support" => {
            check_keys(&v, &["kind", "rows"], "constraint")?;
            let rows = required(&v, "rows")?
                .as_array()
                .ok_or_else(|| perr("rows: expected an array"))?
                .iter()
                .map(|x| x.as_u64().map(|u| u as usize).ok_or_else(|| perr("rows: expected indices")))
                .collect::<Result<_>>()?;
            Ok(ConstraintSet::SupportRestriction(rows))
        }
        "linear_cost" => {
            check_keys(&v, &["kind", "costs", "budget", "dir"], "constraint")?;
            let dir = match field(&v, "dir").map(|d| d.as_str()) {
                None | Some(Some("le")) => CostDirection::Le,
                Some(Some("ge")) => CostDirection::Ge,
                _ => return Err(perr("dir: expected \"le\" or \"ge\"")),
            };
            Ok(ConstraintSet::LinearCost {
                costs: numbers(required(&v, "costs")?, "costs")?,
                budget: number(required(&v, "budget")?, "budget")?,
                dir,
            })
        }
        other => Err(perr(format!("unknown constraint kind \"{other}\""))),
    }
}

/// An intensity: a number or `{"breaks":[..],"values":[..]}`.
pub fn intensity_from_value(v: &Value) -> Result<Intensity> {
    match v {
        Value::Object(_) => {
            check_keys(v, &["breaks", "values"], "intensity")?;
            Intensity::piecewise(
                numbers(required(v, "breaks")?, "breaks")?,
                numbers(required(v, "values")?, "values")?,
            )
        }
        _ => {
            let c = number(v, "intensity")?;
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::DomainError(format!("intensity must be finite and non-negative, got {c}")));
            }
            Ok(Intensity::Constant(c))
        }
    }
}

pub fn parse_intensity(text: &str) -> Result<Intensity> {
    intensity_from_value(&parse_json(text)?)
}

/// `{"T":..,"a":..,"b": number | envelope, "c":.., "constraint":"eq"|"le"|"ge"|"none"}`.
///
/// `"g"` is accepted in place of `"b"` for an envelope. A `"c"` without a
/// `"constraint"` means an equality constraint.
pub fn parse_family_spec(text: &str) -> Result<PoissonFamilySpec> {
    let v = parse_json(text)?;
    check_keys(&v, &["T", "a", "b", "g", "c", "constraint"], "family spec")?;
    let horizon = number(required(&v, "T")?, "T")?;
    let floor = field(&v, "a").map(|x| number(x, "a")).transpose()?.unwrap_or(0.0);
    let ceiling = match (field(&v, "b"), field(&v, "g")) {
        (Some(b), None) | (None, Some(b)) => match b {
            Value::Object(_) => Ceiling::Envelope(intensity_from_value(b)?),
            _ => Ceiling::Constant(number(b, "b")?),
        },
        (Some(_), Some(_)) => return Err(perr("give either \"b\" or \"g\", not both")),
        (None, None) => return Err(perr("missing field \"b\"")),
    };
    let c = field(&v, "c").map(|x| number(x, "c")).transpose()?;
    let kind = field(&v, "constraint").map(|k| k.as_str().ok_or_else(|| perr("constraint: expected a string")));
    let constraint = match (kind.transpose()?, c) {
        (None | Some("none"), None) => MeanConstraint::None,
        (None | Some("eq"), Some(c)) => MeanConstraint::Eq(c),
        (Some("le"), Some(c)) => MeanConstraint::Le(c),
        (Some("ge"), Some(c)) => MeanConstraint::Ge(c),
        (Some("none"), Some(_)) => return Err(perr("\"c\" given with constraint \"none\"")),
        (Some(k @ ("eq" | "le" | "ge")), None) => return Err(perr(format!("constraint \"{k}\" needs \"c\""))),
        (Some(k), _) => return Err(perr(format!("unknown constraint \"{k}\""))),
    };
    let spec = PoissonFamilySpec { horizon, floor, ceiling, constraint };
    spec.validate()?;
    Ok(spec)
}

fn density_from_value(v: &Value) -> Result<DensityOnCircle> {
    let kind = match v {
        Value::String(s) => s.as_str(),
        _ => required(v, "kind")?.as_str().ok_or_else(|| perr("kind: expected a string"))?,
    };
    match kind {
        "uniform" => Ok(DensityOnCircle::uniform()),
        "linear" => Ok(DensityOnCircle::linear()),
        "inv_sqrt" => Ok(DensityOnCircle::inv_sqrt()),
        "power" => DensityOnCircle::power(number(required(v, "beta")?, "beta")?),
        "piecewise" => DensityOnCircle::piecewise(
            numbers(required(v, "breaks")?, "breaks")?,
            numbers(required(v, "values")?, "values")?,
        ),
        other => Err(perr(format!("unknown density kind \"{other}\""))),
    }
}

/// One density spec or an array of them: `"uniform"`, `"linear"` (2y),
/// `"inv_sqrt"` (1/(2√y)), `{"kind":"power","beta":β}`,
/// `{"kind":"piecewise","breaks":[..],"values":[..]}`.
pub fn parse_densities(text: &str) -> Result<Vec<DensityOnCircle>> {
    let t = text.trim();
    let v = if t.starts_with(['{', '[', '"']) { parse_json(t)? } else { Value::String(t.to_string()) };
    match &v {
        Value::Array(xs) => xs.iter().map(density_from_value).collect(),
        _ => Ok(vec![density_from_value(&v)?]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn channel_formats_agree() {
        let a = parse_channel(r#"{"rows":[[0.5,0.5],[1,0]],"labels":["x","y"]}"#).unwrap();
        let b = parse_channel("# two rows\n0.5 0.5\n1 0\n").unwrap();
        let c = parse_channel("[[0.5,0.5],[1,0]]").unwrap();
        assert_eq!(a.row(0), b.row(0));
        assert_eq!(b.row(1), c.row(1));
        assert_eq!(a.labels(), &["x", "y"]);
    }

    #[test]
    fn rows_are_renormalized_within_tolerance() {
        let ch = parse_channel("[[0.5,0.5000000001]]").unwrap();
        assert!((ch.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(parse_channel("[[0.5,0.51]]").is_err());
        assert!(matches!(parse_channel("[[1.5,-0.5]]"), Err(Error::InvalidWeight { .. })));
        assert!(parse_channel(r#"{"rows":[[1]],"extra":1}"#).is_err());
    }

    #[test]
    fn constraints() {
        let c = parse_constraint(r#"{"kind":"linear_cost","costs":[0,1],"budget":0.5,"dir":"le"}"#).unwrap();
        assert_eq!(c, ConstraintSet::LinearCost { costs: vec![0.0, 1.0], budget: 0.5, dir: CostDirection::Le });
        assert_eq!(
            parse_constraint(r#"{"kind":"support","rows":[0,2]}"#).unwrap(),
            ConstraintSet::SupportRestriction(vec![0, 2])
        );
        assert!(parse_constraint(r#"{"kind":"box"}"#).is_err());
    }

    #[test]
    fn family_specs() {
        let s = parse_family_spec(r#"{"T":1,"a":0,"b":1}"#).unwrap();
        assert_eq!(s.constraint, MeanConstraint::None);
        let s = parse_family_spec(r#"{"T":1,"a":0,"b":1,"c":0.2,"constraint":"le"}"#).unwrap();
        assert_eq!(s.constraint, MeanConstraint::Le(0.2));
        let s = parse_family_spec(r#"{"T":2,"a":0,"g":{"breaks":[1],"values":[1,3]}}"#).unwrap();
        assert!(matches!(s.ceiling, Ceiling::Envelope(_)));
        assert!(parse_family_spec(r#"{"T":1,"a":2,"b":1}"#).is_err());
        assert!(parse_family_spec(r#"{"T":1,"b":1,"constraint":"le"}"#).is_err());
    }

    #[test]
    fn densities() {
        assert_eq!(parse_densities("uniform").unwrap().len(), 1);
        let fs = parse_densities(r#"["linear",{"kind":"power","beta":0.5}]"#).unwrap();
        assert_eq!(fs[1].name(), "power(0.5)");
        assert!(parse_densities(r#"{"kind":"power","beta":1.5}"#).is_err());
    }

    #[test]
    fn priors() {
        assert_eq!(parse_prior("uniform", 4).unwrap().probs(), &[0.25; 4]);
        assert!(parse_prior("[0.5,0.6]", 2).is_err());
    }
}
