//! Locale-independent JSON and CSV emission with 17 significant digits.
//!
//! Non-finite numbers are written as the strings `"inf"`, `"-inf"` and `"nan"`.

use std::fmt::Write;

/// A JSON value with a deterministic rendering.
#[derive(Debug, Clone, PartialEq)]
pub enum Json {
    Null,
    Bool(bool),
    Int(i64),
    Num(f64),
    Str(String),
    Arr(Vec<Json>),
    Obj(Vec<(String, Json)>),
}

impl Json {
    pub fn obj<K: Into<String>>(fields: impl IntoIterator<Item = (K, Json)>) -> Json {
        Json::Obj(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn nums(xs: &[f64]) -> Json {
        Json::Arr(xs.iter().map(|&x| Json::Num(x)).collect())
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s
    }

    fn write(&self, out: &mut String) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(i) => write!(out, "{i}").unwrap(),
            Json::Num(x) => {
                if x.is_finite() {
                    out.push_str(&num(*x));
                } else {
                    write_str(out, &num(*x));
                }
            }
            Json::Str(s) => write_str(out, s),
            Json::Arr(v) => {
                out.push('[');
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    x.write(out);
                }
                out.push(']');
            }
            Json::Obj(v) => {
                out.push('{');
                for (i, (k, x)) in v.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    write_str(out, k);
                    out.push(':');
                    x.write(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_str(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => write!(out, "\\u{:04x}", c as u32).unwrap(),
            c => out.push(c),
        }
    }
    out.push('"');
}

/// A number with 17 significant digits, or `inf`/`-inf`/`nan`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

/// CSV table with a fixed header.
pub fn csv(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut s = header.join(",");
    s.push('\n');
    for r in rows {
        s.push_str(&r.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [std::f64::consts::LN_2, 1e-300, -3.5, 0.0, 1.0 / 3.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(f64::INFINITY), "inf");
    }

    #[test]
    fn json_rendering_is_valid() {
        let v = Json::obj([
            ("a", Json::Num(0.5)),
            ("b", Json::Num(f64::INFINITY)),
            ("c", Json::Str("x\"y".into())),
            ("d", Json::nums(&[1.0, 2.0])),
        ]);
        let parsed: serde_json::Value = serde_json::from_str(&v.render()).unwrap();
        assert_eq!(parsed["a"].as_f64().unwrap(), 0.5);
        assert_eq!(parsed["b"].as_str().unwrap(), "inf");
        assert_eq!(parsed["c"].as_str().unwrap(), "x\"y");
    }

    #[test]
    fn csv_layout() {
        let s = csv(&["alpha", "capacity"], &[vec![1.0, f64::INFINITY]]);
        assert_eq!(s, "alpha,capacity\n1.0000000000000000e0,inf\n");
    }
}
