//! The order parameter α ∈ [0, ∞] with exact tags for 0, 1 and ∞.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Finite orders closer than this to 1 are evaluated through the α = 1
/// branch of every formula.
pub const NEAR_ONE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Order {
    Zero,
    One,
    Infinity,
    /// α ∈ (0, ∞) \ {1}.
    Finite(f64),
}

impl Order {
    pub fn new(value: f64) -> Result<Order> {
        if value.is_nan() || value < 0.0 {
            return Err(Error::DomainError(format!("order must be in [0, inf], got {value}")));
        }
        Ok(if value == 0.0 {
            Order::Zero
        } else if value == 1.0 {
            Order::One
        } else if value == f64::INFINITY {
            Order::Infinity
        } else {
            Order::Finite(value)
        })
    }

    pub fn value(self) -> f64 {
        match self {
            Order::Zero => 0.0,
            Order::One => 1.0,
            Order::Infinity => f64::INFINITY,
            Order::Finite(a) => a,
        }
    }

    /// The branch used for evaluation: finite orders within [`NEAR_ONE`] of 1
    /// map to `One`.
    pub fn branch(self) -> Order {
        match self {
            Order::Finite(a) if (a - 1.0).abs() < NEAR_ONE => Order::One,
            o => o,
        }
    }

    pub fn is_positive(self) -> bool {
        !matches!(self, Order::Zero)
    }

    pub fn is_finite_positive(self) -> bool {
        matches!(self, Order::One | Order::Finite(_))
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Infinity => write!(f, "inf"),
            o => write!(f, "{}", o.value()),
        }
    }
}

impl FromStr for Order {
    type Err = Error;

    fn from_str(s: &str) -> Result<Order> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "+inf" | "∞" => Ok(Order::Infinity),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::Parse(format!("invalid order '{t}'")))?;
                Order::new(v)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_are_exact() {
        assert_eq!(Order::new(0.0).unwrap(), Order::Zero);
        assert_eq!(Order::new(1.0).unwrap(), Order::One);
        assert_eq!(Order::new(f64::INFINITY).unwrap(), Order::Infinity);
        assert_eq!(Order::new(2.5).unwrap(), Order::Finite(2.5));
        assert!(Order::new(-1.0).is_err());
        assert!(Order::new(f64::NAN).is_err());
    }

    #[test]
    fn near_one_routes_to_one() {
        let o = Order::new(1.0 + 1e-10).unwrap();
        assert!(matches!(o, Order::Finite(_)));
        assert_eq!(o.branch(), Order::One);
        assert_eq!(Order::new(1.0 + 1e-6).unwrap().branch(), Order::Finite(1.0 + 1e-6));
    }

    #[test]
    fn parse_atoms() {
        assert_eq!("inf".parse::<Order>().unwrap(), Order::Infinity);
        assert_eq!("0".parse::<Order>().unwrap(), Order::Zero);
        assert_eq!("1".parse::<Order>().unwrap(), Order::One);
        assert_eq!("0.5".parse::<Order>().unwrap(), Order::Finite(0.5));
        assert!("abc".parse::<Order>().is_err());
    }
}
