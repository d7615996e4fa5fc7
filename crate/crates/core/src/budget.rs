//! Privacy budgets with an explicit unbounded value.
//!
//! A budget is either a finite non-negative real or [`Budget::Unbounded`]
//! (no constraint). Addition saturates at `Unbounded`; unbounded compares
//! greater than every finite budget. In JSON a finite budget is a number and
//! the unbounded budget is the string `"inf"`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Budget {
    Finite(f64),
    Unbounded,
}

impl Budget {
    pub const ZERO: Budget = Budget::Finite(0.0);

    /// Budget from a float; `f64::INFINITY` maps to `Unbounded`.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_nan() || value < 0.0 {
            return Err(invalid(format!("privacy budget must be >= 0, got {value}")));
        }
        if value.is_infinite() {
            Ok(Budget::Unbounded)
        } else {
            Ok(Budget::Finite(value))
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Budget::Finite(_))
    }

    /// The budget as a float (`+inf` when unbounded).
    pub fn value(self) -> f64 {
        match self {
            Budget::Finite(v) => v,
            Budget::Unbounded => f64::INFINITY,
        }
    }

    /// `e^budget`, `+inf` when unbounded.
    pub fn exp(self) -> f64 {
        self.value().exp()
    }

    pub fn saturating_add(self, other: Budget) -> Budget {
        match (self, other) {
            (Budget::Finite(a), Budget::Finite(b)) => Budget::Finite(a + b),
            _ => Budget::Unbounded,
        }
    }

    /// `self <= other + tol`, with unbounded on the right admitting anything.
    pub fn within(self, other: Budget, tol: f64) -> bool {
        match (self, other) {
            (_, Budget::Unbounded) => true,
            (Budget::Unbounded, Budget::Finite(_)) => false,
            (Budget::Finite(a), Budget::Finite(b)) => a <= b + tol,
        }
    }
}

impl Add for Budget {
    type Output = Budget;

    fn add(self, rhs: Budget) -> Budget {
        self.saturating_add(rhs)
    }
}

impl PartialOrd for Budget {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (Budget::Unbounded, Budget::Unbounded) => Some(Ordering::Equal),
            (Budget::Unbounded, Budget::Finite(_)) => Some(Ordering::Greater),
            (Budget::Finite(_), Budget::Unbounded) => Some(Ordering::Less),
            (Budget::Finite(a), Budget::Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Budget::Finite(v) => write!(f, "{v}"),
            Budget::Unbounded => f.write_str("inf"),
        }
    }
}

impl Serialize for Budget {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Budget::Finite(v) => serializer.serialize_f64(*v),
            Budget::Unbounded => serializer.serialize_str("inf"),
        }
    }
}

struct BudgetVisitor;

impl Visitor<'_> for BudgetVisitor {
    type Value = Budget;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a non-negative number or the string \"inf\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Budget, E> {
        Budget::new(v).map_err(E::custom)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Budget, E> {
        Ok(Budget::Finite(v as f64))
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Budget, E> {
        Budget::new(v as f64).map_err(E::custom)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Budget, E> {
        match v {
            "inf" | "+inf" | "Infinity" | "infinity" => Ok(Budget::Unbounded),
            other => Err(E::custom(format!("unknown budget string {other:?}"))),
        }
    }
}

impl<'de> Deserialize<'de> for Budget {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Budget, D::Error> {
        deserializer.deserialize_any(BudgetVisitor)
    }
}

/// Serde adapter for plain `f64` fields that may be infinite (JSON has no
/// infinity literal): `+inf` / `-inf` are written as `"inf"` / `"-inf"`.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if *v == f64::INFINITY {
            s.serialize_str("inf")
        } else if *v == f64::NEG_INFINITY {
            s.serialize_str("-inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Repr::Str(s) if s == "-inf" => Ok(f64::NEG_INFINITY),
            Repr::Str(s) => Err(serde::de::Error::custom(format!("bad float {s:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturating_arithmetic() {
        let a = Budget::Finite(1.0);
        assert_eq!(a + a, Budget::Finite(2.0));
        assert_eq!(a + Budget::Unbounded, Budget::Unbounded);
        assert!(Budget::Unbounded > Budget::Finite(1e300));
        assert!(!(Budget::Unbounded > Budget::Unbounded));
    }

    #[test]
    fn within_tolerance() {
        assert!(Budget::Finite(1.0 + 1e-12).within(Budget::Finite(1.0), 1e-9));
        assert!(!Budget::Finite(1.1).within(Budget::Finite(1.0), 1e-9));
        assert!(Budget::Unbounded.within(Budget::Unbounded, 0.0));
        assert!(!Budget::Unbounded.within(Budget::Finite(5.0), 1e-9));
    }

    #[test]
    fn rejects_negative() {
        assert!(Budget::new(-0.1).is_err());
        assert!(Budget::new(f64::NAN).is_err());
        assert_eq!(Budget::new(f64::INFINITY).unwrap(), Budget::Unbounded);
    }

    #[test]
    fn json_roundtrip() {
        let v = vec![Budget::Finite(0.5), Budget::Unbounded];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r#"[0.5,"inf"]"#);
        let back: Vec<Budget> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<Budget>("-1").is_err());
    }
}
