//! Extended reals `(-∞, +∞]` for rate functions and log-MGFs.
//!
//! Arithmetic follows the convex-analysis conventions: `x + ∞ = ∞`,
//! `min(x, ∞) = x`, and scaling by zero is only defined for finite values
//! (`0·∞` is rejected before it can happen).

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A finite real or `+∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtReal {
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps `f64::INFINITY` to `PosInf`; every other value must be finite.
    pub fn from_f64(x: f64) -> Self {
        debug_assert!(!x.is_nan() && x != f64::NEG_INFINITY, "not an extended real: {x}");
        if x == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn is_inf(self) -> bool {
        matches!(self, ExtReal::PosInf)
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            ExtReal::PosInf => None,
        }
    }

    /// Lossless conversion to `f64` (`+∞` becomes `f64::INFINITY`).
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn add(self, other: ExtReal) -> ExtReal {
        match (self, other) {
            (ExtReal::Finite(a), ExtReal::Finite(b)) => ExtReal::Finite(a + b),
            _ => ExtReal::PosInf,
        }
    }

    pub fn min(self, other: ExtReal) -> ExtReal {
        if self <= other {
            self
        } else {
            other
        }
    }

    pub fn max(self, other: ExtReal) -> ExtReal {
        if self >= other {
            self
        } else {
            other
        }
    }

    /// `a·x` for `a ≥ 0`.
    ///
    /// # Panics
    /// On `a < 0`, and on `0·∞`, which has no convention here.
    pub fn scale(self, a: f64) -> ExtReal {
        assert!(a >= 0.0, "negative scale {a}");
        match self {
            ExtReal::Finite(x) => ExtReal::Finite(a * x),
            ExtReal::PosInf => {
                assert!(a > 0.0, "0·∞ is undefined");
                ExtReal::PosInf
            }
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.to_f64().partial_cmp(&other.to_f64())
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => f.write_str(&fmt_f64(*x)),
            ExtReal::PosInf => f.write_str("+inf"),
        }
    }
}

/// Formats a float with 17 significant digits; infinities become the
/// literals `+inf` / `-inf`.
pub fn fmt_f64(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

impl Serialize for ExtReal {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(x) => s.serialize_f64(*x),
            ExtReal::PosInf => s.serialize_str("+inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(x) if x.is_finite() => Ok(ExtReal::Finite(x)),
            Repr::Num(x) if x == f64::INFINITY => Ok(ExtReal::PosInf),
            Repr::Text(t) if matches!(t.as_str(), "+inf" | "inf" | "infinity") => Ok(ExtReal::PosInf),
            Repr::Text(t) => t
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(ExtReal::Finite)
                .ok_or_else(|| serde::de::Error::custom(format!("not an extended real: {t}"))),
            Repr::Num(x) => Err(serde::de::Error::custom(format!("not an extended real: {x}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_rules() {
        let two = ExtReal::Finite(2.0);
        assert_eq!(two.add(ExtReal::PosInf), ExtReal::PosInf);
        assert_eq!(two.min(ExtReal::PosInf), two);
        assert_eq!(ExtReal::PosInf.scale(3.0), ExtReal::PosInf);
        assert_eq!(two.scale(0.0), ExtReal::ZERO);
        assert!(two < ExtReal::PosInf);
    }

    #[test]
    #[should_panic]
    fn zero_times_infinity_is_rejected() {
        let _ = ExtReal::PosInf.scale(0.0);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        let x = 0.1 + 0.2;
        let s = fmt_f64(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        assert_eq!(ExtReal::PosInf.to_string(), "+inf");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn serde_round_trip() {
        let v = vec![ExtReal::Finite(1.5), ExtReal::PosInf];
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"[1.5,"+inf"]"#);
        let back: Vec<ExtReal> = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
    }
}
