//! Nonnegative extended reals.
//!
//! Divergent norms, integrals and suprema are reported as [`Ext::Infinite`]
//! rather than as a floating-point infinity, so callers must handle the
//! marker explicitly. Inside stored vectors (`GridFn` cells, point
//! functions) `f64::INFINITY` is used as the marker; every integration
//! routine checks for it before touching arithmetic.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Ext {
    Finite(f64),
    Infinite,
}

impl Ext {
    pub const ZERO: Ext = Ext::Finite(0.0);

    /// Wraps a raw float; any infinity becomes the marker.
    pub fn from_f64(x: f64) -> Ext {
        if x.is_infinite() {
            Ext::Infinite
        } else {
            Ext::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Ext::Finite(_))
    }

    pub fn is_infinite(self) -> bool {
        !self.is_finite()
    }

    /// Float view, with the marker mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Ext::Finite(x) => x,
            Ext::Infinite => f64::INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Ext::Finite(x) => Some(x),
            Ext::Infinite => None,
        }
    }

    pub fn map(self, f: impl FnOnce(f64) -> f64) -> Ext {
        match self {
            Ext::Finite(x) => Ext::from_f64(f(x)),
            Ext::Infinite => Ext::Infinite,
        }
    }

    pub fn max(self, other: Ext) -> Ext {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::Finite(a.max(b)),
            _ => Ext::Infinite,
        }
    }

    pub fn add(self, other: Ext) -> Ext {
        match (self, other) {
            (Ext::Finite(a), Ext::Finite(b)) => Ext::from_f64(a + b),
            _ => Ext::Infinite,
        }
    }
}

impl PartialOrd for Ext {
    fn partial_cmp(&self, other: &Ext) -> Option<Ordering> {
        self.value().partial_cmp(&other.value())
    }
}

impl fmt::Display for Ext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ext::Finite(x) => write!(f, "{x}"),
            Ext::Infinite => write!(f, "inf"),
        }
    }
}

impl From<f64> for Ext {
    fn from(x: f64) -> Ext {
        Ext::from_f64(x)
    }
}

impl Serialize for Ext {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        scalar::serialize(&self.value(), s)
    }
}

impl<'de> Deserialize<'de> for Ext {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Ext, D::Error> {
        scalar::deserialize(d).map(Ext::from_f64)
    }
}

/// JSON has no infinity literal; infinities travel as the strings
/// `"inf"` / `"-inf"`.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Repr {
    Num(f64),
    Text(String),
}

fn to_repr(x: f64) -> Repr {
    if x == f64::INFINITY {
        Repr::Text("inf".into())
    } else if x == f64::NEG_INFINITY {
        Repr::Text("-inf".into())
    } else {
        Repr::Num(x)
    }
}

fn from_repr<E: serde::de::Error>(r: Repr) -> Result<f64, E> {
    match r {
        Repr::Num(x) => Ok(x),
        Repr::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => Err(E::custom(format!("expected a number or \"inf\", got {other:?}"))),
        },
    }
}

pub mod scalar {
    use super::*;

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        to_repr(*x).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        from_repr(Repr::deserialize(d)?)
    }
}

pub mod vec {
    use super::*;

    pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<Repr> = xs.iter().map(|&x| to_repr(x)).collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
        Vec::<Repr>::deserialize(d)?.into_iter().map(from_repr).collect()
    }
}
