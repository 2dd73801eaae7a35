//! Non-negative integer costs with an infinity sentinel.

use std::fmt;
use std::iter::Sum;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A constraint cost: a finite non-negative integer or infinity.
///
/// The derived ordering places every finite value below [`Cost::Infinite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Cost {
    Finite(u64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("finite cost overflow: {0} + {1}")]
pub struct CostOverflow(pub u64, pub u64);

impl Cost {
    pub const ZERO: Cost = Cost::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Cost::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Cost::Finite(v) => Some(v),
            Cost::Infinite => None,
        }
    }

    /// Adds two costs. Infinity absorbs; finite overflow is reported.
    pub fn checked_add(self, other: Cost) -> Result<Cost, CostOverflow> {
        match (self, other) {
            (Cost::Finite(a), Cost::Finite(b)) => {
                a.checked_add(b).map(Cost::Finite).ok_or(CostOverflow(a, b))
            }
            _ => Ok(Cost::Infinite),
        }
    }

    /// `max(0, self - other)`, with `inf - finite = inf` and `x - inf = 0`.
    pub fn saturating_sub(self, other: Cost) -> Cost {
        match (self, other) {
            (_, Cost::Infinite) => Cost::ZERO,
            (Cost::Infinite, Cost::Finite(_)) => Cost::Infinite,
            (Cost::Finite(a), Cost::Finite(b)) => Cost::Finite(a.saturating_sub(b)),
        }
    }

    /// Sums an iterator of costs, failing on finite overflow.
    pub fn try_sum<I: IntoIterator<Item = Cost>>(iter: I) -> Result<Cost, CostOverflow> {
        iter.into_iter().try_fold(Cost::ZERO, Cost::checked_add)
    }
}

impl Default for Cost {
    fn default() -> Self {
        Cost::ZERO
    }
}

impl From<u64> for Cost {
    fn from(v: u64) -> Self {
        Cost::Finite(v)
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cost::Finite(v) => write!(f, "{v}"),
            Cost::Infinite => f.write_str("inf"),
        }
    }
}

/// Panics on overflow; use [`Cost::try_sum`] where overflow is reachable.
impl Sum for Cost {
    fn sum<I: Iterator<Item = Cost>>(iter: I) -> Self {
        Cost::try_sum(iter).expect("cost overflow")
    }
}

impl Serialize for Cost {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Cost::Finite(v) => serializer.serialize_u64(*v),
            Cost::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Cost {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CostVisitor;

        impl Visitor<'_> for CostVisitor {
            type Value = Cost;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cost, E> {
                Ok(Cost::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cost, E> {
                u64::try_from(v)
                    .map(Cost::Finite)
                    .map_err(|_| E::custom(format!("negative cost {v}")))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cost, E> {
                match v {
                    "inf" => Ok(Cost::Infinite),
                    other => Err(E::custom(format!("unknown cost literal {other:?}"))),
                }
            }
        }

        deserializer.deserialize_any(CostVisitor)
    }
}
