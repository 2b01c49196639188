//! A metric value that is either a finite number or explicitly undefined.
//!
//! Serialized as a JSON number, or as the string `"undefined"` when the
//! metric has no value (for example precision when nothing was predicted
//! positive). Missing values are never encoded as `0`.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Token written wherever a metric has no defined value.
pub const UNDEFINED: &str = "undefined";

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MetricValue(Option<f64>);

impl MetricValue {
    pub const UNDEFINED: MetricValue = MetricValue(None);

    pub fn defined(v: f64) -> Self {
        MetricValue(Some(v))
    }

    /// `numerator / denominator`, undefined when the denominator is zero.
    pub fn ratio(numerator: u64, denominator: u64) -> Self {
        if denominator == 0 {
            MetricValue(None)
        } else {
            MetricValue(Some(numerator as f64 / denominator as f64))
        }
    }

    pub fn value(self) -> Option<f64> {
        self.0
    }

    pub fn is_defined(self) -> bool {
        self.0.is_some()
    }

    /// Formats with a fixed number of decimals, or the undefined token.
    pub fn format_fixed(self, decimals: usize) -> String {
        match self.0 {
            Some(v) => format!("{v:.decimals$}"),
            None => UNDEFINED.to_string(),
        }
    }
}

impl From<Option<f64>> for MetricValue {
    fn from(v: Option<f64>) -> Self {
        MetricValue(v)
    }
}

impl From<f64> for MetricValue {
    fn from(v: f64) -> Self {
        MetricValue(Some(v))
    }
}

impl fmt::Display for MetricValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str(UNDEFINED),
        }
    }
}

impl Serialize for MetricValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self.0 {
            Some(v) if v.is_finite() => serializer.serialize_f64(v),
            _ => serializer.serialize_str(UNDEFINED),
        }
    }
}

impl<'de> Deserialize<'de> for MetricValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MetricVisitor;

        impl Visitor<'_> for MetricVisitor {
            type Value = MetricValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "a number or the string \"{UNDEFINED}\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<MetricValue, E> {
                Ok(MetricValue(Some(v)))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<MetricValue, E> {
                Ok(MetricValue(Some(v as f64)))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<MetricValue, E> {
                Ok(MetricValue(Some(v as f64)))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<MetricValue, E> {
                if v == UNDEFINED {
                    Ok(MetricValue(None))
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }

        deserializer.deserialize_any(MetricVisitor)
    }
}
