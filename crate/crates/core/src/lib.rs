//! Evaluation of binary classifiers on imbalanced data.
//!
//! Discrimination is measured with ROC and precision-recall curves and
//! their trapezoidal areas, plus confusion metrics at an F1-optimal
//! operating point chosen on a tuning split. Calibration-sensitive
//! performance is measured with the Brier score, its per-class strata and
//! the balanced Brier score, and a PAV recalibration reference splits the
//! Brier score into calibration and refinement losses.

pub mod aggregate;
pub mod brier;
pub mod calibration;
pub mod cli;
pub mod curves;
pub mod error;
pub mod metric;
pub mod report;
pub mod store;
pub mod synth;
pub mod thresholds;

pub use error::{EvalError, Result};
pub use metric::MetricValue;
