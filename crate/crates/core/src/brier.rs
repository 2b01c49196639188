//! Brier score and its class-stratified variants.
//!
//! `brier_pos` averages the squared error over positives only and
//! `brier_neg` over negatives only; their sum is the balanced Brier score,
//! which weighs both classes equally regardless of prevalence.

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metric::MetricValue;
use crate::store::TaskDataset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrierBundle {
    pub brier: f64,
    pub brier_pos: MetricValue,
    pub brier_neg: MetricValue,
    pub balanced: MetricValue,
}

fn require_samples(ds: &TaskDataset) -> Result<()> {
    if ds.is_empty() {
        Err(EvalError::undefined(format!(
            "Brier score of empty task `{}`",
            ds.task_name()
        )))
    } else {
        Ok(())
    }
}

/// Mean squared difference between the 0/1 label and the score.
pub fn brier(ds: &TaskDataset) -> Result<f64> {
    require_samples(ds)?;
    let sse: f64 = ds
        .samples()
        .iter()
        .map(|s| (s.target() - s.score()).powi(2))
        .sum();
    Ok(sse / ds.n() as f64)
}

pub fn stratified_brier(ds: &TaskDataset) -> Result<BrierBundle> {
    require_samples(ds)?;
    let (mut sse_pos, mut sse_neg) = (0.0, 0.0);
    for s in ds.samples() {
        let e = (s.target() - s.score()).powi(2);
        if s.is_positive() {
            sse_pos += e;
        } else {
            sse_neg += e;
        }
    }
    let stratum = |sse: f64, n: usize| {
        if n == 0 {
            MetricValue::UNDEFINED
        } else {
            MetricValue::defined(sse / n as f64)
        }
    };
    let brier_pos = stratum(sse_pos, ds.n_pos());
    let brier_neg = stratum(sse_neg, ds.n_neg());
    let balanced = match (brier_pos.value(), brier_neg.value()) {
        (Some(p), Some(n)) => MetricValue::defined(p + n),
        _ => MetricValue::UNDEFINED,
    };
    Ok(BrierBundle {
        brier: (sse_pos + sse_neg) / ds.n() as f64,
        brier_pos,
        brier_neg,
        balanced,
    })
}
