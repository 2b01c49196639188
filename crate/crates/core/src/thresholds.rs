//! Operating-point selection and confusion-matrix metrics.
//!
//! Candidates are the distinct observed scores plus a "predict none"
//! sentinel above every score. F1 only changes at observed scores, so this
//! scan is exact. F1 values are compared as exact rationals
//! `2tp / (2tp + fp + fn)`; among equal maxima the largest threshold wins.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::curves::threshold_sweep;
use crate::error::{EvalError, Result};
use crate::metric::MetricValue;
use crate::store::TaskDataset;

/// Threshold meaning "predict no sample positive".
pub const PREDICT_NONE: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    /// F1 as the exact fraction `(2tp, 2tp + fp + fn)`.
    fn f1_fraction(&self) -> (u64, u64) {
        (2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub tuning_f1: f64,
}

/// Recall, specificity, precision and F1 for one confusion matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMetrics {
    pub recall: MetricValue,
    pub specificity: MetricValue,
    pub precision: MetricValue,
    pub f1: MetricValue,
}

fn cmp_fraction((a, b): (u64, u64), (c, d): (u64, u64)) -> Ordering {
    (a as u128 * d as u128).cmp(&(c as u128 * b as u128))
}

fn fraction_value((num, den): (u64, u64)) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Picks the threshold maximizing F1 on a tuning set.
pub fn select_threshold_max_f1(tuning: &TaskDataset) -> Result<OperatingPoint> {
    let n_pos = tuning.n_pos() as u64;
    let n_neg = tuning.n_neg() as u64;
    if n_pos == 0 {
        return Err(EvalError::undefined(format!(
            "F1 undefined without positives in task `{}`",
            tuning.task_name()
        )));
    }
    let labels: Vec<bool> = tuning.labels().collect();
    let scores: Vec<f64> = tuning.scores().collect();

    // Predict-none is the largest candidate, so it starts as the incumbent
    // and every later candidate must strictly beat it.
    let mut best_threshold = PREDICT_NONE;
    let mut best = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: n_neg,
        fn_: n_pos,
    }
    .f1_fraction();
    for step in threshold_sweep(&labels, &scores) {
        let counts = ConfusionCounts {
            tp: step.tp,
            fp: step.fp,
            tn: n_neg - step.fp,
            fn_: n_pos - step.tp,
        };
        let f1 = counts.f1_fraction();
        if cmp_fraction(f1, best) == Ordering::Greater {
            best = f1;
            best_threshold = step.threshold;
        }
    }
    Ok(OperatingPoint {
        threshold: best_threshold,
        tuning_f1: fraction_value(best),
    })
}

/// Confusion counts with "positive iff score >= threshold".
pub fn confusion_at(ds: &TaskDataset, threshold: f64) -> ConfusionCounts {
    let mut c = ConfusionCounts::default();
    for s in ds.samples() {
        match (s.is_positive(), s.score() >= threshold) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

/// Derived point metrics; zero denominators give undefined values.
///
/// F1 is `2tp / (2tp + fp + fn)`, which equals the harmonic mean of
/// precision and recall whenever both exist and is 0 when `tp = 0` but
/// something was predicted or something was positive.
pub fn point_metrics(c: &ConfusionCounts) -> PointMetrics {
    let (num, den) = c.f1_fraction();
    PointMetrics {
        recall: MetricValue::ratio(c.tp, c.tp + c.fn_),
        specificity: MetricValue::ratio(c.tn, c.tn + c.fp),
        precision: MetricValue::ratio(c.tp, c.tp + c.fp),
        f1: MetricValue::ratio(num, den),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(labels: &[u8], scores: &[f64]) -> TaskDataset {
        let labels: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        TaskDataset::from_labels_scores("t", &labels, scores).unwrap()
    }

    #[test]
    fn perfect_separation_picks_smallest_positive_score() {
        let op = select_threshold_max_f1(&ds(&[1, 0, 1, 0], &[0.7, 0.3, 0.9, 0.1])).unwrap();
        assert_eq!(op.threshold, 0.7);
        assert_eq!(op.tuning_f1, 1.0);
    }

    #[test]
    fn four_sample_threshold() {
        let op = select_threshold_max_f1(&ds(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8])).unwrap();
        assert_eq!(op.threshold, 0.35);
        assert_eq!(op.tuning_f1, 0.8);
    }

    #[test]
    fn constant_scores_predict_all() {
        let op = select_threshold_max_f1(&ds(&[1, 0, 1, 0], &[0.4; 4])).unwrap();
        assert_eq!(op.threshold, 0.4);
        assert_eq!(op.tuning_f1, 2.0 / 3.0);
    }

    #[test]
    fn tie_break_prefers_largest_threshold() {
        // t=0.9: tp1 fp0 fn1 -> 2/3; t=0.5: tp2 fp2 fn0 -> 4/6 = 2/3.
        let op = select_threshold_max_f1(&ds(&[1, 0, 0, 1], &[0.9, 0.8, 0.7, 0.5])).unwrap();
        assert_eq!(op.threshold, 0.9);
    }

    #[test]
    fn no_positives_is_undefined() {
        let e = select_threshold_max_f1(&ds(&[0, 0], &[0.1, 0.2])).unwrap_err();
        assert!(matches!(e, EvalError::UndefinedMetric(_)));
    }

    #[test]
    fn confusion_counts() {
        let d = ds(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8]);
        assert_eq!(
            confusion_at(&d, 0.35),
            ConfusionCounts { tp: 2, fp: 1, tn: 1, fn_: 0 }
        );
        assert_eq!(
            confusion_at(&d, 0.95),
            ConfusionCounts { tp: 0, fp: 0, tn: 2, fn_: 2 }
        );
        assert_eq!(
            confusion_at(&d, 0.0),
            ConfusionCounts { tp: 2, fp: 2, tn: 0, fn_: 0 }
        );
        assert_eq!(confusion_at(&d, PREDICT_NONE).tp, 0);
    }

    #[test]
    fn metrics_from_counts() {
        let m = point_metrics(&ConfusionCounts { tp: 2, fp: 1, tn: 1, fn_: 0 });
        assert_eq!(m.recall.value(), Some(1.0));
        assert_eq!(m.specificity.value(), Some(0.5));
        assert_eq!(m.precision.value(), Some(2.0 / 3.0));
        assert_eq!(m.f1.value(), Some(0.8));

        let none = point_metrics(&ConfusionCounts { tp: 0, fp: 0, tn: 5, fn_: 3 });
        assert_eq!(none.precision, MetricValue::UNDEFINED);
        assert_eq!(none.recall.value(), Some(0.0));
        assert_eq!(none.specificity.value(), Some(1.0));
        assert_eq!(none.f1.value(), Some(0.0));

        let perfect = point_metrics(&ConfusionCounts { tp: 3, fp: 0, tn: 4, fn_: 0 });
        for v in [perfect.recall, perfect.specificity, perfect.precision, perfect.f1] {
            assert_eq!(v.value(), Some(1.0));
        }

        let empty = point_metrics(&ConfusionCounts::default());
        assert!(!empty.f1.is_defined());
    }

    #[test]
    fn counts_serialize_with_fn_key() {
        let s = serde_json::to_string(&ConfusionCounts { tp: 1, fp: 2, tn: 3, fn_: 4 }).unwrap();
        assert_eq!(s, r#"{"tp":1,"fp":2,"tn":3,"fn":4}"#);
    }
}
