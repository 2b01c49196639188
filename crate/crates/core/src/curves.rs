//! ROC and precision-recall curves and their areas.
//!
//! A sample is predicted positive at threshold `t` iff `score >= t`. Equal
//! scores share one threshold, so each distinct score contributes exactly
//! one curve point. With pooled ties the trapezoidal ROC area equals the
//! Mann-Whitney statistic with half credit for tied pairs.
//!
//! The PR curve follows the common tooling convention: thresholds below the
//! first one reaching full recall are dropped, and a synthetic terminal
//! point `(recall 0, precision 1)` closes the curve.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};
use crate::metric::MetricValue;
use crate::store::TaskDataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Roc,
    Pr,
}

impl fmt::Display for CurveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CurveKind::Roc => "roc",
            CurveKind::Pr => "pr",
        })
    }
}

/// One curve vertex. For ROC `x` is the false-positive rate and `y` the
/// true-positive rate; for PR `x` is recall and `y` precision. `threshold`
/// is `None` for synthetic endpoints and averaged curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    pub threshold: Option<f64>,
}

impl CurvePoint {
    pub fn new(x: f64, y: f64, threshold: Option<f64>) -> Self {
        CurvePoint { x, y, threshold }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub kind: CurveKind,
    pub points: Vec<CurvePoint>,
}

impl Curve {
    pub fn new(kind: CurveKind, points: Vec<CurvePoint>) -> Self {
        Curve { kind, points }
    }

    /// `(x, y)` pairs without thresholds.
    pub fn xy(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    /// Checks the ordering invariant of the curve's kind.
    ///
    /// ROC: x and y non-decreasing, starting at `(0,0)` and ending at `(1,1)`.
    /// PR: recall non-increasing, ending at the terminal point `(0,1)`.
    pub fn validate(&self) -> Result<()> {
        if self.points.len() < 2 {
            return Err(EvalError::contract(format!(
                "{} curve needs at least 2 points, got {}",
                self.kind,
                self.points.len()
            )));
        }
        for p in &self.points {
            let inside = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
            if !inside(p.x) || !inside(p.y) {
                return Err(EvalError::contract(format!(
                    "{} point ({}, {}) lies outside the unit square",
                    self.kind, p.x, p.y
                )));
            }
        }
        let first = self.points[0];
        let last = self.points[self.points.len() - 1];
        match self.kind {
            CurveKind::Roc => {
                for w in self.points.windows(2) {
                    if w[1].x < w[0].x || w[1].y < w[0].y {
                        return Err(EvalError::contract(
                            "roc points must be non-decreasing in both coordinates",
                        ));
                    }
                }
                if (first.x, first.y) != (0.0, 0.0) || (last.x, last.y) != (1.0, 1.0) {
                    return Err(EvalError::contract("roc curve must run from (0,0) to (1,1)"));
                }
            }
            CurveKind::Pr => {
                if self.points.windows(2).any(|w| w[1].x > w[0].x) {
                    return Err(EvalError::contract("pr points must have non-increasing recall"));
                }
                if (last.x, last.y) != (0.0, 1.0) {
                    return Err(EvalError::contract(
                        "pr curve must end at the terminal point (0,1)",
                    ));
                }
            }
        }
        Ok(())
    }

    /// JSON-ready form carrying the area next to the points.
    pub fn export(&self, auc: MetricValue) -> CurveExport {
        CurveExport {
            kind: self.kind,
            auc,
            points: self.points.clone(),
        }
    }
}

/// Serialized curve: `{kind, auc, points: [{x, y, threshold}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveExport {
    pub kind: CurveKind,
    pub auc: MetricValue,
    pub points: Vec<CurvePoint>,
}

/// Cumulative counts after admitting every sample scored `>= threshold`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SweepStep {
    pub threshold: f64,
    pub tp: u64,
    pub fp: u64,
}

/// Walks the distinct scores from highest to lowest, pooling ties.
pub(crate) fn threshold_sweep(labels: &[bool], scores: &[f64]) -> Vec<SweepStep> {
    debug_assert_eq!(labels.len(), scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut steps: Vec<SweepStep> = Vec::new();
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]].total_cmp(&threshold) == Ordering::Equal {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        steps.push(SweepStep { threshold, tp, fp });
    }
    steps
}

fn class_counts(labels: &[bool]) -> (u64, u64) {
    let pos = labels.iter().filter(|&&l| l).count() as u64;
    (pos, labels.len() as u64 - pos)
}

fn check_raw_input(labels: &[bool], scores: &[f64]) -> Result<()> {
    if labels.len() != scores.len() {
        return Err(EvalError::contract(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(EvalError::contract(format!("non-finite score {s}")));
    }
    Ok(())
}

fn split(ds: &TaskDataset) -> (Vec<bool>, Vec<f64>) {
    (ds.labels().collect(), ds.scores().collect())
}

/// ROC curve of a task dataset.
pub fn roc_curve(ds: &TaskDataset) -> Result<Curve> {
    let (labels, scores) = split(ds);
    roc_curve_from_scores(&labels, &scores)
}

/// ROC curve from arbitrary finite real scores (not restricted to `[0,1]`).
pub fn roc_curve_from_scores(labels: &[bool], scores: &[f64]) -> Result<Curve> {
    check_raw_input(labels, scores)?;
    let (n_pos, n_neg) = class_counts(labels);
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::undefined("ROC undefined without both classes"));
    }
    let mut points = vec![CurvePoint::new(0.0, 0.0, None)];
    for step in threshold_sweep(labels, scores) {
        let x = step.fp as f64 / n_neg as f64;
        let y = step.tp as f64 / n_pos as f64;
        points.push(CurvePoint::new(x, y, Some(step.threshold)));
    }
    let last = points[points.len() - 1];
    if (last.x, last.y) != (1.0, 1.0) {
        points.push(CurvePoint::new(1.0, 1.0, None));
    }
    Ok(Curve::new(CurveKind::Roc, points))
}

/// Precision-recall curve of a task dataset.
pub fn pr_curve(ds: &TaskDataset) -> Result<Curve> {
    let (labels, scores) = split(ds);
    pr_curve_from_scores(&labels, &scores)
}

/// Precision-recall curve from arbitrary finite real scores.
pub fn pr_curve_from_scores(labels: &[bool], scores: &[f64]) -> Result<Curve> {
    check_raw_input(labels, scores)?;
    let (n_pos, _) = class_counts(labels);
    if n_pos == 0 {
        return Err(EvalError::undefined("PR curve undefined without positives"));
    }
    let mut points = Vec::new();
    for step in threshold_sweep(labels, scores) {
        let recall = step.tp as f64 / n_pos as f64;
        let precision = step.tp as f64 / (step.tp + step.fp) as f64;
        points.push(CurvePoint::new(recall, precision, Some(step.threshold)));
        if step.tp == n_pos {
            break;
        }
    }
    points.reverse();
    points.push(CurvePoint::new(0.0, 1.0, None));
    Ok(Curve::new(CurveKind::Pr, points))
}

/// Trapezoidal area under a curve (precision integrated over recall for PR).
pub fn auc(curve: &Curve) -> Result<f64> {
    curve.validate()?;
    let area: f64 = curve
        .points
        .windows(2)
        .map(|w| (w[1].x - w[0].x).abs() * (w[0].y + w[1].y) / 2.0)
        .sum();
    Ok(area.clamp(0.0, 1.0))
}

/// Average-precision style step integral of the PR curve:
/// `sum_k (recall_k - recall_{k+1}) * precision_k`.
pub fn auc_pr_step(ds: &TaskDataset) -> Result<f64> {
    step_area(&pr_curve(ds)?)
}

fn step_area(curve: &Curve) -> Result<f64> {
    curve.validate()?;
    let area: f64 = curve
        .points
        .windows(2)
        .map(|w| (w[0].x - w[1].x) * w[0].y)
        .sum();
    Ok(area.clamp(0.0, 1.0))
}

/// How the area under the PR curve is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrEstimator {
    #[default]
    Trapezoid,
    Step,
}

impl PrEstimator {
    pub fn as_str(self) -> &'static str {
        match self {
            PrEstimator::Trapezoid => "trapezoid",
            PrEstimator::Step => "step",
        }
    }

    /// Area under an already built PR curve.
    pub fn area(self, curve: &Curve) -> Result<f64> {
        if curve.kind != CurveKind::Pr {
            return Err(EvalError::contract("PR estimator applied to a non-PR curve"));
        }
        match self {
            PrEstimator::Trapezoid => auc(curve),
            PrEstimator::Step => step_area(curve),
        }
    }
}

impl fmt::Display for PrEstimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PrEstimator {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "trapezoid" => Ok(PrEstimator::Trapezoid),
            "step" => Ok(PrEstimator::Step),
            other => Err(EvalError::contract(format!("unknown PR estimator `{other}`"))),
        }
    }
}

/// AUC-PR of a dataset under the chosen estimator.
pub fn auc_pr(ds: &TaskDataset, estimator: PrEstimator) -> Result<f64> {
    estimator.area(&pr_curve(ds)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(labels: &[u8], scores: &[f64]) -> TaskDataset {
        let labels: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        TaskDataset::from_labels_scores("t", &labels, scores).unwrap()
    }

    fn four() -> TaskDataset {
        ds(&[0, 0, 1, 1], &[0.1, 0.4, 0.35, 0.8])
    }

    #[test]
    fn roc_points_separated() {
        let c = roc_curve(&ds(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1])).unwrap();
        assert_eq!(
            c.xy(),
            vec![(0.0, 0.0), (0.0, 0.5), (0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]
        );
        assert_eq!(auc(&c).unwrap(), 1.0);
    }

    #[test]
    fn roc_constant_scores() {
        let c = roc_curve(&ds(&[1, 0, 0, 1, 0], &[0.3; 5])).unwrap();
        assert_eq!(c.xy(), vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(auc(&c).unwrap(), 0.5);
    }

    #[test]
    fn roc_four_sample() {
        let c = roc_curve(&four()).unwrap();
        assert!(c
            .points
            .iter()
            .any(|p| p.x == 0.5 && p.y == 0.5 && p.threshold == Some(0.4)));
        assert_eq!(auc(&c).unwrap(), 0.75);
    }

    #[test]
    fn roc_needs_both_classes() {
        let e = roc_curve(&ds(&[1, 1], &[0.2, 0.3])).unwrap_err();
        assert!(matches!(e, EvalError::UndefinedMetric(_)));
        assert!(roc_curve(&ds(&[0, 0], &[0.2, 0.3])).is_err());
    }

    #[test]
    fn pr_four_sample() {
        let c = pr_curve(&four()).unwrap();
        assert_eq!(
            c.xy(),
            vec![(1.0, 2.0 / 3.0), (0.5, 0.5), (0.5, 1.0), (0.0, 1.0)]
        );
        assert_eq!(c.points.last().unwrap().threshold, None);
        // 7/24 + 0 + 1/2
        assert!((auc(&c).unwrap() - 19.0 / 24.0).abs() < 1e-15);
        assert!((auc_pr_step(&four()).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn pr_perfect_and_constant() {
        let perfect = ds(&[1, 1, 0, 0], &[0.9, 0.8, 0.2, 0.1]);
        let c = pr_curve(&perfect).unwrap();
        assert!(c.xy().contains(&(1.0, 1.0)));
        assert_eq!(auc(&c).unwrap(), 1.0);
        assert_eq!(auc_pr_step(&perfect).unwrap(), 1.0);

        let constant = ds(&[1, 0, 0, 0], &[0.6; 4]);
        let c = pr_curve(&constant).unwrap();
        assert_eq!(c.xy(), vec![(1.0, 0.25), (0.0, 1.0)]);
        assert_eq!(auc_pr_step(&constant).unwrap(), 0.25);
    }

    #[test]
    fn pr_needs_positives() {
        let e = pr_curve(&ds(&[0, 0], &[0.2, 0.3])).unwrap_err();
        assert!(matches!(e, EvalError::UndefinedMetric(_)));
        assert!(auc_pr_step(&ds(&[0], &[0.2])).is_err());
    }

    #[test]
    fn auc_rejects_bad_ordering() {
        let bad = Curve::new(
            CurveKind::Roc,
            vec![
                CurvePoint::new(0.0, 0.0, None),
                CurvePoint::new(0.6, 0.5, None),
                CurvePoint::new(0.4, 0.7, None),
                CurvePoint::new(1.0, 1.0, None),
            ],
        );
        assert!(matches!(auc(&bad), Err(EvalError::Contract(_))));

        let bad_pr = Curve::new(
            CurveKind::Pr,
            vec![
                CurvePoint::new(0.5, 0.5, None),
                CurvePoint::new(1.0, 0.5, None),
                CurvePoint::new(0.0, 1.0, None),
            ],
        );
        assert!(auc(&bad_pr).is_err());

        let short = Curve::new(CurveKind::Roc, vec![CurvePoint::new(0.0, 0.0, None)]);
        assert!(auc(&short).is_err());
    }

    #[test]
    fn raw_scores_accepted_outside_unit_interval() {
        let c = roc_curve_from_scores(&[true, false, true], &[2.5, -1.0, 0.3]).unwrap();
        assert_eq!(auc(&c).unwrap(), 1.0);
        assert!(roc_curve_from_scores(&[true, false], &[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn estimator_parsing() {
        assert_eq!("step".parse::<PrEstimator>().unwrap(), PrEstimator::Step);
        assert!("spline".parse::<PrEstimator>().is_err());
        let roc = roc_curve(&four()).unwrap();
        assert!(PrEstimator::Trapezoid.area(&roc).is_err());
    }
}
