//! Combining results across runs (split seeds).
//!
//! Headline numbers are means of per-run metrics, never metrics of the mean
//! curve. Mean curves are vertical averages on an evenly spaced grid: ROC
//! curves are interpolated linearly in FPR, PR curves with a right-continuous
//! step in recall.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curves::{Curve, CurveKind, CurvePoint, PrEstimator};
use crate::error::{EvalError, Result};
use crate::metric::MetricValue;
use crate::thresholds::ConfusionCounts;

/// Grid intervals used for mean curves unless overridden.
pub const DEFAULT_GRID_SIZE: usize = 100;

/// Label recorded in reports for the curve averaging method.
pub const CURVE_AVERAGING: &str = "vertical: roc linear in fpr, pr right-continuous step in recall";

/// Every per-task metric a run report carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Prevalence,
    AucRoc,
    AucPr,
    Threshold,
    TuningF1,
    Recall,
    Specificity,
    Precision,
    F1,
    Brier,
    BrierPos,
    BrierNeg,
    BalancedBrier,
    CalibrationLoss,
    RefinementLoss,
}

impl Metric {
    pub const ALL: [Metric; 15] = [
        Metric::Prevalence,
        Metric::AucRoc,
        Metric::AucPr,
        Metric::Threshold,
        Metric::TuningF1,
        Metric::Recall,
        Metric::Specificity,
        Metric::Precision,
        Metric::F1,
        Metric::Brier,
        Metric::BrierPos,
        Metric::BrierNeg,
        Metric::BalancedBrier,
        Metric::CalibrationLoss,
        Metric::RefinementLoss,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Prevalence => "prevalence",
            Metric::AucRoc => "auc_roc",
            Metric::AucPr => "auc_pr",
            Metric::Threshold => "threshold",
            Metric::TuningF1 => "tuning_f1",
            Metric::Recall => "recall",
            Metric::Specificity => "specificity",
            Metric::Precision => "precision",
            Metric::F1 => "f1",
            Metric::Brier => "brier",
            Metric::BrierPos => "brier_pos",
            Metric::BrierNeg => "brier_neg",
            Metric::BalancedBrier => "balanced_brier",
            Metric::CalibrationLoss => "calibration_loss",
            Metric::RefinementLoss => "refinement_loss",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Metrics of one task in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMetrics {
    pub n: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub prevalence: MetricValue,
    pub auc_roc: MetricValue,
    pub auc_pr: MetricValue,
    pub threshold: MetricValue,
    pub tuning_f1: MetricValue,
    pub confusion: Option<ConfusionCounts>,
    pub recall: MetricValue,
    pub specificity: MetricValue,
    pub precision: MetricValue,
    pub f1: MetricValue,
    pub brier: MetricValue,
    pub brier_pos: MetricValue,
    pub brier_neg: MetricValue,
    pub balanced_brier: MetricValue,
    pub calibration_loss: MetricValue,
    pub refinement_loss: MetricValue,
}

impl TaskMetrics {
    pub fn get(&self, metric: Metric) -> MetricValue {
        match metric {
            Metric::Prevalence => self.prevalence,
            Metric::AucRoc => self.auc_roc,
            Metric::AucPr => self.auc_pr,
            Metric::Threshold => self.threshold,
            Metric::TuningF1 => self.tuning_f1,
            Metric::Recall => self.recall,
            Metric::Specificity => self.specificity,
            Metric::Precision => self.precision,
            Metric::F1 => self.f1,
            Metric::Brier => self.brier,
            Metric::BrierPos => self.brier_pos,
            Metric::BrierNeg => self.brier_neg,
            Metric::BalancedBrier => self.balanced_brier,
            Metric::CalibrationLoss => self.calibration_loss,
            Metric::RefinementLoss => self.refinement_loss,
        }
    }
}

/// Where the operating point of a run was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Tuning,
    #[serde(rename = "in-sample threshold")]
    InSample,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub run_id: String,
    pub pr_estimator: PrEstimator,
    pub threshold_source: ThresholdSource,
    pub tasks: BTreeMap<String, TaskMetrics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: MetricValue,
    pub std: MetricValue,
    pub n_runs_defined: usize,
}

impl Summary {
    /// Mean and sample standard deviation of the defined values. The values
    /// are sorted before summation, so the result does not depend on the
    /// order of runs.
    fn of(values: &mut [f64]) -> Summary {
        values.sort_by(f64::total_cmp);
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: MetricValue::UNDEFINED,
                std: MetricValue::UNDEFINED,
                n_runs_defined: 0,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n == 1 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary {
            mean: mean.into(),
            std: std.into(),
            n_runs_defined: n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task: String,
    /// Runs in which the task appears at all.
    pub n_runs: usize,
    pub metrics: BTreeMap<Metric, Summary>,
}

impl TaskSummary {
    pub fn summary(&self, metric: Metric) -> Summary {
        self.metrics[&metric]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub n_runs: usize,
    pub run_ids: Vec<String>,
    pub pr_estimator: PrEstimator,
    pub threshold_sources: Vec<ThresholdSource>,
    pub curve_averaging: String,
    /// Ordered by decreasing mean prevalence.
    pub tasks: Vec<TaskSummary>,
}

/// Summarizes per-run metrics task by task.
pub fn summarize_runs(runs: &[RunMetrics]) -> Result<AggregateReport> {
    let first = runs
        .first()
        .ok_or_else(|| EvalError::contract("cannot summarize zero runs"))?;
    if runs.iter().any(|r| r.pr_estimator != first.pr_estimator) {
        return Err(EvalError::contract("runs use different PR estimators"));
    }
    let task_names: BTreeSet<&str> = runs
        .iter()
        .flat_map(|r| r.tasks.keys().map(String::as_str))
        .collect();

    let mut tasks: Vec<TaskSummary> = task_names
        .into_iter()
        .map(|name| {
            let present: Vec<&TaskMetrics> = runs.iter().filter_map(|r| r.tasks.get(name)).collect();
            let metrics = Metric::ALL
                .iter()
                .map(|&m| {
                    let mut values: Vec<f64> =
                        present.iter().filter_map(|t| t.get(m).value()).collect();
                    (m, Summary::of(&mut values))
                })
                .collect();
            TaskSummary {
                task: name.to_string(),
                n_runs: present.len(),
                metrics,
            }
        })
        .collect();

    tasks.sort_by(|a, b| {
        let pa = a.summary(Metric::Prevalence).mean.value();
        let pb = b.summary(Metric::Prevalence).mean.value();
        match (pa, pb) {
            (Some(x), Some(y)) => y.total_cmp(&x),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        }
        .then_with(|| a.task.cmp(&b.task))
    });

    let mut run_ids: Vec<String> = runs.iter().map(|r| r.run_id.clone()).collect();
    run_ids.sort();
    let threshold_sources: BTreeSet<ThresholdSource> =
        runs.iter().map(|r| r.threshold_source).collect();

    Ok(AggregateReport {
        n_runs: runs.len(),
        run_ids,
        pr_estimator: first.pr_estimator,
        threshold_sources: threshold_sources.into_iter().collect(),
        curve_averaging: CURVE_AVERAGING.to_string(),
        tasks,
    })
}

/// TPR at `fpr`, linear between vertices. On a vertical segment the
/// highest TPR reached at that FPR is used.
fn roc_at(curve: &Curve, fpr: f64) -> f64 {
    let pts = &curve.points;
    let idx = pts.partition_point(|p| p.x <= fpr);
    let a = pts[idx.max(1) - 1];
    if idx == pts.len() || a.x == fpr {
        return a.y;
    }
    let b = pts[idx];
    a.y + (b.y - a.y) * (fpr - a.x) / (b.x - a.x)
}

/// Precision at `recall`: the best precision among the points with the
/// largest recall not exceeding `recall`.
fn pr_at(curve: &Curve, recall: f64) -> f64 {
    let mut best_recall = f64::NEG_INFINITY;
    let mut best_precision = 0.0;
    for p in &curve.points {
        if p.x > recall {
            continue;
        }
        if p.x > best_recall {
            best_recall = p.x;
            best_precision = p.y;
        } else if p.x == best_recall && p.y > best_precision {
            best_precision = p.y;
        }
    }
    best_precision
}

/// Vertical average of same-kind curves on `grid_size + 1` evenly spaced
/// x-values.
pub fn mean_curve(curves: &[Curve], grid_size: usize) -> Result<Curve> {
    let kind = curves
        .first()
        .ok_or_else(|| EvalError::contract("mean of zero curves"))?
        .kind;
    if curves.iter().any(|c| c.kind != kind) {
        return Err(EvalError::contract("cannot average ROC and PR curves together"));
    }
    if grid_size == 0 {
        return Err(EvalError::contract("grid size must be at least 1"));
    }
    for c in curves {
        c.validate()?;
    }
    let k = curves.len() as f64;
    let grid = |j: usize| j as f64 / grid_size as f64;

    let points = match kind {
        CurveKind::Roc => {
            let mut pts: Vec<CurvePoint> = (0..=grid_size)
                .map(|j| {
                    let x = grid(j);
                    let y = curves.iter().map(|c| roc_at(c, x)).sum::<f64>() / k;
                    CurvePoint::new(x, y, None)
                })
                .collect();
            if pts[0].y > 0.0 {
                pts.insert(0, CurvePoint::new(0.0, 0.0, None));
            }
            pts
        }
        CurveKind::Pr => (0..=grid_size)
            .rev()
            .map(|j| {
                let r = grid(j);
                let p = curves.iter().map(|c| pr_at(c, r)).sum::<f64>() / k;
                CurvePoint::new(r, p, None)
            })
            .collect(),
    };
    let out = Curve::new(kind, points);
    out.validate()?;
    Ok(out)
}

/// Resamples one curve onto the grid (a mean of one).
pub fn resample(curve: &Curve, grid_size: usize) -> Result<Curve> {
    mean_curve(std::slice::from_ref(curve), grid_size)
}
