//! Per-run evaluation and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aggregate::{
    AggregateReport, Metric, RunMetrics, Summary, TaskMetrics, ThresholdSource,
};
use crate::brier::stratified_brier;
use crate::calibration::calibration_refinement;
use crate::curves::{auc, pr_curve, roc_curve, Curve, PrEstimator};
use crate::metric::MetricValue;
use crate::store::{prevalence, RunData, TaskDataset};
use crate::thresholds::{confusion_at, point_metrics, select_threshold_max_f1, OperatingPoint};

/// Version of the JSON report layout (`schema/report.schema.json`).
pub const REPORT_SCHEMA_VERSION: &str = "1.0";

/// Metric values plus the curves they were computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskEvaluation {
    pub metrics: TaskMetrics,
    pub roc: Option<Curve>,
    pub pr: Option<Curve>,
    pub operating_point: Option<OperatingPoint>,
}

/// Evaluates one task on its test split. The operating point comes from
/// `tuning` when given, otherwise from the test split itself.
pub fn evaluate_task(
    test: &TaskDataset,
    tuning: Option<&TaskDataset>,
    estimator: PrEstimator,
) -> TaskEvaluation {
    let u = MetricValue::UNDEFINED;
    let roc = roc_curve(test).ok();
    let pr = pr_curve(test).ok();
    let auc_roc = roc.as_ref().and_then(|c| auc(c).ok()).into();
    let auc_pr = pr.as_ref().and_then(|c| estimator.area(c).ok()).into();

    let operating_point = select_threshold_max_f1(tuning.unwrap_or(test)).ok();
    let confusion = operating_point.map(|op| confusion_at(test, op.threshold));
    let point = confusion.map(|c| point_metrics(&c));

    let bundle = stratified_brier(test).ok();
    let split = calibration_refinement(test).ok();

    let metrics = TaskMetrics {
        n: test.n(),
        n_pos: test.n_pos(),
        n_neg: test.n_neg(),
        prevalence: prevalence(test).ok().into(),
        auc_roc,
        auc_pr,
        threshold: operating_point.map(|op| op.threshold).into(),
        tuning_f1: operating_point.map(|op| op.tuning_f1).into(),
        confusion,
        recall: point.map_or(u, |p| p.recall),
        specificity: point.map_or(u, |p| p.specificity),
        precision: point.map_or(u, |p| p.precision),
        f1: point.map_or(u, |p| p.f1),
        brier: bundle.map(|b| b.brier).into(),
        brier_pos: bundle.map_or(u, |b| b.brier_pos),
        brier_neg: bundle.map_or(u, |b| b.brier_neg),
        balanced_brier: bundle.map_or(u, |b| b.balanced),
        calibration_loss: split.map(|s| s.calibration_loss).into(),
        refinement_loss: split.map(|s| s.refinement_loss).into(),
    };
    TaskEvaluation {
        metrics,
        roc,
        pr,
        operating_point,
    }
}

/// Serialized operating point: `{task, threshold, tuning_f1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPointRecord {
    pub task: String,
    pub threshold: MetricValue,
    pub tuning_f1: MetricValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunEvaluation {
    pub metrics: RunMetrics,
    pub tasks: BTreeMap<String, TaskEvaluation>,
}

impl RunEvaluation {
    pub fn operating_points(&self) -> Vec<OperatingPointRecord> {
        self.metrics
            .tasks
            .iter()
            .map(|(task, m)| OperatingPointRecord {
                task: task.clone(),
                threshold: m.threshold,
                tuning_f1: m.tuning_f1,
            })
            .collect()
    }
}

/// Evaluates every task of a run; tasks are processed in parallel.
///
/// With a tuning run, a task missing from it gets no operating point and
/// its threshold metrics are undefined.
pub fn evaluate_run(
    test: &RunData,
    tuning: Option<&RunData>,
    estimator: PrEstimator,
) -> RunEvaluation {
    let names: Vec<&String> = test.tasks.keys().collect();
    let evaluated: Vec<(String, TaskEvaluation)> = names
        .par_iter()
        .map(|&name| {
            let ds = &test.tasks[name];
            let absent = TaskDataset::new(name.as_str(), vec![]);
            let tune = tuning.map(|t| t.task(name).unwrap_or(&absent));
            (name.clone(), evaluate_task(ds, tune, estimator))
        })
        .collect();
    let tasks: BTreeMap<String, TaskEvaluation> = evaluated.into_iter().collect();
    RunEvaluation {
        metrics: RunMetrics {
            run_id: test.run_id.clone(),
            pr_estimator: estimator,
            threshold_source: if tuning.is_some() {
                ThresholdSource::Tuning
            } else {
                ThresholdSource::InSample
            },
            tasks: tasks
                .iter()
                .map(|(k, v)| (k.clone(), v.metrics.clone()))
                .collect(),
        },
        tasks,
    }
}

/// One run as written to disk: metrics plus its operating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: String,
    pub run: RunMetrics,
    pub operating_points: Vec<OperatingPointRecord>,
}

impl RunReport {
    pub fn new(eval: &RunEvaluation) -> Self {
        RunReport {
            schema_version: REPORT_SCHEMA_VERSION.into(),
            run: eval.metrics.clone(),
            operating_points: eval.operating_points(),
        }
    }
}

/// The full evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: String,
    pub warnings: Vec<String>,
    pub aggregate: AggregateReport,
    pub runs: Vec<RunReport>,
}

impl ReportDocument {
    pub fn new(aggregate: AggregateReport, runs: Vec<RunReport>, warnings: Vec<String>) -> Self {
        ReportDocument {
            schema_version: REPORT_SCHEMA_VERSION.into(),
            warnings,
            aggregate,
            runs,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Columns of the Markdown table, in order.
pub const MARKDOWN_COLUMNS: [(Metric, &str); 10] = [
    (Metric::Prevalence, "Prevalence"),
    (Metric::AucRoc, "AUC-ROC"),
    (Metric::AucPr, "AUC-PR"),
    (Metric::Recall, "Recall"),
    (Metric::Specificity, "Specificity"),
    (Metric::Precision, "Precision"),
    (Metric::Brier, "Brier"),
    (Metric::BrierPos, "Brier⁺"),
    (Metric::BrierNeg, "Brier⁻"),
    (Metric::BalancedBrier, "Balanced Brier"),
];

fn cell(s: &Summary) -> String {
    match (s.mean.value(), s.std.value()) {
        (Some(m), Some(sd)) => format!("{m:.4} ± {sd:.4}"),
        _ => crate::metric::UNDEFINED.to_string(),
    }
}

/// Markdown table, one row per task, each cell `mean ± std`.
pub fn render_markdown(report: &AggregateReport) -> String {
    let mut out = String::new();
    let sources: Vec<&str> = report
        .threshold_sources
        .iter()
        .map(|s| match s {
            ThresholdSource::Tuning => "tuning set",
            ThresholdSource::InSample => "in-sample threshold",
        })
        .collect();
    let _ = writeln!(out, "# Evaluation report\n");
    let _ = writeln!(out, "- runs: {} ({})", report.n_runs, report.run_ids.join(", "));
    let _ = writeln!(out, "- AUC-PR estimator: {}", report.pr_estimator);
    let _ = writeln!(out, "- operating point: max F1 on {}", sources.join(", "));
    let _ = writeln!(out, "- mean curves: {}", report.curve_averaging);
    let _ = writeln!(out, "- cells: mean ± sample std over runs where the metric is defined\n");

    let mut header = String::from("| Task |");
    let mut rule = String::from("|---|");
    for (_, title) in MARKDOWN_COLUMNS {
        let _ = write!(header, " {title} |");
        rule.push_str("---|");
    }
    let _ = writeln!(out, "{header}\n{rule}");
    for t in &report.tasks {
        let mut row = format!("| {} |", t.task);
        for (m, _) in MARKDOWN_COLUMNS {
            let _ = write!(row, " {} |", cell(&t.summary(m)));
        }
        let _ = writeln!(out, "{row}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregate::summarize_runs;

    fn four() -> TaskDataset {
        TaskDataset::from_labels_scores("finding", &[false, false, true, true], &[0.1, 0.4, 0.35, 0.8])
            .unwrap()
    }

    #[test]
    fn four_sample_row() {
        let ds = four();
        let e = evaluate_task(&ds, Some(&ds), PrEstimator::Trapezoid);
        let m = &e.metrics;
        assert_eq!(m.auc_roc.value(), Some(0.75));
        assert!((m.auc_pr.value().unwrap() - 19.0 / 24.0).abs() < 1e-15);
        assert_eq!(m.threshold.value(), Some(0.35));
        assert_eq!(m.recall.value(), Some(1.0));
        assert_eq!(m.specificity.value(), Some(0.5));
        assert_eq!(m.precision.value(), Some(2.0 / 3.0));
        assert_eq!(m.f1.value(), Some(0.8));
    }

    #[test]
    fn single_class_task_reports_undefined_not_zero() {
        let ds = TaskDataset::from_labels_scores("x", &[false, false], &[0.1, 0.2]).unwrap();
        let m = evaluate_task(&ds, None, PrEstimator::Trapezoid).metrics;
        assert!(!m.auc_roc.is_defined());
        assert!(!m.auc_pr.is_defined());
        assert!(!m.threshold.is_defined());
        assert!(!m.precision.is_defined());
        assert!(!m.brier_pos.is_defined());
        assert!(m.brier_neg.is_defined());
    }

    #[test]
    fn tuning_run_without_task() {
        let test = RunData {
            run_id: "r".into(),
            tasks: [("finding".to_string(), four())].into(),
        };
        let tuning = RunData {
            run_id: "t".into(),
            tasks: BTreeMap::new(),
        };
        let e = evaluate_run(&test, Some(&tuning), PrEstimator::Trapezoid);
        let m = &e.metrics.tasks["finding"];
        assert!(!m.threshold.is_defined());
        assert!(!m.recall.is_defined());
        assert_eq!(m.auc_roc.value(), Some(0.75));
        assert_eq!(e.metrics.threshold_source, ThresholdSource::Tuning);
    }

    #[test]
    fn markdown_has_every_column_and_no_empty_cells() {
        let test = RunData {
            run_id: "r".into(),
            tasks: [
                ("finding".to_string(), four()),
                (
                    "empty_pos".to_string(),
                    TaskDataset::from_labels_scores("empty_pos", &[false], &[0.3]).unwrap(),
                ),
            ]
            .into(),
        };
        let e = evaluate_run(&test, None, PrEstimator::Step);
        let rep = summarize_runs(&[e.metrics]).unwrap();
        let md = render_markdown(&rep);
        assert!(md.contains("| Task | Prevalence | AUC-ROC | AUC-PR | Recall | Specificity | Precision | Brier | Brier⁺ | Brier⁻ | Balanced Brier |"));
        assert!(md.contains("AUC-PR estimator: step"));
        assert!(md.contains("in-sample threshold"));
        for line in md.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Task")) {
            assert!(!line.contains("|  |"), "empty cell in {line}");
        }
        assert!(md.contains("undefined"));
        // finding (prevalence 0.5) sorts before empty_pos (prevalence 0)
        assert!(md.find("| finding").unwrap() < md.find("| empty_pos").unwrap());
    }
}
