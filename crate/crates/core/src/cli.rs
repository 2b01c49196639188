//! Command implementations behind the `imbalance-eval` binary.
//!
//! Each command computes everything first and then writes its output files
//! in one sequential pass, so results never depend on evaluation order.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::aggregate::{mean_curve, resample, summarize_runs, DEFAULT_GRID_SIZE};
use crate::brier::brier;
use crate::calibration::{calibration_refinement, pav_calibrate, CalibrationBlock};
use crate::curves::{auc, Curve, CurveKind, PrEstimator};
use crate::error::{EvalError, Result};
use crate::report::{evaluate_run, render_markdown, ReportDocument, RunEvaluation, RunReport};
use crate::store::{parse_predictions, read_headers, RunData, Schema};
use crate::synth::{prevalence_sweep, ScoreFamily, SweepTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    Json,
    Markdown,
    #[default]
    Both,
}

impl OutputFormat {
    fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }

    fn markdown(self) -> bool {
        matches!(self, OutputFormat::Markdown | OutputFormat::Both)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationConfig {
    /// One prediction file per run.
    pub test_files: Vec<PathBuf>,
    /// Parallel to `test_files` when present.
    pub tuning_files: Option<Vec<PathBuf>>,
    pub tasks: Option<Vec<String>>,
    pub pr_estimator: PrEstimator,
    /// Grid for resampling per-run curve exports; raw resolution when `None`.
    /// Mean curves always use a grid (this one, or the default).
    pub grid_size: Option<usize>,
    pub output: PathBuf,
    pub format: OutputFormat,
}

impl EvaluationConfig {
    pub fn new(test_files: Vec<PathBuf>, output: impl Into<PathBuf>) -> Self {
        EvaluationConfig {
            test_files,
            tuning_files: None,
            tasks: None,
            pr_estimator: PrEstimator::default(),
            grid_size: None,
            output: output.into(),
            format: OutputFormat::default(),
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone)]
pub struct Outcome<T> {
    pub value: T,
    pub written: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

pub const IN_SAMPLE_WARNING: &str =
    "no tuning files given: operating points were selected on the test split (in-sample threshold)";

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| EvalError::io(path, e))
}

fn load_run(path: &Path, run_id: &str, schema: &Schema) -> Result<RunData> {
    let text = read_text(path)?;
    parse_predictions(text.as_bytes(), run_id, schema).map_err(|e| EvalError::in_file(path, e))
}

fn infer_schema(path: &Path, tasks: Option<&[String]>) -> Result<Schema> {
    let text = read_text(path)?;
    let wrap = |e| EvalError::in_file(path, e);
    let mut schema = Schema::infer(&read_headers(text.as_bytes()).map_err(wrap)?).map_err(wrap)?;
    if let Some(tasks) = tasks {
        schema.retain_tasks(tasks).map_err(wrap)?;
    }
    Ok(schema)
}

/// File stems, made unique with `-2`, `-3`, ... suffixes.
fn run_ids(files: &[PathBuf]) -> Vec<String> {
    let mut seen = BTreeMap::<String, usize>::new();
    files
        .iter()
        .map(|f| {
            let stem = f
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            let k = seen.entry(stem.clone()).or_insert(0);
            *k += 1;
            if *k == 1 {
                stem
            } else {
                format!("{stem}-{k}")
            }
        })
        .collect()
}

fn file_safe(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn json_text<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn write_all(files: Vec<(PathBuf, String)>) -> Result<Vec<PathBuf>> {
    let mut written = Vec::with_capacity(files.len());
    for (path, contents) in files {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| EvalError::io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| EvalError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn curve_file(curve: &Curve, estimator: PrEstimator) -> String {
    let area = match curve.kind {
        CurveKind::Roc => auc(curve),
        CurveKind::Pr => estimator.area(curve),
    };
    json_text(&curve.export(area.ok().into()))
}

/// `evaluate`: thresholds from tuning, every metric on test, aggregated
/// over runs.
pub fn cmd_evaluate(config: &EvaluationConfig) -> Result<Outcome<ReportDocument>> {
    if config.test_files.is_empty() {
        return Err(EvalError::contract("at least one test file is required"));
    }
    if let Some(tuning) = &config.tuning_files {
        if tuning.len() != config.test_files.len() {
            return Err(EvalError::contract(format!(
                "{} tuning files for {} test files",
                tuning.len(),
                config.test_files.len()
            )));
        }
    }
    if config.grid_size == Some(0) {
        return Err(EvalError::contract("grid size must be at least 1"));
    }

    let ids = run_ids(&config.test_files);
    let mut loaded = Vec::with_capacity(ids.len());
    for (i, (path, id)) in config.test_files.iter().zip(&ids).enumerate() {
        let schema = infer_schema(path, config.tasks.as_deref())?;
        let test = load_run(path, id, &schema)?;
        let tuning = match &config.tuning_files {
            Some(files) => Some(load_run(&files[i], &format!("{id}-tuning"), &schema)?),
            None => None,
        };
        loaded.push((test, tuning));
    }

    let evaluations: Vec<RunEvaluation> = loaded
        .par_iter()
        .map(|(test, tuning)| evaluate_run(test, tuning.as_ref(), config.pr_estimator))
        .collect();

    let mut warnings = Vec::new();
    if config.tuning_files.is_none() {
        warnings.push(IN_SAMPLE_WARNING.to_string());
    }
    let run_metrics: Vec<_> = evaluations.iter().map(|e| e.metrics.clone()).collect();
    let aggregate = summarize_runs(&run_metrics)?;
    let run_reports: Vec<RunReport> = evaluations.iter().map(RunReport::new).collect();
    let document = ReportDocument::new(aggregate, run_reports.clone(), warnings.clone());

    let out = &config.output;
    let mut files = Vec::new();
    if config.format.json() {
        files.push((out.join("report.json"), document.to_json()));
    }
    if config.format.markdown() {
        files.push((out.join("report.md"), render_markdown(&document.aggregate)));
    }
    for report in &run_reports {
        files.push((
            out.join("runs").join(format!("{}.json", file_safe(&report.run.run_id))),
            json_text(report),
        ));
    }

    let mut per_task: BTreeMap<&str, (Vec<Curve>, Vec<Curve>)> = BTreeMap::new();
    for eval in &evaluations {
        let run_dir = out.join("curves").join(file_safe(&eval.metrics.run_id));
        for (task, te) in &eval.tasks {
            let entry = per_task.entry(task.as_str()).or_default();
            for (curve, bucket) in [(&te.roc, &mut entry.0), (&te.pr, &mut entry.1)] {
                let Some(curve) = curve else { continue };
                bucket.push(curve.clone());
                let exported = match config.grid_size {
                    Some(g) => resample(curve, g)?,
                    None => curve.clone(),
                };
                files.push((
                    run_dir.join(format!("{}.{}.json", file_safe(task), curve.kind)),
                    curve_file(&exported, config.pr_estimator),
                ));
            }
        }
    }
    let grid = config.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    let mean_dir = out.join("curves").join("mean");
    for (task, (rocs, prs)) in &per_task {
        for curves in [rocs, prs] {
            if curves.is_empty() {
                continue;
            }
            let mean = mean_curve(curves, grid)?;
            files.push((
                mean_dir.join(format!("{}.{}.json", file_safe(task), mean.kind)),
                curve_file(&mean, config.pr_estimator),
            ));
        }
    }

    Ok(Outcome {
        value: document,
        written: write_all(files)?,
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub family: ScoreFamily,
    pub prevalences: Vec<f64>,
    pub n: usize,
    pub seed: u64,
    pub pr_estimator: PrEstimator,
    /// Worker threads; the global rayon pool when `None`.
    pub threads: Option<usize>,
    pub output: PathBuf,
}

/// `sweep`: writes `sweep.csv` and `sweep.json` into the output directory.
pub fn cmd_sweep(config: &SweepConfig) -> Result<Outcome<SweepTable>> {
    let run = || {
        prevalence_sweep(
            config.family,
            &config.prevalences,
            config.n,
            config.seed,
            config.pr_estimator,
        )
    };
    let table = match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| EvalError::contract(format!("cannot build thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let files = vec![
        (config.output.join("sweep.csv"), table.to_csv()),
        (config.output.join("sweep.json"), json_text(&table)),
    ];
    Ok(Outcome {
        value: table,
        written: write_all(files)?,
        warnings: vec![],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrateConfig {
    pub input: PathBuf,
    pub task: String,
    /// Printed by the caller when `None`.
    pub output: Option<PathBuf>,
}

/// The `calibrate` output document.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationReport {
    pub task: String,
    pub n: usize,
    pub n_pos: usize,
    pub n_neg: usize,
    pub brier: f64,
    pub calibration_loss: f64,
    pub refinement_loss: f64,
    pub blocks: Vec<CalibrationBlock>,
}

impl CalibrationReport {
    pub fn to_json(&self) -> String {
        json_text(self)
    }
}

/// `calibrate`: the in-sample PAV map of one task.
pub fn cmd_calibrate(config: &CalibrateConfig) -> Result<Outcome<CalibrationReport>> {
    let schema = infer_schema(&config.input, Some(std::slice::from_ref(&config.task)))?;
    let run = load_run(&config.input, "calibrate", &schema)?;
    let ds = &run.tasks[&config.task];
    let wrap = |e| EvalError::in_file(&config.input, e);
    let map = pav_calibrate(ds).map_err(wrap)?;
    let split = calibration_refinement(ds).map_err(wrap)?;
    let report = CalibrationReport {
        task: config.task.clone(),
        n: ds.n(),
        n_pos: ds.n_pos(),
        n_neg: ds.n_neg(),
        brier: brier(ds).map_err(wrap)?,
        calibration_loss: split.calibration_loss,
        refinement_loss: split.refinement_loss,
        blocks: map.blocks,
    };
    let written = match &config.output {
        Some(path) => write_all(vec![(path.clone(), report.to_json())])?,
        None => vec![],
    };
    Ok(Outcome {
        value: report,
        written,
        warnings: vec![],
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateConfig {
    /// Per-run JSON files written by `evaluate` (`runs/<id>.json`).
    pub run_files: Vec<PathBuf>,
    pub output: PathBuf,
    pub format: OutputFormat,
}

/// `aggregate`: merges previously emitted per-run reports.
pub fn cmd_aggregate(config: &AggregateConfig) -> Result<Outcome<ReportDocument>> {
    let mut reports: Vec<RunReport> = Vec::with_capacity(config.run_files.len());
    for path in &config.run_files {
        let text = read_text(path)?;
        let report: RunReport = serde_json::from_str(&text).map_err(|source| EvalError::Json {
            path: path.clone(),
            source,
        })?;
        reports.push(report);
    }
    let ids: BTreeSet<&str> = reports.iter().map(|r| r.run.run_id.as_str()).collect();
    if ids.len() != reports.len() {
        return Err(EvalError::contract("duplicate run ids among the merged reports"));
    }
    reports.sort_by(|a, b| a.run.run_id.cmp(&b.run.run_id));

    let metrics: Vec<_> = reports.iter().map(|r| r.run.clone()).collect();
    let aggregate = summarize_runs(&metrics)?;
    let warnings = if aggregate
        .threshold_sources
        .contains(&crate::aggregate::ThresholdSource::InSample)
    {
        vec![IN_SAMPLE_WARNING.to_string()]
    } else {
        vec![]
    };
    let document = ReportDocument::new(aggregate, reports, warnings.clone());
    let mut files = Vec::new();
    if config.format.json() {
        files.push((config.output.join("report.json"), document.to_json()));
    }
    if config.format.markdown() {
        files.push((config.output.join("report.md"), render_markdown(&document.aggregate)));
    }
    Ok(Outcome {
        value: document,
        written: write_all(files)?,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_ids_are_unique() {
        let files: Vec<PathBuf> = ["a/split.csv", "b/split.csv", "c/other.csv"]
            .iter()
            .map(PathBuf::from)
            .collect();
        assert_eq!(run_ids(&files), ["split", "split-2", "other"]);
    }

    #[test]
    fn unsafe_names_are_replaced() {
        assert_eq!(file_safe("pleural/effusion x"), "pleural_effusion_x");
    }

    #[test]
    fn tuning_length_mismatch() {
        let mut cfg = EvaluationConfig::new(vec!["a.csv".into()], "/tmp/out");
        cfg.tuning_files = Some(vec![]);
        assert!(matches!(cmd_evaluate(&cfg), Err(EvalError::Contract(_))));
    }
}
