//! Prediction ingestion: per-task binary datasets built from a CSV table.
//!
//! The canonical table has a header `id,<task>_label,<task>_score,...`.
//! Label cells use `1` (positive), `0` (negative), `-1` (uncertain) and the
//! empty string (missing). Uncertain and missing rows are dropped from that
//! task only; the same row still feeds every other task whose label is usable.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Ground-truth state of one sample for one task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Positive,
    Negative,
    Uncertain,
    Missing,
}

/// One usable (label, score) pair. The label is always `Positive` or
/// `Negative` and the score is a finite probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledScore {
    label: Label,
    score: f64,
}

impl LabeledScore {
    pub fn new(label: Label, score: f64) -> Result<Self> {
        if !matches!(label, Label::Positive | Label::Negative) {
            return Err(EvalError::contract(format!(
                "{label:?} samples cannot enter a task dataset"
            )));
        }
        check_probability(score)?;
        Ok(LabeledScore { label, score })
    }

    pub fn positive(score: f64) -> Result<Self> {
        Self::new(Label::Positive, score)
    }

    pub fn negative(score: f64) -> Result<Self> {
        Self::new(Label::Negative, score)
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn is_positive(&self) -> bool {
        self.label == Label::Positive
    }

    pub fn score(&self) -> f64 {
        self.score
    }

    /// The label as a 0/1 target.
    pub fn target(&self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            0.0
        }
    }
}

fn check_probability(score: f64) -> Result<()> {
    if score.is_finite() && (0.0..=1.0).contains(&score) {
        Ok(())
    } else {
        Err(EvalError::contract(format!(
            "score {score} is not a probability in [0, 1]"
        )))
    }
}

/// All usable samples of one binary task, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskDataset {
    task_name: String,
    samples: Vec<LabeledScore>,
    n_pos: usize,
    n_neg: usize,
}

impl TaskDataset {
    pub fn new(task_name: impl Into<String>, samples: Vec<LabeledScore>) -> Self {
        let n_pos = samples.iter().filter(|s| s.is_positive()).count();
        let n_neg = samples.len() - n_pos;
        TaskDataset {
            task_name: task_name.into(),
            samples,
            n_pos,
            n_neg,
        }
    }

    /// Builds a dataset from parallel label and score slices.
    pub fn from_labels_scores(
        task_name: impl Into<String>,
        labels: &[bool],
        scores: &[f64],
    ) -> Result<Self> {
        if labels.len() != scores.len() {
            return Err(EvalError::contract(format!(
                "{} labels but {} scores",
                labels.len(),
                scores.len()
            )));
        }
        let samples = labels
            .iter()
            .zip(scores)
            .map(|(&pos, &s)| {
                LabeledScore::new(if pos { Label::Positive } else { Label::Negative }, s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(task_name, samples))
    }

    pub fn task_name(&self) -> &str {
        &self.task_name
    }

    pub fn samples(&self) -> &[LabeledScore] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn n_pos(&self) -> usize {
        self.n_pos
    }

    pub fn n_neg(&self) -> usize {
        self.n_neg
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn scores(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.score)
    }

    pub fn labels(&self) -> impl Iterator<Item = bool> + '_ {
        self.samples.iter().map(|s| s.is_positive())
    }

    /// Same labels, scores replaced by `f(score)`. Fails if a mapped score
    /// leaves `[0, 1]`.
    pub fn map_scores(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let samples = self
            .samples
            .iter()
            .map(|s| LabeledScore::new(s.label, f(s.score)))
            .collect::<Result<Vec<_>>>()?;
        Ok(TaskDataset {
            task_name: self.task_name.clone(),
            samples,
            n_pos: self.n_pos,
            n_neg: self.n_neg,
        })
    }
}

/// Fraction of positive samples, `n_pos / n`.
pub fn prevalence(ds: &TaskDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(EvalError::undefined(format!(
            "prevalence of empty task `{}`",
            ds.task_name
        )));
    }
    Ok(ds.n_pos as f64 / ds.n() as f64)
}

/// Every task of one run (one split seed).
#[derive(Debug, Clone, PartialEq)]
pub struct RunData {
    pub run_id: String,
    pub tasks: BTreeMap<String, TaskDataset>,
}

impl RunData {
    pub fn task(&self, name: &str) -> Option<&TaskDataset> {
        self.tasks.get(name)
    }
}

/// Cell tokens for the four label states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelTokens {
    pub positive: String,
    pub negative: String,
    pub uncertain: String,
    pub missing: String,
}

impl Default for LabelTokens {
    fn default() -> Self {
        LabelTokens {
            positive: "1".into(),
            negative: "0".into(),
            uncertain: "-1".into(),
            missing: String::new(),
        }
    }
}

impl LabelTokens {
    fn classify(&self, cell: &str) -> Option<Label> {
        if cell == self.positive {
            Some(Label::Positive)
        } else if cell == self.negative {
            Some(Label::Negative)
        } else if cell == self.uncertain {
            Some(Label::Uncertain)
        } else if cell == self.missing {
            Some(Label::Missing)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskColumns {
    pub task: String,
    pub label_column: String,
    pub score_column: String,
}

impl TaskColumns {
    /// Columns named `<task>_label` and `<task>_score`.
    pub fn canonical(task: impl Into<String>) -> Self {
        let task = task.into();
        TaskColumns {
            label_column: format!("{task}_label"),
            score_column: format!("{task}_score"),
            task,
        }
    }
}

/// Maps each task to its label and score columns.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schema {
    pub tasks: Vec<TaskColumns>,
    pub tokens: LabelTokens,
}

impl Schema {
    pub fn new(tasks: Vec<TaskColumns>) -> Self {
        Schema {
            tasks,
            tokens: LabelTokens::default(),
        }
    }

    pub fn with_tokens(mut self, tokens: LabelTokens) -> Self {
        self.tokens = tokens;
        self
    }

    /// Derives the canonical mapping from a header row: every `<task>_label`
    /// column must be paired with a `<task>_score` column and vice versa.
    pub fn infer<S: AsRef<str>>(headers: &[S]) -> Result<Self> {
        let present: BTreeSet<&str> = headers.iter().map(|h| h.as_ref()).collect();
        let mut tasks = Vec::new();
        let mut seen = BTreeSet::new();
        for h in headers.iter().map(|h| h.as_ref()) {
            let (task, partner) = if let Some(t) = h.strip_suffix("_label") {
                (t, format!("{t}_score"))
            } else if let Some(t) = h.strip_suffix("_score") {
                (t, format!("{t}_label"))
            } else {
                continue;
            };
            if !present.contains(partner.as_str()) {
                return Err(EvalError::Schema(format!(
                    "missing column `{partner}` for task `{task}`"
                )));
            }
            if seen.insert(task.to_string()) {
                tasks.push(TaskColumns::canonical(task));
            }
        }
        if tasks.is_empty() {
            return Err(EvalError::Schema(
                "header has no `<task>_label`/`<task>_score` column pairs".into(),
            ));
        }
        Ok(Schema::new(tasks))
    }

    /// Keeps only the named tasks; naming a task the schema lacks is an error.
    pub fn retain_tasks<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        for name in names {
            let name = name.as_ref();
            if !self.tasks.iter().any(|t| t.task == name) {
                return Err(EvalError::Schema(format!("unknown task `{name}`")));
            }
        }
        self.tasks
            .retain(|t| names.iter().any(|n| n.as_ref() == t.task));
        Ok(())
    }
}

/// How many rows of a task were kept or dropped during parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RowAccounting {
    pub kept: usize,
    pub uncertain: usize,
    pub missing: usize,
}

impl RowAccounting {
    pub fn total(&self) -> usize {
        self.kept + self.uncertain + self.missing
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> EvalError {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    EvalError::Parse {
        line,
        column: String::new(),
        message: e.to_string(),
    }
}

/// Reads only the header row of a table.
pub fn read_headers<R: Read>(input: R) -> Result<Vec<String>> {
    let mut rdr = csv_reader(input);
    Ok(rdr
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect())
}

/// Parses a prediction table into per-task datasets.
pub fn parse_predictions<R: Read>(input: R, run_id: &str, schema: &Schema) -> Result<RunData> {
    parse_predictions_with_accounting(input, run_id, schema).map(|(run, _)| run)
}

/// Like [`parse_predictions`], also reporting per-task row accounting.
pub fn parse_predictions_with_accounting<R: Read>(
    input: R,
    run_id: &str,
    schema: &Schema,
) -> Result<(RunData, BTreeMap<String, RowAccounting>)> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let index_of = |col: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| EvalError::Schema(format!("missing column `{col}`")))
    };

    struct Slot<'a> {
        columns: &'a TaskColumns,
        label_idx: usize,
        score_idx: usize,
        samples: Vec<LabeledScore>,
        accounting: RowAccounting,
    }

    let mut slots = Vec::with_capacity(schema.tasks.len());
    let mut names = BTreeSet::new();
    for columns in &schema.tasks {
        if !names.insert(columns.task.as_str()) {
            return Err(EvalError::Schema(format!(
                "task `{}` mapped more than once",
                columns.task
            )));
        }
        slots.push(Slot {
            columns,
            label_idx: index_of(&columns.label_column)?,
            score_idx: index_of(&columns.score_column)?,
            samples: Vec::new(),
            accounting: RowAccounting::default(),
        });
    }

    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for slot in &mut slots {
            let label_cell = &record[slot.label_idx];
            let score_cell = &record[slot.score_idx];
            let label = schema.tokens.classify(label_cell).ok_or_else(|| EvalError::Parse {
                line,
                column: slot.columns.label_column.clone(),
                message: format!("unknown label token `{label_cell}`"),
            })?;
            let score_error = |message: String| EvalError::Parse {
                line,
                column: slot.columns.score_column.clone(),
                message,
            };
            let excluded = matches!(label, Label::Uncertain | Label::Missing);
            // An excluded row may leave its score blank; anything written must still be valid.
            let score = if excluded && score_cell.is_empty() {
                None
            } else {
                let v: f64 = score_cell
                    .parse()
                    .map_err(|_| score_error(format!("score `{score_cell}` is not a number")))?;
                if !(v.is_finite() && (0.0..=1.0).contains(&v)) {
                    return Err(score_error(format!("score `{score_cell}` is outside [0, 1]")));
                }
                Some(v)
            };
            match (label, score) {
                (Label::Uncertain, _) => slot.accounting.uncertain += 1,
                (Label::Missing, _) => slot.accounting.missing += 1,
                (label, Some(score)) => {
                    slot.samples.push(LabeledScore { label, score });
                    slot.accounting.kept += 1;
                }
                (_, None) => unreachable!("usable labels always carry a parsed score"),
            }
        }
    }

    let mut tasks = BTreeMap::new();
    let mut accounting = BTreeMap::new();
    for slot in slots {
        let name = slot.columns.task.clone();
        accounting.insert(name.clone(), slot.accounting);
        tasks.insert(name.clone(), TaskDataset::new(name, slot.samples));
    }
    Ok((
        RunData {
            run_id: run_id.to_string(),
            tasks,
        },
        accounting,
    ))
}

/// Writes a run in canonical form. Tasks of unequal length are padded with
/// missing-label rows so each column keeps its own samples in order.
pub fn write_canonical<W: Write>(run: &RunData, output: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(output);
    let mut header = vec!["id".to_string()];
    for name in run.tasks.keys() {
        header.push(format!("{name}_label"));
        header.push(format!("{name}_score"));
    }
    wtr.write_record(&header).map_err(csv_error)?;
    let rows = run.tasks.values().map(TaskDataset::n).max().unwrap_or(0);
    for i in 0..rows {
        let mut row = vec![i.to_string()];
        for ds in run.tasks.values() {
            match ds.samples.get(i) {
                Some(s) => {
                    row.push(if s.is_positive() { "1" } else { "0" }.to_string());
                    row.push(s.score.to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush().map_err(|e| EvalError::io("<canonical output>", e))?;
    Ok(())
}
