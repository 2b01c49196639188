//! Synthetic score generators and prevalence sweeps.
//!
//! Class counts are stratified: a generator spec with prevalence `p` and size `n`
//! yields exactly `round(n * p)` positives. Binormal latent scores are
//! squashed to `(0, 1)` with the logistic function, which preserves order,
//! so discrimination metrics equal those of the raw draws.
//!
//! Randomness comes from `ChaCha8Rng` seeded with `seed_from_u64`. Normal
//! draws use `rand_distr::StandardNormal`; uniform draws use the standard
//! `[0, 1)` `f64` sampler. Positives are drawn first, then negatives.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brier::stratified_brier;
use crate::curves::{auc, pr_curve, roc_curve, PrEstimator};
use crate::error::{EvalError, Result};
use crate::metric::MetricValue;
use crate::store::{Label, LabeledScore, TaskDataset};

pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9, seed_from_u64)";
pub const NORMAL_SAMPLER: &str = "rand_distr 0.5 StandardNormal";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScoreFamily {
    /// Negatives ~ N(0, 1), positives ~ N(separation, 1), then logistic.
    Binormal { separation: f64 },
    /// Every sample gets `value`.
    Constant { value: f64 },
    /// Both classes ~ U[0, 1).
    UniformRandom,
}

impl ScoreFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            ScoreFamily::Binormal { separation } if !(separation.is_finite() && separation >= 0.0) => {
                Err(EvalError::DegenerateSpec(format!(
                    "binormal separation must be finite and >= 0, got {separation}"
                )))
            }
            ScoreFamily::Constant { value } if !(0.0..=1.0).contains(&value) => Err(
                EvalError::DegenerateSpec(format!("constant score {value} outside [0, 1]")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub family: ScoreFamily,
    pub prevalence: f64,
    pub n: usize,
    pub seed: u64,
}

impl GeneratorSpec {
    /// `round(n * prevalence)`.
    pub fn n_pos(&self) -> usize {
        (self.n as f64 * self.prevalence).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.family.validate()?;
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(EvalError::DegenerateSpec(format!(
                "prevalence {} must lie strictly inside (0, 1)",
                self.prevalence
            )));
        }
        let n_pos = self.n_pos();
        if n_pos == 0 || n_pos >= self.n {
            return Err(EvalError::DegenerateSpec(format!(
                "n = {} at prevalence {} gives {} positives; both classes are required",
                self.n, self.prevalence, n_pos
            )));
        }
        Ok(())
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Labels and pre-squash scores. For `Binormal` the scores are the raw
/// normal draws; for the other families they are the final scores.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentSample {
    pub labels: Vec<bool>,
    pub scores: Vec<f64>,
}

pub fn generate_latent(spec: &GeneratorSpec) -> Result<LatentSample> {
    spec.validate()?;
    let n_pos = spec.n_pos();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut labels = Vec::with_capacity(spec.n);
    let mut scores = Vec::with_capacity(spec.n);
    for i in 0..spec.n {
        let positive = i < n_pos;
        let score = match spec.family {
            ScoreFamily::Binormal { separation } => {
                let z: f64 = rng.sample(StandardNormal);
                if positive {
                    z + separation
                } else {
                    z
                }
            }
            ScoreFamily::Constant { value } => value,
            ScoreFamily::UniformRandom => rng.random::<f64>(),
        };
        labels.push(positive);
        scores.push(score);
    }
    Ok(LatentSample { labels, scores })
}

/// Draws a task dataset from the spec. Deterministic in the spec.
pub fn generate(spec: &GeneratorSpec) -> Result<TaskDataset> {
    let latent = generate_latent(spec)?;
    let squash = matches!(spec.family, ScoreFamily::Binormal { .. });
    let samples = latent
        .labels
        .iter()
        .zip(&latent.scores)
        .map(|(&pos, &s)| {
            let label = if pos { Label::Positive } else { Label::Negative };
            LabeledScore::new(label, if squash { logistic(s) } else { s })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TaskDataset::new("synthetic", samples))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub prevalence: f64,
    pub n: usize,
    pub n_pos: usize,
    pub seed: u64,
    pub auc_roc: f64,
    pub auc_pr: f64,
    pub brier: f64,
    pub brier_pos: MetricValue,
    pub brier_neg: MetricValue,
    pub balanced: MetricValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub generator: ScoreFamily,
    pub n: usize,
    pub base_seed: u64,
    pub cell_seed_rule: String,
    pub rng: String,
    pub normal_sampler: String,
    pub squash: String,
    pub pr_estimator: PrEstimator,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub metadata: SweepMetadata,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub const CSV_HEADER: [&'static str; 7] = [
        "prevalence",
        "auc_roc",
        "auc_pr",
        "brier",
        "brier_pos",
        "brier_neg",
        "balanced",
    ];

    /// One row per prevalence, numbers in shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        wtr.write_record(Self::CSV_HEADER).expect("write to Vec");
        for r in &self.rows {
            wtr.write_record([
                r.prevalence.to_string(),
                r.auc_roc.to_string(),
                r.auc_pr.to_string(),
                r.brier.to_string(),
                r.brier_pos.to_string(),
                r.brier_neg.to_string(),
                r.balanced.to_string(),
            ])
            .expect("write to Vec");
        }
        String::from_utf8(wtr.into_inner().expect("flush to Vec")).expect("csv output is UTF-8")
    }
}

fn sweep_cell(
    family: ScoreFamily,
    prevalence: f64,
    n: usize,
    seed: u64,
    estimator: PrEstimator,
) -> Result<SweepRow> {
    let spec = GeneratorSpec {
        family,
        prevalence,
        n,
        seed,
    };
    let ds = generate(&spec)?;
    let bundle = stratified_brier(&ds)?;
    Ok(SweepRow {
        prevalence,
        n,
        n_pos: ds.n_pos(),
        seed,
        auc_roc: auc(&roc_curve(&ds)?)?,
        auc_pr: estimator.area(&pr_curve(&ds)?)?,
        brier: bundle.brier,
        brier_pos: bundle.brier_pos,
        brier_neg: bundle.brier_neg,
        balanced: bundle.balanced,
    })
}

/// Generates one dataset per prevalence (cell `i` seeded with `seed + i`)
/// and records its discrimination and Brier metrics. Cells run in parallel
/// on the current rayon pool; results do not depend on the thread count.
pub fn prevalence_sweep(
    family: ScoreFamily,
    prevalences: &[f64],
    n: usize,
    seed: u64,
    estimator: PrEstimator,
) -> Result<SweepTable> {
    family.validate()?;
    if prevalences.is_empty() {
        return Err(EvalError::contract("sweep needs at least one prevalence"));
    }
    for (i, &p) in prevalences.iter().enumerate() {
        GeneratorSpec {
            family,
            prevalence: p,
            n,
            seed: seed.wrapping_add(i as u64),
        }
        .validate()?;
    }
    let rows = prevalences
        .par_iter()
        .enumerate()
        .map(|(i, &p)| sweep_cell(family, p, n, seed.wrapping_add(i as u64), estimator))
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable {
        metadata: SweepMetadata {
            generator: family,
            n,
            base_seed: seed,
            cell_seed_rule: "base_seed + cell index".into(),
            rng: RNG_NAME.into(),
            normal_sampler: NORMAL_SAMPLER.into(),
            squash: match family {
                ScoreFamily::Binormal { .. } => "logistic".into(),
                _ => "none".into(),
            },
            pr_estimator: estimator,
        },
        rows,
    })
}
