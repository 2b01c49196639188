//! Pool-adjacent-violators (PAV) recalibration.
//!
//! The PAV fit is the non-decreasing function of the score closest to the
//! 0/1 labels in squared error. Scored on the same data, its Brier score is
//! the refinement loss: what remains after ideal monotone recalibration.
//! The difference from the raw Brier score is the calibration loss.
//!
//! Labels are 0/1, so each block is tracked as an integer pair
//! (positives, count) and violations are detected by exact
//! cross-multiplication. Adjacent blocks with equal rates are merged too,
//! so block values are strictly increasing.

use serde::{Deserialize, Serialize};

use crate::brier::brier;
use crate::error::{EvalError, Result};
use crate::store::TaskDataset;

/// One pooled run of scores sharing a calibrated value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBlock {
    pub score_min: f64,
    pub score_max: f64,
    pub value: f64,
}

/// Step-function map from raw score to calibrated probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationMap {
    pub blocks: Vec<CalibrationBlock>,
}

impl CalibrationMap {
    /// Calibrated value for `score`. Scores between blocks take the value of
    /// the block below; scores under the first block take its value.
    pub fn apply(&self, score: f64) -> f64 {
        let idx = self.blocks.partition_point(|b| b.score_min <= score);
        self.blocks[idx.saturating_sub(1)].value
    }

    /// The dataset with every score replaced by its calibrated value.
    pub fn calibrate(&self, ds: &TaskDataset) -> Result<TaskDataset> {
        ds.map_scores(|s| self.apply(s))
    }
}

struct Pool {
    score_min: f64,
    score_max: f64,
    positives: u64,
    count: u64,
}

impl Pool {
    /// `self.rate >= other.rate`, exactly.
    fn rate_at_least(&self, other: &Pool) -> bool {
        self.positives as u128 * other.count as u128 >= other.positives as u128 * self.count as u128
    }
}

/// Fits the isotonic step function to the dataset's labels.
pub fn pav_calibrate(ds: &TaskDataset) -> Result<CalibrationMap> {
    if ds.is_empty() {
        return Err(EvalError::undefined(format!(
            "PAV calibration of empty task `{}`",
            ds.task_name()
        )));
    }
    let mut samples: Vec<(f64, bool)> = ds.samples().iter().map(|s| (s.score(), s.is_positive())).collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut stack: Vec<Pool> = Vec::new();
    let mut i = 0;
    while i < samples.len() {
        // Tied scores always start in one block.
        let score = samples[i].0;
        let mut pool = Pool {
            score_min: score,
            score_max: score,
            positives: 0,
            count: 0,
        };
        while i < samples.len() && samples[i].0 == score {
            pool.positives += samples[i].1 as u64;
            pool.count += 1;
            i += 1;
        }
        while let Some(prev) = stack.last() {
            if !prev.rate_at_least(&pool) {
                break;
            }
            let prev = stack.pop().expect("non-empty stack");
            pool = Pool {
                score_min: prev.score_min,
                score_max: pool.score_max,
                positives: prev.positives + pool.positives,
                count: prev.count + pool.count,
            };
        }
        stack.push(pool);
    }

    Ok(CalibrationMap {
        blocks: stack
            .into_iter()
            .map(|p| CalibrationBlock {
                score_min: p.score_min,
                score_max: p.score_max,
                value: p.positives as f64 / p.count as f64,
            })
            .collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSplit {
    pub calibration_loss: f64,
    pub refinement_loss: f64,
}

/// Splits the raw Brier score into calibration and refinement losses using
/// an in-sample PAV fit.
pub fn calibration_refinement(ds: &TaskDataset) -> Result<CalibrationSplit> {
    let map = pav_calibrate(ds)?;
    let raw = brier(ds)?;
    let refinement_loss = brier(&map.calibrate(ds)?)?;
    Ok(CalibrationSplit {
        calibration_loss: raw - refinement_loss,
        refinement_loss,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds(labels: &[u8], scores: &[f64]) -> TaskDataset {
        let labels: Vec<bool> = labels.iter().map(|&l| l == 1).collect();
        TaskDataset::from_labels_scores("t", &labels, scores).unwrap()
    }

    fn values(map: &CalibrationMap, d: &TaskDataset) -> Vec<f64> {
        d.scores().map(|s| map.apply(s)).collect()
    }

    #[test]
    fn already_monotone() {
        let d = ds(&[0, 0, 1, 1], &[0.1, 0.2, 0.3, 0.4]);
        let map = pav_calibrate(&d).unwrap();
        assert_eq!(map.blocks.len(), 2);
        assert_eq!(map.blocks[0], CalibrationBlock { score_min: 0.1, score_max: 0.2, value: 0.0 });
        assert_eq!(map.blocks[1], CalibrationBlock { score_min: 0.3, score_max: 0.4, value: 1.0 });
    }

    #[test]
    fn middle_pair_pooled() {
        let d = ds(&[0, 1, 0, 1], &[0.2, 0.4, 0.6, 0.8]);
        let map = pav_calibrate(&d).unwrap();
        assert_eq!(values(&map, &d), vec![0.0, 0.5, 0.5, 1.0]);
        let split = calibration_refinement(&d).unwrap();
        assert!((split.refinement_loss - 0.125).abs() < 1e-15);
        // raw Brier = (0.04 + 0.36 + 0.36 + 0.04) / 4 = 0.2
        assert!((split.calibration_loss - 0.075).abs() < 1e-15);
    }

    #[test]
    fn single_class() {
        let d = ds(&[1, 1, 1], &[0.2, 0.5, 0.9]);
        let map = pav_calibrate(&d).unwrap();
        assert_eq!(map.blocks.len(), 1);
        assert_eq!(map.blocks[0].value, 1.0);
        assert_eq!(brier(&map.calibrate(&d).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn dummy_model_split() {
        let mut labels = vec![1u8];
        labels.extend([0u8; 99]);
        let d = ds(&labels, &[0.0; 100]);
        let map = pav_calibrate(&d).unwrap();
        assert_eq!(map.blocks.len(), 1);
        assert_eq!(map.blocks[0].value, 0.01);
        let split = calibration_refinement(&d).unwrap();
        assert!((split.refinement_loss - 0.0099).abs() < 1e-15);
        assert!((split.calibration_loss - 0.0001).abs() < 1e-15);
    }

    #[test]
    fn perfect_hard_predictions() {
        let d = ds(&[1, 0, 0, 1], &[1.0, 0.0, 0.0, 1.0]);
        let split = calibration_refinement(&d).unwrap();
        assert_eq!(split.calibration_loss, 0.0);
        assert_eq!(split.refinement_loss, 0.0);
    }

    #[test]
    fn ties_share_a_block() {
        // A tie between a positive and negative at 0.5 must not be split.
        let d = ds(&[1, 0, 0, 1], &[0.5, 0.5, 0.1, 0.9]);
        let map = pav_calibrate(&d).unwrap();
        let v = values(&map, &d);
        assert_eq!(v[0], v[1]);
        assert_eq!(v, vec![0.5, 0.5, 0.0, 1.0]);
    }

    #[test]
    fn apply_between_and_outside_blocks() {
        let d = ds(&[0, 1], &[0.2, 0.8]);
        let map = pav_calibrate(&d).unwrap();
        assert_eq!(map.apply(0.0), 0.0);
        assert_eq!(map.apply(0.5), 0.0);
        assert_eq!(map.apply(0.8), 1.0);
        assert_eq!(map.apply(1.0), 1.0);
    }

    #[test]
    fn empty_dataset_errors() {
        let empty = TaskDataset::new("t", vec![]);
        assert!(matches!(pav_calibrate(&empty), Err(EvalError::UndefinedMetric(_))));
        assert!(calibration_refinement(&empty).is_err());
    }

    #[test]
    fn json_blocks() {
        let map = pav_calibrate(&ds(&[0, 1], &[0.25, 0.75])).unwrap();
        let s = serde_json::to_string(&map).unwrap();
        assert_eq!(
            s,
            r#"{"blocks":[{"score_min":0.25,"score_max":0.25,"value":0.0},{"score_min":0.75,"score_max":0.75,"value":1.0}]}"#
        );
    }
}
