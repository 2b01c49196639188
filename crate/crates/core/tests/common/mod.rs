//! Reference implementations used as oracles by the integration tests.
//! None of them share code paths with the library.

#![allow(dead_code)]

use imbalance_eval::store::TaskDataset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Mann-Whitney statistic: fraction of positive-negative pairs ranked
/// correctly, ties counting one half.
pub fn rank_auc(labels: &[bool], scores: &[f64]) -> f64 {
    let mut twice_wins: u64 = 0;
    let (mut pos, mut neg) = (0u64, 0u64);
    for (i, &li) in labels.iter().enumerate() {
        if li {
            pos += 1;
        } else {
            neg += 1;
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            if scores[i] > scores[j] {
                twice_wins += 2;
            } else if scores[i] == scores[j] {
                twice_wins += 1;
            }
        }
    }
    twice_wins as f64 / (2 * pos * neg) as f64
}

/// Exhaustive F1 scan over distinct scores plus "predict none", keeping the
/// largest threshold among equal maxima.
pub fn brute_force_f1(labels: &[bool], scores: &[f64]) -> (f64, f64) {
    let mut candidates: Vec<f64> = scores.to_vec();
    candidates.push(f64::INFINITY);
    candidates.sort_by(|a, b| b.partial_cmp(a).unwrap());
    candidates.dedup();
    let mut best = (f64::NAN, -1.0);
    for t in candidates {
        let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
        for (&l, &s) in labels.iter().zip(scores) {
            match (l, s >= t) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let den = 2 * tp + fp + fneg;
        let f1 = if den == 0 { 0.0 } else { (2 * tp) as f64 / den as f64 };
        if f1 > best.1 {
            best = (t, f1);
        }
    }
    best
}

/// Best non-decreasing step fit by enumerating every partition of the
/// distinct scores into contiguous blocks. Returns fitted values in sample
/// order. Only practical for a dozen or so distinct scores.
pub fn brute_force_isotonic(labels: &[bool], scores: &[f64]) -> Vec<f64> {
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    let g = distinct.len();
    let mut pos = vec![0.0; g];
    let mut cnt = vec![0.0; g];
    for (&l, &s) in labels.iter().zip(scores) {
        let k = distinct.iter().position(|&d| d == s).unwrap();
        cnt[k] += 1.0;
        if l {
            pos[k] += 1.0;
        }
    }

    let mut best_sse = f64::INFINITY;
    let mut best_fit = vec![0.0; g];
    // bit i set => a block boundary after distinct score i
    for mask in 0u32..(1u32 << (g - 1)) {
        let mut fit = vec![0.0; g];
        let mut start = 0;
        let mut prev_mean = f64::NEG_INFINITY;
        let mut feasible = true;
        let mut sse = 0.0;
        for end in 0..g {
            let boundary = end == g - 1 || mask & (1 << end) != 0;
            if !boundary {
                continue;
            }
            let p: f64 = pos[start..=end].iter().sum();
            let c: f64 = cnt[start..=end].iter().sum();
            let m = p / c;
            if m < prev_mean {
                feasible = false;
                break;
            }
            prev_mean = m;
            sse += p * (1.0 - m).powi(2) + (c - p) * m * m;
            fit[start..=end].iter_mut().for_each(|v| *v = m);
            start = end + 1;
        }
        if feasible && sse < best_sse - 1e-12 {
            best_sse = sse;
            best_fit = fit;
        }
    }
    scores
        .iter()
        .map(|s| best_fit[distinct.iter().position(|d| d == s).unwrap()])
        .collect()
}

/// Direct Brier evaluation over parallel slices.
pub fn brier_direct(labels: &[bool], scores: &[f64]) -> f64 {
    labels
        .iter()
        .zip(scores)
        .map(|(&l, &s)| (if l { 1.0 } else { 0.0 } - s).powi(2))
        .sum::<f64>()
        / labels.len() as f64
}

/// Random labelled scores. About half the instances draw from a coarse grid
/// so ties are frequent.
pub fn random_instance(rng: &mut ChaCha8Rng, max_n: usize, both_classes: bool) -> (Vec<bool>, Vec<f64>) {
    loop {
        let n = rng.random_range(2..=max_n);
        let prevalence: f64 = rng.random_range(0.02..0.98);
        let coarse = rng.random_bool(0.5);
        let grid = rng.random_range(2..=20) as f64;
        let labels: Vec<bool> = (0..n).map(|_| rng.random_bool(prevalence)).collect();
        let scores: Vec<f64> = (0..n)
            .map(|_| {
                if coarse {
                    (rng.random_range(0..=grid as u32) as f64) / grid
                } else {
                    rng.random::<f64>()
                }
            })
            .collect();
        let npos = labels.iter().filter(|&&l| l).count();
        if !both_classes || (npos > 0 && npos < n) {
            return (labels, scores);
        }
    }
}

pub fn dataset(labels: &[bool], scores: &[f64]) -> TaskDataset {
    TaskDataset::from_labels_scores("t", labels, scores).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dataset with every negative repeated `k` times (positives kept once).
pub fn duplicate_negatives(labels: &[bool], scores: &[f64], k: usize) -> (Vec<bool>, Vec<f64>) {
    let mut l = Vec::new();
    let mut s = Vec::new();
    for (&li, &si) in labels.iter().zip(scores) {
        let reps = if li { 1 } else { k };
        for _ in 0..reps {
            l.push(li);
            s.push(si);
        }
    }
    (l, s)
}

/// Labels and scores of a dataset as parallel vectors.
pub fn split(ds: &TaskDataset) -> (Vec<bool>, Vec<f64>) {
    (ds.labels().collect(), ds.scores().collect())
}
