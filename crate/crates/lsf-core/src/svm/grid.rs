//! Exhaustive grid search over the penalty weight C and the per-class
//! weights, selecting the configuration with the best validation average
//! precision.
//!
//! The grid is C in {0.1, ..., 2.0} (step 0.1) crossed with each class
//! weight in {0.1, ..., 1.0} (step 0.1): 20 x 10 x 10 = 2000 candidates.
//! Zero grid points are excluded because a zero box bound degenerates the
//! dual.

use super::smo::{decision_score, train, SvmModel};
use super::{SvmConfig, SvmError};
use crate::linalg::Mat;
use crate::metrics::{ap_score, ScoredPredictions};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct GridSearchOptions {
    pub gamma: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub cache_mb: usize,
    /// Cap on training points per candidate via stratified subsampling;
    /// `None` trains every candidate on the full set.
    pub subsample: Option<usize>,
    pub seed: u64,
}

impl Default for GridSearchOptions {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            tolerance: 1e-3,
            max_iterations: 1_000_000,
            cache_mb: 64,
            subsample: None,
            seed: 0,
        }
    }
}

/// One evaluated grid candidate.
#[derive(Debug, Clone)]
pub struct GridPoint {
    pub c: f64,
    pub w_neg: f64,
    pub w_pos: f64,
    pub val_ap: f64,
    pub n_sv: usize,
    pub converged: bool,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub best_config: SvmConfig,
    pub best_val_ap: f64,
    pub evaluated: Vec<GridPoint>,
}

impl GridSearchResult {
    /// Comma-separated table of all candidates.
    pub fn csv(&self) -> String {
        let mut out = String::from("c,w_neg,w_pos,val_ap,n_sv,converged,seconds\n");
        for p in &self.evaluated {
            out.push_str(&format!(
                "{:.1},{:.1},{:.1},{:.6},{},{},{:.3}\n",
                p.c, p.w_neg, p.w_pos, p.val_ap, p.n_sv, p.converged, p.seconds
            ));
        }
        out
    }
}

fn stratified_subsample(labels: &[bool], cap: usize, seed: u64) -> Vec<usize> {
    let mut pos: Vec<usize> = (0..labels.len()).filter(|&i| labels[i]).collect();
    let mut neg: Vec<usize> = (0..labels.len()).filter(|&i| !labels[i]).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);
    let total = labels.len();
    let keep_pos = ((pos.len() * cap) as f64 / total as f64).round() as usize;
    let keep_pos = keep_pos.clamp(1, pos.len());
    let keep_neg = (cap - keep_pos.min(cap)).clamp(1, neg.len());
    let mut idx: Vec<usize> = pos[..keep_pos].iter().chain(&neg[..keep_neg]).copied().collect();
    idx.sort_unstable();
    idx
}

fn select_rows(features: &Mat, labels: &[bool], idx: &[usize]) -> (Mat, Vec<bool>) {
    let mut m = Mat::zeros(idx.len(), features.cols);
    let mut l = Vec::with_capacity(idx.len());
    for (r, &i) in idx.iter().enumerate() {
        m.row_mut(r).copy_from_slice(features.row(i));
        l.push(labels[i]);
    }
    (m, l)
}

/// Train every grid candidate and return the one with the highest validation
/// AP; ties break toward smaller C, then smaller weight sum, then smaller
/// negative-class weight. Candidates train concurrently; the selection is
/// independent of completion order.
pub fn grid_search(
    features_train: &Mat,
    labels_train: &[bool],
    features_val: &Mat,
    labels_val: &[bool],
    options: &GridSearchOptions,
) -> Result<(GridSearchResult, SvmModel), SvmError> {
    if labels_train.len() != features_train.rows {
        return Err(SvmError::LengthMismatch {
            features: features_train.rows,
            labels: labels_train.len(),
        });
    }
    if labels_val.len() != features_val.rows {
        return Err(SvmError::LengthMismatch {
            features: features_val.rows,
            labels: labels_val.len(),
        });
    }
    if features_val.cols != features_train.cols {
        return Err(SvmError::DimensionMismatch {
            expected: features_train.cols,
            found: features_val.cols,
        });
    }

    let (train_feats, train_labels) = match options.subsample {
        Some(cap) if cap < labels_train.len() => {
            let idx = stratified_subsample(labels_train, cap, options.seed);
            select_rows(features_train, labels_train, &idx)
        }
        _ => (features_train.clone(), labels_train.to_vec()),
    };

    let mut candidates = Vec::with_capacity(2000);
    for ci in 1..=20u32 {
        for wn in 1..=10u32 {
            for wp in 1..=10u32 {
                candidates.push((
                    f64::from(ci) * 0.1,
                    f64::from(wn) * 0.1,
                    f64::from(wp) * 0.1,
                ));
            }
        }
    }

    let evaluated: Vec<Result<GridPoint, SvmError>> = candidates
        .par_iter()
        .map(|&(c, w_neg, w_pos)| {
            let start = Instant::now();
            let config = SvmConfig {
                c,
                gamma: options.gamma,
                class_weight: (w_neg, w_pos),
                tolerance: options.tolerance,
                max_iterations: options.max_iterations,
                cache_mb: options.cache_mb,
                shrink_interval: 0,
            };
            let model = train(&train_feats, &train_labels, &config)?;
            let scores: Vec<f64> = (0..features_val.rows)
                .map(|r| decision_score(&model, features_val.row(r)))
                .collect::<Result<_, _>>()?;
            let preds = ScoredPredictions::new(scores, labels_val.to_vec())
                .map_err(|e| SvmError::InvalidParam(format!("validation set: {e}")))?;
            let val_ap = ap_score(&preds)
                .map_err(|e| SvmError::InvalidParam(format!("validation set: {e}")))?;
            Ok(GridPoint {
                c,
                w_neg,
                w_pos,
                val_ap,
                n_sv: model.dual_coeffs.len(),
                converged: model.converged,
                seconds: start.elapsed().as_secs_f64(),
            })
        })
        .collect();

    let mut points = Vec::with_capacity(evaluated.len());
    for p in evaluated {
        points.push(p?);
    }

    let key = |p: &GridPoint| (-p.val_ap, p.c, p.w_neg + p.w_pos, p.w_neg);
    let best = points
        .iter()
        .min_by(|a, b| key(a).partial_cmp(&key(b)).unwrap())
        .expect("grid is never empty")
        .clone();

    let best_config = SvmConfig {
        c: best.c,
        gamma: options.gamma,
        class_weight: (best.w_neg, best.w_pos),
        tolerance: options.tolerance,
        max_iterations: options.max_iterations,
        cache_mb: options.cache_mb,
        shrink_interval: 0,
    };
    // Retrain the winner on the full (unsubsampled) training set.
    let best_model = train(features_train, labels_train, &best_config)?;
    Ok((
        GridSearchResult {
            best_config,
            best_val_ap: best.val_ap,
            evaluated: points,
        },
        best_model,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;

    fn toy_problem(seed: u64) -> (Mat, Vec<bool>, Mat, Vec<bool>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut make = |n: usize| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for i in 0..n {
                let l = i % 2 == 0;
                let c = if l { 1.0 } else { -1.0 };
                rows.push(vec![c + rng.gen::<f64>() * 0.6, c - rng.gen::<f64>() * 0.6]);
                labels.push(l);
            }
            (Mat::from_rows(&rows), labels)
        };
        let (ft, lt) = make(24);
        let (fv, lv) = make(16);
        (ft, lt, fv, lv)
    }

    #[test]
    fn grid_has_2000_candidates_and_best_dominates() {
        let (ft, lt, fv, lv) = toy_problem(1);
        let opts = GridSearchOptions {
            gamma: 0.8,
            tolerance: 1e-4,
            ..GridSearchOptions::default()
        };
        let (result, model) = grid_search(&ft, &lt, &fv, &lv, &opts).unwrap();
        assert_eq!(result.evaluated.len(), 2000);
        for p in &result.evaluated {
            assert!(result.best_val_ap >= p.val_ap);
        }
        assert!(!model.dual_coeffs.is_empty());
        // Ranges: C in [0.1, 2.0], weights in [0.1, 1.0]; no zero points.
        for p in &result.evaluated {
            assert!(p.c >= 0.0999 && p.c <= 2.0001);
            assert!(p.w_neg >= 0.0999 && p.w_neg <= 1.0001);
            assert!(p.w_pos >= 0.0999 && p.w_pos <= 1.0001);
        }
    }

    #[test]
    fn deterministic_selection() {
        let (ft, lt, fv, lv) = toy_problem(5);
        let opts = GridSearchOptions {
            gamma: 1.1,
            tolerance: 1e-4,
            ..GridSearchOptions::default()
        };
        let (a, _) = grid_search(&ft, &lt, &fv, &lv, &opts).unwrap();
        let (b, _) = grid_search(&ft, &lt, &fv, &lv, &opts).unwrap();
        assert_eq!(a.best_config, b.best_config);
        assert_eq!(a.best_val_ap, b.best_val_ap);
    }

    #[test]
    fn subsampling_keeps_both_classes() {
        let labels: Vec<bool> = (0..100).map(|i| i % 10 == 0).collect();
        let idx = stratified_subsample(&labels, 20, 3);
        assert!(idx.len() <= 21);
        assert!(idx.iter().any(|&i| labels[i]));
        assert!(idx.iter().any(|&i| !labels[i]));
    }
}
