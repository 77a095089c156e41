//! Minibatch training with Adam, per-epoch seeded shuffling, gradient
//! clipping at a global norm, and early stopping on validation average
//! precision. Parameters with the best validation score are the ones
//! returned.

use super::model::LstmModel;
use super::LstmError;
use crate::linalg::Mat;
use crate::metrics::{ap_score, ScoredPredictions};
use crate::preprocess::FeatureTensor;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Samples per parallel gradient chunk. Fixed so the reduction order (and
/// hence the result) does not depend on the thread count.
const GRAD_CHUNK: usize = 8;

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    /// Global gradient norm ceiling; 500-step unrolls need it.
    pub clip_norm: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            batch_size: 64,
            max_epochs: 200,
            patience: 10,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            clip_norm: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_score: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LstmModel,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub best_val_score: f64,
}

impl TrainOutcome {
    /// Comma-separated history table for external plotting.
    pub fn history_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_ap\n");
        for e in &self.history {
            out.push_str(&format!("{},{:.6},{:.6}\n", e.epoch, e.train_loss, e.val_score));
        }
        out
    }
}

/// Mean BCE loss and its gradient over a batch. Per-sample gradients are
/// computed in fixed-size chunks (parallel across chunks) and summed in
/// chunk order, so the result is identical for any thread count.
pub fn batch_gradients(
    model: &LstmModel,
    batch: &[(&FeatureTensor, f64)],
) -> Result<(f64, Vec<f64>), LstmError> {
    if batch.is_empty() {
        return Err(LstmError::EmptyInput);
    }
    let weight = 1.0 / batch.len() as f64;
    let partials: Vec<Result<(f64, Vec<f64>), LstmError>> = batch
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut grads = vec![0.0; model.params().len()];
            let mut loss = 0.0;
            for &(tensor, label) in chunk {
                let pass = model.forward(tensor)?;
                loss += model.accumulate_gradients(tensor, &pass, label, weight, &mut grads);
            }
            Ok((loss, grads))
        })
        .collect();

    let mut total_loss = 0.0;
    let mut grads = vec![0.0; model.params().len()];
    for partial in partials {
        let (loss, g) = partial?;
        total_loss += loss;
        for (acc, v) in grads.iter_mut().zip(&g) {
            *acc += v;
        }
    }
    Ok((total_loss * weight, grads))
}

/// Scale gradients down to `max_norm` when their global L2 norm exceeds it.
/// Returns the pre-clip norm.
pub fn clip_global_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= scale);
    }
    norm
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], cfg: &TrainConfig) {
        self.t += 1;
        let b1 = cfg.adam_beta1;
        let b2 = cfg.adam_beta2;
        let bc1 = 1.0 - b1.powi(self.t as i32);
        let bc2 = 1.0 - b2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grads[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grads[i] * grads[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
}

/// Validation scorer: the default computes average precision of the head's
/// probabilities on the validation set.
pub fn validation_ap(model: &LstmModel, val: &[(&FeatureTensor, f64)]) -> Result<f64, LstmError> {
    let scores: Vec<f64> = val
        .par_iter()
        .map(|(t, _)| model.predict_proba(t))
        .collect::<Result<_, _>>()?;
    let labels: Vec<bool> = val.iter().map(|&(_, l)| l > 0.5).collect();
    let preds = ScoredPredictions::new(scores, labels)
        .map_err(|e| LstmError::InvalidParam(format!("validation set: {e}")))?;
    ap_score(&preds).map_err(|e| LstmError::InvalidParam(format!("validation set: {e}")))
}

/// Train with the standard validation-AP scorer.
pub fn train(
    model: LstmModel,
    train_set: &[(&FeatureTensor, f64)],
    val_set: &[(&FeatureTensor, f64)],
    config: &TrainConfig,
) -> Result<TrainOutcome, LstmError> {
    if val_set.is_empty() {
        return Err(LstmError::InvalidParam("validation set is empty".into()));
    }
    train_with_scorer(model, train_set, config, |m| validation_ap(m, val_set))
}

/// Training loop with an injectable validation scorer (higher is better).
pub fn train_with_scorer(
    mut model: LstmModel,
    train_set: &[(&FeatureTensor, f64)],
    config: &TrainConfig,
    mut scorer: impl FnMut(&LstmModel) -> Result<f64, LstmError>,
) -> Result<TrainOutcome, LstmError> {
    if train_set.is_empty() {
        return Err(LstmError::EmptyInput);
    }
    if config.batch_size == 0 || config.patience == 0 {
        return Err(LstmError::InvalidParam(
            "batch_size and patience must be >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut adam = Adam::new(model.params().len());
    let mut history = Vec::new();
    let mut best_params = model.params().to_vec();
    let mut best_score = f64::NEG_INFINITY;
    let mut best_epoch = 0usize;
    let mut stale_epochs = 0usize;

    for epoch in 1..=config.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for batch_idx in order.chunks(config.batch_size) {
            let batch: Vec<(&FeatureTensor, f64)> =
                batch_idx.iter().map(|&i| train_set[i]).collect();
            let (loss, mut grads) = batch_gradients(&model, &batch)?;
            clip_global_norm(&mut grads, config.clip_norm);
            adam.step(model.params_mut(), &grads, config);
            epoch_loss += loss;
            n_batches += 1;
        }
        let train_loss = epoch_loss / n_batches as f64;
        let val_score = scorer(&model)?;
        history.push(EpochStats {
            epoch,
            train_loss,
            val_score,
        });
        if val_score > best_score {
            best_score = val_score;
            best_epoch = epoch;
            best_params.copy_from_slice(model.params());
            stale_epochs = 0;
        } else {
            stale_epochs += 1;
            if stale_epochs >= config.patience {
                break;
            }
        }
    }

    model.params_mut().copy_from_slice(&best_params);
    Ok(TrainOutcome {
        model,
        history,
        best_epoch,
        best_val_score: best_score,
    })
}

/// Feature matrix `n x u`: one pooled second-layer hidden state per segment.
/// Deterministic and identical whether segments are processed singly or in a
/// batch.
pub fn extract_features(
    model: &LstmModel,
    segments: &[&FeatureTensor],
) -> Result<Mat, LstmError> {
    let rows: Vec<Vec<f64>> = segments
        .par_iter()
        .map(|t| model.features(t))
        .collect::<Result<_, _>>()?;
    let u = model.hidden();
    let mut mat = Mat::zeros(rows.len(), u);
    for (r, row) in rows.iter().enumerate() {
        mat.row_mut(r).copy_from_slice(row);
    }
    Ok(mat)
}
