//! Two-stage training: distortion-classification pre-training under
//! categorical cross-entropy, then quality regression under the rank-aware
//! loss. Both stages share one Adam loop with a piecewise learning-rate
//! schedule, an internal validation split (the last 20% of the seeded
//! shuffle), and patience-based early stopping.

use serde::{Deserialize, Serialize};

use super::{
    backward_into, forward_cached, sigmoid, softmax_probs, Head, ModelParams, ParamGrads,
};
use crate::error::{Error, Result};
use crate::qaloss::{qa_loss, LossConfig};
use crate::rng::{mix, Rng};

/// Optimizer and schedule settings.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub mini_batch: usize,
    pub max_epochs: usize,
    pub initial_lr: f64,
    /// Learning rate multiplies by this every `lr_drop_period` epochs.
    pub lr_drop_factor: f64,
    pub lr_drop_period: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Fraction of the (shuffled) training set held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mini_batch: 16,
            max_epochs: 100,
            initial_lr: 0.001,
            lr_drop_factor: 0.05,
            lr_drop_period: 20,
            patience: 20,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            val_fraction: 0.2,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mini_batch < 1 {
            return Err(Error::InvalidConfig("mini_batch must be >= 1".into()));
        }
        if self.max_epochs < 1 {
            return Err(Error::InvalidConfig("max_epochs must be >= 1".into()));
        }
        if !(self.initial_lr > 0.0) {
            return Err(Error::InvalidConfig("initial_lr must be positive".into()));
        }
        if !(self.lr_drop_factor > 0.0) || self.lr_drop_period == 0 {
            return Err(Error::InvalidConfig(
                "lr schedule needs a positive factor and period".into(),
            ));
        }
        if self.patience < 1 {
            return Err(Error::InvalidConfig("patience must be >= 1".into()));
        }
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::InvalidConfig(
                "val_fraction must lie strictly between 0 and 1".into(),
            ));
        }
        Ok(())
    }

    fn lr_at(&self, epoch: usize) -> f64 {
        self.initial_lr * self.lr_drop_factor.powi((epoch / self.lr_drop_period) as i32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    MaxEpochs,
    EarlyStop,
}

/// Per-epoch history plus where and why training stopped. The returned
/// parameters are the snapshot from `best_epoch`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub stop: StopReason,
    pub best_epoch: usize,
}

impl TrainReport {
    /// CSV with one row per epoch: `epoch,train_loss,val_loss`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for (i, (t, v)) in self.train_loss.iter().zip(&self.val_loss).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, t, v));
        }
        out
    }
}

struct Adam {
    m: ParamGrads,
    v: ParamGrads,
    step: u64,
}

impl Adam {
    fn new(params: &ModelParams) -> Self {
        Adam {
            m: ParamGrads::zeros_like(params),
            v: ParamGrads::zeros_like(params),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut ModelParams, grads: &ParamGrads, cfg: &TrainConfig, lr: f64) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for l in 0..params.weights.len() {
            adam_tensor(
                &mut params.weights[l],
                &grads.weights[l],
                &mut self.m.weights[l],
                &mut self.v.weights[l],
                cfg,
                lr,
                bc1,
                bc2,
            );
            adam_tensor(
                &mut params.biases[l],
                &grads.biases[l],
                &mut self.m.biases[l],
                &mut self.v.biases[l],
                cfg,
                lr,
                bc1,
                bc2,
            );
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn adam_tensor(
    theta: &mut [f64],
    grad: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    lr: f64,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..theta.len() {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        theta[i] -= lr * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}

/// Objective plugged into the shared loop: evaluates a batch, filling
/// parameter gradients, and scores a full set for validation.
trait Objective {
    fn batch_step(
        &self,
        params: &ModelParams,
        idx: &[usize],
        grads: &mut ParamGrads,
    ) -> Result<f64>;
    fn evaluate(&self, params: &ModelParams, idx: &[usize]) -> Result<f64>;
}

struct ClassifyObjective<'a> {
    data: &'a [(Vec<f64>, usize)],
}

impl Objective for ClassifyObjective<'_> {
    fn batch_step(
        &self,
        params: &ModelParams,
        idx: &[usize],
        grads: &mut ParamGrads,
    ) -> Result<f64> {
        let n = idx.len() as f64;
        let mut loss = 0.0;
        for &i in idx {
            let (x, class) = &self.data[i];
            let cache = forward_cached(params, x)?;
            let probs = softmax_probs(&cache.head_z);
            loss += -(probs[*class].max(1e-300)).ln();
            // d(CE)/d(logits) = probs - onehot, averaged over the batch.
            let mut delta = probs;
            delta[*class] -= 1.0;
            for d in &mut delta {
                *d /= n;
            }
            backward_into(params, &cache, &delta, grads);
        }
        Ok(loss / n)
    }

    fn evaluate(&self, params: &ModelParams, idx: &[usize]) -> Result<f64> {
        let mut loss = 0.0;
        for &i in idx {
            let (x, class) = &self.data[i];
            let cache = forward_cached(params, x)?;
            let probs = softmax_probs(&cache.head_z);
            loss += -(probs[*class].max(1e-300)).ln();
        }
        Ok(loss / idx.len() as f64)
    }
}

struct RegressObjective<'a> {
    data: &'a [(Vec<f64>, f64)],
    loss_cfg: &'a LossConfig,
}

/// The rank term is undefined when either soft-rank vector is constant.
/// Constant labels are a data defect and stay an error; constant
/// *predictions* are a transient training state (a freshly initialized or
/// collapsed learner), so the batch falls back to the MSE term with the
/// rank term scored at its worst value (zero correlation).
fn loss_with_rank_fallback(
    targets: &[f64],
    preds: &[f64],
    cfg: &LossConfig,
) -> crate::error::Result<crate::qaloss::LossValueAndGrad> {
    match qa_loss(targets, preds, cfg) {
        Err(Error::Degenerate(msg)) if cfg.lambda2 > 0.0 => {
            let target_ranks = crate::qaloss::soft_ranks(targets, cfg.temperature)?;
            let mean = target_ranks.iter().sum::<f64>() / target_ranks.len() as f64;
            let var: f64 = target_ranks.iter().map(|r| (r - mean) * (r - mean)).sum();
            if var < 1e-12 {
                return Err(Error::Degenerate(msg));
            }
            let mut out = if cfg.lambda1 > 0.0 {
                qa_loss(
                    targets,
                    preds,
                    &LossConfig {
                        lambda2: 0.0,
                        ..*cfg
                    },
                )?
            } else {
                crate::qaloss::LossValueAndGrad {
                    value: 0.0,
                    grad: vec![0.0; preds.len()],
                }
            };
            out.value += cfg.lambda2;
            Ok(out)
        }
        other => other,
    }
}

impl RegressObjective<'_> {
    fn predictions(&self, params: &ModelParams, idx: &[usize]) -> Result<(Vec<super::Cache>, Vec<f64>)> {
        let mut caches = Vec::with_capacity(idx.len());
        let mut preds = Vec::with_capacity(idx.len());
        for &i in idx {
            let cache = forward_cached(params, &self.data[i].0)?;
            preds.push(sigmoid(cache.head_z[0]));
            caches.push(cache);
        }
        Ok((caches, preds))
    }

    fn targets(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().map(|&i| self.data[i].1).collect()
    }
}

impl Objective for RegressObjective<'_> {
    fn batch_step(
        &self,
        params: &ModelParams,
        idx: &[usize],
        grads: &mut ParamGrads,
    ) -> Result<f64> {
        let (caches, preds) = self.predictions(params, idx)?;
        let out = loss_with_rank_fallback(&self.targets(idx), &preds, self.loss_cfg)?;
        for (k, cache) in caches.iter().enumerate() {
            let y = preds[k];
            let delta = out.grad[k] * y * (1.0 - y);
            backward_into(params, cache, &[delta], grads);
        }
        Ok(out.value)
    }

    fn evaluate(&self, params: &ModelParams, idx: &[usize]) -> Result<f64> {
        let (_, preds) = self.predictions(params, idx)?;
        Ok(loss_with_rank_fallback(&self.targets(idx), &preds, self.loss_cfg)?.value)
    }
}

/// Pre-trains a classification head on (features, class) pairs with
/// categorical cross-entropy.
pub fn pretrain_classify(
    params: &ModelParams,
    data: &[(Vec<f64>, usize)],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    let classes = match params.head {
        Head::Classify(n) => n,
        Head::Regress => {
            return Err(Error::InvalidConfig(
                "pretrain_classify requires a classification head".into(),
            ))
        }
    };
    let mut seen = std::collections::BTreeSet::new();
    for (x, class) in data {
        if *class >= classes {
            return Err(Error::InvalidConfig(format!(
                "class {class} out of range for a {classes}-way head"
            )));
        }
        if x.len() != params.input_dim() {
            return Err(Error::FeatureWidthMismatch {
                expected: params.input_dim(),
                got: x.len(),
            });
        }
        seen.insert(*class);
    }
    if seen.len() < 2 {
        return Err(Error::SingleClass);
    }
    train_loop(params, cfg, data.len(), &ClassifyObjective { data }, 1)
}

/// Fine-tunes a regression head on (features, scaled MOS) pairs under the
/// quality-aware loss. The rank term needs at least two samples per batch.
pub fn finetune_regress(
    params: &ModelParams,
    data: &[(Vec<f64>, f64)],
    loss_cfg: &LossConfig,
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainReport)> {
    if params.head != Head::Regress {
        return Err(Error::InvalidConfig(
            "finetune_regress requires a regression head".into(),
        ));
    }
    loss_cfg.validate()?;
    if cfg.mini_batch < 2 {
        return Err(Error::TooFewValues {
            need: 2,
            got: cfg.mini_batch,
        });
    }
    for (x, label) in data {
        if x.len() != params.input_dim() {
            return Err(Error::FeatureWidthMismatch {
                expected: params.input_dim(),
                got: x.len(),
            });
        }
        if !(0.0..=1.0).contains(label) {
            return Err(Error::InvalidConfig(format!(
                "regression label {label} outside [0, 1]"
            )));
        }
    }
    train_loop(
        params,
        cfg,
        data.len(),
        &RegressObjective { data, loss_cfg },
        2,
    )
}

fn train_loop(
    params: &ModelParams,
    cfg: &TrainConfig,
    n: usize,
    objective: &impl Objective,
    min_batch: usize,
) -> Result<(ModelParams, TrainReport)> {
    cfg.validate()?;
    let min_total = (min_batch.max(2) as f64 / (1.0 - cfg.val_fraction)).ceil() as usize + 1;
    if n < min_total.max(4) {
        return Err(Error::TooFewValues {
            need: min_total.max(4),
            got: n,
        });
    }

    // Validation split: last val_fraction of one seeded shuffle, fixed for
    // the whole run.
    let mut order: Vec<usize> = (0..n).collect();
    Rng::from_seed(mix(&[cfg.seed, 0x53504c_4954])).shuffle(&mut order);
    let n_val = ((n as f64 * cfg.val_fraction).round() as usize).clamp(1, n - 1);
    let val_idx: Vec<usize> = order.split_off(n - n_val);
    let train_idx = order;

    let mut params = params.clone();
    let mut adam = Adam::new(&params);
    let mut report = TrainReport {
        train_loss: Vec::new(),
        val_loss: Vec::new(),
        stop: StopReason::MaxEpochs,
        best_epoch: 0,
    };
    let mut best_val = f64::INFINITY;
    let mut best_params = params.clone();

    for epoch in 0..cfg.max_epochs {
        let lr = cfg.lr_at(epoch);
        let mut epoch_order = train_idx.clone();
        Rng::from_seed(mix(&[cfg.seed, 0x45504f_4348, epoch as u64])).shuffle(&mut epoch_order);

        let mut epoch_loss = 0.0;
        let mut batches = 0.0;
        let mut start = 0;
        while start < epoch_order.len() {
            let mut end = (start + cfg.mini_batch).min(epoch_order.len());
            // Never leave a trailing fragment below the objective's minimum
            // batch size; fold it into the final batch instead.
            if epoch_order.len() - end < min_batch {
                end = epoch_order.len();
            }
            let idx = &epoch_order[start..end];
            let mut grads = ParamGrads::zeros_like(&params);
            epoch_loss += objective.batch_step(&params, idx, &mut grads)?;
            batches += 1.0;
            adam.update(&mut params, &grads, cfg, lr);
            start = end;
        }
        report.train_loss.push(epoch_loss / batches);

        let val = objective.evaluate(&params, &val_idx)?;
        report.val_loss.push(val);
        if val < best_val {
            best_val = val;
            report.best_epoch = epoch;
            best_params = params.clone();
        } else if epoch - report.best_epoch >= cfg.patience {
            report.stop = StopReason::EarlyStop;
            break;
        }
    }
    Ok((best_params, report))
}
