//! Small trainable predictors: a multilayer perceptron over flattened patch
//! features, with a classification head for distortion pre-training and a
//! single-sigmoid regression head for quality prediction.
//!
//! The full-scale pipeline fine-tunes large CNNs; at desk scale the same
//! two-stage protocol (classify pseudo-labels, then regress quality under
//! the rank-aware loss) runs on an MLP whose numerics are small enough to
//! verify against finite differences.

mod serialize;
mod train;

pub use serialize::{load_params, save_params};
pub use train::{
    finetune_regress, pretrain_classify, StopReason, TrainConfig, TrainReport,
};

use crate::error::{Error, Result};
use crate::rng::{mix, Rng};

/// Output head: `Classify(n)` ends in an n-way softmax, `Regress` in a
/// single sigmoid neuron so predictions live in (0, 1) like scaled MOS.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    Classify(usize),
    Regress,
}

impl Head {
    pub fn output_dim(&self) -> usize {
        match self {
            Head::Classify(n) => *n,
            Head::Regress => 1,
        }
    }
}

/// Dense network parameters. `layer_sizes` lists the input width and hidden
/// widths; the head layer is appended on top of the last hidden width.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub(crate) layer_sizes: Vec<usize>,
    /// Row-major `out x in` matrices, hidden layers first, head layer last.
    pub(crate) weights: Vec<Vec<f64>>,
    pub(crate) biases: Vec<Vec<f64>>,
    pub(crate) head: Head,
}

impl ModelParams {
    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn parameter_count(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }
}

/// Deterministic He-style uniform initialization: each weight is uniform in
/// `[-sqrt(6 / fan_in), sqrt(6 / fan_in)]`, biases start at zero.
pub fn init_params(layer_sizes: &[usize], head: Head, seed: u64) -> Result<ModelParams> {
    if layer_sizes.is_empty() {
        return Err(Error::InvalidConfig("layer size list is empty".into()));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::InvalidConfig("layer sizes must be positive".into()));
    }
    if head.output_dim() == 0 {
        return Err(Error::InvalidConfig("head output dimension is zero".into()));
    }
    let mut rng = Rng::from_seed(mix(&[seed, 0x494e_4954]));
    let mut dims: Vec<(usize, usize)> = layer_sizes
        .windows(2)
        .map(|w| (w[1], w[0]))
        .collect();
    dims.push((head.output_dim(), *layer_sizes.last().unwrap()));
    let mut weights = Vec::with_capacity(dims.len());
    let mut biases = Vec::with_capacity(dims.len());
    for (out, inp) in dims {
        let bound = (6.0 / inp as f64).sqrt();
        let w: Vec<f64> = (0..out * inp)
            .map(|_| rng.range_f64(-bound, bound))
            .collect();
        weights.push(w);
        biases.push(vec![0.0; out]);
    }
    Ok(ModelParams {
        layer_sizes: layer_sizes.to_vec(),
        weights,
        biases,
        head,
    })
}

/// Copies all hidden-layer weights and re-initializes only the head as a
/// fresh single-neuron regression layer. This is the transfer step between
/// distortion classification and quality regression.
pub fn transfer_to_regress(pretrained: &ModelParams, seed: u64) -> ModelParams {
    let mut params = pretrained.clone();
    let last_hidden = *params.layer_sizes.last().unwrap();
    let mut rng = Rng::from_seed(mix(&[seed, 0x5452_414e_5346_4552]));
    // A tenth of the He bound: pre-trained activations are already scaled,
    // and a full-scale fresh head saturates the sigmoid before the first
    // update.
    let bound = 0.1 * (6.0 / last_hidden as f64).sqrt();
    let head_idx = params.weights.len() - 1;
    params.weights[head_idx] = (0..last_hidden)
        .map(|_| rng.range_f64(-bound, bound))
        .collect();
    params.biases[head_idx] = vec![0.0];
    params.head = Head::Regress;
    params
}

/// Per-sample forward pass cache used by backprop.
#[derive(Debug, Clone)]
pub(crate) struct Cache {
    /// Post-activation values per layer, starting with the input itself.
    pub activations: Vec<Vec<f64>>,
    /// Head pre-activation (logits or the single pre-sigmoid value).
    pub head_z: Vec<f64>,
}

pub(crate) fn forward_cached(params: &ModelParams, x: &[f64]) -> Result<Cache> {
    if x.len() != params.input_dim() {
        return Err(Error::FeatureWidthMismatch {
            expected: params.input_dim(),
            got: x.len(),
        });
    }
    let n_hidden = params.weights.len() - 1;
    let mut activations = Vec::with_capacity(n_hidden + 1);
    activations.push(x.to_vec());
    for l in 0..n_hidden {
        let z = affine(
            &params.weights[l],
            &params.biases[l],
            activations.last().unwrap(),
        );
        // Leaky ReLU: a plain ReLU unit can die outright, and a dead
        // single-unit learner emits constant predictions that the rank
        // loss rejects as degenerate.
        activations.push(z.into_iter().map(leaky_relu).collect());
    }
    let head_z = affine(
        &params.weights[n_hidden],
        &params.biases[n_hidden],
        activations.last().unwrap(),
    );
    Ok(Cache {
        activations,
        head_z,
    })
}

pub(crate) const LEAKY_SLOPE: f64 = 0.01;

#[inline]
fn leaky_relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let out_dim = b.len();
    let in_dim = x.len();
    let mut z = b.to_vec();
    for o in 0..out_dim {
        let row = &w[o * in_dim..(o + 1) * in_dim];
        let mut acc = 0.0;
        for (wi, xi) in row.iter().zip(x) {
            acc += wi * xi;
        }
        z[o] += acc;
    }
    z
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

pub(crate) fn softmax_probs(z: &[f64]) -> Vec<f64> {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Regression prediction for one feature row, in (0, 1).
pub fn predict_one(params: &ModelParams, x: &[f64]) -> Result<f64> {
    match params.head {
        Head::Regress => Ok(sigmoid(forward_cached(params, x)?.head_z[0])),
        Head::Classify(_) => Err(Error::InvalidConfig(
            "predict_one requires a regression head".into(),
        )),
    }
}

/// Regression predictions for a batch.
pub fn predict(params: &ModelParams, batch: &[Vec<f64>]) -> Result<Vec<f64>> {
    batch.iter().map(|x| predict_one(params, x)).collect()
}

/// Class-probability rows for a batch; each row sums to 1.
pub fn predict_classes(params: &ModelParams, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    match params.head {
        Head::Classify(_) => batch
            .iter()
            .map(|x| Ok(softmax_probs(&forward_cached(params, x)?.head_z)))
            .collect(),
        Head::Regress => Err(Error::InvalidConfig(
            "predict_classes requires a classification head".into(),
        )),
    }
}

/// Parameter gradients with the same shapes as the model tensors.
#[derive(Debug, Clone)]
pub(crate) struct ParamGrads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl ParamGrads {
    pub fn zeros_like(params: &ModelParams) -> Self {
        ParamGrads {
            weights: params.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: params.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }
}

/// Accumulates one sample's gradient given dL/d(head_z). Walks the layers
/// backwards applying the ReLU mask between hidden layers.
pub(crate) fn backward_into(
    params: &ModelParams,
    cache: &Cache,
    head_delta: &[f64],
    grads: &mut ParamGrads,
) {
    let n_layers = params.weights.len();
    let mut delta = head_delta.to_vec();
    for l in (0..n_layers).rev() {
        let input = &cache.activations[l];
        let in_dim = input.len();
        for (o, &d) in delta.iter().enumerate() {
            grads.biases[l][o] += d;
            let row = &mut grads.weights[l][o * in_dim..(o + 1) * in_dim];
            for (g, &xi) in row.iter_mut().zip(input) {
                *g += d * xi;
            }
        }
        if l == 0 {
            break;
        }
        // Propagate to the previous activation; the leaky-ReLU factor is
        // recoverable from the activation's sign.
        let mut prev = vec![0.0; in_dim];
        for (o, &d) in delta.iter().enumerate() {
            let row = &params.weights[l][o * in_dim..(o + 1) * in_dim];
            for (p, &wi) in prev.iter_mut().zip(row) {
                *p += d * wi;
            }
        }
        for (p, &a) in prev.iter_mut().zip(input) {
            if a <= 0.0 {
                *p *= LEAKY_SLOPE;
            }
        }
        delta = prev;
    }
}
