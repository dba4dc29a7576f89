//! The quality-aware training loss and its hyperparameter grid search.
//!
//! The loss combines a mean-squared-error term with a rank-agreement term:
//! `lambda1 * MSE + lambda2 * (1 - soft_srocc)`. Rank agreement is made
//! differentiable by replacing hard ranks with a temperature-controlled
//! softmax over the scores; the surrogate is the Pearson correlation between
//! the softmax vectors of ground truth and predictions. Gradients with
//! respect to the predictions come from the reverse-mode tape in
//! [`crate::autodiff`], and are exact for the surrogate (not a finite
//! difference).
//!
//! Note the surrogate equals 1 at perfect prediction and is shift-invariant,
//! but unlike true SROCC it is not invariant under general monotone
//! transforms, and for strongly separated scores at low temperature it
//! saturates toward correlations of near-one-hot vectors rather than hard
//! rank correlations.

use serde::{Deserialize, Serialize};

use crate::autodiff::{grad_of, Tape, Var};
use crate::error::{Error, Result};

/// Variance floor below which soft-rank vectors are treated as constant.
const DEGENERACY_EPS: f64 = 1e-12;

/// How the squared-error term is aggregated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseMode {
    /// Mean over the batch; loss magnitude is batch-size invariant.
    #[default]
    Mean,
    /// Half the sum of squares (no 1/n), for literal reproduction of setups
    /// that use the unnormalized form.
    HalfSum,
}

/// Weights and temperature for the composite loss.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct LossConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub temperature: f64,
    pub mse_mode: MseMode,
}

impl Default for LossConfig {
    fn default() -> Self {
        // The grid optimum (1/2, 1/2); temperature 1 reproduces the plain
        // softmax surrogate.
        LossConfig {
            lambda1: 0.5,
            lambda2: 0.5,
            temperature: 1.0,
            mse_mode: MseMode::Mean,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 || self.lambda1 + self.lambda2 <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "loss weights must be nonnegative with a positive sum, got ({}, {})",
                self.lambda1, self.lambda2
            )));
        }
        if !(self.temperature > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "softmax temperature must be positive, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn mse_only(lambda1: f64) -> Self {
        LossConfig {
            lambda1,
            lambda2: 0.0,
            ..Default::default()
        }
    }
}

/// Loss value together with its exact gradient w.r.t. the predictions.
#[derive(Debug, Clone)]
pub struct LossValueAndGrad {
    pub value: f64,
    pub grad: Vec<f64>,
}

/// Softmax weights `exp(y_i / t) / sum_j exp(y_j / t)`, computed with
/// max-subtraction. The output sums to 1 and strictly preserves the input
/// ordering.
pub fn soft_ranks(y: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(temperature > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "softmax temperature must be positive, got {temperature}"
        )));
    }
    let scaled: Vec<f64> = y.iter().map(|v| v / temperature).collect();
    let max = scaled.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scaled.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / sum).collect())
}

/// Differentiable rank-agreement surrogate: Pearson correlation between the
/// softmax vectors of the two score lists. Equals 1 when the predictions
/// reproduce the ground truth; errors when either softmax vector is
/// (numerically) constant.
pub fn soft_srocc(y_true: &[f64], y_pred: &[f64], temperature: f64) -> Result<f64> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.len() < 2 {
        return Err(Error::TooFewValues {
            need: 2,
            got: y_true.len(),
        });
    }
    let rt = soft_ranks(y_true, temperature)?;
    let rp = soft_ranks(y_pred, temperature)?;
    pearson_guarded(&rt, &rp)
}

fn pearson_guarded(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx < DEGENERACY_EPS || syy < DEGENERACY_EPS {
        return Err(Error::Degenerate("constant soft-rank vector".into()));
    }
    Ok(sxy / (sxx.sqrt() * syy.sqrt()))
}

/// Composite loss value plus the exact analytic gradient w.r.t. `y_pred`,
/// accumulated in reverse mode through the softmax and Pearson terms.
pub fn qa_loss(y_true: &[f64], y_pred: &[f64], cfg: &LossConfig) -> Result<LossValueAndGrad> {
    cfg.validate()?;
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    let n = y_true.len();
    if n < 2 {
        return Err(Error::TooFewValues { need: 2, got: n });
    }
    if y_true.iter().chain(y_pred).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }

    let mut tape = Tape::with_capacity(24 * n + 16);
    let preds: Vec<Var> = y_pred.iter().map(|&v| tape.leaf(v)).collect();

    // Squared-error term.
    let sq: Vec<Var> = preds
        .iter()
        .zip(y_true)
        .map(|(&p, &t)| {
            let d = tape.add_const(p, -t);
            tape.mul(d, d)
        })
        .collect();
    let mse = match cfg.mse_mode {
        MseMode::Mean => tape.mean(&sq),
        MseMode::HalfSum => {
            let s = tape.sum(&sq);
            tape.mul_const(s, 0.5)
        }
    };
    let mut loss = tape.mul_const(mse, cfg.lambda1);

    // Rank term; skipped entirely when unweighted so constant batches stay
    // legal under a pure-MSE configuration.
    if cfg.lambda2 > 0.0 {
        let rank_true = soft_ranks(y_true, cfg.temperature)?;
        let corr = soft_corr_on_tape(&mut tape, &preds, &rank_true, cfg.temperature)?;
        let neg = tape.mul_const(corr, -1.0);
        let one_minus = tape.add_const(neg, 1.0);
        let weighted = tape.mul_const(one_minus, cfg.lambda2);
        loss = tape.add(loss, weighted);
    }

    let value = tape.value(loss);
    if !value.is_finite() {
        return Err(Error::Degenerate("non-finite loss value".into()));
    }
    let adjoints = tape.gradient(loss);
    let grad = preds.iter().map(|&p| grad_of(&adjoints, p)).collect();
    Ok(LossValueAndGrad { value, grad })
}

/// Builds Pearson(softmax(y_true), softmax(preds)) on the tape. The ground
/// truth side is constant; only the prediction side carries gradients.
fn soft_corr_on_tape(
    tape: &mut Tape,
    preds: &[Var],
    rank_true: &[f64],
    temperature: f64,
) -> Result<Var> {
    let n = preds.len();

    // Softmax with max-subtraction. The max shift is treated as a constant:
    // softmax is exactly shift-invariant, so the subtraction changes neither
    // the value nor the gradient, only the floating-point range.
    let scaled: Vec<Var> = preds
        .iter()
        .map(|&p| tape.mul_const(p, 1.0 / temperature))
        .collect();
    let max = scaled
        .iter()
        .map(|&v| tape.value(v))
        .fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<Var> = scaled
        .iter()
        .map(|&v| {
            let sh = tape.add_const(v, -max);
            tape.exp(sh)
        })
        .collect();
    let denom = tape.sum(&exps);
    let ranks: Vec<Var> = exps.iter().map(|&e| tape.div(e, denom)).collect();

    // Centered ground-truth ranks (constants).
    let mean_true = rank_true.iter().sum::<f64>() / n as f64;
    let dev_true: Vec<f64> = rank_true.iter().map(|t| t - mean_true).collect();
    let var_true: f64 = dev_true.iter().map(|d| d * d).sum();
    if var_true < DEGENERACY_EPS {
        return Err(Error::Degenerate("constant soft-rank vector".into()));
    }

    let mean_pred = tape.mean(&ranks);
    let dev_pred: Vec<Var> = ranks.iter().map(|&r| tape.sub(r, mean_pred)).collect();
    let cov_terms: Vec<Var> = dev_pred
        .iter()
        .zip(&dev_true)
        .map(|(&d, &t)| tape.mul_const(d, t))
        .collect();
    let cov = tape.sum(&cov_terms);
    let var_terms: Vec<Var> = dev_pred.iter().map(|&d| tape.mul(d, d)).collect();
    let var_pred = tape.sum(&var_terms);
    if tape.value(var_pred) < DEGENERACY_EPS {
        return Err(Error::Degenerate("constant soft-rank vector".into()));
    }
    let sd_pred = tape.sqrt(var_pred);
    let denom = tape.mul_const(sd_pred, var_true.sqrt());
    Ok(tape.div(cov, denom))
}

/// The four weight values evaluated on each axis of the grid search.
pub const LAMBDA_GRID: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

/// Full 16-cell table plus the argmin.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSearchResult {
    /// `table[i][j]` is the loss at `(lambda1 = LAMBDA_GRID[i], lambda2 = LAMBDA_GRID[j])`.
    pub table: [[f64; 4]; 4],
    pub best: (f64, f64),
    pub best_value: f64,
}

/// Evaluates the 16 weight combinations and returns the table and argmin.
/// Ties resolve to the smallest `lambda1`, then the smallest `lambda2`.
pub fn grid_search(
    mut eval_fn: impl FnMut(f64, f64) -> Result<f64>,
) -> Result<GridSearchResult> {
    let mut table = [[0.0; 4]; 4];
    let mut best = (LAMBDA_GRID[0], LAMBDA_GRID[0]);
    let mut best_value = f64::INFINITY;
    for (i, &l1) in LAMBDA_GRID.iter().enumerate() {
        for (j, &l2) in LAMBDA_GRID.iter().enumerate() {
            let value = eval_fn(l1, l2).map_err(|e| Error::GridCell {
                lambda1: l1,
                lambda2: l2,
                source: Box::new(e),
            })?;
            table[i][j] = value;
            if value < best_value {
                best_value = value;
                best = (l1, l2);
            }
        }
    }
    Ok(GridSearchResult {
        table,
        best,
        best_value,
    })
}

impl GridSearchResult {
    /// Long-format CSV, one row per grid cell.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda1,lambda2,loss\n");
        for (i, &l1) in LAMBDA_GRID.iter().enumerate() {
            for (j, &l2) in LAMBDA_GRID.iter().enumerate() {
                out.push_str(&format!("{},{},{}\n", l1, l2, self.table[i][j]));
            }
        }
        out
    }
}
