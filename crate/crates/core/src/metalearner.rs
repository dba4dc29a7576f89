//! Stepwise-linear-regression meta-learner over base-predictor outputs.
//!
//! Forward selection: each round trial-fits every remaining candidate
//! together with the already-selected columns, and accepts the candidate
//! with the best R-squared among those whose own fitted coefficient clears
//! the magnitude threshold. Selection stops when no candidate qualifies;
//! the returned model is refit on the selected columns only. There is no
//! elimination step, and ties break toward the lowest predictor index so
//! the procedure is deterministic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default coefficient-magnitude threshold for accepting a base predictor.
pub const DEFAULT_THRESHOLD: f64 = 0.05;

/// Base-predictor columns plus the regression target.
#[derive(Debug, Clone)]
pub struct PredictionMatrix {
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
}

impl PredictionMatrix {
    pub fn new(columns: Vec<Vec<f64>>, target: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidConfig("no predictor columns".into()));
        }
        let n = target.len();
        for (i, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::LengthMismatch {
                    left: col.len(),
                    right: n,
                });
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite);
            }
            let _ = i;
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        if n < columns.len() + 2 {
            return Err(Error::TooFewValues {
                need: columns.len() + 2,
                got: n,
            });
        }
        Ok(PredictionMatrix { columns, target })
    }

    pub fn n_predictors(&self) -> usize {
        self.columns.len()
    }

    pub fn n_samples(&self) -> usize {
        self.target.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }
}

/// One selected predictor and its coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetaTerm {
    pub index: usize,
    pub coef: f64,
}

/// The fitted linear combination. `residuals` (target minus fit, kept from
/// the final refit) are excluded from serialization; the JSON document is
/// `{intercept, terms, r_squared}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetaModel {
    pub intercept: f64,
    pub terms: Vec<MetaTerm>,
    #[serde(skip)]
    pub residuals: Vec<f64>,
    pub r_squared: f64,
}

impl MetaModel {
    /// Renders the fitted equation with 1-based predictor serials, e.g.
    /// `Y = 0.05 + 0.40*P7(X) + 0.35*P1(X)`.
    pub fn equation(&self) -> String {
        let mut s = format!("Y = {:.4}", self.intercept);
        for term in &self.terms {
            let sign = if term.coef < 0.0 { '-' } else { '+' };
            s.push_str(&format!(
                " {} {:.4}*P{}(X)",
                sign,
                term.coef.abs(),
                term.index + 1
            ));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("meta model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidConfig(format!("meta model: {e}")))
    }
}

/// Trace of one accepted selection round, for auditing the threshold rule.
#[derive(Debug, Clone)]
pub struct SelectionRound {
    pub candidate: usize,
    /// The candidate's own coefficient in the trial fit that accepted it.
    pub candidate_coef: f64,
    pub r_squared: f64,
}

/// Ordinary least squares with intercept on the given columns. Returns
/// `(coefficients, r_squared)` where `coefficients[0]` is the intercept and
/// `coefficients[1 + i]` matches `columns[i]`.
pub fn ols_fit(columns: &[&[f64]], target: &[f64]) -> Result<(Vec<f64>, f64)> {
    let n = target.len();
    let p = columns.len() + 1; // intercept column
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::LengthMismatch {
            left: columns.iter().map(|c| c.len()).max().unwrap_or(0),
            right: n,
        });
    }
    if n <= columns.len() + 1 {
        return Err(Error::TooFewValues {
            need: columns.len() + 2,
            got: n,
        });
    }

    // Normal equations: (X'X) beta = X'y with X = [1 | columns].
    let x = |row: usize, col: usize| -> f64 {
        if col == 0 {
            1.0
        } else {
            columns[col - 1][row]
        }
    };
    let mut xtx = vec![vec![0.0; p]; p];
    let mut xty = vec![0.0; p];
    for row in 0..n {
        for a in 0..p {
            let xa = x(row, a);
            xty[a] += xa * target[row];
            for b in a..p {
                xtx[a][b] += xa * x(row, b);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[a][b] = xtx[b][a];
        }
    }
    let beta = solve_symmetric(xtx, xty)?;

    let mean_y = target.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for row in 0..n {
        let fit: f64 = (0..p).map(|a| beta[a] * x(row, a)).sum();
        ss_res += (target[row] - fit) * (target[row] - fit);
        ss_tot += (target[row] - mean_y) * (target[row] - mean_y);
    }
    if ss_tot <= 0.0 {
        return Err(Error::Degenerate("constant regression target".into()));
    }
    Ok((beta, 1.0 - ss_res / ss_tot))
}

/// Gaussian elimination with partial pivoting; errors on singular systems.
fn solve_symmetric(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    let scale: f64 = (0..n)
        .map(|i| a[i][i].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    for col in 0..n {
        let (pivot_row, pivot) = (col..n)
            .map(|r| (r, a[r][col]))
            .max_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
            .unwrap();
        if pivot.abs() < 1e-10 * scale {
            return Err(Error::SingularSystem);
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut out = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * out[k];
        }
        out[col] = acc / a[col][col];
    }
    Ok(out)
}

/// Greedy forward selection with the coefficient-magnitude threshold; see
/// the module docs for the exact acceptance rule.
pub fn slr_fit(data: &PredictionMatrix, threshold: f64) -> Result<MetaModel> {
    slr_fit_traced(data, threshold).map(|(model, _)| model)
}

/// [`slr_fit`] plus the per-round acceptance trace.
pub fn slr_fit_traced(
    data: &PredictionMatrix,
    threshold: f64,
) -> Result<(MetaModel, Vec<SelectionRound>)> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "selection threshold must be positive, got {threshold}"
        )));
    }
    let p = data.n_predictors();
    let mut selected: Vec<usize> = Vec::new();
    let mut trace: Vec<SelectionRound> = Vec::new();

    loop {
        let mut best: Option<SelectionRound> = None;
        for candidate in 0..p {
            if selected.contains(&candidate) {
                continue;
            }
            let mut cols: Vec<&[f64]> = Vec::with_capacity(selected.len() + 1);
            cols.push(data.column(candidate));
            for &s in &selected {
                cols.push(data.column(s));
            }
            // Duplicate or collinear candidates make the trial fit singular;
            // they are skipped, which deterministically rejects the
            // later-indexed duplicate of an already-selected column.
            let (beta, r2) = match ols_fit(&cols, data.target()) {
                Ok(fit) => fit,
                Err(Error::SingularSystem) => continue,
                Err(other) => return Err(other),
            };
            let coef = beta[1]; // the candidate's own coefficient
            if coef.abs() < threshold {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => r2 > b.r_squared,
            };
            if better {
                best = Some(SelectionRound {
                    candidate,
                    candidate_coef: coef,
                    r_squared: r2,
                });
            }
        }
        match best {
            Some(round) => {
                selected.push(round.candidate);
                trace.push(round);
            }
            None => break,
        }
    }

    // Final refit on the selected set (intercept-only if nothing survived).
    let cols: Vec<&[f64]> = selected.iter().map(|&s| data.column(s)).collect();
    let (beta, r_squared, residuals) = if selected.is_empty() {
        let mean = data.target().iter().sum::<f64>() / data.n_samples() as f64;
        let residuals = data.target().iter().map(|y| y - mean).collect();
        (vec![mean], 0.0, residuals)
    } else {
        let (beta, r2) = ols_fit(&cols, data.target())?;
        let residuals = (0..data.n_samples())
            .map(|row| {
                let fit: f64 = beta[0]
                    + selected
                        .iter()
                        .enumerate()
                        .map(|(k, &s)| beta[k + 1] * data.column(s)[row])
                        .sum::<f64>();
                data.target()[row] - fit
            })
            .collect();
        (beta, r2, residuals)
    };

    let terms = selected
        .iter()
        .enumerate()
        .map(|(k, &index)| MetaTerm {
            index,
            coef: beta[k + 1],
        })
        .collect();
    Ok((
        MetaModel {
            intercept: beta[0],
            terms,
            residuals,
            r_squared,
        },
        trace,
    ))
}

/// Evaluates the fitted combination on one sample's base predictions,
/// indexed by predictor serial.
pub fn meta_predict(model: &MetaModel, predictions: &[f64]) -> Result<f64> {
    let mut y = model.intercept;
    for term in &model.terms {
        let p = predictions
            .get(term.index)
            .ok_or(Error::MissingPredictor(term.index))?;
        y += term.coef * p;
    }
    Ok(y)
}
