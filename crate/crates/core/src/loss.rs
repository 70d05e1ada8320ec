//! Logistic loss, its scalar derivative, and mean-objective evaluation.
//!
//! All trainer-side gradient quantities carry the 1/N normalization of the
//! mean objective, so the per-row sensitivity used by the privacy accounting
//! is L*lambda/n.

use crate::data::Dataset;
use crate::error::EvalError;

/// Scalar loss configuration: the L1-Lipschitz constant of the loss.
#[derive(Debug, Clone, Copy)]
pub struct LossSpec {
    pub lipschitz_l: f64,
}

impl Default for LossSpec {
    /// L = 1 is the logistic derivative bound, valid when ||x_i||_inf <= 1.
    fn default() -> Self {
        LossSpec { lipschitz_l: 1.0 }
    }
}

/// Numerically stable logistic function, exact to f64 for |v| up to ~745.
#[inline]
pub fn sigmoid(v: f64) -> f64 {
    // exp of a nonpositive argument never overflows
    let e = (-v.abs()).exp();
    if v >= 0.0 {
        1.0 / (1.0 + e)
    } else {
        e / (1.0 + e)
    }
}

/// Derivative of the logistic loss w.r.t. the margin: sigma(v) - y.
#[inline]
pub fn grad_scalar(v: f64, y: f64) -> f64 {
    sigmoid(v) - y
}

/// Stable pointwise logistic loss: ln(1 + e^v) - y*v.
#[inline]
pub fn loss_scalar(v: f64, y: f64) -> f64 {
    v.max(0.0) + (-v.abs()).exp().ln_1p() - y * v
}

/// Mean logistic loss over all rows, O(nnz + N).
pub fn objective(dataset: &Dataset, w_actual: &[f64]) -> Result<f64, EvalError> {
    if w_actual.len() != dataset.n_cols() {
        return Err(EvalError::DimensionMismatch {
            weights: w_actual.len(),
            features: dataset.n_cols(),
        });
    }
    let n = dataset.n_rows();
    let mut total = 0.0;
    for i in 0..n {
        let margin: f64 = dataset
            .x
            .row(i)
            .iter()
            .map(|&(j, v)| v * w_actual[j])
            .sum();
        total += loss_scalar(margin, dataset.y[i]);
    }
    Ok(total / n as f64)
}
