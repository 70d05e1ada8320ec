//! Pieces shared by the baseline and fast trainers: the step-size schedule,
//! the sign convention, and initialization of the label-gradient term.

use crate::data::Dataset;
use crate::metrics::FlopCounter;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Private,
    NonPrivate,
}

/// Classic Frank-Wolfe schedule eta_t = 2 / (t + 2).
#[inline]
pub fn eta(t: usize) -> f64 {
    2.0 / (t as f64 + 2.0)
}

/// sign with sign(0) = +1, so the selected vertex is always a true vertex.
#[inline]
pub fn sign_plus(x: f64) -> f64 {
    if x < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// y_bar = (1/N) X^T y, the constant label term of the gradient. O(N * S_c).
pub fn compute_y_bar(dataset: &Dataset, flops: &mut FlopCounter) -> Vec<f64> {
    let n = dataset.n_rows() as f64;
    let mut y_bar = vec![0.0f64; dataset.n_cols()];
    for i in 0..dataset.n_rows() {
        let yi = dataset.y[i];
        if yi == 0.0 {
            continue;
        }
        for &(j, v) in dataset.x.row(i) {
            y_bar[j] += yi * v;
        }
        flops.add(2 * dataset.x.row(i).len() as u64);
    }
    for v in &mut y_bar {
        *v /= n;
    }
    flops.add(y_bar.len() as u64);
    y_bar
}
