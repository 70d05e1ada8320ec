//! Reference Frank-Wolfe trainer with full per-iteration recomputation.
//!
//! Every iteration rebuilds the margins, row derivatives, and column
//! gradients from scratch, then selects the coordinate of maximal |alpha|
//! (plus per-coordinate Laplace noise in private mode). Serves as the
//! correctness oracle for the fast trainer and as the timing baseline.

use std::time::Instant;

use rand::RngCore;

use crate::data::Dataset;
use crate::error::TrainError;
use crate::loss::sigmoid;
use crate::metrics::{FlopCounter, MetricsRow, MetricsSink};
use crate::privacy::{laplace_scale, sample_laplace, PrivacyParams};
use crate::trainer::{compute_y_bar, eta, sign_plus, Mode};

pub struct BaselineRun {
    pub weights: Vec<f64>,
    pub flops: u64,
    pub selections: Vec<usize>,
}

/// Train for T-1 iterations (the t = 1..T-1 loop); T = 1 returns the zero
/// vector. Returns the final weights.
pub fn train_baseline(
    dataset: &Dataset,
    p: &PrivacyParams,
    mode: Mode,
    rng: &mut dyn RngCore,
    sink: &mut dyn MetricsSink,
) -> Result<BaselineRun, TrainError> {
    let n = dataset.n_rows();
    let d = dataset.n_cols();
    let n_f = n as f64;
    let lambda = p.lambda;
    let noise_b = match mode {
        Mode::Private => laplace_scale(p),
        Mode::NonPrivate => 0.0,
    };

    let mut flops = FlopCounter::new();
    let y_bar = compute_y_bar(dataset, &mut flops);
    let mut w = vec![0.0f64; d];
    let mut selections = Vec::with_capacity(p.t_max.saturating_sub(1));
    let start = Instant::now();

    for t in 1..p.t_max {
        // v = X w, row-wise
        let mut v = vec![0.0f64; n];
        for i in 0..n {
            v[i] = dataset.x.row(i).iter().map(|&(j, x)| x * w[j]).sum();
            flops.add(2 * dataset.x.row(i).len() as u64);
        }
        // q = sigma(v) / N
        let mut q = vec![0.0f64; n];
        for i in 0..n {
            q[i] = sigmoid(v[i]) / n_f;
        }
        flops.add(5 * n as u64);
        // z = X^T q
        let mut z = vec![0.0f64; d];
        for i in 0..n {
            for &(j, x) in dataset.x.row(i) {
                z[j] += q[i] * x;
            }
            flops.add(2 * dataset.x.row(i).len() as u64);
        }
        // alpha = z - y_bar
        let mut alpha = z;
        for j in 0..d {
            alpha[j] -= y_bar[j];
        }
        flops.add(d as u64);
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(TrainError::NonFiniteGradient { iteration: t });
        }

        // coordinate selection; selector arithmetic is not charged to flops
        let mut j_sel = 0usize;
        let mut best = f64::NEG_INFINITY;
        for j in 0..d {
            let score = match mode {
                Mode::Private => (alpha[j] + sample_laplace(noise_b, rng)).abs(),
                Mode::NonPrivate => alpha[j].abs(),
            };
            if score > best {
                best = score;
                j_sel = j;
            }
        }

        selections.push(j_sel);

        // d = -w; d[j] -= lambda * sign(alpha[j]); g = -<alpha, d>
        let mut dir = vec![0.0f64; d];
        for j in 0..d {
            dir[j] = -w[j];
        }
        flops.add(d as u64);
        dir[j_sel] -= lambda * sign_plus(alpha[j_sel]);
        flops.add(2);
        let mut g = 0.0f64;
        for j in 0..d {
            g -= alpha[j] * dir[j];
        }
        flops.add(2 * d as u64);

        let step = eta(t);
        flops.add(2);
        for j in 0..d {
            w[j] += step * dir[j];
        }
        flops.add(2 * d as u64);

        sink.record(MetricsRow {
            iteration: t,
            g,
            flops: flops.total(),
            q_pops: 0,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(BaselineRun {
        weights: w,
        flops: flops.total(),
        selections,
    })
}
