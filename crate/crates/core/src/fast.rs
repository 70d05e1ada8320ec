//! Frank-Wolfe trainer with sparse per-iteration updates.
//!
//! The weight vector is represented as a stored vector times a
//! multiplicative scalar w_m, so the uniform shrink (1 - eta) w is O(1).
//! Margins, row derivatives, column gradients, and the running gap are all
//! maintained incrementally. A step touching feature j changes the margin of
//! every row with a nonzero score (the w_m shrink) plus the rows containing
//! j, so the update loop covers exactly those rows; rows that have never
//! met a selected feature keep a zero margin and cost nothing. Per-step work
//! is O(R * S_c) for R active rows -- independent of D, leaving the
//! coordinate-selection backend as the only D-dependent cost.

use std::time::Instant;

use rand::RngCore;

use crate::data::Dataset;
use crate::error::TrainError;
use crate::lazyheap::LazyMaxHeap;
use crate::loss::sigmoid;
use crate::metrics::{FlopCounter, MetricsRow, MetricsSink};
use crate::privacy::{exp_mech_scale, laplace_scale, PrivacyParams};
use crate::sampler::{BlsSampler, NoisyMaxSelector};
use crate::selector::CoordinateSelector;
use crate::trainer::{compute_y_bar, eta, sign_plus, Mode};

/// Fold the multiplicative scalar into the stored vectors below this value.
/// prod t/(t+2) decays polynomially, but very long runs need a safety valve.
pub const WM_FOLD_THRESHOLD: f64 = 1e-100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectorKind {
    LazyHeap,
    Bls,
    NoisyMax,
}

/// Which coordinates get their refreshed priority pushed after a step.
///
/// The lazy heap is only correct if every priority increase reaches it, so
/// it must see all coordinates whose gradient moved. The private samplers
/// follow the original update rule -- only coordinates reachable through the
/// selected feature's rows -- and tolerate the resulting staleness: their
/// utilities keep the same per-step sensitivity, so the privacy accounting
/// is unchanged, and the untouched priorities drift only by the global
/// shrink correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushPolicy {
    AllTouched,
    SelectedColumn,
}

/// All evolving trainer state. Actual weights are `w_m * w`; actual row
/// scores are `w_m * v_bar`.
#[derive(Debug, Clone)]
pub struct ModelState {
    pub w: Vec<f64>,
    pub w_m: f64,
    pub v_bar: Vec<f64>,
    pub q_bar: Vec<f64>,
    pub alpha: Vec<f64>,
    pub g_tilde: f64,
    pub y_bar: Vec<f64>,
    // rows with a nonzero stored score, i.e. whose margin moves under the
    // w_m shrink; grows monotonically, bounded by N
    active_rows: Vec<usize>,
    is_active: Vec<bool>,
}

impl ModelState {
    pub fn actual_weights(&self) -> Vec<f64> {
        self.w.iter().map(|&w| self.w_m * w).collect()
    }

    /// Fold w_m into the stored coefficients and row scores, resetting
    /// w_m = 1. O(||w||_0 + N).
    pub fn fold_scalar(&mut self) {
        for w in &mut self.w {
            if *w != 0.0 {
                *w *= self.w_m;
            }
        }
        for v in &mut self.v_bar {
            *v *= self.w_m;
        }
        self.w_m = 1.0;
    }

    /// Worst per-element deviation of the incremental state from a dense
    /// brute-force recomputation, each scaled by max(1, |reference|).
    pub fn consistency_error(&self, dataset: &Dataset) -> f64 {
        let n = dataset.n_rows();
        let n_f = n as f64;
        let w_actual = self.actual_weights();
        let mut worst = 0.0f64;
        let mut track = |got: f64, want: f64| {
            let err = (got - want).abs() / want.abs().max(1.0);
            if err > worst {
                worst = err;
            }
        };

        let mut alpha_ref = vec![0.0f64; dataset.n_cols()];
        let mut g_ref = 0.0f64;
        for i in 0..n {
            let v_ref: f64 = dataset
                .x
                .row(i)
                .iter()
                .map(|&(j, x)| x * w_actual[j])
                .sum();
            track(self.w_m * self.v_bar[i], v_ref);
            let q_ref = sigmoid(v_ref) / n_f;
            track(self.q_bar[i], q_ref);
            for &(j, x) in dataset.x.row(i) {
                alpha_ref[j] += q_ref * x;
            }
        }
        for j in 0..dataset.n_cols() {
            alpha_ref[j] -= self.y_bar[j];
            track(self.alpha[j], alpha_ref[j]);
            g_ref += alpha_ref[j] * w_actual[j];
        }
        track(self.g_tilde, g_ref);
        worst
    }
}

/// Dense one-time initialization: zero weights, uniform row derivatives
/// sigma(0)/N, full column gradient, all D selector priorities.
pub fn init_state(
    dataset: &Dataset,
    selector: &mut dyn CoordinateSelector,
    scale: f64,
    flops: &mut FlopCounter,
) -> ModelState {
    let n = dataset.n_rows();
    let d = dataset.n_cols();
    let n_f = n as f64;
    let y_bar = compute_y_bar(dataset, flops);

    let q0 = 0.5 / n_f;
    flops.add(1);
    let q_bar = vec![q0; n];

    let mut alpha = vec![0.0f64; d];
    for i in 0..n {
        for &(j, x) in dataset.x.row(i) {
            alpha[j] += q0 * x;
        }
        flops.add(2 * dataset.x.row(i).len() as u64);
    }
    for (a, yb) in alpha.iter_mut().zip(&y_bar) {
        *a -= yb;
    }
    flops.add(d as u64);

    for (j, a) in alpha.iter().enumerate() {
        selector.add(j, a.abs() * scale);
    }

    ModelState {
        w: vec![0.0; d],
        w_m: 1.0,
        v_bar: vec![0.0; n],
        q_bar,
        alpha,
        g_tilde: 0.0,
        y_bar,
        active_rows: Vec::new(),
        is_active: vec![false; n],
    }
}

/// One sparse Frank-Wolfe step at iteration t >= 1. Returns the selected
/// coordinate and the pre-update gap g_t.
#[allow(clippy::too_many_arguments)]
pub fn fast_step(
    state: &mut ModelState,
    dataset: &Dataset,
    selector: &mut dyn CoordinateSelector,
    t: usize,
    lambda: f64,
    scale: f64,
    policy: PushPolicy,
    flops: &mut FlopCounter,
    rng: &mut dyn RngCore,
) -> Result<(usize, f64), TrainError> {
    let n_f = dataset.n_rows() as f64;
    let j = selector.get_next(&mut |k| state.alpha[k].abs() * scale, rng);
    let alpha_j = state.alpha[j];
    if !alpha_j.is_finite() {
        return Err(TrainError::NonFiniteGradient { iteration: t });
    }

    let d_tilde = -lambda * sign_plus(alpha_j);
    let g_t = state.g_tilde - d_tilde * alpha_j;
    let step = eta(t);
    flops.add(6);

    state.w_m *= 1.0 - step;
    state.w[j] += step * d_tilde / state.w_m;
    state.g_tilde = state.g_tilde * (1.0 - step) + step * d_tilde * alpha_j;
    flops.add(10);

    for &(i, xij) in dataset.x.col(j) {
        if !state.is_active[i] {
            state.is_active[i] = true;
            state.active_rows.push(i);
        }
        state.v_bar[i] += step * d_tilde * xij / state.w_m;
        flops.add(4);
    }
    // refresh every row whose margin moved: the rows above plus every other
    // active row, all shrunk through w_m
    let mut gammas = Vec::with_capacity(state.active_rows.len());
    for &i in &state.active_rows {
        let gamma = sigmoid(state.w_m * state.v_bar[i]) / n_f - state.q_bar[i];
        state.q_bar[i] += gamma;
        flops.add(8);
        gammas.push(gamma);
        if gamma == 0.0 {
            continue;
        }
        let row = dataset.x.row(i);
        let mut dot_w = 0.0f64;
        for &(k, xik) in row {
            state.alpha[k] += gamma * xik;
            dot_w += xik * state.w[k];
        }
        flops.add(4 * row.len() as u64);
        state.g_tilde += gamma * dot_w * state.w_m;
        flops.add(3);
    }

    // push final priorities per policy
    match policy {
        PushPolicy::AllTouched => {
            for (&i, &gamma) in state.active_rows.iter().zip(&gammas) {
                if gamma == 0.0 {
                    continue;
                }
                for &(k, _) in dataset.x.row(i) {
                    selector.update(k, state.alpha[k].abs() * scale);
                }
            }
        }
        PushPolicy::SelectedColumn => {
            for &(i, _) in dataset.x.col(j) {
                for &(k, _) in dataset.x.row(i) {
                    selector.update(k, state.alpha[k].abs() * scale);
                }
            }
        }
    }

    if state.w_m < WM_FOLD_THRESHOLD {
        state.fold_scalar();
    }
    Ok((j, g_t))
}

pub struct FastRun {
    pub weights: Vec<f64>,
    pub flops: u64,
    pub pops: u64,
    pub selections: Vec<usize>,
}

/// Run init plus T-1 fast steps with the chosen selector backend.
pub fn train_fast(
    dataset: &Dataset,
    p: &PrivacyParams,
    kind: SelectorKind,
    mode: Mode,
    rng: &mut dyn RngCore,
    sink: &mut dyn MetricsSink,
) -> Result<FastRun, TrainError> {
    match (kind, mode) {
        (SelectorKind::LazyHeap, Mode::Private) => {
            return Err(TrainError::SelectorModeMismatch {
                selector: kind,
                required: Mode::NonPrivate,
            })
        }
        (SelectorKind::Bls | SelectorKind::NoisyMax, Mode::NonPrivate) => {
            return Err(TrainError::SelectorModeMismatch {
                selector: kind,
                required: Mode::Private,
            })
        }
        _ => {}
    }
    let d = dataset.n_cols();
    let scale = match kind {
        SelectorKind::Bls => exp_mech_scale(p),
        _ => 1.0,
    };
    let mut selector: Box<dyn CoordinateSelector> = match kind {
        SelectorKind::LazyHeap => Box::new(LazyMaxHeap::new(d)),
        SelectorKind::Bls => Box::new(BlsSampler::new(d)),
        SelectorKind::NoisyMax => Box::new(NoisyMaxSelector::new(d, laplace_scale(p))),
    };
    let policy = match kind {
        SelectorKind::LazyHeap => PushPolicy::AllTouched,
        SelectorKind::Bls | SelectorKind::NoisyMax => PushPolicy::SelectedColumn,
    };

    let mut flops = FlopCounter::new();
    let mut state = init_state(dataset, selector.as_mut(), scale, &mut flops);
    let mut selections = Vec::with_capacity(p.t_max.saturating_sub(1));
    let start = Instant::now();
    for t in 1..p.t_max {
        let (j, g) = fast_step(
            &mut state,
            dataset,
            selector.as_mut(),
            t,
            p.lambda,
            scale,
            policy,
            &mut flops,
            rng,
        )?;
        selections.push(j);
        sink.record(MetricsRow {
            iteration: t,
            g,
            flops: flops.total(),
            q_pops: selector.pops(),
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(FastRun {
        weights: state.actual_weights(),
        flops: flops.total(),
        pops: selector.pops(),
        selections,
    })
}
