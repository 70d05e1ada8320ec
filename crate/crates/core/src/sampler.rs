//! Private coordinate selectors: the Big-Step Little-Step exponential
//! sampler, a dense softmax oracle, and a linear-scan Laplace noisy-max.
//!
//! The BLS sampler keeps log-weights v, per-group log-sum-exp values c over
//! contiguous ceil(sqrt(D))-sized blocks, and a global log-sum-exp z_sigma.
//! Draws run a single A-ExpJ weighted-reservoir pass (reservoir size 1) that
//! skips whole groups whose total normalized weight fits under the current
//! jump budget, inspecting items individually only inside the group that
//! crosses it.

use rand::RngCore;

use crate::privacy::{sample_laplace, uniform_open};
use crate::selector::CoordinateSelector;

/// Underflowed items keep at least this selection weight.
pub const WEIGHT_FLOOR: f64 = 1e-15;

/// Exact softmax draw over log-weights via dense inverse-CDF, O(D).
/// Test oracle for the BLS sampler and fallback for degenerate sizes.
pub fn oracle_sample(v: &[f64], rng: &mut dyn RngCore) -> usize {
    assert!(!v.is_empty());
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut target = uniform_open(rng) * total;
    for (i, &w) in weights.iter().enumerate() {
        target -= w;
        if target <= 0.0 {
            return i;
        }
    }
    v.len() - 1
}

#[derive(Debug, Clone)]
pub struct BlsSampler {
    v: Vec<f64>,
    group_size: usize,
    c: Vec<f64>,
    z_sigma: f64,
    updates_since_rebuild: usize,
    inspected: u64,
}

fn log_sum_exp(xs: impl Iterator<Item = f64> + Clone) -> f64 {
    let m = xs.clone().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    m + xs.map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl BlsSampler {
    pub fn new(d: usize) -> Self {
        assert!(d >= 1);
        let group_size = (d as f64).sqrt().ceil() as usize;
        let n_groups = d.div_ceil(group_size);
        BlsSampler {
            v: vec![f64::NEG_INFINITY; d],
            group_size,
            c: vec![f64::NEG_INFINITY; n_groups],
            z_sigma: f64::NEG_INFINITY,
            updates_since_rebuild: 0,
            inspected: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn log_weight(&self, i: usize) -> f64 {
        self.v[i]
    }

    pub fn z_sigma(&self) -> f64 {
        self.z_sigma
    }

    pub fn group_sum(&self, k: usize) -> f64 {
        self.c[k]
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    fn group_range(&self, k: usize) -> std::ops::Range<usize> {
        let start = k * self.group_size;
        start..((k + 1) * self.group_size).min(self.v.len())
    }

    fn rebuild_group(&mut self, k: usize) {
        let r = self.group_range(k);
        self.c[k] = log_sum_exp(self.v[r].iter().cloned());
    }

    fn rebuild_all(&mut self) {
        for k in 0..self.c.len() {
            self.rebuild_group(k);
        }
        self.z_sigma = log_sum_exp(self.c.iter().cloned());
        self.updates_since_rebuild = 0;
    }

    /// Replace one term of a log-sum: s' = s + ln(1 - e^{old-s} + e^{new-s}).
    /// None when the argument underflows to <= 0 or loses finiteness.
    fn lse_replace(s: f64, old: f64, new: f64) -> Option<f64> {
        if s == f64::NEG_INFINITY {
            return (old == f64::NEG_INFINITY).then_some(new);
        }
        let arg = 1.0 - (old - s).exp() + (new - s).exp();
        let out = s + arg.ln();
        (arg > 0.0 && out.is_finite() || out == f64::NEG_INFINITY).then_some(out)
    }

    /// Normalized selection weight with the underflow floor applied.
    #[inline]
    fn item_weight(&self, i: usize) -> f64 {
        (self.v[i] - self.z_sigma).exp().max(WEIGHT_FLOOR)
    }

    fn set(&mut self, i: usize, v_new: f64) {
        assert!(v_new.is_finite(), "log-weight must be finite");
        let k = i / self.group_size;
        let old = self.v[i];
        self.v[i] = v_new;
        match (
            Self::lse_replace(self.c[k], old, v_new),
            Self::lse_replace(self.z_sigma, old, v_new),
        ) {
            (Some(ck), Some(z)) => {
                self.c[k] = ck;
                self.z_sigma = z;
            }
            // log-identity underflow: restore exactly
            _ => {
                self.rebuild_group(k);
                self.z_sigma = log_sum_exp(self.c.iter().cloned());
            }
        }
        self.updates_since_rebuild += 1;
        if self.updates_since_rebuild >= self.v.len() {
            self.rebuild_all();
        }
    }

    fn sample(&mut self, rng: &mut dyn RngCore) -> usize {
        let d = self.v.len();
        if d < 4 {
            // group machinery is pointless overhead at this size
            return oracle_sample(&self.v, rng);
        }
        let g = self.group_size;

        // Reservoir seeded with item 0; ln of its key is ln(u)/w_0.
        let mut sample = 0usize;
        let w0 = self.item_weight(0);
        let mut log_tw = uniform_open(rng).ln() / w0;
        self.inspected += 1;
        let mut pos = 1usize;
        // weight of items of the current group already consumed
        let mut offset = w0;

        while pos < d {
            // jump budget: cumulative weight to skip before the next
            // reservoir replacement
            let mut x_w = uniform_open(rng).ln() / log_tw;

            // Big-Steps: skip whole groups that fit under the budget.
            loop {
                if pos >= d {
                    return sample;
                }
                let k = pos / g;
                let group_end = ((k + 1) * g).min(d);
                let group_total = (self.c[k] - self.z_sigma).exp();
                let remaining = (group_total - offset).max(0.0);
                if remaining < x_w {
                    x_w -= remaining;
                    pos = group_end;
                    offset = 0.0;
                    self.inspected += 1;
                    continue;
                }
                // Little-Steps inside the crossing group.
                let mut crossed = false;
                while pos < group_end {
                    let w = self.item_weight(pos);
                    self.inspected += 1;
                    if w < x_w {
                        x_w -= w;
                        offset += w;
                        pos += 1;
                    } else {
                        crossed = true;
                        break;
                    }
                }
                if !crossed {
                    // drift between the group sum and floored item weights;
                    // fall through to the next group
                    offset = 0.0;
                    continue;
                }
                break;
            }

            // pos is the replacement item.
            sample = pos;
            let wj = self.item_weight(pos);
            // t_w = T_w^{w_j}; exp(w_j * ln T_w) lands in [0, 1]
            let t_w = (wj * log_tw).exp();
            let u = t_w + uniform_open(rng) * (1.0 - t_w);
            log_tw = u.ln() / wj;
            offset += wj;
            pos += 1;
            if pos % g == 0 {
                offset = 0.0;
            }
        }
        sample
    }
}

impl CoordinateSelector for BlsSampler {
    fn add(&mut self, i: usize, priority: f64) {
        self.set(i, priority);
        // adds should not count against the drift budget
        self.updates_since_rebuild = 0;
    }

    fn update(&mut self, i: usize, priority: f64) {
        self.set(i, priority);
    }

    fn get_next(
        &mut self,
        _true_priority: &mut dyn FnMut(usize) -> f64,
        rng: &mut dyn RngCore,
    ) -> usize {
        self.sample(rng)
    }

    fn pops(&self) -> u64 {
        self.inspected
    }
}

/// Report-noisy-max selector: argmax of priority + Lap(scale) with fresh
/// noise per coordinate per draw. O(D) per draw; the benchmark ablation
/// point between the exact baseline scan and the BLS sampler.
#[derive(Debug, Clone)]
pub struct NoisyMaxSelector {
    priorities: Vec<f64>,
    noise_scale: f64,
    inspected: u64,
}

impl NoisyMaxSelector {
    /// `noise_scale` = 0 disables noise (exact argmax).
    pub fn new(d: usize, noise_scale: f64) -> Self {
        assert!(noise_scale >= 0.0);
        NoisyMaxSelector {
            priorities: vec![0.0; d],
            noise_scale,
            inspected: 0,
        }
    }
}

impl CoordinateSelector for NoisyMaxSelector {
    fn add(&mut self, i: usize, priority: f64) {
        self.priorities[i] = priority;
    }

    fn update(&mut self, i: usize, priority: f64) {
        self.priorities[i] = priority;
    }

    fn get_next(
        &mut self,
        _true_priority: &mut dyn FnMut(usize) -> f64,
        rng: &mut dyn RngCore,
    ) -> usize {
        let mut best = 0usize;
        let mut best_v = f64::NEG_INFINITY;
        for (i, &p) in self.priorities.iter().enumerate() {
            let noisy = if self.noise_scale > 0.0 {
                p + sample_laplace(self.noise_scale, rng)
            } else {
                p
            };
            if noisy > best_v {
                best_v = noisy;
                best = i;
            }
        }
        self.inspected += self.priorities.len() as u64;
        best
    }

    fn pops(&self) -> u64 {
        self.inspected
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn softmax(v: &[f64]) -> Vec<f64> {
        let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = v.iter().map(|&x| (x - m).exp()).collect();
        let t: f64 = w.iter().sum();
        w.iter().map(|&x| x / t).collect()
    }

    fn empirical(sampler: &mut BlsSampler, draws: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut counts = vec![0usize; sampler.len()];
        for _ in 0..draws {
            counts[sampler.sample(rng)] += 1;
        }
        counts.iter().map(|&c| c as f64 / draws as f64).collect()
    }

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
    }

    fn bls_from(v: &[f64]) -> BlsSampler {
        let mut s = BlsSampler::new(v.len());
        for (i, &x) in v.iter().enumerate() {
            s.add(i, x);
        }
        s
    }

    #[test]
    fn update_with_same_value_is_noop() {
        let mut s = bls_from(&[0.3, 1.2, -0.5, 2.0, 0.0]);
        let (c0, z) = (s.group_sum(0), s.z_sigma());
        s.update(1, 1.2);
        assert!((s.group_sum(0) - c0).abs() < 1e-14);
        assert!((s.z_sigma() - z).abs() < 1e-14);
    }

    #[test]
    fn update_tracks_exact_lse() {
        let mut s = bls_from(&[0.0, 0.0, 0.0, 0.0]);
        s.update(0, 3.0f64.ln());
        assert!((s.z_sigma() - 6.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn many_updates_stay_within_drift_tolerance() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = 256;
        let mut s = bls_from(&vec![0.0; d]);
        let mut truth = vec![0.0f64; d];
        for _ in 0..10_000 {
            let i = rng.random_range(0..d);
            let x = rng.random_range(-6.0..6.0);
            truth[i] = x;
            s.update(i, x);
        }
        let z_exact = log_sum_exp(truth.iter().cloned());
        assert!((s.z_sigma() - z_exact).abs() < 1e-6, "z drift");
        for k in 0..d.div_ceil(s.group_size()) {
            let r = (k * s.group_size())..((k + 1) * s.group_size()).min(d);
            let exact = log_sum_exp(truth[r].iter().cloned());
            assert!((s.group_sum(k) - exact).abs() < 1e-6, "group {k} drift");
        }
    }

    #[test]
    fn oracle_single_item() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..10 {
            assert_eq!(oracle_sample(&[1.5], &mut rng), 0);
        }
    }

    #[test]
    fn oracle_two_equal_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut count = 0;
        let draws = 100_000;
        for _ in 0..draws {
            count += oracle_sample(&[2.0, 2.0], &mut rng);
        }
        let frac = count as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.01, "frac = {frac}");
    }

    #[test]
    fn oracle_chi_square_vs_analytic() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let d = 64;
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p = softmax(&v);
        let draws = 200_000;
        let mut counts = vec![0usize; d];
        for _ in 0..draws {
            counts[oracle_sample(&v, &mut rng)] += 1;
        }
        let chi2: f64 = (0..d)
            .map(|i| {
                let e = p[i] * draws as f64;
                let o = counts[i] as f64;
                (o - e) * (o - e) / e.max(1e-9)
            })
            .sum();
        // chi-square critical value at significance 1e-3, df = 63
        let crit = statrs::distribution::ContinuousCDF::inverse_cdf(
            &statrs::distribution::ChiSquared::new(63.0).unwrap(),
            0.999,
        );
        assert!(chi2 < crit, "chi2 = {chi2}, crit = {crit}");
    }

    #[test]
    fn bls_uniform_four() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut s = bls_from(&[1.0; 4]);
        let freqs = empirical(&mut s, 100_000, &mut rng);
        for f in freqs {
            assert!((f - 0.25).abs() < 0.01, "f = {f}");
        }
    }

    #[test]
    fn bls_small_fallback_two_items() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut s = bls_from(&[0.0, 3.0f64.ln()]);
        let freqs = empirical(&mut s, 100_000, &mut rng);
        assert!((freqs[0] - 0.25).abs() < 0.01 && (freqs[1] - 0.75).abs() < 0.01);
    }

    #[test]
    fn bls_matches_softmax_wide_spread() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let d = 1024;
        // 8 orders of magnitude between the heavy items (one per group,
        // carrying nearly all mass) and the light tail; at 2e5 draws the
        // Monte-Carlo TV noise for this profile sits near 0.005
        let v: Vec<f64> = (0..d)
            .map(|i| {
                if i % 32 == 0 {
                    (1e8f64).ln() + 0.05 * (i as f64).sin()
                } else {
                    rng.random_range(0.0..(1e4f64).ln())
                }
            })
            .collect();
        let mut s = bls_from(&v);
        let p = softmax(&v);
        let freqs = empirical(&mut s, 200_000, &mut rng);
        let dist = tv(&freqs, &p);
        assert!(dist < 0.01, "tv = {dist}");
    }

    #[test]
    fn bls_distribution_after_interleaved_updates() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let d = 64;
        let mut s = bls_from(&vec![0.0; d]);
        let mut truth = vec![0.0f64; d];
        for _ in 0..10_000 {
            let i = rng.random_range(0..d);
            let x = rng.random_range(-9.0..9.0);
            truth[i] = x;
            s.update(i, x);
        }
        let p = softmax(&truth);
        let freqs = empirical(&mut s, 200_000, &mut rng);
        let dist = tv(&freqs, &p);
        assert!(dist < 0.01, "tv = {dist}");
    }

    #[test]
    fn weight_floor_applies() {
        let mut s = bls_from(&[0.0, -800.0, 0.0, 0.0, 0.0]);
        assert_eq!(s.item_weight(1), WEIGHT_FLOOR);
        // still sampleable without panicking
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let j = s.sample(&mut rng);
            assert!(j < 5);
        }
    }

    #[test]
    fn work_grows_sublinearly() {
        // mean items inspected per draw should scale like sqrt(D) log D,
        // far below D
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut per_d = Vec::new();
        for &d in &[1usize << 10, 1 << 13, 1 << 16] {
            let mut s = bls_from(&vec![0.0; d]);
            let draws = 200;
            let before = s.pops();
            for _ in 0..draws {
                let mut noop = |_: usize| 0.0;
                let _ = s.get_next(&mut noop, &mut rng);
            }
            let mean = (s.pops() - before) as f64 / draws as f64;
            per_d.push((d, mean));
        }
        for &(d, mean) in &per_d {
            let bound = (d as f64).sqrt() * (d as f64).ln();
            assert!(mean < bound, "D={d}: inspected {mean} >= {bound}");
            assert!(mean < d as f64 / 4.0, "D={d}: inspected {mean} ~ D");
        }
        // growth from 2^10 to 2^16 (64x in D) should be well under 64x
        let growth = per_d[2].1 / per_d[0].1;
        assert!(growth < 20.0, "growth = {growth}");
    }

    #[test]
    fn noisymax_zero_scale_is_exact_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut s = NoisyMaxSelector::new(4, 0.0);
        for (i, p) in [0.1, 0.9, 0.4, 0.2].iter().enumerate() {
            s.add(i, *p);
        }
        let mut noop = |_: usize| 0.0;
        assert_eq!(s.get_next(&mut noop, &mut rng), 1);
    }

    #[test]
    fn noisymax_symmetric_priorities() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut s = NoisyMaxSelector::new(2, 1.0);
        s.add(0, 3.0);
        s.add(1, 3.0);
        let draws = 100_000;
        let mut ones = 0;
        let mut noop = |_: usize| 0.0;
        for _ in 0..draws {
            ones += s.get_next(&mut noop, &mut rng);
        }
        let frac = ones as f64 / draws as f64;
        assert!((frac - 0.5).abs() < 0.01, "frac = {frac}");
    }

    // Independent Monte-Carlo oracle: simulate argmax(priority + Laplace)
    // directly from inverse-CDF draws, no selector code involved.
    #[test]
    fn noisymax_matches_simulation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d = 16;
        let prios: Vec<f64> = (0..d).map(|i| (i as f64 * 0.37).sin()).collect();

        let sim_draws = 1_000_000;
        let mut sim_counts = vec![0usize; d];
        for _ in 0..sim_draws {
            let mut best = 0;
            let mut best_v = f64::NEG_INFINITY;
            for (j, &p) in prios.iter().enumerate() {
                let u: f64 = rng.random::<f64>() - 0.5;
                let noise = -1.0 * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                if p + noise > best_v {
                    best_v = p + noise;
                    best = j;
                }
            }
            sim_counts[best] += 1;
        }
        let sim: Vec<f64> = sim_counts
            .iter()
            .map(|&c| c as f64 / sim_draws as f64)
            .collect();

        let mut s = NoisyMaxSelector::new(d, 1.0);
        for (i, &p) in prios.iter().enumerate() {
            s.add(i, p);
        }
        let draws = 200_000;
        let mut counts = vec![0usize; d];
        let mut noop = |_: usize| 0.0;
        for _ in 0..draws {
            counts[s.get_next(&mut noop, &mut rng)] += 1;
        }
        let emp: Vec<f64> = counts.iter().map(|&c| c as f64 / draws as f64).collect();
        let dist = tv(&emp, &sim);
        assert!(dist < 0.02, "tv = {dist}");
    }

    proptest::proptest! {
        #[test]
        fn bls_z_sigma_consistent(v in proptest::collection::vec(-10.0..10.0f64, 4..80)) {
            let s = bls_from(&v);
            let exact = log_sum_exp(v.iter().cloned());
            proptest::prop_assert!((s.z_sigma() - exact).abs() < 1e-6);
        }
    }
}
