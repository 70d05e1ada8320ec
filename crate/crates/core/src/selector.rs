//! Abstract coordinate-selection contract shared by the trainers.

use rand::RngCore;

/// A queue over feature indices 0..D keyed by nonnegative priorities
/// (|alpha_j| times a mechanism-specific scale). Implementations may be
/// exact (lazy heap, noisy max) or sampling-based (BLS).
pub trait CoordinateSelector {
    /// Insert index `i` with its initial priority. Called once per index.
    fn add(&mut self, i: usize, priority: f64);

    /// Report the latest priority of index `i`. Implementations may keep a
    /// stale upper bound instead of the exact value.
    fn update(&mut self, i: usize, priority: f64);

    /// Select the next coordinate. `true_priority` reads the current exact
    /// priority of an index (used by lazy implementations to verify stale
    /// entries); randomized selectors draw from `rng`.
    fn get_next(
        &mut self,
        true_priority: &mut dyn FnMut(usize) -> f64,
        rng: &mut dyn RngCore,
    ) -> usize;

    /// Cumulative count of items inspected across all get_next calls;
    /// surfaced as the q_pops metrics column.
    fn pops(&self) -> u64;
}
