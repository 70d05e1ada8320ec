//! Differentially private L1-constrained logistic regression trained by
//! Frank-Wolfe with sparse per-iteration updates.
//!
//! The solver walks over the scaled L1 ball, moving toward one vertex
//! (+/- lambda e_j) per iteration, so the iterate after t steps has at most
//! t nonzeros. Two trainers share the math: a dense reference
//! ([`baseline`]) and an incremental one ([`fast`]) whose per-step cost is
//! independent of the dimension outside coordinate selection. Selection
//! backends: an exact lazy max-heap ([`lazyheap`]) for nonprivate runs, and
//! for private runs either an exponential-mechanism sampler with sublinear
//! expected work ([`sampler::BlsSampler`]) or a Laplace noisy-max scan
//! ([`sampler::NoisyMaxSelector`]).

pub mod baseline;
pub mod data;
pub mod error;
pub mod fast;
pub mod lazyheap;
pub mod loss;
pub mod metrics;
pub mod privacy;
pub mod sampler;
pub mod selector;
pub mod trainer;
