//! Asymptotic expansions of the entropy rate of hidden Markov chains whose
//! transition matrices depend analytically on a small parameter `ε`.
//!
//! The exact pipeline works with truncated power series over the rationals
//! ([`series`]), hidden Markov models with series-valued transitions
//! ([`hmm`]) and Birch-bound sums over pruned sequence trees
//! ([`expansion`]), producing
//! `H(Z) = h0 + Σ f_j ε^j log ε + Σ g_j ε^j + O(ε^{k+1})` with exact `f_j`.
//! [`channels`] builds models for Markov inputs over memoryless channels and
//! [`numeric`] provides floating-point oracles at fixed `ε`.

pub mod channels;
pub mod expansion;
pub mod hmm;
pub mod linalg;
pub mod numeric;
pub mod rational;
pub mod series;
mod tree;

pub use tree::WalkStats;
