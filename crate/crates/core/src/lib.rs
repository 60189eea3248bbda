//! Kullback–Leibler upper-confidence-bound index policies for stochastic
//! multi-armed bandits.
//!
//! The crate is organised bottom-up:
//!
//! - [`divergence`]: closed-form KL divergences of one-parameter exponential
//!   families, reparameterized by their means.
//! - [`schedule`]: exploration functions `f(t)`.
//! - [`index`]: the kl-UCB index `sup{μ : d(μ̂, μ) ≤ ε}`.
//! - [`empirical`]: empirical distributions on `[0, 1]`, `K_inf` and the
//!   empirical-likelihood upper bound with the support augmented by 1.
//! - [`policy`]: kl-UCB, empirical KL-UCB, UCB, UCB-V and UCB-Tuned behind one
//!   state type.
//! - [`environment`]: reward models used in the experiments.
//! - [`simulator`]: Monte-Carlo pseudo-regret harness.
//! - [`analysis`]: lower-bound line, finite-time bounds and Monte-Carlo
//!   verifiers for the deviation and coverage inequalities.
//! - [`config`] and [`report`]: scenario files and CSV output used by the CLI.
//!
//! Monte-Carlo loops run on rayon when the `parallel` feature is enabled
//! (default); results are identical with or without it.

#![forbid(unsafe_code)]

pub mod analysis;
pub mod config;
pub mod divergence;
pub mod empirical;
pub mod environment;
mod error;
pub mod index;
mod par;
pub mod policy;
pub mod report;
pub mod schedule;
pub mod simulator;

pub use divergence::{Divergence, Family};
pub use empirical::EmpiricalDistribution;
pub use environment::ArmModel;
pub use error::{Error, Result};
pub use index::kl_index;
pub use par::Execution;
pub use policy::{PolicySpec, PolicyState};
pub use schedule::ExplorationSchedule;
pub use simulator::{RegretSummary, RegretTrace, Scenario};
