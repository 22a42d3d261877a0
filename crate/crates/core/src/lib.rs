//! Monte-Carlo laboratory for Narendra-Shapiro bandit algorithms.
//!
//! The crate is organised around five areas:
//!
//! - [`bandit`]: arm environments, step schedules, the crude / penalized /
//!   over-penalized Narendra-Shapiro updates, EXP3 and KL-UCB baselines and a
//!   trajectory runner.
//! - [`regret`]: regret and pseudo-regret estimators, grid sweeps of
//!   `sup R̄ₙ/√n` and the closed-form regret bounds.
//! - [`pdmp`]: exact event-driven simulation of the limiting piecewise
//!   deterministic Markov process, its mean and moment equations.
//! - [`coupling`]: the order-preserving Wasserstein coupling, the jump-time
//!   "stick" coupling and the two-phase total-variation experiment.
//! - [`theory`]: numeric checks of the quantities used in the regret proof and
//!   of the almost-sure / weak limit theorems.
//!
//! [`acceptance`] bundles the end-to-end criteria used by the `acceptance`
//! test target and by `nsbandit reproduce-all`.

pub mod acceptance;
pub mod bandit;
pub mod coupling;
pub mod error;
pub mod mc;
pub mod pdmp;
pub mod regret;
pub mod rng;
pub mod stats;
pub mod theory;

pub use error::{Error, Result};
