//! Couplings of two copies of the limiting PDMP.
//!
//! - [`simulate_coupled`]: the order-preserving coupling, under which the mean
//!   gap contracts at exactly the spectral gap `π`.
//! - [`StickCoupling`]: a maximal coupling of first jump times that makes two
//!   nearby paths coincide.
//! - [`tv_merge_experiment`]: the two couplings chained, giving a certified
//!   lower bound on `1 − TV`.

mod stick;
mod tv;
mod wasserstein;

pub use stick::{
    psi, psi_inverse, stick_attempt, stick_lower_bound, StickAttempt, StickCoupling, StickFailure,
    StickOutcome, StickParams, STICK_KNOTS, STICK_QUADRATURE_TOLERANCE,
};
pub use tv::{
    tv_decay, tv_merge_experiment, tv_schedule, tv_theory_rate, TvDecay, TvEstimate, TvSetup,
};
pub use wasserstein::{
    coupled_states_at, simulate_coupled, w1_decay_estimate, CoupledEvent, CoupledPath, GapPoint,
    W1Decay,
};
