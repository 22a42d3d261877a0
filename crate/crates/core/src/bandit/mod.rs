//! Bernoulli arm environments and the sequential policies played on them.

mod baselines;
mod env;
mod ns;
mod runner;
mod schedule;

pub use baselines::{
    exp3_anytime_eta, exp3_probabilities, kl_bernoulli, klucb_index, step_exp3, step_klucb,
};
pub use env::ArmEnvironment;
pub use ns::{
    crude_update, over_penalized_multi_in_place, over_penalized_two_update, step_crude,
    step_over_penalized_multi, step_over_penalized_two, NsState, SIMPLEX_TOLERANCE,
};
pub use runner::{
    run_policy, Checkpoint, Policy, RewardDraws, Runner, Trace, LANES, RENORMALIZE_EVERY,
};
pub use schedule::{StepSchedule, StepSizes};
