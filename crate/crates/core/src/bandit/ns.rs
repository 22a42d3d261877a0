//! Narendra–Shapiro updates: crude, penalized and over-penalized.
//!
//! The scalar kernels operate on `x = P(play arm 1)` and are what the
//! trajectory runner calls in its inner loop. The `step_*` functions wrap them
//! as pure state transitions indexed by an [`NsState`] and a [`StepSchedule`],
//! using the step sizes `γₙ₊₁, ρₙ₊₁` of the transition `n → n+1`.

use serde::{Deserialize, Serialize};

use super::schedule::{StepSchedule, StepSizes};
use crate::error::{ensure, Result};

/// Admissible drift of `Σⱼ πⱼ` away from 1.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// Step index, arm distribution and over-penalization level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsState {
    n: u64,
    pi: Vec<f64>,
    sigma: f64,
}

impl NsState {
    pub fn new(pi: Vec<f64>, sigma: f64) -> Result<Self> {
        Self::at_step(0, pi, sigma)
    }

    pub fn at_step(n: u64, pi: Vec<f64>, sigma: f64) -> Result<Self> {
        ensure!(
            pi.len() >= 2,
            Config,
            "need at least two arms, got {}",
            pi.len()
        );
        ensure!(
            (0.0..=1.0).contains(&sigma),
            Config,
            "sigma must lie in [0,1], got {sigma}"
        );
        let state = Self { n, pi, sigma };
        state.check_simplex()?;
        Ok(state)
    }

    pub fn uniform(d: usize, sigma: f64) -> Result<Self> {
        ensure!(d >= 2, Config, "need at least two arms, got {d}");
        Self::new(vec![1.0 / d as f64; d], sigma)
    }

    pub fn two_armed(x: f64, sigma: f64) -> Result<Self> {
        Self::new(vec![x, 1.0 - x], sigma)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn arms(&self) -> usize {
        self.pi.len()
    }

    /// Probability of playing the first arm.
    pub fn x(&self) -> f64 {
        self.pi[0]
    }

    pub fn check_simplex(&self) -> Result<()> {
        check_simplex(&self.pi)
    }
}

pub(crate) fn check_simplex(pi: &[f64]) -> Result<()> {
    let sum: f64 = pi.iter().sum();
    ensure!(
        pi.iter()
            .all(|p| *p >= -SIMPLEX_TOLERANCE && *p <= 1.0 + SIMPLEX_TOLERANCE),
        Invariant,
        "probability vector leaves [0,1]: {pi:?}"
    );
    ensure!(
        (sum - 1.0).abs() <= SIMPLEX_TOLERANCE,
        Invariant,
        "probability vector sums to {sum}, drift {:e}",
        sum - 1.0
    );
    Ok(())
}

/// Crude update of `x` after arm `arm` (0-based) returned `reward`.
#[inline]
pub fn crude_update(x: f64, gamma: f64, arm: usize, reward: bool) -> f64 {
    crude_arith(
        x,
        gamma,
        f64::from(u8::from(arm == 0)),
        f64::from(u8::from(reward)),
    )
}

/// Over-penalized two-armed update. With `b_sigma = true` on every step this is
/// the penalized algorithm; with `rho = 0` it is the crude one.
#[inline]
pub fn over_penalized_two_update(
    x: f64,
    gamma: f64,
    rho: f64,
    arm: usize,
    reward: bool,
    b_sigma: bool,
) -> f64 {
    over_penalized_arith(
        x,
        gamma,
        rho,
        f64::from(u8::from(arm == 0)),
        f64::from(u8::from(reward)),
        f64::from(u8::from(b_sigma)),
    )
}

// Branch-free forms on 0/1 indicators: the runner's inner loop calls these
// directly because the three draws per round are unpredictable.

#[inline(always)]
pub(crate) fn crude_arith(x: f64, gamma: f64, first: f64, reward: f64) -> f64 {
    x + gamma * (first - x) * reward
}

#[inline(always)]
pub(crate) fn over_penalized_arith(
    x: f64,
    gamma: f64,
    rho: f64,
    first: f64,
    reward: f64,
    b_sigma: f64,
) -> f64 {
    let own_mass = x * first - (1.0 - x) * (1.0 - first);
    x + gamma * (first - x) * reward - gamma * rho * own_mass * (1.0 - reward * b_sigma)
}

/// Over-penalized `d`-armed update applied in place.
///
/// The penalty `γρπ_I` taken from the played arm is shared equally among the
/// other `d − 1` arms.
#[inline]
pub fn over_penalized_multi_in_place(
    pi: &mut [f64],
    gamma: f64,
    rho: f64,
    arm: usize,
    reward: bool,
    b_sigma: bool,
) {
    let d = pi.len();
    let played = pi[arm];
    let penalty = if reward && b_sigma {
        0.0
    } else {
        gamma * rho * played
    };
    let share = penalty / (d - 1) as f64;
    for (j, p) in pi.iter_mut().enumerate() {
        let indicator = if j == arm { 1.0 } else { 0.0 };
        let reward_part = if reward {
            gamma * (indicator - *p)
        } else {
            0.0
        };
        let penalty_part = if j == arm { -penalty } else { share };
        *p += reward_part + penalty_part;
    }
}

fn next_sizes(state: &NsState, sched: &StepSchedule, arm: usize) -> Result<StepSizes> {
    ensure!(
        arm < state.arms(),
        Precondition,
        "arm index {arm} out of range for {} arms",
        state.arms()
    );
    state.check_simplex()?;
    Ok(sched.sizes(state.n + 1))
}

fn two_armed_only(state: &NsState) -> Result<()> {
    ensure!(
        state.arms() == 2,
        Precondition,
        "two-armed update applied to {} arms",
        state.arms()
    );
    Ok(())
}

/// Crude two-armed transition `n → n+1`.
pub fn step_crude(
    state: &NsState,
    sched: &StepSchedule,
    arm: usize,
    reward: bool,
) -> Result<NsState> {
    two_armed_only(state)?;
    let sizes = next_sizes(state, sched, arm)?;
    let x = crude_update(state.x(), sizes.gamma, arm, reward);
    Ok(NsState {
        n: state.n + 1,
        pi: vec![x, 1.0 - x],
        sigma: state.sigma,
    })
}

/// Over-penalized two-armed transition; `b_sigma` is the Bernoulli(σ) draw.
pub fn step_over_penalized_two(
    state: &NsState,
    sched: &StepSchedule,
    arm: usize,
    reward: bool,
    b_sigma: bool,
) -> Result<NsState> {
    two_armed_only(state)?;
    let sizes = next_sizes(state, sched, arm)?;
    let x = over_penalized_two_update(state.x(), sizes.gamma, sizes.rho, arm, reward, b_sigma);
    Ok(NsState {
        n: state.n + 1,
        pi: vec![x, 1.0 - x],
        sigma: state.sigma,
    })
}

/// Over-penalized `d`-armed transition.
pub fn step_over_penalized_multi(
    state: &NsState,
    sched: &StepSchedule,
    arm: usize,
    reward: bool,
    b_sigma: bool,
) -> Result<NsState> {
    let sizes = next_sizes(state, sched, arm)?;
    let mut pi = state.pi.clone();
    over_penalized_multi_in_place(&mut pi, sizes.gamma, sizes.rho, arm, reward, b_sigma);
    Ok(NsState {
        n: state.n + 1,
        pi,
        sigma: state.sigma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sched(gamma: f64, rho: f64) -> StepSchedule {
        StepSchedule::sqrt_decay(gamma, rho).unwrap()
    }

    #[test]
    fn crude_examples() {
        let s = NsState::two_armed(0.5, 1.0).unwrap();
        let sc = sched(0.1, 0.0);
        assert_abs_diff_eq!(
            step_crude(&s, &sc, 0, true).unwrap().x(),
            0.55,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            step_crude(&s, &sc, 1, true).unwrap().x(),
            0.45,
            epsilon = 1e-15
        );
        assert_eq!(step_crude(&s, &sc, 0, false).unwrap().x(), 0.5);
        assert_eq!(step_crude(&s, &sc, 1, false).unwrap().x(), 0.5);
        assert_eq!(step_crude(&s, &sc, 0, true).unwrap().n(), 1);
    }

    #[test]
    fn over_penalized_examples() {
        let s = NsState::two_armed(0.5, 0.0).unwrap();
        let sc = sched(0.1, 0.05);
        let lose = step_over_penalized_two(&s, &sc, 0, false, true).unwrap();
        assert_abs_diff_eq!(lose.x(), 0.4975, epsilon = 1e-15);
        let win_penalized = step_over_penalized_two(&s, &sc, 0, true, true).unwrap();
        assert_abs_diff_eq!(win_penalized.x(), 0.55, epsilon = 1e-15);
        let win_over = step_over_penalized_two(&s, &sc, 0, true, false).unwrap();
        assert_abs_diff_eq!(win_over.x(), 0.5475, epsilon = 1e-15);
    }

    #[test]
    fn multi_examples() {
        let third = 1.0 / 3.0;
        let s = NsState::uniform(3, 0.0).unwrap();
        let win = step_over_penalized_multi(&s, &sched(0.1, 0.0), 1, true, true).unwrap();
        for (got, want) in win.pi().iter().zip([0.3, 0.4, 0.3]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-15);
        }
        let lose = step_over_penalized_multi(&s, &sched(0.1, 0.05), 1, false, true).unwrap();
        let want = [
            third + 0.005 / 6.0,
            third - 0.005 / 3.0,
            third + 0.005 / 6.0,
        ];
        for (got, w) in lose.pi().iter().zip(want) {
            assert_abs_diff_eq!(*got, w, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(lose.pi()[0], 0.334167, epsilon = 1e-6);
    }

    #[test]
    fn rejects_bad_states_and_arms() {
        assert!(NsState::new(vec![0.5, 0.6], 0.0).is_err());
        assert!(NsState::new(vec![1.0], 0.0).is_err());
        assert!(NsState::two_armed(0.5, 1.5).is_err());
        let s = NsState::uniform(3, 0.0).unwrap();
        assert!(step_crude(&s, &sched(0.1, 0.0), 0, true).is_err());
        assert!(step_over_penalized_multi(&s, &sched(0.1, 0.0), 3, true, true).is_err());
    }
}
