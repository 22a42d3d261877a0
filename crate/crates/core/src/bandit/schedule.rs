use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Step sequences `γₙ = γ₁ (offset+n)^(-α)` and `ρₙ = ρ₁ (offset+n)^(-β)`.
///
/// With `offset = 0` and `α = β = ½` this is the `γ₁/√n, ρ₁/√n` schedule;
/// `offset = 4` expresses `γₙ = 1/√(4+n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepSchedule {
    gamma1: f64,
    rho1: f64,
    alpha: f64,
    beta: f64,
    #[serde(default)]
    offset: u64,
}

/// Step sizes in effect at a given index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSizes {
    pub gamma: f64,
    pub rho: f64,
}

impl StepSchedule {
    pub fn new(gamma1: f64, rho1: f64, alpha: f64, beta: f64, offset: u64) -> Result<Self> {
        let s = Self {
            gamma1,
            rho1,
            alpha,
            beta,
            offset,
        };
        s.validate()?;
        Ok(s)
    }

    /// `γₙ = γ₁/√n`, `ρₙ = ρ₁/√n`.
    pub fn sqrt_decay(gamma1: f64, rho1: f64) -> Result<Self> {
        Self::new(gamma1, rho1, 0.5, 0.5, 0)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(
            self.gamma1 > 0.0 && self.gamma1.is_finite(),
            Config,
            "gamma1 must be positive, got {}",
            self.gamma1
        );
        ensure!(
            (0.0..=1.0).contains(&self.rho1),
            Config,
            "rho1 must lie in [0,1], got {}",
            self.rho1
        );
        ensure!(
            self.alpha > 0.0,
            Config,
            "alpha must be positive, got {}",
            self.alpha
        );
        ensure!(
            self.beta > 0.0,
            Config,
            "beta must be positive, got {}",
            self.beta
        );
        let first = self.gamma(1);
        ensure!(
            first <= 1.0 + 1e-15,
            Config,
            "first step γ₁(offset+1)^(-α) = {first} exceeds 1"
        );
        Ok(())
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn rho1(&self) -> f64 {
        self.rho1
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn offset(&self) -> u64 {
        self.offset
    }

    /// `ρ̃₁ = ρ₁/γ₁`.
    pub fn rho_ratio(&self) -> f64 {
        self.rho1 / self.gamma1
    }

    /// Same schedule with the penalty switched off (`ρ₁ = 0`).
    pub fn without_penalty(&self) -> Self {
        Self { rho1: 0.0, ..*self }
    }

    fn decay(&self, n: u64, exponent: f64) -> f64 {
        let m = (self.offset + n) as f64;
        if exponent == 0.5 {
            1.0 / m.sqrt()
        } else {
            (-exponent * m.ln()).exp()
        }
    }

    /// `γₙ` for `n ≥ 1`.
    pub fn gamma(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        self.gamma1 * self.decay(n, self.alpha)
    }

    /// `ρₙ` for `n ≥ 1`.
    pub fn rho(&self, n: u64) -> f64 {
        debug_assert!(n >= 1);
        if self.rho1 == 0.0 {
            0.0
        } else {
            self.rho1 * self.decay(n, self.beta)
        }
    }

    /// `εₙ = 1/γₙ₊₁ − 1/γₙ`, evaluated without cancellation.
    pub fn eps(&self, n: u64) -> f64 {
        let m = (self.offset + n) as f64;
        let diff = if self.alpha == 0.5 {
            1.0 / ((m + 1.0).sqrt() + m.sqrt())
        } else {
            m.powf(self.alpha) * (self.alpha * (1.0 / m).ln_1p()).exp_m1()
        };
        diff / self.gamma1
    }

    pub fn sizes(&self, n: u64) -> StepSizes {
        StepSizes {
            gamma: self.gamma(n),
            rho: self.rho(n),
        }
    }

    /// `(γₙ, ρₙ, εₙ)`; rejects `n = 0`.
    pub fn at(&self, n: u64) -> Result<(f64, f64, f64)> {
        if n == 0 {
            return Err(Error::Precondition(
                "step schedule is indexed from n = 1".into(),
            ));
        }
        Ok((self.gamma(n), self.rho(n), self.eps(n)))
    }

    /// `γ₁..γ_horizon` and `ρ₁..ρ_horizon`, index `k` holding step `k+1`.
    pub fn tables(&self, horizon: u64) -> (Vec<f64>, Vec<f64>) {
        (1..=horizon).map(|n| (self.gamma(n), self.rho(n))).unzip()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn first_step_equals_gamma1() {
        let s = StepSchedule::sqrt_decay(0.89, 0.3).unwrap();
        let (g, r, _) = s.at(1).unwrap();
        assert_eq!(g, 0.89);
        assert_eq!(r, 0.3);
    }

    #[test]
    fn offset_schedule() {
        let s = StepSchedule::new(1.0, 0.25, 0.5, 0.5, 4).unwrap();
        assert_abs_diff_eq!(s.gamma(1), 1.0 / 5f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(s.gamma(1), 0.4472, epsilon = 1e-4);
        assert_abs_diff_eq!(s.rho(7), s.gamma(7) / 4.0, epsilon = 1e-15);
    }

    #[test]
    fn eps_direct_evaluation() {
        let s = StepSchedule::sqrt_decay(1.0, 0.0).unwrap();
        assert_abs_diff_eq!(s.eps(4), 5f64.sqrt() - 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.eps(4), 0.2361, epsilon = 1e-4);
        let general = StepSchedule::new(0.7, 0.1, 0.6, 0.3, 2).unwrap();
        let n = 17;
        let direct = 1.0 / general.gamma(n + 1) - 1.0 / general.gamma(n);
        assert_abs_diff_eq!(general.eps(n), direct, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let s = StepSchedule::sqrt_decay(0.5, 0.1).unwrap();
        assert!(matches!(s.at(0), Err(Error::Precondition(_))));
        assert!(StepSchedule::sqrt_decay(1.5, 0.1).is_err());
        assert!(StepSchedule::sqrt_decay(0.5, 1.5).is_err());
        assert!(StepSchedule::sqrt_decay(1.0, 1.0).is_ok());
        assert!(StepSchedule::sqrt_decay(0.0, 0.1).is_err());
        assert!(StepSchedule::new(0.5, 0.1, 0.0, 0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn eps_is_nonnegative_and_bounded(gamma1 in 0.01f64..1.0, n in 1u64..1_000_000) {
            let s = StepSchedule::sqrt_decay(gamma1, 0.0).unwrap();
            let eps = s.eps(n);
            prop_assert!(eps >= 0.0);
            prop_assert!(eps <= s.gamma(n) / (2.0 * gamma1 * gamma1) * (1.0 + 1e-12));
        }

        #[test]
        fn steps_stay_in_unit_interval(
            gamma1 in 0.01f64..1.0, rho1 in 0.0f64..0.99,
            alpha in 0.1f64..1.0, beta in 0.1f64..1.0, n in 1u64..100_000
        ) {
            let s = StepSchedule::new(gamma1, rho1, alpha, beta, 0).unwrap();
            let g = s.gamma(n);
            prop_assert!(g > 0.0 && g <= 1.0);
            prop_assert!(s.eps(n) >= 0.0);
        }
    }
}
