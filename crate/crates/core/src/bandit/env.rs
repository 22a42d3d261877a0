use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::rng::uniform;

/// Independent Bernoulli arms with success probabilities `p₁..p_d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmEnvironment {
    probs: Vec<f64>,
}

impl ArmEnvironment {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        ensure!(
            probs.len() >= 2,
            Config,
            "need at least two arms, got {}",
            probs.len()
        );
        ensure!(
            probs.iter().all(|p| (0.0..=1.0).contains(p)),
            Config,
            "success probabilities must lie in [0,1]: {probs:?}"
        );
        Ok(Self { probs })
    }

    pub fn two_armed(p1: f64, p2: f64) -> Result<Self> {
        Self::new(vec![p1, p2])
    }

    pub fn arms(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, arm: usize) -> f64 {
        self.probs[arm]
    }

    /// Index of the best arm (lowest index on ties).
    pub fn best_arm(&self) -> usize {
        let mut best = 0;
        for (j, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = j;
            }
        }
        best
    }

    pub fn best_prob(&self) -> f64 {
        self.probs[self.best_arm()]
    }

    /// Reward of `arm` given a uniform draw `u ∈ [0,1)`.
    #[inline]
    pub fn reward_from_uniform(&self, arm: usize, u: f64) -> bool {
        u < self.probs[arm]
    }

    pub fn sample<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> bool {
        self.reward_from_uniform(arm, uniform(rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn rejects_bad_environments() {
        assert!(ArmEnvironment::new(vec![0.5]).is_err());
        assert!(ArmEnvironment::new(vec![0.5, 1.2]).is_err());
        assert!(ArmEnvironment::new(vec![-0.1, 0.2]).is_err());
        assert!(ArmEnvironment::new(vec![0.0, 1.0]).is_ok());
    }

    #[test]
    fn best_arm_and_degenerate_arms() {
        let env = ArmEnvironment::new(vec![0.3, 0.9, 0.9]).unwrap();
        assert_eq!(env.best_arm(), 1);
        let sure = ArmEnvironment::two_armed(1.0, 0.0).unwrap();
        let mut rng = stream_rng(0, 0);
        for _ in 0..100 {
            assert!(sure.sample(0, &mut rng));
            assert!(!sure.sample(1, &mut rng));
        }
    }

    #[test]
    fn empirical_frequency_matches_probability() {
        let env = ArmEnvironment::two_armed(0.7, 0.2).unwrap();
        let mut rng = stream_rng(42, 0);
        let n = 100_000;
        let wins = (0..n).filter(|_| env.sample(0, &mut rng)).count() as f64 / n as f64;
        // 3 sd = 3 * sqrt(0.21 / 1e5) ~ 0.0044
        assert!((wins - 0.7).abs() < 0.0044 * 1.5, "{wins}");
    }
}
