//! EXP3 and KL-UCB reference policies.

use crate::error::{ensure, Result};

/// Bernoulli Kullback–Leibler divergence `kl(p, q)`, with `0 ln 0 = 0`.
pub fn kl_bernoulli(p: f64, q: f64) -> f64 {
    fn term(a: f64, b: f64) -> f64 {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    }
    (term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0)
}

/// KL-UCB index `max{q ∈ [mean, 1] : count·kl(mean, q) ≤ ln t}`.
///
/// Unplayed arms get index 1. The root is bracketed by `[mean, mean + √(δ/2)]`
/// (Pinsker) and found by Newton steps that fall back to bisection whenever
/// they would leave the bracket.
pub fn klucb_index(count: u64, mean: f64, t: u64) -> f64 {
    if count == 0 {
        return 1.0;
    }
    let mean = mean.clamp(0.0, 1.0);
    let level = (t.max(1) as f64).ln() / count as f64;
    if level <= 0.0 || mean >= 1.0 {
        return mean;
    }
    if mean == 0.0 {
        return -(-level).exp_m1();
    }
    let f = |q: f64| kl_bernoulli(mean, q) - level;
    let mut lo = mean;
    let mut hi = (mean + (level / 2.0).sqrt()).min(1.0);
    if hi >= 1.0 {
        hi = 1.0 - f64::EPSILON;
        if f(hi) <= 0.0 {
            return 1.0;
        }
    }
    let mut q = hi;
    for _ in 0..100 {
        let fq = f(q);
        if fq.abs() < 1e-13 {
            break;
        }
        if fq > 0.0 {
            hi = q;
        } else {
            lo = q;
        }
        let slope = (q - mean) / (q * (1.0 - q));
        let newton = q - fq / slope;
        q = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-14 {
            break;
        }
    }
    q.clamp(mean, 1.0)
}

/// Arm with the largest KL-UCB index at round `n` (lowest index on ties).
pub fn step_klucb(counts: &[u64], means: &[f64], n: u64) -> usize {
    let mut best = 0;
    let mut best_index = f64::NEG_INFINITY;
    for (j, (&count, &mean)) in counts.iter().zip(means).enumerate() {
        let index = klucb_index(count, mean, n);
        if index > best_index {
            best = j;
            best_index = index;
        }
    }
    best
}

/// EXP3 sampling distribution `(1 − γ)·w/Σw + γ/K` with `γ = min(1, Kη)`.
pub fn exp3_probabilities(weights: &[f64], eta: f64) -> Vec<f64> {
    let k = weights.len() as f64;
    let gamma = (k * eta).min(1.0);
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| (1.0 - gamma) * w / total + gamma / k)
        .collect()
}

/// One EXP3 weight update after `arm` returned `reward`.
///
/// The played weight is multiplied by `exp(η r / p_arm)`; the vector is then
/// rescaled so that its largest entry is 1, which leaves the sampling
/// distribution unchanged and keeps the weights finite.
pub fn step_exp3(weights: &[f64], eta: f64, arm: usize, reward: bool) -> Result<Vec<f64>> {
    ensure!(
        eta > 0.0 && eta.is_finite(),
        Precondition,
        "EXP3 needs eta > 0, got {eta}"
    );
    ensure!(
        arm < weights.len(),
        Precondition,
        "arm index {arm} out of range for {} arms",
        weights.len()
    );
    ensure!(
        weights.iter().all(|w| *w > 0.0 && w.is_finite()),
        Precondition,
        "EXP3 weights must be positive and finite"
    );
    if !reward {
        return Ok(weights.to_vec());
    }
    let p = exp3_probabilities(weights, eta)[arm];
    let mut next = weights.to_vec();
    next[arm] *= (eta / p).exp();
    let top = next.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    for w in &mut next {
        *w = (*w / top).max(f64::MIN_POSITIVE);
    }
    Ok(next)
}

/// Anytime learning rate `η_t = γ_t/K`, `γ_t = min(1, √(K ln K / ((e − 1) t)))`.
pub fn exp3_anytime_eta(arms: usize, t: u64) -> f64 {
    let k = arms as f64;
    let gamma = (k * k.ln() / ((std::f64::consts::E - 1.0) * t.max(1) as f64))
        .sqrt()
        .min(1.0);
    gamma / k
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn kl_identities() {
        assert_eq!(kl_bernoulli(0.3, 0.3), 0.0);
        assert_eq!(kl_bernoulli(0.0, 0.0), 0.0);
        assert_eq!(kl_bernoulli(1.0, 1.0), 0.0);
        assert!(kl_bernoulli(0.5, 1.0).is_infinite());
        let direct = 0.2 * (0.2f64 / 0.5).ln() + 0.8 * (0.8f64 / 0.5).ln();
        assert_abs_diff_eq!(kl_bernoulli(0.2, 0.5), direct, epsilon = 1e-15);
    }

    #[test]
    fn index_solves_the_defining_equation() {
        for &(count, mean, t) in &[
            (10u64, 0.4, 100u64),
            (3, 0.9, 50),
            (1000, 0.55, 5000),
            (2, 0.0, 10),
        ] {
            let q = klucb_index(count, mean, t);
            assert!(q >= mean && q <= 1.0);
            let residual = count as f64 * kl_bernoulli(mean, q) - (t as f64).ln();
            assert!(residual.abs() < 1e-8, "{count} {mean} {t}: {residual}");
        }
    }

    #[test]
    fn index_conventions() {
        assert_eq!(klucb_index(0, 0.3, 10), 1.0);
        assert_eq!(klucb_index(5, 0.3, 1), 0.3);
        assert_eq!(klucb_index(5, 1.0, 100), 1.0);
        assert_eq!(step_klucb(&[3, 0], &[1.0, 0.0], 4), 0);
        assert_eq!(step_klucb(&[3, 0, 2], &[0.9, 0.0, 0.1], 6), 1);
        assert_eq!(step_klucb(&[4, 4], &[0.5, 0.5], 9), 0);
    }

    #[test]
    fn exp3_zero_reward_leaves_weights() {
        let w = vec![1.0; 3];
        assert_eq!(step_exp3(&w, 0.1, 1, false).unwrap(), w);
        assert!(step_exp3(&w, 0.0, 1, true).is_err());
        assert!(step_exp3(&w, -0.1, 1, true).is_err());
    }

    #[test]
    fn exp3_reward_moves_mass_toward_winner() {
        let w = vec![1.0, 1.0];
        let eta = 0.05;
        let next = step_exp3(&w, eta, 1, true).unwrap();
        let before = exp3_probabilities(&w, eta);
        let after = exp3_probabilities(&next, eta);
        assert!(after[1] > before[1]);
        assert_abs_diff_eq!(after.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(next[1] / next[0], (eta / 0.5).exp(), epsilon = 1e-12);
        let mut w = vec![1.0, 1.0];
        for _ in 0..100_000 {
            w = step_exp3(&w, 0.5, 0, true).unwrap();
        }
        assert!(w.iter().all(|x| *x > 0.0 && x.is_finite()));
    }
}
