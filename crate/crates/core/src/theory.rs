//! Numeric versions of the quantities that drive the regret proof, and
//! finite-`n` checks of the almost-sure and weak limit theorems.

use serde::{Deserialize, Serialize};

use crate::bandit::{ArmEnvironment, Policy, Runner, StepSchedule};
use crate::error::{ensure, Result};
use crate::mc::Replication;
use crate::pdmp::{stationary_sample, PdmpParams};
use crate::rng::derive_seed;
use crate::stats::{median, wasserstein1_sorted, MeanAccumulator, Summary, SE_MULTIPLIER};

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `h_r(γ) = ((1+γ)^r − 1 − rγ)/(rγ²) = Σ_{k=2}^{r} C(r,k) γ^{k−2} / r`.
///
/// The expanded sum avoids the cancellation of the closed form for small `γ`.
pub fn h_r(gamma: f64, r: u32) -> f64 {
    if r < 2 {
        return 0.0;
    }
    (2..=r)
        .map(|k| binomial(r, k) * gamma.powi(k as i32 - 2))
        .sum::<f64>()
        / r as f64
}

/// `κ_σ(x) = (1 − σp₂)(1 − x)² − (1 − σp₁)x²`.
pub fn kappa_sigma(x: f64, sigma: f64, p1: f64, p2: f64) -> f64 {
    (1.0 - sigma * p2) * (1.0 - x).powi(2) - (1.0 - sigma * p1) * x * x
}

/// The two parts of the drift of `Yₙ = (1 − Xₙ)/γₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    pub y: f64,
    /// `y[εₙ + π(γₙy − 1)]`.
    pub phi1: f64,
    /// `−(ρₙ₊₁/γₙ) κ_σ(1 − γₙy)`.
    pub phi2: f64,
}

impl Drift {
    pub fn total(&self) -> f64 {
        self.phi1 + self.phi2
    }
}

pub fn drift_profile(
    n: u64,
    y: f64,
    sched: &StepSchedule,
    sigma: f64,
    p1: f64,
    p2: f64,
) -> Result<Drift> {
    let (gamma, _, eps) = sched.at(n)?;
    ensure!(
        (0.0..=1.0 / gamma).contains(&y),
        Precondition,
        "y = {y} outside [0, 1/γₙ] = [0, {}]",
        1.0 / gamma
    );
    let pi = p1 - p2;
    let rho_next = sched.rho(n + 1);
    Ok(Drift {
        y,
        phi1: y * (eps + pi * (gamma * y - 1.0)),
        phi2: -(rho_next / gamma) * kappa_sigma(1.0 - gamma * y, sigma, p1, p2),
    })
}

/// Drift on `points` equally spaced values of `y` covering `[0, 1/γₙ]`.
pub fn drift_curve(
    n: u64,
    sched: &StepSchedule,
    sigma: f64,
    p1: f64,
    p2: f64,
    points: usize,
) -> Result<Vec<Drift>> {
    let top = 1.0 / sched.at(n)?.0;
    let points = points.max(2);
    (0..points)
        .map(|i| {
            let y = (top * i as f64 / (points - 1) as f64).min(top);
            drift_profile(n, y, sched, sigma, p1, p2)
        })
        .collect()
}

/// `n₀(ε, π, γ₁) = ⌊1/(4ε²γ₁²π²)⌋ + 1`, the first index with `εₙ ≤ ε` for the
/// `γ₁/√n` schedule.
pub fn n0(eps: f64, pi: f64, gamma1: f64) -> Result<u64> {
    ensure!(
        eps > 0.0 && pi > 0.0 && gamma1 > 0.0,
        Precondition,
        "n0 needs positive eps, pi, gamma1"
    );
    Ok((1.0 / (4.0 * eps * eps * gamma1 * gamma1 * pi * pi)).floor() as u64 + 1)
}

/// Which step sequence normalizes `1 − Xₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalizer {
    Gamma,
    Rho,
}

/// Replication samples of `(1 − Xₙ)/γₙ` or `(1 − Xₙ)/ρₙ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedSample {
    pub n: u64,
    pub normalizer: Normalizer,
    pub values: Vec<f64>,
}

/// Samples of `1 − Xₙ` normalized by `γₙ` or `ρₙ` at each `n` of the
/// increasing `n_set`, one two-armed trajectory per replication.
pub fn normalized_samples(
    policy: &Policy,
    env: &ArmEnvironment,
    n_set: &[u64],
    normalizer: Normalizer,
    replication: Replication,
) -> Result<Vec<NormalizedSample>> {
    ensure!(
        env.arms() == 2,
        Precondition,
        "normalized samples need two arms"
    );
    let sched = *policy
        .schedule()
        .ok_or_else(|| crate::Error::Precondition("normalized samples need an NS policy".into()))?;
    ensure!(
        normalizer == Normalizer::Gamma || sched.rho1() > 0.0,
        Precondition,
        "cannot normalize by ρₙ = 0"
    );
    let horizon = *n_set
        .last()
        .ok_or_else(|| crate::Error::Precondition("empty n set".into()))?;
    let runner = Runner::new(policy.clone(), horizon, n_set.to_vec())?;
    let per_rep = replication.map_batched(16, |_, rngs| {
        Ok(runner
            .run_batch(env, rngs)?
            .into_iter()
            .map(|trace| {
                trace
                    .checkpoints
                    .iter()
                    .map(|cp| {
                        let scale = match normalizer {
                            Normalizer::Gamma => sched.gamma(cp.n),
                            Normalizer::Rho => sched.rho(cp.n),
                        };
                        (1.0 - cp.pi[0]) / scale
                    })
                    .collect::<Vec<f64>>()
            })
            .collect())
    })?;
    Ok(n_set
        .iter()
        .enumerate()
        .map(|(k, &n)| NormalizedSample {
            n,
            normalizer,
            values: per_rep.iter().map(|v| v[k]).collect(),
        })
        .collect())
}

/// Monte-Carlo estimate of `E Zₙ⁽ʳ⁾ = E(1 − Xₙ)^r/γₙ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZMoment {
    pub n: u64,
    pub r: u32,
    pub estimate: Summary,
}

/// `E Zₙ⁽ʳ⁾` for `r = 1..=r_max` at every `n` of `n_set`, from shared
/// trajectories. Asserts `Zₙ⁽ʳ⁺¹⁾ ≤ Zₙ⁽ʳ⁾` on every sample.
pub fn z_moment_estimate(
    r_max: u32,
    n_set: &[u64],
    policy: &Policy,
    env: &ArmEnvironment,
    replication: Replication,
) -> Result<Vec<ZMoment>> {
    ensure!(r_max >= 1, Precondition, "r_max must be at least 1");
    let samples = normalized_samples(policy, env, n_set, Normalizer::Gamma, replication)?;
    let sched = policy.schedule().expect("checked by normalized_samples");
    let mut out = Vec::new();
    for sample in &samples {
        let gamma = sched.gamma(sample.n);
        let mut accs = vec![MeanAccumulator::new(); r_max as usize];
        for &y in &sample.values {
            let one_minus_x = y * gamma;
            let mut previous = f64::INFINITY;
            for (i, acc) in accs.iter_mut().enumerate() {
                let z = one_minus_x.powi(i as i32 + 1) / gamma;
                ensure!(
                    z <= previous * (1.0 + 1e-12),
                    Invariant,
                    "Z^(r) increased with r at n = {}",
                    sample.n
                );
                previous = z;
                acc.push(z);
            }
        }
        for (i, acc) in accs.iter().enumerate() {
            out.push(ZMoment {
                n: sample.n,
                r: i as u32 + 1,
                estimate: acc.summary(),
            });
        }
    }
    Ok(out)
}

/// Both sides of the increase-of-exponent inequality for one `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncreaseOfExponent {
    pub r: u32,
    pub n0: u64,
    /// `max_{n ≥ n₀} Ê Zₙ⁽ʳ⁾` over the sampled `n`.
    pub lhs: f64,
    /// `Ê Z_{n₀}⁽ʳ⁾ + r/(π(r − ε)) [ρ̃₁ + h_r(γ_{n₀}) + π max Ê Zₙ⁽ʳ⁺¹⁾]`.
    pub rhs: f64,
    /// Combined standard error of `lhs − rhs`.
    pub std_error: f64,
}

impl IncreaseOfExponent {
    pub fn holds(&self, k: f64) -> bool {
        self.lhs <= self.rhs + k * self.std_error
    }
}

/// Checks the increase-of-exponent bound for each `r` in `rs` on the two-armed
/// policy, sampling `Zₙ` at `n₀` and at the geometric times `n₀·2^k ≤ horizon`.
pub fn increase_of_exponent_check(
    rs: &[u32],
    eps: f64,
    policy: &Policy,
    env: &ArmEnvironment,
    horizon: u64,
    replication: Replication,
) -> Result<Vec<IncreaseOfExponent>> {
    let sched = *policy
        .schedule()
        .ok_or_else(|| crate::Error::Precondition("needs an NS policy".into()))?;
    ensure!(env.arms() == 2, Precondition, "needs two arms");
    ensure!(
        eps > 0.0 && eps <= 1.0 / 3.0,
        Precondition,
        "eps must lie in (0, 1/3]"
    );
    let pi = env.prob(0) - env.prob(1);
    let start = n0(eps, pi, sched.gamma1())?;
    ensure!(
        start <= horizon,
        Precondition,
        "horizon {horizon} is before n0 = {start}"
    );
    let mut n_set = vec![start];
    let mut n = start;
    while n * 2 <= horizon {
        n *= 2;
        n_set.push(n);
    }
    if *n_set.last().unwrap() != horizon {
        n_set.push(horizon);
    }
    let r_max = rs.iter().copied().max().unwrap_or(1) + 1;
    let moments = z_moment_estimate(r_max, &n_set, policy, env, replication)?;
    let sup = |r: u32| {
        moments
            .iter()
            .filter(|m| m.r == r)
            .map(|m| m.estimate)
            .fold(None::<Summary>, |best, s| match best {
                Some(b) if b.mean >= s.mean => Some(b),
                _ => Some(s),
            })
            .expect("at least one n")
    };
    let at_start = |r: u32| {
        moments
            .iter()
            .find(|m| m.r == r && m.n == start)
            .expect("n0 sampled")
            .estimate
    };
    Ok(rs
        .iter()
        .map(|&r| {
            let coef = r as f64 / (pi * (r as f64 - eps));
            let lhs = sup(r);
            let base = at_start(r);
            let next = sup(r + 1);
            let rhs = base.mean
                + coef * (sched.rho_ratio() + h_r(sched.gamma(start), r) + pi * next.mean);
            let std_error = (lhs.std_error.powi(2)
                + base.std_error.powi(2)
                + (coef * pi * next.std_error).powi(2))
            .sqrt();
            IncreaseOfExponent {
                r,
                n0: start,
                lhs: lhs.mean,
                rhs,
                std_error,
            }
        })
        .collect())
}

/// Sum of the technical lemma and its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumLemma {
    pub lhs: f64,
    pub bound: f64,
}

impl SumLemma {
    pub fn holds(&self) -> bool {
        self.lhs <= self.bound
    }
}

fn check_sum_lemma_input(alpha: f64, gamma1: f64, n_tilde: u64, n: u64) -> Result<()> {
    ensure!(alpha > 0.0, Precondition, "alpha must be positive");
    ensure!(
        gamma1 > 0.0 && gamma1 < 1.0,
        Precondition,
        "gamma1 must lie in (0,1)"
    );
    ensure!(n_tilde >= 1 && n >= n_tilde, Precondition, "need 1 ≤ ñ ≤ n");
    ensure!(
        alpha * gamma1 / (n_tilde as f64).sqrt() < 1.0,
        Precondition,
        "need αγ_ñ < 1"
    );
    ensure!(
        n_tilde as f64 >= 1.0 / (alpha * gamma1).powi(2),
        Precondition,
        "need ñ ≥ 1/(αγ₁)² = {}",
        1.0 / (alpha * gamma1).powi(2)
    );
    Ok(())
}

/// `Σ_{j=ñ}^{n−1} γⱼ Π_{l=j}^{n−1} (1 − αγₗ)` for `γⱼ = γ₁/√j`, against `1/α`.
///
/// Evaluated by the forward recursion `S(m+1) = (1 − αγ_m)(S(m) + γ_m)`,
/// `S(ñ) = 0`, which is exact algebra and, being a contraction, does not
/// accumulate rounding error.
pub fn sum_lemma_check(alpha: f64, gamma1: f64, n_tilde: u64, n: u64) -> Result<SumLemma> {
    check_sum_lemma_input(alpha, gamma1, n_tilde, n)?;
    Ok(SumLemma {
        lhs: sum_lemma_path(alpha, gamma1, n_tilde, n)
            .last()
            .copied()
            .unwrap_or(0.0),
        bound: 1.0 / alpha,
    })
}

/// `S(ñ), S(ñ+1), …, S(n)`.
pub fn sum_lemma_path(alpha: f64, gamma1: f64, n_tilde: u64, n: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity((n - n_tilde + 1) as usize);
    let mut s = 0.0;
    out.push(s);
    for m in n_tilde..n {
        let gamma = gamma1 / (m as f64).sqrt();
        s = (1.0 - alpha * gamma) * (s + gamma);
        out.push(s);
    }
    out
}

/// Per-arm ratio `Xₙⁱ/ρₙ` against its almost-sure limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmRatio {
    /// 0-based arm index (`≥ 1`).
    pub arm: usize,
    pub median: f64,
    pub target: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsLimit {
    pub horizon: u64,
    pub ratios: Vec<ArmRatio>,
    /// Fraction of replications with `Xₙ¹ > 0.99`.
    pub best_arm_mass: f64,
}

/// Median over replications of `Xₙⁱ/ρₙ` at the horizon for the over-penalized
/// policy with `γₙ = γ₁ n^{−α}`, `ρₙ = ρ₁ n^{−β}`, compared with
/// `(1 − σp₁)/((d − 1)(p₁ − pᵢ))`.
#[allow(clippy::too_many_arguments)]
pub fn as_limit_check(
    p: &[f64],
    sigma: f64,
    gamma1: f64,
    rho1: f64,
    alpha: f64,
    beta: f64,
    horizon: u64,
    replication: Replication,
) -> Result<AsLimit> {
    let d = p.len();
    ensure!(d >= 2, Config, "need at least two arms");
    ensure!(
        0.0 < beta && beta < alpha && alpha + beta < 1.0,
        Precondition,
        "need 0 < β < α and α + β < 1, got α = {alpha}, β = {beta}"
    );
    ensure!(
        p.windows(2).all(|w| w[0] >= w[1]) && p[0] > p[1],
        Precondition,
        "probabilities must be sorted with a unique best arm: {p:?}"
    );
    ensure!(rho1 > 0.0, Precondition, "rho1 must be positive");
    let sched = StepSchedule::new(gamma1, rho1, alpha, beta, 0)?;
    let env = ArmEnvironment::new(p.to_vec())?;
    let runner = Runner::new(Policy::over_penalized(sched, sigma), horizon, vec![horizon])?;
    let rho = sched.rho(horizon);
    let finals = replication.map(|_, rng| Ok(runner.run(&env, rng)?.last().pi.clone()))?;
    let ratios = (1..d)
        .map(|i| {
            let values: Vec<f64> = finals.iter().map(|pi| pi[i] / rho).collect();
            let m = median(&values);
            let target = (1.0 - sigma * p[0]) / ((d - 1) as f64 * (p[0] - p[i]));
            ArmRatio {
                arm: i,
                median: m,
                target,
                relative_error: (m - target).abs() / target,
            }
        })
        .collect();
    let best = finals.iter().filter(|pi| pi[0] > 0.99).count() as f64 / finals.len() as f64;
    Ok(AsLimit {
        horizon,
        ratios,
        best_arm_mass: best,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeakLimitPoint {
    pub n: u64,
    /// W₁ between the bandit and PDMP empirical laws.
    pub w1: f64,
    pub bandit_mean: Summary,
    pub pdmp_mean: Summary,
    /// `a/π`.
    pub stationary_mean: f64,
}

impl WeakLimitPoint {
    /// Bandit sample mean within `k` standard errors of `a/π`.
    pub fn mean_agrees(&self, k: f64) -> bool {
        self.bandit_mean.agrees_with(self.stationary_mean, k)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakLimit {
    pub params: PdmpParams,
    pub points: Vec<WeakLimitPoint>,
}

impl WeakLimit {
    pub fn w1_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].w1 < w[0].w1)
    }
}

/// Compares the law of `(1 − Xₙ)/ρₙ` (two arms, `γ₁/√n`, `ρ₁/√n`) at each `n`
/// of `n_set` with samples of the stationary limit PDMP, drawn after `burn_in`
/// time units from its stationary mean (master seed `derive_seed(seed, 1)`).
#[allow(clippy::too_many_arguments)]
pub fn weak_limit_check(
    p1: f64,
    p2: f64,
    gamma1: f64,
    rho1: f64,
    sigma: f64,
    n_set: &[u64],
    burn_in: f64,
    replication: Replication,
) -> Result<WeakLimit> {
    let params = PdmpParams::from_bandit(&[p1, p2], gamma1, rho1, sigma, 1)?;
    params.require_ergodic()?;
    let sched = StepSchedule::sqrt_decay(gamma1, rho1)?;
    let env = ArmEnvironment::two_armed(p1, p2)?;
    let bandit = normalized_samples(
        &Policy::over_penalized(sched, sigma),
        &env,
        n_set,
        Normalizer::Rho,
        Replication {
            seed: derive_seed(replication.seed, 0),
            ..replication
        },
    )?;
    let pdmp = Replication {
        seed: derive_seed(replication.seed, 1),
        ..replication
    }
    .map(|_, rng| stationary_sample(&params, burn_in, rng))?;
    let pdmp_mean: MeanAccumulator = pdmp.iter().copied().collect();
    let stationary = params.stationary_mean()?;
    let points = bandit
        .iter()
        .map(|s| WeakLimitPoint {
            n: s.n,
            w1: wasserstein1_sorted(&s.values, &pdmp),
            bandit_mean: s
                .values
                .iter()
                .copied()
                .collect::<MeanAccumulator>()
                .summary(),
            pdmp_mean: pdmp_mean.summary(),
            stationary_mean: stationary,
        })
        .collect();
    Ok(WeakLimit { params, points })
}

/// `k`-SE agreement used for every statistical comparison in this module.
pub const TOLERANCE_SE: f64 = SE_MULTIPLIER;
