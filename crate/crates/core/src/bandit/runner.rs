//! Trajectory runner shared by every policy.
//!
//! Each round consumes, in this order: one uniform for the arm choice, the
//! reward uniform(s), then one uniform for `Bₙ^σ`. Every policy draws the same
//! sequence, so two policies run from the same stream see the same rewards
//! whenever they pick the same arm.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::baselines::{exp3_anytime_eta, step_klucb};
use super::env::ArmEnvironment;
use super::ns::{
    check_simplex, crude_arith, over_penalized_arith, over_penalized_multi_in_place,
    SIMPLEX_TOLERANCE,
};
use super::schedule::StepSchedule;
use crate::error::{ensure, Error, Result};
use crate::rng::{stream_rng, uniform, StreamRng};

/// Rounds between floating-point drift checks of the probability vector.
pub const RENORMALIZE_EVERY: u64 = 10_000;

/// Trajectories advanced together by [`Runner::run_batch`].
pub const LANES: usize = 4;

/// A sequential policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Policy {
    /// Reward-only updates.
    Crude {
        schedule: StepSchedule,
    },
    /// Penalized (`sigma = 1`) through over-penalized (`sigma = 0`) updates.
    OverPenalized {
        schedule: StepSchedule,
        sigma: f64,
    },
    Exp3,
    KlUcb,
}

impl Policy {
    pub fn crude(schedule: StepSchedule) -> Self {
        Policy::Crude { schedule }
    }

    pub fn over_penalized(schedule: StepSchedule, sigma: f64) -> Self {
        Policy::OverPenalized { schedule, sigma }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Policy::Crude { .. } => "crude",
            Policy::OverPenalized { .. } => "over-penalized",
            Policy::Exp3 => "exp3",
            Policy::KlUcb => "kl-ucb",
        }
    }

    pub fn schedule(&self) -> Option<&StepSchedule> {
        match self {
            Policy::Crude { schedule } | Policy::OverPenalized { schedule, .. } => Some(schedule),
            _ => None,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            Policy::Crude { .. } => Some(1.0),
            Policy::OverPenalized { sigma, .. } => Some(*sigma),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(schedule) = self.schedule() {
            schedule.validate()?;
        }
        if let Policy::OverPenalized { sigma, .. } = self {
            ensure!(
                (0.0..=1.0).contains(sigma),
                Config,
                "sigma must lie in [0,1], got {sigma}"
            );
        }
        Ok(())
    }
}

/// Which rewards are sampled each round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RewardDraws {
    /// Only the played arm's reward (enough for pseudo-regret).
    PlayedArm,
    /// Every arm's reward, so that realized regret against the best arm can be measured.
    AllArms,
}

/// Snapshot of a run after `n` rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    /// Sampling distribution for round `n + 1` (one-hot for KL-UCB).
    pub pi: Vec<f64>,
    /// `Sₙ`.
    pub cumulative_reward: u64,
    pub arm_counts: Vec<u64>,
    /// `Σ_{k<n} π_k`: expected number of pulls of each arm given the history.
    pub selection_mass: Vec<f64>,
    /// `Σ_{k≤n} A_kʲ` per arm; empty unless every arm is sampled.
    pub arm_reward_totals: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub checkpoints: Vec<Checkpoint>,
}

impl Trace {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints
            .last()
            .expect("trace has at least one checkpoint")
    }
}

/// Reusable runner: step tables are computed once and shared by all runs.
#[derive(Debug, Clone)]
pub struct Runner {
    policy: Policy,
    horizon: u64,
    checkpoints: Vec<u64>,
    draws: RewardDraws,
    initial: Option<Vec<f64>>,
    tables: Arc<(Vec<f64>, Vec<f64>)>,
}

impl Runner {
    /// `checkpoints` must be strictly increasing in `1..=horizon`; an empty list
    /// means the horizon only.
    pub fn new(policy: Policy, horizon: u64, checkpoints: Vec<u64>) -> Result<Self> {
        policy.validate()?;
        ensure!(horizon >= 1, Config, "horizon must be at least 1");
        let checkpoints = if checkpoints.is_empty() {
            vec![horizon]
        } else {
            checkpoints
        };
        ensure!(
            checkpoints.windows(2).all(|w| w[0] < w[1]),
            Config,
            "checkpoints must be strictly increasing"
        );
        ensure!(
            checkpoints[0] >= 1 && *checkpoints.last().unwrap() <= horizon,
            Config,
            "checkpoints must lie in [1, {horizon}]"
        );
        let tables = match policy.schedule() {
            Some(s) => s.tables(horizon),
            None => (Vec::new(), Vec::new()),
        };
        Ok(Self {
            policy,
            horizon,
            checkpoints,
            draws: RewardDraws::PlayedArm,
            initial: None,
            tables: Arc::new(tables),
        })
    }

    pub fn with_reward_draws(mut self, draws: RewardDraws) -> Self {
        self.draws = draws;
        self
    }

    /// Start the NS policies from `pi` instead of the uniform distribution.
    pub fn with_initial(mut self, pi: Vec<f64>) -> Result<Self> {
        ensure!(
            self.policy.schedule().is_some(),
            Config,
            "an initial distribution only applies to NS policies"
        );
        check_simplex(&pi).map_err(|e| Error::Config(e.to_string()))?;
        self.initial = Some(pi);
        Ok(self)
    }

    pub fn policy(&self) -> &Policy {
        &self.policy
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn checkpoints(&self) -> &[u64] {
        &self.checkpoints
    }

    pub fn reward_draws(&self) -> RewardDraws {
        self.draws
    }

    pub fn run<R: Rng + ?Sized>(&self, env: &ArmEnvironment, rng: &mut R) -> Result<Trace> {
        let d = env.arms();
        if let Some(pi) = &self.initial {
            ensure!(
                pi.len() == d,
                Config,
                "initial distribution has {} entries for {d} arms",
                pi.len()
            );
        }
        match &self.policy {
            Policy::Crude { .. } => self.run_ns(env, 1.0, false, rng),
            Policy::OverPenalized { sigma, .. } => self.run_ns(env, *sigma, true, rng),
            Policy::Exp3 => self.run_exp3(env, rng),
            Policy::KlUcb => self.run_klucb(env, rng),
        }
    }

    /// Runs one trajectory per stream. Equivalent to calling [`run`](Self::run)
    /// on each stream in turn; two-armed NS runs are interleaved in groups of
    /// [`LANES`] to overlap their dependency chains.
    pub fn run_batch(&self, env: &ArmEnvironment, rngs: &mut [StreamRng]) -> Result<Vec<Trace>> {
        let fast = env.arms() == 2
            && self.draws == RewardDraws::PlayedArm
            && self.policy.schedule().is_some();
        if !fast {
            return rngs.iter_mut().map(|r| self.run(env, r)).collect();
        }
        let (sigma, penalized) = match &self.policy {
            Policy::OverPenalized { sigma, .. } => (*sigma, true),
            _ => (1.0, false),
        };
        let mut out = Vec::with_capacity(rngs.len());
        let mut chunks = rngs.chunks_exact_mut(LANES);
        for chunk in &mut chunks {
            let lanes: &mut [StreamRng; LANES] = chunk.try_into().expect("chunk has LANES streams");
            out.extend(self.run_ns_two_lanes(env, sigma, penalized, lanes)?);
        }
        for r in chunks.into_remainder() {
            out.push(self.run_ns_two(env, sigma, penalized, r)?);
        }
        Ok(out)
    }

    fn run_ns_two_lanes(
        &self,
        env: &ArmEnvironment,
        sigma: f64,
        penalized: bool,
        rngs: &mut [StreamRng; LANES],
    ) -> Result<Vec<Trace>> {
        let (gammas, rhos) = &*self.tables;
        let (p1, p2) = (env.prob(0), env.prob(1));
        let mut x = [self.initial.as_ref().map_or(0.5, |pi| pi[0]); LANES];
        let mut mass = [0.0; LANES];
        let mut total_reward = [0u64; LANES];
        let mut pulls0 = [0u64; LANES];
        let mut out: Vec<Vec<Checkpoint>> = (0..LANES)
            .map(|_| Vec::with_capacity(self.checkpoints.len()))
            .collect();
        let mut next = 0;
        for k in 1..=self.horizon {
            let idx = (k - 1) as usize;
            let (gamma, rho) = (gammas[idx], rhos[idx]);
            for l in 0..LANES {
                let rng = &mut rngs[l];
                let first = f64::from(u8::from(uniform(rng) < x[l]));
                let p = p2 + (p1 - p2) * first;
                let reward = f64::from(u8::from(uniform(rng) < p));
                let b_sigma = f64::from(u8::from(uniform(rng) < sigma));
                mass[l] += x[l];
                pulls0[l] += first as u64;
                total_reward[l] += reward as u64;
                x[l] = if penalized {
                    over_penalized_arith(x[l], gamma, rho, first, reward, b_sigma)
                } else {
                    crude_arith(x[l], gamma, first, reward)
                };
            }
            if k % RENORMALIZE_EVERY == 0 {
                for xl in &mut x {
                    ensure!(
                        (-SIMPLEX_TOLERANCE..=1.0 + SIMPLEX_TOLERANCE).contains(xl),
                        Invariant,
                        "arm probability {xl} left [0,1] at step {k}"
                    );
                    *xl = xl.clamp(0.0, 1.0);
                }
            }
            if k == self.checkpoints[next] {
                for l in 0..LANES {
                    out[l].push(Checkpoint {
                        n: k,
                        pi: vec![x[l], 1.0 - x[l]],
                        cumulative_reward: total_reward[l],
                        arm_counts: vec![pulls0[l], k - pulls0[l]],
                        selection_mass: vec![mass[l], k as f64 - mass[l]],
                        arm_reward_totals: Vec::new(),
                    });
                }
                next += 1;
                if next == self.checkpoints.len() {
                    break;
                }
            }
        }
        Ok(out
            .into_iter()
            .map(|checkpoints| Trace { checkpoints })
            .collect())
    }

    fn run_ns<R: Rng + ?Sized>(
        &self,
        env: &ArmEnvironment,
        sigma: f64,
        penalized: bool,
        rng: &mut R,
    ) -> Result<Trace> {
        let d = env.arms();
        if d == 2 && self.draws == RewardDraws::PlayedArm {
            return self.run_ns_two(env, sigma, penalized, rng);
        }
        let (gammas, rhos) = &*self.tables;
        let mut pi = self
            .initial
            .clone()
            .unwrap_or_else(|| vec![1.0 / d as f64; d]);
        let mut book = Book::new(d, self.draws, &self.checkpoints);
        let mut rewards = vec![false; d];
        for k in 1..=self.horizon {
            let arm = sample_arm(&pi, uniform(rng));
            let reward = draw_rewards(env, arm, self.draws, &mut rewards, rng);
            let b_sigma = uniform(rng) < sigma;
            book.record_round(&pi, arm, reward, &rewards);
            let (gamma, rho) = (gammas[(k - 1) as usize], rhos[(k - 1) as usize]);
            if penalized {
                over_penalized_multi_in_place(&mut pi, gamma, rho, arm, reward, b_sigma);
            } else {
                crude_multi_in_place(&mut pi, gamma, arm, reward);
            }
            if k % RENORMALIZE_EVERY == 0 {
                renormalize(&mut pi, k)?;
            }
            if book.due(k) {
                book.snapshot(k, pi.clone());
            }
        }
        Ok(book.finish())
    }

    /// Scalar fast path for two arms.
    fn run_ns_two<R: Rng + ?Sized>(
        &self,
        env: &ArmEnvironment,
        sigma: f64,
        penalized: bool,
        rng: &mut R,
    ) -> Result<Trace> {
        let (gammas, rhos) = &*self.tables;
        let (p1, p2) = (env.prob(0), env.prob(1));
        let mut x = self.initial.as_ref().map_or(0.5, |pi| pi[0]);
        let mut mass = 0.0;
        let mut total_reward = 0u64;
        let mut pulls0 = 0u64;
        let mut out = Vec::with_capacity(self.checkpoints.len());
        let mut next = 0;
        for k in 1..=self.horizon {
            let first = f64::from(u8::from(uniform(rng) < x));
            let p = p2 + (p1 - p2) * first;
            let reward = f64::from(u8::from(uniform(rng) < p));
            let b_sigma = f64::from(u8::from(uniform(rng) < sigma));
            mass += x;
            pulls0 += first as u64;
            total_reward += reward as u64;
            let idx = (k - 1) as usize;
            x = if penalized {
                over_penalized_arith(x, gammas[idx], rhos[idx], first, reward, b_sigma)
            } else {
                crude_arith(x, gammas[idx], first, reward)
            };
            if k % RENORMALIZE_EVERY == 0 {
                ensure!(
                    (-SIMPLEX_TOLERANCE..=1.0 + SIMPLEX_TOLERANCE).contains(&x),
                    Invariant,
                    "arm probability {x} left [0,1] at step {k}"
                );
                x = x.clamp(0.0, 1.0);
            }
            if k == self.checkpoints[next] {
                out.push(Checkpoint {
                    n: k,
                    pi: vec![x, 1.0 - x],
                    cumulative_reward: total_reward,
                    arm_counts: vec![pulls0, k - pulls0],
                    selection_mass: vec![mass, k as f64 - mass],
                    arm_reward_totals: Vec::new(),
                });
                next += 1;
                if next == self.checkpoints.len() {
                    break;
                }
            }
        }
        Ok(Trace { checkpoints: out })
    }

    fn run_exp3<R: Rng + ?Sized>(&self, env: &ArmEnvironment, rng: &mut R) -> Result<Trace> {
        let d = env.arms();
        let mut gains = vec![0.0; d];
        let mut probs = vec![1.0 / d as f64; d];
        let mut book = Book::new(d, self.draws, &self.checkpoints);
        let mut rewards = vec![false; d];
        for k in 1..=self.horizon {
            exp3_distribution(&gains, exp3_anytime_eta(d, k), &mut probs);
            let arm = sample_arm(&probs, uniform(rng));
            let reward = draw_rewards(env, arm, self.draws, &mut rewards, rng);
            let _b = uniform(rng);
            book.record_round(&probs, arm, reward, &rewards);
            if reward {
                gains[arm] += 1.0 / probs[arm];
            }
            if book.due(k) {
                let mut upcoming = vec![0.0; d];
                exp3_distribution(&gains, exp3_anytime_eta(d, k + 1), &mut upcoming);
                book.snapshot(k, upcoming);
            }
        }
        Ok(book.finish())
    }

    fn run_klucb<R: Rng + ?Sized>(&self, env: &ArmEnvironment, rng: &mut R) -> Result<Trace> {
        let d = env.arms();
        let mut counts = vec![0u64; d];
        let mut means = vec![0.0; d];
        let mut sums = vec![0u64; d];
        let mut book = Book::new(d, self.draws, &self.checkpoints);
        let mut rewards = vec![false; d];
        let mut choice = vec![0.0; d];
        for k in 1..=self.horizon {
            let _u = uniform(rng);
            let arm = step_klucb(&counts, &means, k);
            let reward = draw_rewards(env, arm, self.draws, &mut rewards, rng);
            let _b = uniform(rng);
            choice.iter_mut().for_each(|c| *c = 0.0);
            choice[arm] = 1.0;
            book.record_round(&choice, arm, reward, &rewards);
            counts[arm] += 1;
            sums[arm] += u64::from(reward);
            means[arm] = sums[arm] as f64 / counts[arm] as f64;
            if book.due(k) {
                let mut upcoming = vec![0.0; d];
                upcoming[step_klucb(&counts, &means, k + 1)] = 1.0;
                book.snapshot(k, upcoming);
            }
        }
        Ok(book.finish())
    }
}

/// Run one trajectory on the stream `(seed, 0)`.
pub fn run_policy(
    policy: &Policy,
    env: &ArmEnvironment,
    horizon: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<Trace> {
    let runner = Runner::new(policy.clone(), horizon, checkpoints.to_vec())?;
    runner.run(env, &mut stream_rng(seed, 0))
}

#[inline]
fn sample_arm(pi: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (j, p) in pi.iter().enumerate() {
        acc += p;
        if u < acc {
            return j;
        }
    }
    pi.iter().rposition(|p| *p > 0.0).unwrap_or(pi.len() - 1)
}

#[inline]
fn draw_rewards<R: Rng + ?Sized>(
    env: &ArmEnvironment,
    arm: usize,
    draws: RewardDraws,
    rewards: &mut [bool],
    rng: &mut R,
) -> bool {
    match draws {
        RewardDraws::PlayedArm => env.reward_from_uniform(arm, uniform(rng)),
        RewardDraws::AllArms => {
            for (j, r) in rewards.iter_mut().enumerate() {
                *r = env.reward_from_uniform(j, uniform(rng));
            }
            rewards[arm]
        }
    }
}

fn crude_multi_in_place(pi: &mut [f64], gamma: f64, arm: usize, reward: bool) {
    if reward {
        for (j, p) in pi.iter_mut().enumerate() {
            let target = if j == arm { 1.0 } else { 0.0 };
            *p += gamma * (target - *p);
        }
    }
}

fn renormalize(pi: &mut [f64], step: u64) -> Result<()> {
    check_simplex(pi).map_err(|e| Error::Invariant(format!("step {step}: {e}")))?;
    for p in pi.iter_mut() {
        *p = p.max(0.0);
    }
    let sum: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= sum);
    Ok(())
}

/// Softmax of `η·Ĝ` mixed with uniform exploration `γ = Kη`.
fn exp3_distribution(gains: &[f64], eta: f64, out: &mut [f64]) {
    let k = gains.len() as f64;
    let gamma = (k * eta).min(1.0);
    let top = gains.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, g) in out.iter_mut().zip(gains) {
        *o = (eta * (g - top)).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o = (1.0 - gamma) * *o / total + gamma / k;
    }
}

/// Running totals shared by the general-purpose loops.
struct Book<'a> {
    draws: RewardDraws,
    checkpoints: &'a [u64],
    next: usize,
    reward: u64,
    counts: Vec<u64>,
    mass: Vec<f64>,
    totals: Vec<u64>,
    out: Vec<Checkpoint>,
}

impl<'a> Book<'a> {
    fn new(d: usize, draws: RewardDraws, checkpoints: &'a [u64]) -> Self {
        Self {
            draws,
            checkpoints,
            next: 0,
            reward: 0,
            counts: vec![0; d],
            mass: vec![0.0; d],
            totals: vec![0; d],
            out: Vec::with_capacity(checkpoints.len()),
        }
    }

    #[inline]
    fn record_round(&mut self, pi: &[f64], arm: usize, reward: bool, rewards: &[bool]) {
        for (m, p) in self.mass.iter_mut().zip(pi) {
            *m += p;
        }
        self.counts[arm] += 1;
        self.reward += u64::from(reward);
        if self.draws == RewardDraws::AllArms {
            for (t, r) in self.totals.iter_mut().zip(rewards) {
                *t += u64::from(*r);
            }
        }
    }

    #[inline]
    fn due(&self, k: u64) -> bool {
        self.next < self.checkpoints.len() && self.checkpoints[self.next] == k
    }

    fn snapshot(&mut self, k: u64, pi: Vec<f64>) {
        self.out.push(Checkpoint {
            n: k,
            pi,
            cumulative_reward: self.reward,
            arm_counts: self.counts.clone(),
            selection_mass: self.mass.clone(),
            arm_reward_totals: match self.draws {
                RewardDraws::AllArms => self.totals.clone(),
                RewardDraws::PlayedArm => Vec::new(),
            },
        });
        self.next += 1;
    }

    fn finish(self) -> Trace {
        Trace {
            checkpoints: self.out,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(sigma: f64) -> Policy {
        Policy::over_penalized(StepSchedule::sqrt_decay(0.89, 0.3).unwrap(), sigma)
    }

    #[test]
    fn same_seed_same_trace() {
        let env = ArmEnvironment::two_armed(0.7, 0.6).unwrap();
        for policy in [op(0.0), Policy::Exp3, Policy::KlUcb] {
            let a = run_policy(&policy, &env, 2_000, 11, &[10, 100, 2_000]).unwrap();
            let b = run_policy(&policy, &env, 2_000, 11, &[10, 100, 2_000]).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.checkpoints.len(), 3);
        }
    }

    #[test]
    fn fast_path_matches_general_path() {
        let env = ArmEnvironment::two_armed(0.7, 0.4).unwrap();
        let runner = Runner::new(op(0.3), 5_000, vec![1, 77, 5_000]).unwrap();
        let scalar = runner.run(&env, &mut stream_rng(3, 0)).unwrap();
        let mut general = Book::new(2, RewardDraws::PlayedArm, runner.checkpoints());
        // Replay through the vector loop by hand with identical draws.
        let mut rng = stream_rng(3, 0);
        let (gammas, rhos) = &*runner.tables;
        let mut pi = vec![0.5, 0.5];
        for k in 1..=5_000u64 {
            let arm = sample_arm(&pi, uniform(&mut rng));
            let reward = env.reward_from_uniform(arm, uniform(&mut rng));
            let b = uniform(&mut rng) < 0.3;
            general.record_round(&pi, arm, reward, &[]);
            let i = (k - 1) as usize;
            over_penalized_multi_in_place(&mut pi, gammas[i], rhos[i], arm, reward, b);
            if general.due(k) {
                general.snapshot(k, pi.clone());
            }
        }
        let general = general.finish();
        for (s, g) in scalar.checkpoints.iter().zip(&general.checkpoints) {
            assert_eq!(s.cumulative_reward, g.cumulative_reward);
            assert_eq!(s.arm_counts, g.arm_counts);
            assert!((s.pi[0] - g.pi[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_equals_individual_runs() {
        let env = ArmEnvironment::two_armed(0.8, 0.3).unwrap();
        for policy in [
            op(0.0),
            op(0.6),
            Policy::crude(StepSchedule::sqrt_decay(0.5, 0.0).unwrap()),
        ] {
            let runner = Runner::new(policy, 3_000, vec![5, 3_000]).unwrap();
            let mut rngs: Vec<StreamRng> = (0..6).map(|r| stream_rng(8, r)).collect();
            let batch = runner.run_batch(&env, &mut rngs).unwrap();
            for (r, trace) in batch.iter().enumerate() {
                let single = runner.run(&env, &mut stream_rng(8, r as u64)).unwrap();
                assert_eq!(&single, trace);
            }
        }
    }

    #[test]
    fn rejects_bad_checkpoints() {
        let policy = op(0.0);
        assert!(Runner::new(policy.clone(), 0, vec![]).is_err());
        assert!(Runner::new(policy.clone(), 10, vec![5, 5]).is_err());
        assert!(Runner::new(policy.clone(), 10, vec![0, 5]).is_err());
        assert!(Runner::new(policy, 10, vec![5, 11]).is_err());
    }
}
