//! Regret and pseudo-regret estimation, grid sweeps and closed-form bounds.

use serde::{Deserialize, Serialize};

use crate::bandit::{ArmEnvironment, Checkpoint, Policy, RewardDraws, Runner};
use crate::error::{ensure, Result};
use crate::mc::Replication;
use crate::rng::derive_seed;
use crate::stats::{MeanAccumulator, Summary};

/// How `R̄ₙ` (or `Rₙ`) is read off a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Estimator {
    /// `n·p* − Sₙ`.
    Reward,
    /// `Σⱼ (p* − pⱼ)·Σ_{k<n} πₖʲ`, the conditional expectation of the reward
    /// estimator given the policy's distributions. Two arms only.
    Occupation,
    /// Realized regret `maxⱼ Σₖ Aₖʲ − Sₙ`.
    TrueRegret,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Reward => "reward",
            Estimator::Occupation => "occupation",
            Estimator::TrueRegret => "true-regret",
        }
    }

    fn draws(self) -> RewardDraws {
        match self {
            Estimator::TrueRegret => RewardDraws::AllArms,
            _ => RewardDraws::PlayedArm,
        }
    }

    fn check(self, env: &ArmEnvironment) -> Result<()> {
        ensure!(
            self != Estimator::Occupation || env.arms() == 2,
            Precondition,
            "the occupation estimator needs two arms, got {}",
            env.arms()
        );
        Ok(())
    }

    /// Value of the estimator on one checkpoint.
    pub fn evaluate(self, env: &ArmEnvironment, cp: &Checkpoint) -> f64 {
        let best = env.best_prob();
        match self {
            Estimator::Reward => cp.n as f64 * best - cp.cumulative_reward as f64,
            Estimator::Occupation => env
                .probs()
                .iter()
                .zip(&cp.selection_mass)
                .map(|(p, m)| (best - p) * m)
                .sum(),
            Estimator::TrueRegret => {
                let top = cp.arm_reward_totals.iter().copied().max().unwrap_or(0);
                top as f64 - cp.cumulative_reward as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretCurve {
    pub estimator: Estimator,
    pub points: Vec<CurvePoint>,
}

impl RegretCurve {
    fn from_accumulators(
        estimator: Estimator,
        checkpoints: &[u64],
        acc: &[MeanAccumulator],
    ) -> Self {
        let points = checkpoints
            .iter()
            .zip(acc)
            .map(|(&n, a)| CurvePoint {
                n,
                estimate: a.mean(),
                std_error: a.std_error(),
                reps: a.count(),
            })
            .collect();
        Self { estimator, points }
    }

    pub fn at(&self, n: u64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

/// Replications handed to one worker task at a time.
const BATCH: usize = 16;

/// Per-checkpoint accumulators of several estimators over `reps` replications
/// of one runner.
fn accumulate(
    runner: &Runner,
    env: &ArmEnvironment,
    estimators: &[Estimator],
    replication: Replication,
) -> Result<Vec<Vec<MeanAccumulator>>> {
    let k = runner.checkpoints().len();
    let per_rep = replication.map_batched(BATCH, |_, rngs| {
        Ok(runner
            .run_batch(env, rngs)?
            .iter()
            .map(|trace| {
                estimators
                    .iter()
                    .flat_map(|e| trace.checkpoints.iter().map(move |cp| e.evaluate(env, cp)))
                    .collect::<Vec<f64>>()
            })
            .collect())
    })?;
    let mut acc = vec![vec![MeanAccumulator::new(); k]; estimators.len()];
    for values in per_rep {
        for (i, chunk) in values.chunks(k).enumerate() {
            for (a, v) in acc[i].iter_mut().zip(chunk) {
                a.push(*v);
            }
        }
    }
    Ok(acc)
}

/// Monte-Carlo estimate of `R̄ₙ` (or `E Rₙ`) at each checkpoint.
pub fn pseudo_regret_curve(
    policy: &Policy,
    env: &ArmEnvironment,
    horizon: u64,
    checkpoints: &[u64],
    replication: Replication,
    estimator: Estimator,
) -> Result<RegretCurve> {
    estimator.check(env)?;
    let runner = Runner::new(policy.clone(), horizon, checkpoints.to_vec())?
        .with_reward_draws(estimator.draws());
    let acc = accumulate(&runner, env, &[estimator], replication)?;
    Ok(RegretCurve::from_accumulators(
        estimator,
        runner.checkpoints(),
        &acc[0],
    ))
}

/// Several estimators computed from the same trajectories.
pub fn regret_curves(
    policy: &Policy,
    env: &ArmEnvironment,
    horizon: u64,
    checkpoints: &[u64],
    replication: Replication,
    estimators: &[Estimator],
) -> Result<Vec<RegretCurve>> {
    for e in estimators {
        e.check(env)?;
    }
    let draws = if estimators.contains(&Estimator::TrueRegret) {
        RewardDraws::AllArms
    } else {
        RewardDraws::PlayedArm
    };
    let runner =
        Runner::new(policy.clone(), horizon, checkpoints.to_vec())?.with_reward_draws(draws);
    let acc = accumulate(&runner, env, estimators, replication)?;
    Ok(estimators
        .iter()
        .zip(&acc)
        .map(|(e, a)| RegretCurve::from_accumulators(*e, runner.checkpoints(), a))
        .collect())
}

/// Monte-Carlo estimate of `E Rₙ` with every arm's reward drawn each round.
pub fn true_regret_mc(
    policy: &Policy,
    env: &ArmEnvironment,
    horizon: u64,
    checkpoints: &[u64],
    replication: Replication,
) -> Result<RegretCurve> {
    pseudo_regret_curve(
        policy,
        env,
        horizon,
        checkpoints,
        replication,
        Estimator::TrueRegret,
    )
}

/// `E Rₙ − R̄ₙ` at the horizon, with the bound `√(n ln d / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretGap {
    pub n: u64,
    pub true_regret: Summary,
    pub pseudo_regret: Summary,
    /// Paired per-replication difference `Rₙ − (n p* − Sₙ)`.
    pub gap: Summary,
    pub bound: f64,
}

impl RegretGap {
    /// `−k·SE ≤ gap ≤ bound + k·SE`.
    pub fn holds(&self, k: f64) -> bool {
        let slack = k * self.gap.std_error;
        self.gap.mean >= -slack && self.gap.mean <= self.bound + slack
    }
}

pub fn gap_bound(n: u64, arms: usize) -> f64 {
    (n as f64 * (arms as f64).ln() / 2.0).sqrt()
}

pub fn regret_gap(
    policy: &Policy,
    env: &ArmEnvironment,
    horizon: u64,
    replication: Replication,
) -> Result<RegretGap> {
    let runner = Runner::new(policy.clone(), horizon, vec![horizon])?
        .with_reward_draws(RewardDraws::AllArms);
    let samples = replication.map(|_, rng| {
        let trace = runner.run(env, rng)?;
        let cp = trace.last();
        Ok((
            Estimator::TrueRegret.evaluate(env, cp),
            Estimator::Reward.evaluate(env, cp),
        ))
    })?;
    let true_regret: MeanAccumulator = samples.iter().map(|s| s.0).collect();
    let pseudo: MeanAccumulator = samples.iter().map(|s| s.1).collect();
    let gap: MeanAccumulator = samples.iter().map(|s| s.0 - s.1).collect();
    Ok(RegretGap {
        n: horizon,
        true_regret: true_regret.summary(),
        pseudo_regret: pseudo.summary(),
        gap: gap.summary(),
        bound: gap_bound(horizon, env.arms()),
    })
}

/// Triangle `{(p₁, p₂) : 0 ≤ p₂ < p₁ ≤ 1}` on a lattice of step `step`,
/// optionally refined along the diagonal.
///
/// The worst case for an `O(√n)` policy sits at gaps of order `1/√n`, which a
/// fixed lattice stops resolving as `n` grows. Each entry `Δ` of `gaps` adds
/// the points `(p₁, p₁ − Δ)` for every lattice value `p₁ ≥ Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub step: f64,
    #[serde(default)]
    pub gaps: Vec<f64>,
}

impl GridSpec {
    pub fn new(step: f64) -> Result<Self> {
        Self::with_gaps(step, Vec::new())
    }

    pub fn with_gaps(step: f64, gaps: Vec<f64>) -> Result<Self> {
        ensure!(
            step > 0.0 && step <= 1.0,
            Config,
            "grid step must lie in (0,1], got {step}"
        );
        ensure!(
            gaps.iter().all(|g| *g > 0.0 && *g <= 1.0),
            Config,
            "refinement gaps must lie in (0,1], got {gaps:?}"
        );
        Ok(Self { step, gaps })
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let m = (1.0 / self.step + 1e-9).floor() as u32;
        let at = |i: u32| (i as f64 * self.step).min(1.0);
        let mut out: Vec<(f64, f64)> = (1..=m)
            .flat_map(|i| (0..i).map(move |j| (at(i), at(j))))
            .collect();
        for &gap in &self.gaps {
            for i in 1..=m {
                let p1 = at(i);
                let p2 = p1 - gap;
                let known = out.iter().any(|&(a, b)| a == p1 && (b - p2).abs() < 1e-9);
                if p2 > -1e-12 && !known {
                    out.push((p1, p2.max(0.0)));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupPoint {
    pub n: u64,
    /// `max` over the grid of `R̄ₙ/√n`.
    pub sup: f64,
    pub std_error: f64,
    pub argmax_p1: f64,
    pub argmax_p2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub policy: String,
    pub grid: Vec<(f64, f64)>,
    pub checkpoints: Vec<u64>,
    /// `values[g][k]`: normalized regret at grid point `g`, checkpoint `k`.
    pub values: Vec<Vec<CurvePoint>>,
    pub sup: Vec<SupPoint>,
}

impl SweepResult {
    /// Largest `R̄ₙ/√n + k·SE` over grid and checkpoints.
    pub fn max_upper(&self, k: f64) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|p| p.estimate + k * p.std_error)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_value(&self) -> f64 {
        self.sup
            .iter()
            .map(|s| s.sup)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_at(&self, n: u64) -> Option<&SupPoint> {
        self.sup.iter().find(|s| s.n == n)
    }
}

/// `sup` over the grid of `R̄ₙ/√n` at every checkpoint. Grid point `g` uses the
/// master seed `derive_seed(seed, g)`.
pub fn sup_sweep(
    policy: &Policy,
    grid: &GridSpec,
    horizon: u64,
    checkpoints: &[u64],
    replication: Replication,
    estimator: Estimator,
) -> Result<SweepResult> {
    let points = grid.points();
    ensure!(!points.is_empty(), Config, "empty sweep grid");
    let runner = Runner::new(policy.clone(), horizon, checkpoints.to_vec())?
        .with_reward_draws(estimator.draws());
    let cps = runner.checkpoints().to_vec();
    let mut values = Vec::with_capacity(points.len());
    for (g, &(p1, p2)) in points.iter().enumerate() {
        let env = ArmEnvironment::two_armed(p1, p2)?;
        estimator.check(&env)?;
        let rep = Replication {
            seed: derive_seed(replication.seed, g as u64),
            ..replication
        };
        let acc = accumulate(&runner, &env, &[estimator], rep)?;
        let curve = RegretCurve::from_accumulators(estimator, &cps, &acc[0]);
        values.push(
            curve
                .points
                .into_iter()
                .map(|p| {
                    let root = (p.n as f64).sqrt();
                    CurvePoint {
                        estimate: p.estimate / root,
                        std_error: p.std_error / root,
                        ..p
                    }
                })
                .collect::<Vec<_>>(),
        );
    }
    let sup = (0..cps.len())
        .map(|k| {
            let (g, best) = values.iter().enumerate().map(|(g, v)| (g, v[k])).fold(
                (0, values[0][k]),
                |acc, (g, p)| {
                    if p.estimate > acc.1.estimate {
                        (g, p)
                    } else {
                        acc
                    }
                },
            );
            SupPoint {
                n: cps[k],
                sup: best.estimate,
                std_error: best.std_error,
                argmax_p1: points[g].0,
                argmax_p2: points[g].1,
            }
        })
        .collect();
    Ok(SweepResult {
        policy: policy.name().to_string(),
        grid: points,
        checkpoints: cps,
        values,
        sup,
    })
}

/// Re-estimates the sup curve of a screening `sweep` on fresh replications.
///
/// The maximum of many noisy grid estimates is biased upward. Here the `top_k`
/// grid points of each checkpoint in the screening run are pooled and rerun
/// with `replication` (use a master seed distinct from the screening one), and
/// the sup is taken over these independent estimates only.
pub fn refine_sup(
    policy: &Policy,
    sweep: &SweepResult,
    horizon: u64,
    top_k: usize,
    replication: Replication,
    estimator: Estimator,
) -> Result<Vec<SupPoint>> {
    ensure!(top_k >= 1, Config, "top_k must be at least 1");
    let cps = &sweep.checkpoints;
    let mut candidates: Vec<usize> = Vec::new();
    for k in 0..cps.len() {
        let mut order: Vec<usize> = (0..sweep.grid.len()).collect();
        order.sort_by(|&a, &b| {
            sweep.values[b][k]
                .estimate
                .total_cmp(&sweep.values[a][k].estimate)
        });
        candidates.extend(order.into_iter().take(top_k));
    }
    candidates.sort_unstable();
    candidates.dedup();
    let runner =
        Runner::new(policy.clone(), horizon, cps.clone())?.with_reward_draws(estimator.draws());
    ensure!(
        runner.checkpoints() == cps.as_slice(),
        Config,
        "refinement checkpoints differ from the screening sweep"
    );
    let mut best: Vec<Option<SupPoint>> = vec![None; cps.len()];
    for &g in &candidates {
        let (p1, p2) = sweep.grid[g];
        let env = ArmEnvironment::two_armed(p1, p2)?;
        let rep = Replication {
            seed: derive_seed(replication.seed, g as u64),
            ..replication
        };
        let acc = accumulate(&runner, &env, &[estimator], rep)?;
        for (k, a) in acc[0].iter().enumerate() {
            let root = (cps[k] as f64).sqrt();
            let value = a.mean() / root;
            if best[k].is_none_or(|b| value > b.sup) {
                best[k] = Some(SupPoint {
                    n: cps[k],
                    sup: value,
                    std_error: a.std_error() / root,
                    argmax_p1: p1,
                    argmax_p2: p2,
                });
            }
        }
    }
    Ok(best
        .into_iter()
        .map(|b| b.expect("at least one candidate"))
        .collect())
}

/// Uniform pseudo-regret bound `31.1·√(2n)` of the over-penalized algorithm.
pub fn theoretical_bound_over_penalized(n: u64) -> f64 {
    31.1 * (2.0 * n as f64).sqrt()
}

/// `1, 2, 4, …` up to `horizon`, always ending at `horizon`.
pub fn geometric_checkpoints(horizon: u64, ratio: f64) -> Vec<u64> {
    let ratio = ratio.max(1.0 + 1e-9);
    let mut out = Vec::new();
    let mut x = 1.0f64;
    while (x as u64) < horizon {
        let n = x.round() as u64;
        if out.last() != Some(&n) {
            out.push(n);
        }
        x *= ratio;
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandit::StepSchedule;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bound_values() {
        assert_abs_diff_eq!(theoretical_bound_over_penalized(1), 43.98, epsilon = 0.01);
        assert_abs_diff_eq!(theoretical_bound_over_penalized(2), 62.2, epsilon = 0.01);
        assert_abs_diff_eq!(theoretical_bound_over_penalized(100), 439.8, epsilon = 0.05);
        assert_abs_diff_eq!(gap_bound(1000, 2), 18.62, epsilon = 0.01);
    }

    #[test]
    fn grid_has_strict_triangle() {
        let pts = GridSpec::new(0.05).unwrap().points();
        let refined = GridSpec::with_gaps(0.05, vec![0.01, 0.05])
            .unwrap()
            .points();
        assert_eq!(refined.len(), 210 + 20);
        assert!(refined.contains(&(1.0, 0.99)));
        assert_eq!(pts.len(), 210);
        assert!(pts
            .iter()
            .all(|(p1, p2)| p2 < p1 && *p1 <= 1.0 && *p2 >= 0.0));
        assert!(GridSpec::new(0.0).is_err());
        assert_eq!(GridSpec::new(1.0).unwrap().points(), vec![(1.0, 0.0)]);
    }

    #[test]
    fn checkpoints_are_geometric() {
        assert_eq!(
            geometric_checkpoints(100, 2.0),
            vec![1, 2, 4, 8, 16, 32, 64, 100]
        );
        assert_eq!(geometric_checkpoints(64, 2.0), vec![1, 2, 4, 8, 16, 32, 64]);
        assert_eq!(geometric_checkpoints(1, 2.0), vec![1]);
    }

    #[test]
    fn occupation_is_zero_on_equal_arms() {
        let env = ArmEnvironment::two_armed(0.4, 0.4).unwrap();
        let policy = Policy::over_penalized(StepSchedule::sqrt_decay(0.5, 0.2).unwrap(), 0.0);
        let curve = pseudo_regret_curve(
            &policy,
            &env,
            500,
            &[10, 500],
            Replication::new(50, 1),
            Estimator::Occupation,
        )
        .unwrap();
        assert!(curve
            .points
            .iter()
            .all(|p| p.estimate == 0.0 && p.std_error == 0.0));
    }

    #[test]
    fn occupation_rejects_many_arms() {
        let env = ArmEnvironment::new(vec![0.5, 0.4, 0.3]).unwrap();
        let r = pseudo_regret_curve(
            &Policy::KlUcb,
            &env,
            10,
            &[],
            Replication::new(2, 0),
            Estimator::Occupation,
        );
        assert!(r.is_err());
    }
}
