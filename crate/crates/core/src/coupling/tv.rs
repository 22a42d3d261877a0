use serde::{Deserialize, Serialize};

use super::stick::{psi, StickCoupling, StickParams};
use super::wasserstein::coupled_states_at;
use crate::error::{ensure, Error, Result};
use crate::mc::Replication;
use crate::pdmp::{stationary_sample, PdmpParams};
use crate::rng::{derive_seed, StreamRng};
use crate::stats::{weighted_linear_fit, LinearFit, SE_MULTIPLIER};

/// Phase lengths and the target set of a two-phase merge attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvSetup {
    /// End of the Wasserstein phase.
    pub t1: f64,
    /// Time by which the paths must have merged.
    pub t: f64,
    pub x0: f64,
    pub eps: f64,
}

/// `α π` with `α = 1/(2 + bπ/(ac))`.
pub fn tv_theory_rate(params: &PdmpParams) -> f64 {
    let (a, b, c) = (params.a(), params.b(), params.c());
    let pi = params.spectral_gap();
    pi / (2.0 + b * pi / (a * c))
}

/// Default schedule for horizon `t`.
///
/// The Wasserstein phase takes a fraction `δ = (ca/b)/(ca/b + π/2)` of the
/// time and the closeness radius shrinks as `ε = e^{−βt}` with `β = δπ/2`, so
/// the mean gap at `t1` is `o(ε)` while the stick deadline term `e^{−(a/b)c(t − t1)}`
/// decays at the same rate `β = απ`. The ceiling grows slowly,
/// `x0 = (4a/π) e^{t/100}`, and `ε` is capped so that `x0 ε ≤ b/(2c)`.
pub fn tv_schedule(params: &PdmpParams, t: f64) -> Result<TvSetup> {
    params.require_ergodic()?;
    ensure!(t > 0.0, Precondition, "horizon must be positive");
    let (a, b, c) = (params.a(), params.b(), params.c());
    let pi = params.spectral_gap();
    let k = c * a / b;
    let delta = k / (k + pi / 2.0);
    let beta = delta * pi / 2.0;
    let x0 = (4.0 * a / pi).max(2.0 * params.fixed_point()) * (t / 100.0).exp();
    let eps = (-beta * t).exp().min(b / (2.0 * c * x0));
    Ok(TvSetup {
        t1: delta * t,
        t,
        x0,
        eps,
    })
}

/// Merge fraction at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvEstimate {
    pub setup: TvSetup,
    pub reps: u64,
    /// Pairs that reached the target set after the first phase.
    pub landed: u64,
    pub merged: u64,
    pub fraction: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Two-phase coupling of `X₀ ~ mu0` with a stationary `Y₀` (started at the
/// stationary mean and run for `burn_in`). The order-preserving coupling runs
/// on `[0, t1]`; if the pair is then in `{a/b < max ≤ x0, |X − Y| ≤ ε}` a
/// stick attempt with deadline `t − t1` follows. The merge fraction is a lower
/// bound on `1 − TV(law(X_t), μ∞)`.
pub fn tv_merge_experiment<F>(
    params: &PdmpParams,
    mu0: F,
    setup: TvSetup,
    burn_in: f64,
    replication: Replication,
) -> Result<TvEstimate>
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    params.require_ergodic()?;
    ensure!(
        setup.t1 > 0.0 && setup.t1 <= setup.t,
        Precondition,
        "need 0 < t1 ≤ t, got t1 = {}, t = {}",
        setup.t1,
        setup.t
    );
    ensure!(
        setup.eps > 0.0 && setup.x0 > 0.0,
        Precondition,
        "x0 and eps must be positive"
    );
    let deadline = setup.t - setup.t1;
    let stick = StickParams {
        x0: setup.x0,
        eps: setup.eps,
        s: deadline,
    };
    let outcomes = replication.map(|_, rng| {
        let x = mu0(rng);
        ensure!(x > 0.0, Precondition, "initial sampler returned {x}");
        let y = stationary_sample(params, burn_in, rng)?;
        let (xt, yt) = coupled_states_at(params, x, y, &[setup.t1], rng)?[0];
        if xt == yt {
            return Ok((true, true));
        }
        let (hi, lo) = if xt > yt { (xt, yt) } else { (yt, xt) };
        let landed = hi > params.fixed_point() && hi <= setup.x0 && hi - lo <= setup.eps;
        if !landed || deadline <= psi(0.0, hi - lo, params.b(), params.g()) {
            return Ok((landed, false));
        }
        let attempt = StickCoupling::new(params, hi, lo, &stick)?.attempt(rng)?;
        Ok((true, attempt.outcome.merged()))
    })?;
    let reps = outcomes.len() as u64;
    let landed = outcomes.iter().filter(|o| o.0).count() as u64;
    let merged = outcomes.iter().filter(|o| o.1).count() as u64;
    let fraction = merged as f64 / reps as f64;
    let std_error = (fraction * (1.0 - fraction) / reps as f64).sqrt();
    Ok(TvEstimate {
        setup,
        reps,
        landed,
        merged,
        fraction,
        std_error,
        ci_low: (fraction - SE_MULTIPLIER * std_error).max(0.0),
        ci_high: (fraction + SE_MULTIPLIER * std_error).min(1.0),
    })
}

/// Merge fractions over several horizons with the fitted slope of
/// `log(1 − fraction)` against `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvDecay {
    pub points: Vec<TvEstimate>,
    pub fit: LinearFit,
    pub theory_rate: f64,
}

impl TvDecay {
    /// Slope negative with magnitude at least half the theoretical rate, and
    /// the slope interval strictly below zero.
    pub fn meets_half_rate(&self) -> bool {
        self.fit.slope <= -0.5 * self.theory_rate && self.fit.slope_interval().1 < 0.0
    }
}

/// [`tv_merge_experiment`] on the default schedule at each horizon; horizon
/// `i` uses master seed `derive_seed(seed, i)`.
pub fn tv_decay<F>(
    params: &PdmpParams,
    mu0: F,
    horizons: &[f64],
    burn_in: f64,
    replication: Replication,
) -> Result<TvDecay>
where
    F: Fn(&mut StreamRng) -> f64 + Sync,
{
    ensure!(
        horizons.len() >= 3,
        Precondition,
        "need at least three horizons"
    );
    let mut points = Vec::with_capacity(horizons.len());
    for (i, &t) in horizons.iter().enumerate() {
        let rep = Replication {
            seed: derive_seed(replication.seed, i as u64),
            ..replication
        };
        points.push(tv_merge_experiment(
            params,
            &mu0,
            tv_schedule(params, t)?,
            burn_in,
            rep,
        )?);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.setup.t).collect();
    let miss: Vec<f64> = points.iter().map(|p| 1.0 - p.fraction).collect();
    ensure!(
        miss.iter().all(|m| *m > 0.0),
        Numerical,
        "every replication merged at some horizon; use fewer replications or shorter horizons"
    );
    let ys: Vec<f64> = miss.iter().map(|m| m.ln()).collect();
    // sd of log(1 − f) by the delta method
    let sds: Vec<f64> = points
        .iter()
        .zip(&miss)
        .map(|(p, m)| p.std_error.max(1.0 / p.reps as f64) / m)
        .collect();
    let fit = weighted_linear_fit(&xs, &ys, &sds, SE_MULTIPLIER)
        .ok_or_else(|| Error::Numerical("degenerate merge-fraction fit".into()))?;
    Ok(TvDecay {
        points,
        fit,
        theory_rate: tv_theory_rate(params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params() -> PdmpParams {
        PdmpParams::new(1.0, 0.8, 0.5, 1.0).unwrap()
    }

    #[test]
    fn theory_rate_value() {
        assert_abs_diff_eq!(tv_theory_rate(&params()), 0.3 / 2.48, epsilon = 1e-15);
    }

    #[test]
    fn schedule_respects_constraints() {
        let p = params();
        for t in [5.0, 20.0, 60.0] {
            let s = tv_schedule(&p, t).unwrap();
            assert!(s.t1 > 0.0 && s.t1 < t);
            assert!(s.x0 > p.fixed_point());
            assert!(s.x0 * s.eps <= p.b() / (2.0 * p.c()) + 1e-12);
        }
    }

    #[test]
    fn no_time_left_means_no_merge() {
        let p = params();
        let setup = TvSetup {
            t1: 10.0,
            t: 10.0,
            x0: 10.0,
            eps: 0.1,
        };
        let est = tv_merge_experiment(&p, |_| 2.0, setup, 30.0, Replication::new(200, 3)).unwrap();
        assert_eq!(est.merged, 0);
        assert_eq!(est.fraction, 0.0);
    }
}
