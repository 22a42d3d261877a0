use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{flow, next_jump_time, PdmpParams};
use crate::error::{ensure, Result};
use crate::rng::unit_exponential;

/// One jump: time, state just before and just after.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub t: f64,
    pub before: f64,
    pub after: f64,
}

/// Exact path on `[0, horizon]`: the jump list plus the flow in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdmpPath {
    pub params: PdmpParams,
    pub x0: f64,
    pub horizon: f64,
    pub jumps: Vec<JumpEvent>,
}

impl PdmpPath {
    /// State at time `t ∈ [0, horizon]` (right-continuous).
    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.jumps.partition_point(|j| j.t <= t);
        let (t0, x) = if i == 0 {
            (0.0, self.x0)
        } else {
            (self.jumps[i - 1].t, self.jumps[i - 1].after)
        };
        flow(&self.params, x, t - t0)
    }

    pub fn final_value(&self) -> f64 {
        self.value_at(self.horizon)
    }

    /// `(1/T) ∫₀ᵀ X_s ds`, integrating the flow exactly on each segment.
    pub fn time_average(&self) -> f64 {
        let fp = self.params.fixed_point();
        let b = self.params.b();
        let segment = |x: f64, len: f64| fp * len + (x - fp) * (-(-b * len).exp_m1()) / b;
        let mut total = 0.0;
        let (mut t, mut x) = (0.0, self.x0);
        for j in &self.jumps {
            total += segment(x, j.t - t);
            t = j.t;
            x = j.after;
        }
        total += segment(x, self.horizon - t);
        total / self.horizon
    }

    /// States on a uniform grid of `points` times covering `[0, horizon]`.
    pub fn render(&self, points: usize) -> Vec<(f64, f64)> {
        let points = points.max(2);
        (0..points)
            .map(|i| {
                let t = self.horizon * i as f64 / (points - 1) as f64;
                (t, self.value_at(t))
            })
            .collect()
    }
}

/// Exact simulation from `x0` up to `horizon`.
pub fn simulate<R: Rng + ?Sized>(
    params: &PdmpParams,
    x0: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<PdmpPath> {
    ensure!(
        x0 > 0.0,
        Precondition,
        "initial state must be positive, got {x0}"
    );
    ensure!(horizon >= 0.0, Precondition, "horizon must be non-negative");
    let mut jumps = Vec::new();
    let (mut t, mut x) = (0.0, x0);
    loop {
        let tau = next_jump_time(params, x, unit_exponential(rng))?;
        if t + tau > horizon {
            break;
        }
        t += tau;
        let before = flow(params, x, tau);
        x = before + params.g();
        jumps.push(JumpEvent {
            t,
            before,
            after: x,
        });
    }
    Ok(PdmpPath {
        params: *params,
        x0,
        horizon,
        jumps,
    })
}

/// State at each of the non-decreasing `times` along a single path, without
/// storing the jumps.
pub fn sample_at_times<R: Rng + ?Sized>(
    params: &PdmpParams,
    x0: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<f64>> {
    ensure!(
        x0 > 0.0,
        Precondition,
        "initial state must be positive, got {x0}"
    );
    ensure!(
        times.windows(2).all(|w| w[0] <= w[1]) && times.first().is_none_or(|t| *t >= 0.0),
        Precondition,
        "sampling times must be non-negative and non-decreasing"
    );
    let mut out = Vec::with_capacity(times.len());
    let (mut t, mut x) = (0.0, x0);
    let mut tau = next_jump_time(params, x, unit_exponential(rng))?;
    for &target in times {
        while t + tau <= target {
            t += tau;
            x = flow(params, x, tau) + params.g();
            tau = next_jump_time(params, x, unit_exponential(rng))?;
        }
        out.push(flow(params, x, target - t));
    }
    Ok(out)
}

/// `X_horizon` started from `x0`.
pub fn simulate_value<R: Rng + ?Sized>(
    params: &PdmpParams,
    x0: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<f64> {
    Ok(sample_at_times(params, x0, &[horizon], rng)?[0])
}

/// Approximate draw from the invariant law: the state after `burn_in` time
/// units started at the stationary mean.
pub fn stationary_sample<R: Rng + ?Sized>(
    params: &PdmpParams,
    burn_in: f64,
    rng: &mut R,
) -> Result<f64> {
    let start = params.stationary_mean()?;
    simulate_value(params, start, burn_in, rng)
}

/// Independent coordinates, simulated one after the other on the same stream.
pub fn simulate_multi<R: Rng + ?Sized>(
    params: &[PdmpParams],
    y0: &[f64],
    horizon: f64,
    rng: &mut R,
) -> Result<Vec<PdmpPath>> {
    ensure!(
        params.len() == y0.len(),
        Precondition,
        "{} parameter sets for {} initial states",
        params.len(),
        y0.len()
    );
    for p in params {
        p.require_ergodic()?;
    }
    params
        .iter()
        .zip(y0)
        .map(|(p, y)| simulate(p, *y, horizon, rng))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use approx::assert_abs_diff_eq;

    fn fig3() -> PdmpParams {
        PdmpParams::new(0.2, 0.8, 0.2, 0.1).unwrap()
    }

    #[test]
    fn path_structure() {
        let p = fig3();
        let path = simulate(&p, 1.0, 50.0, &mut stream_rng(4, 0)).unwrap();
        assert!(!path.jumps.is_empty());
        let mut last = 0.0;
        for j in &path.jumps {
            assert!(j.t > last && j.t <= 50.0);
            assert_abs_diff_eq!(j.after - j.before, p.g(), epsilon = 1e-12);
            assert!(j.before > 0.0);
            last = j.t;
        }
        assert_eq!(path.value_at(0.0), 1.0);
        let j = path.jumps[0];
        assert_abs_diff_eq!(path.value_at(j.t), j.after, epsilon = 1e-15);
    }

    #[test]
    fn vanishing_intensity_means_no_jumps() {
        let p = PdmpParams::new(0.2, 0.8, 1e-12, 0.1).unwrap();
        let path = simulate(&p, 1.0, 100.0, &mut stream_rng(1, 0)).unwrap();
        assert!(path.jumps.is_empty());
        assert_abs_diff_eq!(path.final_value(), flow(&p, 1.0, 100.0), epsilon = 1e-15);
    }

    #[test]
    fn sampling_matches_full_path() {
        let p = fig3();
        let times = [0.0, 0.5, 3.0, 3.0, 20.0];
        let sampled = sample_at_times(&p, 0.7, &times, &mut stream_rng(2, 3)).unwrap();
        let path = simulate(&p, 0.7, 20.0, &mut stream_rng(2, 3)).unwrap();
        for (t, v) in times.iter().zip(sampled) {
            assert_abs_diff_eq!(path.value_at(*t), v, epsilon = 1e-12);
        }
    }

    #[test]
    fn never_falls_below_fixed_point_once_above() {
        let p = fig3();
        let path = simulate(&p, 0.01, 200.0, &mut stream_rng(3, 0)).unwrap();
        let fp = p.fixed_point();
        let mut above = false;
        for (_, x) in path.render(5_000) {
            if above {
                assert!(x >= fp * (1.0 - 1e-12));
            }
            above |= x > fp;
        }
        for j in &path.jumps {
            if j.before >= fp {
                assert!(j.after > fp);
            }
        }
    }
}
