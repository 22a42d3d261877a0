use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::mc::Replication;
use crate::pdmp::{flow, next_jump_time, PdmpParams};
use crate::rng::{derive_seed, uniform, unit_exponential};
use crate::stats::{weighted_linear_fit, MeanAccumulator, SE_MULTIPLIER};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledEvent {
    pub t: f64,
    pub x_before: f64,
    pub y_before: f64,
    pub x_after: f64,
    pub y_after: f64,
    /// Both coordinates jumped.
    pub simultaneous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoupledPath {
    pub params: PdmpParams,
    pub x0: f64,
    pub y0: f64,
    pub horizon: f64,
    pub events: Vec<CoupledEvent>,
}

impl CoupledPath {
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let i = self.events.partition_point(|e| e.t <= t);
        let (t0, x, y) = if i == 0 {
            (0.0, self.x0, self.y0)
        } else {
            let e = &self.events[i - 1];
            (e.t, e.x_after, e.y_after)
        };
        (flow(&self.params, x, t - t0), flow(&self.params, y, t - t0))
    }

    pub fn final_state(&self) -> (f64, f64) {
        self.state_at(self.horizon)
    }
}

/// Advances the pair through events up to (not past) `target`.
///
/// Events arrive at rate `c·max(x, y)`. At an event both coordinates jump with
/// probability `min/max`; otherwise only the larger one does.
struct Stepper<'a> {
    params: &'a PdmpParams,
    t: f64,
    x: f64,
    y: f64,
    pending: f64,
}

impl<'a> Stepper<'a> {
    fn new<R: Rng + ?Sized>(params: &'a PdmpParams, x: f64, y: f64, rng: &mut R) -> Result<Self> {
        let pending = next_jump_time(params, x.max(y), unit_exponential(rng))?;
        Ok(Self {
            params,
            t: 0.0,
            x,
            y,
            pending,
        })
    }

    fn advance<R: Rng + ?Sized>(
        &mut self,
        target: f64,
        rng: &mut R,
        mut on_event: impl FnMut(CoupledEvent),
    ) -> Result<(f64, f64)> {
        let p = self.params;
        while self.t + self.pending <= target {
            let tau = self.pending;
            self.t += tau;
            let xb = flow(p, self.x, tau);
            let yb = flow(p, self.y, tau);
            let (hi, lo) = if xb >= yb { (xb, yb) } else { (yb, xb) };
            let simultaneous = uniform(rng) * hi < lo;
            let (xa, ya) = if simultaneous {
                (xb + p.g(), yb + p.g())
            } else if xb >= yb {
                (xb + p.g(), yb)
            } else {
                (xb, yb + p.g())
            };
            on_event(CoupledEvent {
                t: self.t,
                x_before: xb,
                y_before: yb,
                x_after: xa,
                y_after: ya,
                simultaneous,
            });
            self.x = xa;
            self.y = ya;
            self.pending = next_jump_time(p, self.x.max(self.y), unit_exponential(rng))?;
        }
        self.pending -= target - self.t;
        let out = (
            flow(p, self.x, target - self.t),
            flow(p, self.y, target - self.t),
        );
        self.x = out.0;
        self.y = out.1;
        self.t = target;
        Ok(out)
    }
}

fn check_start(x: f64, y: f64) -> Result<()> {
    ensure!(
        x > 0.0 && y > 0.0,
        Precondition,
        "coupled states must be positive, got ({x}, {y})"
    );
    Ok(())
}

/// Exact simulation of the order-preserving coupling on `[0, horizon]`.
pub fn simulate_coupled<R: Rng + ?Sized>(
    params: &PdmpParams,
    x: f64,
    y: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<CoupledPath> {
    check_start(x, y)?;
    let mut events = Vec::new();
    Stepper::new(params, x, y, rng)?.advance(horizon, rng, |e| events.push(e))?;
    Ok(CoupledPath {
        params: *params,
        x0: x,
        y0: y,
        horizon,
        events,
    })
}

/// Pair states at each of the non-decreasing `times`, on one coupled path.
pub fn coupled_states_at<R: Rng + ?Sized>(
    params: &PdmpParams,
    x: f64,
    y: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<Vec<(f64, f64)>> {
    check_start(x, y)?;
    ensure!(
        times.windows(2).all(|w| w[0] <= w[1]) && times.first().is_none_or(|t| *t >= 0.0),
        Precondition,
        "sampling times must be non-negative and non-decreasing"
    );
    let mut stepper = Stepper::new(params, x, y, rng)?;
    times
        .iter()
        .map(|&t| stepper.advance(t, rng, |_| {}))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub t: f64,
    pub mean_gap: f64,
    pub std_error: f64,
    /// `|x − y| e^{−πt}`.
    pub exact_gap: f64,
    pub reps: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum W1Decay {
    /// Equal starting points: every gap is zero and no rate can be fitted.
    Degenerate { points: Vec<GapPoint> },
    Fit {
        points: Vec<GapPoint>,
        /// Fitted decay rate of `log E|X_t − Y_t|`.
        rate: f64,
        rate_low: f64,
        rate_high: f64,
        spectral_gap: f64,
    },
}

impl W1Decay {
    pub fn points(&self) -> &[GapPoint] {
        match self {
            W1Decay::Degenerate { points } | W1Decay::Fit { points, .. } => points,
        }
    }
}

/// Mean coupled gap at each time of `t_grid` and the exponential rate fitted
/// to it. Each time uses its own independent replications (master seed
/// `derive_seed(seed, i)`), so the points of the weighted log-linear fit are
/// independent; the rate interval spans three standard errors.
pub fn w1_decay_estimate(
    params: &PdmpParams,
    x: f64,
    y: f64,
    t_grid: &[f64],
    replication: Replication,
) -> Result<W1Decay> {
    params.require_ergodic()?;
    check_start(x, y)?;
    ensure!(
        t_grid.len() >= 3,
        Precondition,
        "need at least three times, got {}",
        t_grid.len()
    );
    let pi = params.spectral_gap();
    let mut points = Vec::with_capacity(t_grid.len());
    for (i, &t) in t_grid.iter().enumerate() {
        ensure!(t >= 0.0, Precondition, "times must be non-negative");
        let rep = Replication {
            seed: derive_seed(replication.seed, i as u64),
            ..replication
        };
        let gaps = rep.map(|_, rng| {
            let (xt, yt) = coupled_states_at(params, x, y, &[t], rng)?[0];
            Ok((xt - yt).abs())
        })?;
        let acc: MeanAccumulator = gaps.into_iter().collect();
        points.push(GapPoint {
            t,
            mean_gap: acc.mean(),
            std_error: acc.std_error(),
            exact_gap: (x - y).abs() * (-pi * t).exp(),
            reps: acc.count(),
        });
    }
    if x == y {
        return Ok(W1Decay::Degenerate { points });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.t).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_gap.ln()).collect();
    let sds: Vec<f64> = points.iter().map(|p| p.std_error / p.mean_gap).collect();
    let fit = weighted_linear_fit(&xs, &ys, &sds, SE_MULTIPLIER).ok_or_else(|| {
        crate::Error::Numerical("log-linear fit of the coupled gap is degenerate".into())
    })?;
    let (lo, hi) = fit.slope_interval();
    Ok(W1Decay::Fit {
        points,
        rate: -fit.slope,
        rate_low: -hi,
        rate_high: -lo,
        spectral_gap: pi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    fn params() -> PdmpParams {
        PdmpParams::new(1.0, 0.8, 0.5, 1.0).unwrap()
    }

    #[test]
    fn equal_start_stays_equal() {
        let path = simulate_coupled(&params(), 2.0, 2.0, 30.0, &mut stream_rng(1, 0)).unwrap();
        assert!(!path.events.is_empty());
        for e in &path.events {
            assert!(e.simultaneous);
            assert_eq!(e.x_after, e.y_after);
        }
    }

    #[test]
    fn event_level_gap_dynamics() {
        let p = params();
        let path = simulate_coupled(&p, 3.0, 1.0, 40.0, &mut stream_rng(2, 0)).unwrap();
        let (mut t, mut gap) = (0.0, 2.0);
        for e in &path.events {
            let before = e.x_before - e.y_before;
            assert!((before - gap * (-p.b() * (e.t - t)).exp()).abs() < 1e-12);
            assert!(before > 0.0, "order preserved");
            let after = e.x_after - e.y_after;
            if e.simultaneous {
                assert!((after - before).abs() < 1e-12);
            } else {
                assert!((after - before - p.g()).abs() < 1e-12);
            }
            t = e.t;
            gap = after;
        }
    }

    #[test]
    fn states_at_matches_path() {
        let p = params();
        let times = [0.3, 1.0, 4.0, 9.5];
        let sampled = coupled_states_at(&p, 0.5, 2.5, &times, &mut stream_rng(5, 5)).unwrap();
        let path = simulate_coupled(&p, 0.5, 2.5, 9.5, &mut stream_rng(5, 5)).unwrap();
        for (t, s) in times.iter().zip(sampled) {
            let (x, y) = path.state_at(*t);
            assert!((x - s.0).abs() < 1e-12 && (y - s.1).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_and_short_grids() {
        let p = params();
        let rep = Replication::new(20, 0);
        let out = w1_decay_estimate(&p, 1.5, 1.5, &[0.5, 1.0, 2.0], rep).unwrap();
        assert!(matches!(out, W1Decay::Degenerate { .. }));
        assert!(out.points().iter().all(|g| g.mean_gap == 0.0));
        assert!(w1_decay_estimate(&p, 2.0, 1.0, &[0.5, 1.0], rep).is_err());
    }
}
