//! The limiting piecewise deterministic Markov process.
//!
//! Between jumps the state follows `ẋ = a − b x`, i.e. the flow
//! `φ(x, t) = a/b + (x − a/b) e^{−bt}`. Jumps of fixed size `g` occur at rate
//! `c x`. Paths are simulated exactly by inverting the integrated intensity
//! along the flow.

mod moments;
mod path;

pub use moments::{mean_closed_form, moment_ode, stationary_moments, ODE_STEP};
pub use path::{
    sample_at_times, simulate, simulate_multi, simulate_value, stationary_sample, JumpEvent,
    PdmpPath,
};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

/// Generator coefficients `(a, b, c, g)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdmpParams {
    a: f64,
    b: f64,
    c: f64,
    g: f64,
}

impl PdmpParams {
    pub fn new(a: f64, b: f64, c: f64, g: f64) -> Result<Self> {
        for (name, v) in [("a", a), ("b", b), ("c", c), ("g", g)] {
            ensure!(
                v > 0.0 && v.is_finite(),
                Config,
                "PDMP coefficient {name} must be positive and finite, got {v}"
            );
        }
        Ok(Self { a, b, c, g })
    }

    /// Limit process of coordinate `arm` (0-based, not the best arm) of the
    /// over-penalized bandit with `γₙ = γ₁/√n, ρₙ = ρ₁/√n`, normalized by `ρₙ`.
    ///
    /// `a = (1 − σp₁)/(d − 1)`, `b = p₁`, `c = pᵢ/g`, `g = γ₁/ρ₁`, so that the
    /// spectral gap equals `p₁ − pᵢ`.
    pub fn from_bandit(p: &[f64], gamma1: f64, rho1: f64, sigma: f64, arm: usize) -> Result<Self> {
        let d = p.len();
        ensure!(d >= 2, Config, "need at least two arms");
        ensure!(
            arm >= 1 && arm < d,
            Config,
            "arm index {arm} must refer to a sub-optimal arm in 1..{d}"
        );
        ensure!(
            p[0] > p[arm],
            Precondition,
            "best arm must beat arm {arm}: p₁ = {} ≤ {}",
            p[0],
            p[arm]
        );
        ensure!(
            gamma1 > 0.0 && gamma1 <= 1.0 && rho1 > 0.0 && rho1 < 1.0,
            Config,
            "need γ₁ ∈ (0,1] and ρ₁ ∈ (0,1), got {gamma1}, {rho1}"
        );
        ensure!(
            (0.0..=1.0).contains(&sigma),
            Config,
            "sigma must lie in [0,1]"
        );
        let g = gamma1 / rho1;
        let a = (1.0 - sigma * p[0]) / (d - 1) as f64;
        ensure!(
            a > 0.0,
            Precondition,
            "σp₁ = 1 gives a degenerate flow (a = 0)"
        );
        Self::new(a, p[0], p[arm] / g, g)
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    /// `π = b − c g`.
    pub fn spectral_gap(&self) -> f64 {
        self.b - self.c * self.g
    }

    /// Fixed point `a/b` of the flow.
    pub fn fixed_point(&self) -> f64 {
        self.a / self.b
    }

    pub fn is_ergodic(&self) -> bool {
        self.spectral_gap() > 0.0
    }

    pub fn require_ergodic(&self) -> Result<()> {
        ensure!(
            self.is_ergodic(),
            Precondition,
            "operation needs π = b − cg > 0, got {}",
            self.spectral_gap()
        );
        Ok(())
    }

    /// Stationary mean `a/π`.
    pub fn stationary_mean(&self) -> Result<f64> {
        self.require_ergodic()?;
        Ok(self.a / self.spectral_gap())
    }
}

/// `φ(x, t) = a/b + (x − a/b) e^{−bt}`.
#[inline]
pub fn flow(params: &PdmpParams, x: f64, t: f64) -> f64 {
    let fp = params.fixed_point();
    fp + (x - fp) * (-params.b * t).exp()
}

/// `Λ(t) = ∫₀ᵗ c φ(x, s) ds = c[(a/b) t + (x − a/b)(1 − e^{−bt})/b]`.
#[inline]
pub fn integrated_intensity(params: &PdmpParams, x: f64, t: f64) -> f64 {
    let fp = params.fixed_point();
    let decay = -(-params.b * t).exp_m1();
    params.c * (fp * t + (x - fp) * decay / params.b)
}

const JUMP_TOLERANCE: f64 = 1e-12;

/// Time `T` to the next jump from `x`, i.e. the root of `Λ(T) = e` for a unit
/// exponential draw `e`.
///
/// Newton iterations started from the lower bound `e/(c·max(x, a/b))`, kept
/// inside an explicit bracket and replaced by bisection when they leave it.
pub fn next_jump_time(params: &PdmpParams, x: f64, e: f64) -> Result<f64> {
    ensure!(x > 0.0, Precondition, "state must be positive, got {x}");
    ensure!(
        e >= 0.0 && e.is_finite(),
        Precondition,
        "exponential draw must be finite and ≥ 0"
    );
    if e == 0.0 {
        return Ok(0.0);
    }
    let (c, fp) = (params.c, params.fixed_point());
    let mut lo = e / (c * x.max(fp));
    let mut hi = if x >= fp {
        e / (c * fp)
    } else {
        (e / c + (fp - x) / params.b) / fp
    };
    let scale = e.max(1.0);
    let mut t = lo;
    for _ in 0..200 {
        let f = integrated_intensity(params, x, t) - e;
        if f.abs() <= JUMP_TOLERANCE * scale {
            return Ok(t);
        }
        if f < 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        if hi - lo <= JUMP_TOLERANCE * hi {
            return Ok(0.5 * (lo + hi));
        }
        let newton = t - f / (c * flow(params, x, t));
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    Err(Error::Numerical(format!(
        "jump-time inversion did not converge (x = {x}, e = {e}, bracket [{lo}, {hi}])"
    )))
}
