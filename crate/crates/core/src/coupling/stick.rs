use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::pdmp::{flow, integrated_intensity, next_jump_time, PdmpParams};
use crate::rng::{uniform, unit_exponential};

/// Knots of the tabulated inverse CDF of the coupled jump time.
pub const STICK_KNOTS: usize = 2048;

/// Absolute tolerance of the adaptive quadrature for the coupling mass.
pub const STICK_QUADRATURE_TOLERANCE: f64 = 1e-6;

const MAX_REJECTIONS: u64 = 10_000_000;

/// `ψ(t) = (1/b) ln(e^{bt} + gap/g)`: if the upper path jumps at `t`, a jump of
/// the lower path at `ψ(t)` lands it exactly on the upper one.
pub fn psi(t: f64, gap: f64, b: f64, g: f64) -> f64 {
    t + ((gap / g) * (-b * t).exp()).ln_1p() / b
}

/// Inverse of [`psi`], defined for `u ≥ ψ(0)`.
pub fn psi_inverse(u: f64, gap: f64, b: f64, g: f64) -> f64 {
    u + (-(gap / g) * (-b * u).exp()).ln_1p() / b
}

/// Ceiling `x0`, closeness `eps` and deadline `s` of a stick attempt.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickParams {
    pub x0: f64,
    pub eps: f64,
    pub s: f64,
}

impl StickParams {
    pub fn new(params: &PdmpParams, x0: f64, eps: f64, s: f64) -> Result<Self> {
        let p = Self { x0, eps, s };
        p.validate(params)?;
        Ok(p)
    }

    /// `x0 > a/b`, `eps > 0` and a deadline no earlier than `ψ(0)` at gap `eps`.
    pub fn validate(&self, params: &PdmpParams) -> Result<()> {
        ensure!(
            self.x0 > params.fixed_point(),
            Config,
            "x0 = {} must exceed a/b = {}",
            self.x0,
            params.fixed_point()
        );
        ensure!(self.eps > 0.0, Config, "eps must be positive");
        let earliest = psi(0.0, self.eps, params.b(), params.g());
        ensure!(
            self.s >= earliest,
            Config,
            "deadline s = {} is before the earliest merge time {earliest}",
            self.s
        );
        Ok(())
    }
}

/// `(1 − (c/b)x0ε − e^{−(a/b)cs} − cε/b) · max(0, 1 − (c/b)ε(x0 + g))`,
/// unclamped.
pub fn stick_lower_bound(params: &PdmpParams, x0: f64, eps: f64, s: f64) -> f64 {
    let (a, b, c, g) = (params.a(), params.b(), params.c(), params.g());
    let first = 1.0 - c / b * x0 * eps - (-(a / b) * c * s).exp() - c * eps / b;
    let second = (1.0 - c / b * eps * (x0 + g)).max(0.0);
    first * second
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StickFailure {
    /// The maximal coupling of the jump times did not produce `T₁ʸ = ψ(T₁ˣ) ≤ s`.
    Uncoupled,
    /// The upper path jumped a second time before the merge.
    SecondJump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StickOutcome {
    /// Both paths sit at `state` from `time` on.
    Merged {
        time: f64,
        state: f64,
    },
    Failed {
        reason: StickFailure,
    },
}

impl StickOutcome {
    pub fn merged(&self) -> bool {
        matches!(self, StickOutcome::Merged { .. })
    }
}

/// First jump times of both paths and the resulting outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StickAttempt {
    pub t1x: f64,
    pub t1y: f64,
    /// Second jump of the upper path.
    pub t2x: f64,
    pub outcome: StickOutcome,
}

/// Maximal coupling of `T₁ʸ` with `ψ(T₁ˣ)` restricted to `[ψ(0), s]`, for a
/// fixed starting pair `x > y`. Build once, attempt many times.
#[derive(Debug, Clone)]
pub struct StickCoupling {
    params: PdmpParams,
    x: f64,
    y: f64,
    gap: f64,
    start: f64,
    s: f64,
    mass: f64,
    knots: Vec<f64>,
    cdf: Vec<f64>,
}

impl StickCoupling {
    /// Requires `a/b < x ≤ x0` and `0 < x − y ≤ eps`.
    pub fn new(params: &PdmpParams, x: f64, y: f64, stick: &StickParams) -> Result<Self> {
        ensure!(
            x > params.fixed_point() && x <= stick.x0,
            Precondition,
            "upper state {x} must lie in (a/b, x0] = ({}, {}]",
            params.fixed_point(),
            stick.x0
        );
        ensure!(
            x > y && x - y <= stick.eps && y > 0.0,
            Precondition,
            "need 0 < x − y ≤ eps, got x = {x}, y = {y}, eps = {}",
            stick.eps
        );
        let gap = x - y;
        let start = psi(0.0, gap, params.b(), params.g());
        let mut coupling = Self {
            params: *params,
            x,
            y,
            gap,
            start,
            s: stick.s,
            mass: 0.0,
            knots: Vec::new(),
            cdf: Vec::new(),
        };
        if stick.s > start {
            coupling.tabulate()?;
        }
        Ok(coupling)
    }

    fn tabulate(&mut self) -> Result<()> {
        let f = |u: f64| self.overlap_density(u);
        let cells = STICK_KNOTS - 1;
        let h = (self.s - self.start) / cells as f64;
        // pin the last knot: start + h·cells can round past s, where the density is cut to 0
        let knots: Vec<f64> = (0..STICK_KNOTS)
            .map(|i| {
                if i == cells {
                    self.s
                } else {
                    self.start + h * i as f64
                }
            })
            .collect();

        // The overlap is the minimum of two smooth densities, with a kink
        // wherever they cross. Crossings are bracketed on the half-cell grid
        // and located by bisection; both quadratures then only see smooth
        // pieces.
        let lower_wins = |u: f64| self.lower_density(u) <= self.target_density(u);
        let mut kinks: Vec<Option<f64>> = vec![None; cells];
        for (i, kink) in kinks.iter_mut().enumerate() {
            let (lo, hi) = (knots[i], knots[i + 1]);
            let mid = 0.5 * (lo + hi);
            let (blo, bmid, bhi) = (lower_wins(lo), lower_wins(mid), lower_wins(hi));
            let (mut a, mut b, side) = if blo != bmid {
                (lo, mid, blo)
            } else if bmid != bhi {
                (mid, hi, bmid)
            } else {
                continue;
            };
            for _ in 0..100 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if lower_wins(m) == side {
                    a = m;
                } else {
                    b = m;
                }
            }
            *kink = Some(0.5 * (a + b));
        }

        let mut breaks = vec![self.start];
        breaks.extend(kinks.iter().flatten());
        breaks.push(self.s);
        let mut mass = 0.0;
        for w in breaks.windows(2) {
            mass += adaptive_simpson(
                &f,
                w[0],
                w[1],
                STICK_QUADRATURE_TOLERANCE / (breaks.len() - 1) as f64,
            )?;
        }

        let simpson_on = |lo: f64, hi: f64| simpson(f(lo), f(0.5 * (lo + hi)), f(hi), hi - lo);
        let mut cdf = Vec::with_capacity(STICK_KNOTS);
        cdf.push(0.0);
        let mut acc = 0.0;
        for (i, kink) in kinks.iter().enumerate() {
            let (lo, hi) = (knots[i], knots[i + 1]);
            acc += match kink {
                Some(k) => simpson_on(lo, *k) + simpson_on(*k, hi),
                None => simpson_on(lo, hi),
            };
            cdf.push(acc);
        }
        if (acc - mass).abs() > 10.0 * STICK_QUADRATURE_TOLERANCE {
            return Err(Error::Numerical(format!(
                "coupling mass disagrees between quadratures: adaptive {mass}, tabulated {acc} \
                 (x = {}, y = {}, s = {})",
                self.x, self.y, self.s
            )));
        }
        self.mass = mass;
        self.knots = knots;
        self.cdf = cdf;
        Ok(())
    }

    /// Probability that the attempt takes the coupled branch.
    pub fn coupling_mass(&self) -> f64 {
        self.mass
    }

    /// Density of the first jump time of a path started at `z`.
    fn first_jump_density(&self, z: f64, t: f64) -> f64 {
        let p = &self.params;
        p.c() * flow(p, z, t) * (-integrated_intensity(p, z, t)).exp()
    }

    fn lower_density(&self, u: f64) -> f64 {
        self.first_jump_density(self.y, u)
    }

    /// Density of `ψ(T₁ˣ)` at `u ≥ ψ(0)`.
    fn target_density(&self, u: f64) -> f64 {
        let (b, g) = (self.params.b(), self.params.g());
        let r = (self.gap / g) * (-b * u).exp();
        self.first_jump_density(self.x, psi_inverse(u, self.gap, b, g)) / (1.0 - r)
    }

    fn overlap_density(&self, u: f64) -> f64 {
        if u < self.start || u > self.s {
            0.0
        } else {
            self.lower_density(u).min(self.target_density(u))
        }
    }

    fn sample_overlap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w = uniform(rng) * self.cdf[self.cdf.len() - 1];
        let i = self
            .cdf
            .partition_point(|c| *c <= w)
            .clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[i - 1], self.cdf[i]);
        let frac = if c1 > c0 { (w - c0) / (c1 - c0) } else { 0.5 };
        self.knots[i - 1] + frac * (self.knots[i] - self.knots[i - 1])
    }

    fn residual_lower<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_REJECTIONS {
            let t = next_jump_time(&self.params, self.y, unit_exponential(rng))?;
            let f = self.lower_density(t);
            if uniform(rng) * f >= self.overlap_density(t) {
                return Ok(t);
            }
        }
        Err(Error::Numerical(
            "residual sampling of the lower jump time did not terminate".into(),
        ))
    }

    fn residual_upper<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        let (b, g) = (self.params.b(), self.params.g());
        for _ in 0..MAX_REJECTIONS {
            let t = next_jump_time(&self.params, self.x, unit_exponential(rng))?;
            let u = psi(t, self.gap, b, g);
            if u > self.s {
                return Ok(t);
            }
            if uniform(rng) * self.target_density(u) >= self.overlap_density(u) {
                return Ok(t);
            }
        }
        Err(Error::Numerical(
            "residual sampling of the upper jump time did not terminate".into(),
        ))
    }

    pub fn attempt<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<StickAttempt> {
        let (b, g) = (self.params.b(), self.params.g());
        let coupled = uniform(rng) < self.mass;
        let (t1x, t1y) = if coupled {
            let u = self.sample_overlap(rng);
            (psi_inverse(u, self.gap, b, g), u)
        } else {
            (self.residual_upper(rng)?, self.residual_lower(rng)?)
        };
        let upper_after = flow(&self.params, self.x, t1x) + g;
        let t2x = t1x + next_jump_time(&self.params, upper_after, unit_exponential(rng))?;
        let outcome = if !coupled {
            StickOutcome::Failed {
                reason: StickFailure::Uncoupled,
            }
        } else if t2x <= t1y {
            StickOutcome::Failed {
                reason: StickFailure::SecondJump,
            }
        } else {
            StickOutcome::Merged {
                time: t1y,
                state: flow(&self.params, self.y, t1y) + g,
            }
        };
        Ok(StickAttempt {
            t1x,
            t1y,
            t2x,
            outcome,
        })
    }

    /// Upper path just before the lower one jumps, in the coupled branch: the
    /// value the lower path must land on.
    pub fn upper_at(&self, attempt: &StickAttempt) -> f64 {
        let g = self.params.g();
        flow(
            &self.params,
            flow(&self.params, self.x, attempt.t1x) + g,
            attempt.t1y - attempt.t1x,
        )
    }
}

/// One attempt from `(x, y)`; builds a fresh [`StickCoupling`].
pub fn stick_attempt<R: Rng + ?Sized>(
    params: &PdmpParams,
    x: f64,
    y: f64,
    stick: &StickParams,
    rng: &mut R,
) -> Result<StickAttempt> {
    StickCoupling::new(params, x, y, stick)?.attempt(rng)
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if delta.abs() <= 15.0 * tol {
            return Ok(left + right + delta / 15.0);
        }
        if depth == 0 {
            return Err(Error::Numerical(format!(
                "adaptive quadrature did not reach tolerance {tol} on [{a}, {b}]"
            )));
        }
        Ok(recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
    }
    let (fa, fb) = (f(a), f(b));
    // Start from a fixed partition so narrow features are not skipped.
    let pieces = 16;
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    let mut left = fa;
    for i in 0..pieces {
        let lo = a + h * i as f64;
        let hi = if i + 1 == pieces { b } else { lo + h };
        let right = if i + 1 == pieces { fb } else { f(hi) };
        let fm = f(0.5 * (lo + hi));
        total += recurse(
            f,
            lo,
            hi,
            left,
            fm,
            right,
            simpson(left, fm, right, hi - lo),
            tol / pieces as f64,
            40,
        )?;
        left = right;
    }
    Ok(total)
}
