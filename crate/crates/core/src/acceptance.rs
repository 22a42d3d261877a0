//! End-to-end acceptance criteria.
//!
//! Each criterion runs a complete Monte-Carlo experiment and returns a
//! [`CriterionReport`] with a signed margin: positive means the criterion holds
//! with that much room, negative means it fails by that much. The seeds of the
//! criteria are derived from a single master seed, so a report is reproducible
//! from `(seed, scale)` alone.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bandit::{ArmEnvironment, Policy, StepSchedule};
use crate::coupling::stick_lower_bound;
use crate::coupling::{tv_decay, w1_decay_estimate, StickCoupling, StickParams, W1Decay};
use crate::error::Result;
use crate::mc::Replication;
use crate::pdmp::{
    mean_closed_form, moment_ode, sample_at_times, stationary_moments, stationary_sample,
    PdmpParams,
};
use crate::regret::{
    geometric_checkpoints, refine_sup, regret_gap, sup_sweep, Estimator, GridSpec, SupPoint,
};
use crate::rng::{derive_seed, open_uniform};
use crate::stats::{MeanAccumulator, SE_MULTIPLIER};
use crate::theory::{
    as_limit_check, increase_of_exponent_check, sum_lemma_check, weak_limit_check,
};

/// Number of criteria.
pub const CRITERIA: u8 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    pub seed: u64,
    /// Worker threads, `None` for the rayon default.
    pub workers: Option<usize>,
    /// Multiplies every replication count (`1.0` is the reference size).
    pub scale: f64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            workers: None,
            scale: 1.0,
        }
    }
}

impl AcceptanceConfig {
    fn replication(&self, id: u8, reps: u64) -> Replication {
        let reps = ((reps as f64 * self.scale).round() as u64).max(2);
        let rep = Replication::new(reps, derive_seed(self.seed, id as u64));
        match self.workers {
            Some(w) => rep.with_workers(w),
            None => rep,
        }
    }
}

/// One named quantity of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub std_error: Option<f64>,
    pub target: Option<f64>,
}

fn measured(
    label: impl Into<String>,
    value: f64,
    std_error: Option<f64>,
    target: Option<f64>,
) -> Measurement {
    Measurement {
        label: label.into(),
        value,
        std_error,
        target,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    /// Signed distance to the failure boundary (`f64::MIN` when the
    /// experiment itself errored).
    pub margin: f64,
    pub detail: String,
    pub measurements: Vec<Measurement>,
    /// Sup curves produced along the way, for plotting.
    #[serde(default)]
    pub curves: Vec<NamedCurve>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCurve {
    pub name: String,
    pub points: Vec<SupPoint>,
}

fn named(name: &str, points: &[SupPoint]) -> NamedCurve {
    NamedCurve {
        name: name.to_string(),
        points: points.to_vec(),
    }
}

impl CriterionReport {
    fn new(id: u8, margin: f64, detail: String, measurements: Vec<Measurement>) -> Self {
        Self {
            id,
            title: title(id).to_string(),
            passed: margin >= 0.0,
            margin,
            detail,
            measurements,
            curves: Vec::new(),
            seconds: 0.0,
        }
    }

    fn errored(id: u8, err: &crate::Error) -> Self {
        Self {
            id,
            title: title(id).to_string(),
            passed: false,
            margin: f64::MIN,
            detail: format!("error: {err}"),
            measurements: Vec::new(),
            curves: Vec::new(),
            seconds: 0.0,
        }
    }

    /// `PASS [ 3] title  margin=…  detail`.
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {:<34} margin={:+.4e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.margin,
            self.detail
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub config: AcceptanceConfig,
    pub criteria: Vec<CriterionReport>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

pub fn title(id: u8) -> &'static str {
    match id {
        1 => "uniform regret bound",
        2 => "sup-curve plateau, sigma = 0",
        3 => "sup-curve plateau, sigma = 1/4",
        4 => "true vs pseudo-regret sandwich",
        5 => "PDMP mean",
        6 => "Wasserstein decay rate",
        7 => "stick coupling lower bound",
        8 => "total-variation decay trend",
        9 => "increase of exponent",
        10 => "almost-sure and weak limits",
        11 => "moment equations",
        12 => "discrete sum lemma",
        _ => "unknown criterion",
    }
}

/// Runs criterion `id`; experiment errors become failing reports.
pub fn run_criterion(id: u8, config: &AcceptanceConfig) -> CriterionReport {
    let start = Instant::now();
    let result = match id {
        1 => uniform_bound(config),
        2 => plateau_sigma0(config),
        3 => plateau_sigma_quarter(config),
        4 => regret_sandwich(config),
        5 => pdmp_mean(config),
        6 => wasserstein_rate(config),
        7 => stick_bound(config),
        8 => tv_trend(config),
        9 => increase_of_exponent(config),
        10 => limits(config),
        11 => moments(config),
        12 => sum_lemma(config),
        _ => Err(crate::Error::Config(format!("no criterion {id}"))),
    };
    let mut report = result.unwrap_or_else(|e| CriterionReport::errored(id, &e));
    report.seconds = start.elapsed().as_secs_f64();
    report
}

/// Runs the criteria in `ids` (all of them when empty), calling `progress`
/// after each one.
pub fn run_acceptance(
    config: &AcceptanceConfig,
    ids: &[u8],
    mut progress: impl FnMut(&CriterionReport),
) -> AcceptanceReport {
    let all: Vec<u8> = (1..=CRITERIA).collect();
    let ids = if ids.is_empty() { &all[..] } else { ids };
    let criteria = ids
        .iter()
        .map(|&id| {
            let report = run_criterion(id, config);
            progress(&report);
            report
        })
        .collect();
    AcceptanceReport {
        config: *config,
        criteria,
    }
}

/// `min(value − lo, hi − value)`.
fn interval_margin(value: f64, lo: f64, hi: f64) -> f64 {
    (value - lo).min(hi - value)
}

fn figure_schedule() -> Result<StepSchedule> {
    StepSchedule::new(1.0, 0.25, 0.5, 0.5, 4)
}

/// Lattice of step 0.05 refined by the gaps 0.01, 0.02, 0.03 near the diagonal.
pub fn figure_grid() -> Result<GridSpec> {
    GridSpec::with_gaps(0.05, vec![0.01, 0.02, 0.03])
}

const PLATEAU_CHECKPOINTS: [u64; 7] = [10_000, 15_000, 20_000, 30_000, 50_000, 70_000, 100_000];

/// Screening sweep followed by re-estimation of the leading grid points.
fn refined_sup_curve(
    policy: &Policy,
    horizon: u64,
    checkpoints: &[u64],
    screen: Replication,
    refine: Replication,
) -> Result<Vec<SupPoint>> {
    let grid = figure_grid()?;
    let sweep = sup_sweep(
        policy,
        &grid,
        horizon,
        checkpoints,
        screen,
        Estimator::Occupation,
    )?;
    refine_sup(policy, &sweep, horizon, 3, refine, Estimator::Occupation)
}

fn sup_measurements(prefix: &str, points: &[SupPoint]) -> Vec<Measurement> {
    points
        .iter()
        .map(|p| {
            measured(
                format!(
                    "{prefix} n={} at ({:.2},{:.2})",
                    p.n, p.argmax_p1, p.argmax_p2
                ),
                p.sup,
                Some(p.std_error),
                None,
            )
        })
        .collect()
}

fn uniform_bound(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let horizon = 10_000;
    let policy = Policy::over_penalized(StepSchedule::sqrt_decay(0.89, 0.89 / 2.63)?, 0.0);
    let sweep = sup_sweep(
        &policy,
        &GridSpec::new(0.05)?,
        horizon,
        &geometric_checkpoints(horizon, 1.25),
        cfg.replication(1, 10_000),
        Estimator::Occupation,
    )?;
    let bound = 31.1 * 2f64.sqrt();
    let upper = sweep.max_upper(SE_MULTIPLIER);
    let worst = sweep
        .sup
        .iter()
        .copied()
        .max_by(|a, b| a.sup.total_cmp(&b.sup))
        .expect("non-empty sweep");
    Ok(CriterionReport::new(
        1,
        bound - upper,
        format!(
            "max R/sqrt(n) + 3SE = {upper:.4} <= {bound:.4} (sup {:.4} at n={}, p=({:.2},{:.2}))",
            worst.sup, worst.n, worst.argmax_p1, worst.argmax_p2
        ),
        vec![
            measured("max R/sqrt(n) + 3 SE", upper, None, Some(bound)),
            measured("sup R/sqrt(n)", worst.sup, Some(worst.std_error), None),
        ],
    ))
}

fn plateau_sigma0(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let policy = Policy::over_penalized(figure_schedule()?, 0.0);
    let curve = refined_sup_curve(
        &policy,
        100_000,
        &PLATEAU_CHECKPOINTS,
        cfg.replication(2, 100),
        Replication {
            seed: derive_seed(cfg.replication(2, 0).seed, 1),
            ..cfg.replication(2, 1_000)
        },
    )?;
    let (lo, hi) = (0.75, 1.05);
    let margin = curve
        .iter()
        .map(|p| interval_margin(p.sup, lo, hi))
        .fold(f64::INFINITY, f64::min);
    let (min, max) = curve
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
            (a.min(p.sup), b.max(p.sup))
        });
    let mut report = CriterionReport::new(
        2,
        margin,
        format!(
            "sup R/sqrt(n) over n in [1e4, 1e5] spans [{min:.4}, {max:.4}] within [{lo}, {hi}]"
        ),
        sup_measurements("sup", &curve),
    );
    report.curves.push(named("ns-sigma-0", &curve));
    Ok(report)
}

fn plateau_sigma_quarter(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let base = cfg.replication(3, 0).seed;
    let sub = |k: u64, reps: u64| Replication {
        seed: derive_seed(base, k),
        ..cfg.replication(3, reps)
    };
    let ns = refined_sup_curve(
        &Policy::over_penalized(figure_schedule()?, 0.25),
        100_000,
        &PLATEAU_CHECKPOINTS,
        sub(0, 100),
        sub(1, 1_000),
    )?;
    let baseline_n = 10_000;
    let klucb = refined_sup_curve(
        &Policy::KlUcb,
        baseline_n,
        &[baseline_n],
        sub(2, 50),
        sub(3, 200),
    )?[0];
    let exp3 = refined_sup_curve(
        &Policy::Exp3,
        baseline_n,
        &[baseline_n],
        sub(4, 50),
        sub(5, 200),
    )?[0];
    let long_run = *ns.last().expect("non-empty curve");
    let at_baseline = *ns
        .iter()
        .find(|p| p.n == baseline_n)
        .expect("checkpoint present");
    let level_margin = interval_margin(long_run.sup, 0.6, 0.9);
    let order_margin = [long_run.sup, at_baseline.sup]
        .iter()
        .map(|v| (v - klucb.sup).min(exp3.sup - v))
        .fold(f64::INFINITY, f64::min);
    let mut ms = sup_measurements("ns sup", &ns);
    ms.push(measured(
        "kl-ucb sup n=1e4",
        klucb.sup,
        Some(klucb.std_error),
        None,
    ));
    ms.push(measured(
        "exp3 sup n=1e4",
        exp3.sup,
        Some(exp3.std_error),
        None,
    ));
    let mut report = CriterionReport::new(
        3,
        level_margin.min(order_margin),
        format!(
            "long-run level {:.4} in [0.6, 0.9]; KL-UCB {:.4} < NS {:.4} (n=1e4) < EXP3 {:.4}",
            long_run.sup, klucb.sup, at_baseline.sup, exp3.sup
        ),
        ms,
    );
    report.curves = vec![
        named("ns-sigma-0.25", &ns),
        named("kl-ucb", &[klucb]),
        named("exp3", &[exp3]),
    ];
    Ok(report)
}

fn regret_sandwich(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let policy = Policy::over_penalized(StepSchedule::sqrt_decay(0.89, 0.89 / 2.63)?, 0.0);
    let env = ArmEnvironment::two_armed(0.7, 0.6)?;
    let gap = regret_gap(&policy, &env, 1_000, cfg.replication(4, 100_000))?;
    let slack = SE_MULTIPLIER * gap.gap.std_error;
    let margin = (gap.gap.mean + slack).min(gap.bound + slack - gap.gap.mean);
    Ok(CriterionReport::new(
        4,
        margin,
        format!(
            "E R - R-bar = {:.4} +- {:.4} in [0, {:.4}]",
            gap.gap.mean, gap.gap.std_error, gap.bound
        ),
        vec![
            measured(
                "true regret",
                gap.true_regret.mean,
                Some(gap.true_regret.std_error),
                None,
            ),
            measured(
                "pseudo-regret",
                gap.pseudo_regret.mean,
                Some(gap.pseudo_regret.std_error),
                None,
            ),
            measured(
                "gap",
                gap.gap.mean,
                Some(gap.gap.std_error),
                Some(gap.bound),
            ),
        ],
    ))
}

fn pdmp_mean(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let params = PdmpParams::new(0.2, 0.8, 0.2, 0.1)?;
    let times = [0.5, 1.0, 2.0, 5.0];
    let samples = cfg
        .replication(5, 100_000)
        .map(|_, rng| sample_at_times(&params, 1.0, &times, rng))?;
    let mut margin = f64::INFINITY;
    let mut ms = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let acc: MeanAccumulator = samples.iter().map(|s| s[k]).collect();
        let exact = mean_closed_form(&params, 1.0, t)?;
        margin = margin.min(SE_MULTIPLIER * acc.std_error() - (acc.mean() - exact).abs());
        ms.push(measured(
            format!("E X_t, t={t}"),
            acc.mean(),
            Some(acc.std_error()),
            Some(exact),
        ));
    }
    Ok(CriterionReport::new(
        5,
        margin,
        format!(
            "MC mean at t=1: {:.5} vs {:.5}",
            ms[1].value,
            ms[1].target.unwrap()
        ),
        ms,
    ))
}

fn wasserstein_rate(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let params = PdmpParams::new(1.0, 0.8, 0.5, 1.0)?;
    let times: Vec<f64> = (1..=8).map(|k| 0.5 * k as f64).collect();
    let decay = w1_decay_estimate(&params, 2.0, 1.0, &times, cfg.replication(6, 100_000))?;
    let W1Decay::Fit {
        points,
        rate,
        rate_low,
        rate_high,
        spectral_gap,
    } = decay
    else {
        return Err(crate::Error::Invariant(
            "distinct starts gave a degenerate fit".into(),
        ));
    };
    let mut ms: Vec<Measurement> = points
        .iter()
        .map(|p| {
            measured(
                format!("mean gap t={}", p.t),
                p.mean_gap,
                Some(p.std_error),
                Some(p.exact_gap),
            )
        })
        .collect();
    let gap_margin = points
        .iter()
        .map(|p| SE_MULTIPLIER * p.std_error - (p.mean_gap - p.exact_gap).abs())
        .fold(f64::INFINITY, f64::min);
    let ci_margin = (spectral_gap - rate_low).min(rate_high - spectral_gap);
    let tol_margin = 0.05 * spectral_gap - (rate - spectral_gap).abs();
    ms.push(measured(
        "fitted rate",
        rate,
        Some((rate_high - rate_low) / (2.0 * SE_MULTIPLIER)),
        Some(spectral_gap),
    ));
    Ok(CriterionReport::new(
        6,
        gap_margin.min(ci_margin).min(tol_margin),
        format!("rate {rate:.4} CI [{rate_low:.4}, {rate_high:.4}] vs {spectral_gap}"),
        ms,
    ))
}

fn stick_bound(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let params = PdmpParams::new(1.0, 0.8, 0.5, 1.0)?;
    let mut margin = f64::INFINITY;
    let mut ms = Vec::new();
    let mut cell = 0u64;
    let base = cfg.replication(7, 0).seed;
    for x0 in [2.0, 3.0, 5.0] {
        for eps in [0.01, 0.05, 0.1] {
            for s in [2.0, 5.0, 10.0] {
                let y = x0 - eps;
                let eps = x0 - y;
                let stick = StickParams::new(&params, x0, eps, s)?;
                let coupling = StickCoupling::new(&params, x0, y, &stick)?;
                let rep = Replication {
                    seed: derive_seed(base, cell),
                    ..cfg.replication(7, 10_000)
                };
                cell += 1;
                let merged = rep.map(|_, rng| Ok(coupling.attempt(rng)?.outcome.merged()))?;
                let freq = merged.iter().filter(|m| **m).count() as f64 / merged.len() as f64;
                let se = (freq * (1.0 - freq) / merged.len() as f64)
                    .sqrt()
                    .max(1.0 / merged.len() as f64);
                let bound = stick_lower_bound(&params, x0, eps, s);
                margin = margin.min(freq - (bound - SE_MULTIPLIER * se));
                ms.push(measured(
                    format!("merge x0={x0} eps={:.2} s={s}", eps),
                    freq,
                    Some(se),
                    Some(bound),
                ));
            }
        }
    }
    let tightest = ms
        .iter()
        .min_by(|a, b| (a.value - a.target.unwrap()).total_cmp(&(b.value - b.target.unwrap())))
        .expect("27 cells");
    Ok(CriterionReport::new(
        7,
        margin,
        format!(
            "27 cells; tightest {}: {:.4} vs bound {:.4}",
            tightest.label,
            tightest.value,
            tightest.target.unwrap()
        ),
        ms,
    ))
}

fn tv_trend(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let params = PdmpParams::new(1.0, 0.8, 0.5, 1.0)?;
    let start = params.stationary_mean()?;
    let decay = tv_decay(
        &params,
        move |_| start,
        &[5.0, 10.0, 20.0, 30.0, 40.0],
        20.0,
        cfg.replication(8, 10_000),
    )?;
    let half = 0.5 * decay.theory_rate;
    let (_, slope_hi) = decay.fit.slope_interval();
    let margin = (-decay.fit.slope - half).min(-slope_hi);
    let mut ms: Vec<Measurement> = decay
        .points
        .iter()
        .map(|p| {
            measured(
                format!("merge fraction t={}", p.setup.t),
                p.fraction,
                Some(p.std_error),
                None,
            )
        })
        .collect();
    ms.push(measured(
        "slope",
        decay.fit.slope,
        Some(decay.fit.slope_std_error),
        Some(-half),
    ));
    Ok(CriterionReport::new(
        8,
        margin,
        format!(
            "slope {:.4} (upper {:.4}) <= -{:.4}",
            decay.fit.slope, slope_hi, half
        ),
        ms,
    ))
}

fn increase_of_exponent(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let policy = Policy::over_penalized(StepSchedule::sqrt_decay(0.89, 0.38 * 0.89)?, 0.0);
    let env = ArmEnvironment::two_armed(0.7, 0.6)?;
    let checks = increase_of_exponent_check(
        &[1, 2],
        1.0 / 3.0,
        &policy,
        &env,
        100_000,
        cfg.replication(9, 10_000),
    )?;
    let margin = checks
        .iter()
        .map(|c| c.rhs + SE_MULTIPLIER * c.std_error - c.lhs)
        .fold(f64::INFINITY, f64::min);
    let detail = checks
        .iter()
        .map(|c| format!("r={}: {:.3} <= {:.3}", c.r, c.lhs, c.rhs))
        .collect::<Vec<_>>()
        .join("; ");
    Ok(CriterionReport::new(
        9,
        margin,
        format!("n0={} {detail}", checks[0].n0),
        checks
            .iter()
            .map(|c| {
                measured(
                    format!("sup E Z^({})", c.r),
                    c.lhs,
                    Some(c.std_error),
                    Some(c.rhs),
                )
            })
            .collect(),
    ))
}

fn limits(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let base = cfg.replication(10, 0).seed;
    let sub = |k: u64, reps: u64| Replication {
        seed: derive_seed(base, k),
        ..cfg.replication(10, reps)
    };
    let mut ms = Vec::new();
    let mut margin = f64::INFINITY;
    for (k, (p, sigma)) in [(vec![0.8, 0.5, 0.3], 1.0), (vec![0.8, 0.5], 0.0)]
        .into_iter()
        .enumerate()
    {
        let r = as_limit_check(&p, sigma, 0.5, 0.5, 0.6, 0.3, 1_000_000, sub(k as u64, 200))?;
        for a in &r.ratios {
            margin = margin.min(0.1 - a.relative_error);
            ms.push(measured(
                format!("median X^{}/rho d={} sigma={sigma}", a.arm + 1, p.len()),
                a.median,
                None,
                Some(a.target),
            ));
        }
        if p.len() == 3 {
            margin = margin.min(r.best_arm_mass - 0.95);
            ms.push(measured(
                "fraction with X^1 > 0.99",
                r.best_arm_mass,
                None,
                Some(0.95),
            ));
        }
    }
    let weak = weak_limit_check(
        0.8,
        0.5,
        0.5,
        0.5,
        0.0,
        &[1_000, 10_000, 100_000],
        50.0,
        sub(2, 4_000),
    )?;
    for w in weak.points.windows(2) {
        margin = margin.min(w[0].w1 - w[1].w1);
    }
    let last = weak.points.last().expect("three sizes");
    margin = margin.min(
        SE_MULTIPLIER * last.bandit_mean.std_error
            - (last.bandit_mean.mean - last.stationary_mean).abs(),
    );
    for w in &weak.points {
        ms.push(measured(format!("W1 n={}", w.n), w.w1, None, None));
    }
    ms.push(measured(
        "mean (1-X_n)/rho_n, n=1e5",
        last.bandit_mean.mean,
        Some(last.bandit_mean.std_error),
        Some(last.stationary_mean),
    ));
    let w1: Vec<String> = weak.points.iter().map(|w| format!("{:.4}", w.w1)).collect();
    Ok(CriterionReport::new(
        10,
        margin,
        format!(
            "ratios within 10%; W1 {}; mean {:.4} vs {:.4}",
            w1.join(" > "),
            last.bandit_mean.mean,
            last.stationary_mean
        ),
        ms,
    ))
}

fn moments(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let params = PdmpParams::new(0.2, 0.8, 0.2, 0.1)?;
    let alpha2 = stationary_moments(&params, 2)?[1];
    let burn_in = 40.0;
    let samples = cfg
        .replication(11, 100_000)
        .map(|_, rng| stationary_sample(&params, burn_in, rng))?;
    let acc: MeanAccumulator = samples.iter().map(|x| x * x).collect();
    let mc_margin = SE_MULTIPLIER * acc.std_error() - (acc.mean() - alpha2).abs();
    let times = [0.5, 1.0, 2.0, 5.0];
    let ode = moment_ode(&params, 1, &[1.0], &times)?;
    let mut ode_err: f64 = 0.0;
    for (row, &t) in ode.iter().zip(&times) {
        ode_err = ode_err.max((row[0] - mean_closed_form(&params, 1.0, t)?).abs());
    }
    Ok(CriterionReport::new(
        11,
        mc_margin.min(1e-8 - ode_err),
        format!(
            "alpha2* {alpha2:.6} vs MC {:.6} +- {:.6}; p=1 ODE error {ode_err:.2e}",
            acc.mean(),
            acc.std_error()
        ),
        vec![
            measured(
                "stationary E X^2",
                acc.mean(),
                Some(acc.std_error()),
                Some(alpha2),
            ),
            measured("max |ODE - closed form|", ode_err, None, Some(1e-8)),
        ],
    ))
}

fn sum_lemma(cfg: &AcceptanceConfig) -> Result<CriterionReport> {
    let mut rng = crate::rng::stream_rng(derive_seed(cfg.seed, 12), 0);
    let cases = 1_000;
    let mut margin = f64::INFINITY;
    let mut worst = (0.0, 0.0, 0, 0);
    for _ in 0..cases {
        let alpha = 0.2 + 4.8 * open_uniform(&mut rng);
        let gamma1 = 0.05 + 0.9 * open_uniform(&mut rng);
        let ag2 = (alpha * gamma1).powi(2);
        let min_tilde = ((1.0 / ag2).ceil() as u64).max(ag2.floor() as u64 + 1);
        let n_tilde = min_tilde + (open_uniform(&mut rng) * 100.0) as u64;
        let n = n_tilde + (open_uniform(&mut rng) * 50_000.0) as u64;
        let s = sum_lemma_check(alpha, gamma1, n_tilde, n)?;
        let m = s.bound - s.lhs;
        if m < margin {
            margin = m;
            worst = (alpha, gamma1, n_tilde, n);
        }
    }
    Ok(CriterionReport::new(
        12,
        margin,
        format!(
            "{cases} cases, smallest slack {margin:.3e} at alpha={:.3} gamma1={:.3} n~={} n={}",
            worst.0, worst.1, worst.2, worst.3
        ),
        vec![measured("min (1/alpha - sum)", margin, None, Some(0.0))],
    ))
}
