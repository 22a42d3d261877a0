use std::path::{Path, PathBuf};

use nsbandit::acceptance::{run_acceptance, AcceptanceConfig, NamedCurve};
use nsbandit::bandit::{ArmEnvironment, Policy, StepSchedule};
use nsbandit::coupling::{tv_decay, w1_decay_estimate, W1Decay};
use nsbandit::mc::Replication;
use nsbandit::pdmp::{moment_ode, sample_at_times, simulate, PdmpParams};
use nsbandit::regret::{
    geometric_checkpoints, refine_sup, regret_curves, regret_gap, sup_sweep,
    theoretical_bound_over_penalized, Estimator, GridSpec,
};
use nsbandit::rng::{derive_seed, open_uniform, stream_rng};
use nsbandit::stats::{MeanAccumulator, SE_MULTIPLIER};
use nsbandit::theory::{
    as_limit_check, drift_curve, h_r, increase_of_exponent_check, kappa_sigma, n0, sum_lemma_check,
    weak_limit_check, z_moment_estimate,
};

use crate::args::*;
use crate::output::{write_json, CsvOut, Meta};
use crate::CliError;

/// What a command produced and whether its checks held.
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub failures: Vec<String>,
}

impl Outcome {
    fn ok(files: Vec<PathBuf>) -> Self {
        Self {
            files,
            failures: Vec::new(),
        }
    }
}

struct Ctx<'a> {
    seed: u64,
    reps: Option<u64>,
    workers: usize,
    out: &'a Path,
    meta: Meta,
}

impl Ctx<'_> {
    fn replication(&self, default_reps: u64) -> Replication {
        Replication::new(self.reps.unwrap_or(default_reps), self.seed).with_workers(self.workers)
    }

    fn csv(
        &self,
        name: &str,
        extra: &[(&str, String)],
        header: &[&str],
    ) -> Result<CsvOut, CliError> {
        CsvOut::create(self.out, name, &self.meta, extra, header)
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let name = command_name(&cli.command);
    let ctx = Ctx {
        seed: cli.seed,
        reps: cli.reps,
        workers: cli.workers,
        out: &cli.out,
        meta: Meta::new(&name, cli.seed, cli),
    };
    match &cli.command {
        Command::RegretCurve(a) => regret_curve(&ctx, a),
        Command::RegretSweep(a) => regret_sweep(&ctx, a),
        Command::RegretGap(a) => regret_gap_cmd(&ctx, a),
        Command::BoundCheck(a) => bound_check(&ctx, a),
        Command::PdmpTraj(a) => pdmp_traj(&ctx, a),
        Command::PdmpMoments(a) => pdmp_moments(&ctx, a),
        Command::CouplingW1(a) => coupling_w1(&ctx, a),
        Command::CouplingTv(a) => coupling_tv(&ctx, a),
        Command::TheoryCheck { target } => theory(&ctx, target),
        Command::ReproduceAll(a) => reproduce_all(&ctx, a),
        Command::Run { .. } => Err(CliError::Config(
            "nested `run` commands are not allowed".into(),
        )),
    }
}

fn command_name(command: &Command) -> String {
    let value = serde_json::to_value(command).expect("commands serialize");
    match &value {
        serde_json::Value::Object(map) => {
            let (outer, inner) = map.iter().next().expect("one variant");
            match inner.get("target").and_then(|t| t.as_object()) {
                Some(t) => format!("{outer} {}", t.keys().next().expect("one target")),
                None => outer.clone(),
            }
        }
        serde_json::Value::String(s) => s.clone(),
        _ => unreachable!("commands are enums"),
    }
}

fn build_policy(a: &PolicyArgs) -> Result<Policy, CliError> {
    let schedule = || {
        let rho1 = a.rho1.unwrap_or(a.rho_ratio * a.gamma1);
        StepSchedule::new(a.gamma1, rho1, a.alpha, a.beta, a.offset)
    };
    let policy = match a.policy {
        PolicyKind::Ns => Policy::over_penalized(schedule()?, a.sigma),
        PolicyKind::Crude => Policy::crude(schedule()?.without_penalty()),
        PolicyKind::Exp3 => Policy::Exp3,
        PolicyKind::Klucb => Policy::KlUcb,
    };
    policy.validate()?;
    Ok(policy)
}

fn estimators(arg: EstimatorArg, arms: usize) -> Vec<Estimator> {
    match arg {
        EstimatorArg::Reward => vec![Estimator::Reward],
        EstimatorArg::Occupation => vec![Estimator::Occupation],
        EstimatorArg::TrueRegret => vec![Estimator::TrueRegret],
        EstimatorArg::All if arms == 2 => {
            vec![
                Estimator::Reward,
                Estimator::Occupation,
                Estimator::TrueRegret,
            ]
        }
        EstimatorArg::All => vec![Estimator::Reward, Estimator::TrueRegret],
    }
}

fn single_estimator(arg: EstimatorArg) -> Result<Estimator, CliError> {
    match estimators(arg, 2).as_slice() {
        [one] => Ok(*one),
        _ => Err(CliError::Config(
            "this command takes a single estimator".into(),
        )),
    }
}

/// Leading columns describing the policy.
fn policy_columns(policy: &Policy) -> Vec<String> {
    let (gamma1, rho1, offset) = match policy.schedule() {
        Some(s) => (
            s.gamma1().to_string(),
            s.rho1().to_string(),
            s.offset().to_string(),
        ),
        None => (String::new(), String::new(), String::new()),
    };
    let sigma = policy.sigma().map(|s| s.to_string()).unwrap_or_default();
    vec![policy.name().to_string(), sigma, gamma1, rho1, offset]
}

const CURVE_HEADER: [&str; 13] = [
    "policy",
    "sigma",
    "gamma1",
    "rho1",
    "offset",
    "p1",
    "p2",
    "n",
    "estimator",
    "estimate",
    "stderr",
    "reps",
    "seed",
];

fn regret_curve(ctx: &Ctx, a: &RegretCurveArgs) -> Result<Outcome, CliError> {
    let policy = build_policy(&a.policy)?;
    let env = ArmEnvironment::new(a.p.clone())?;
    let ests = estimators(a.estimator, env.arms());
    let cps = geometric_checkpoints(a.horizon, a.checkpoint_ratio);
    let curves = regret_curves(
        &policy,
        &env,
        a.horizon,
        &cps,
        ctx.replication(1_000),
        &ests,
    )?;
    let mut out = ctx.csv("regret_curve.csv", &[], &CURVE_HEADER)?;
    let lead = policy_columns(&policy);
    for curve in &curves {
        for p in &curve.points {
            let mut row = lead.clone();
            row.extend([
                env.prob(0).to_string(),
                env.prob(1).to_string(),
                p.n.to_string(),
                curve.estimator.name().to_string(),
                p.estimate.to_string(),
                p.std_error.to_string(),
                p.reps.to_string(),
                ctx.seed.to_string(),
            ]);
            out.row(row)?;
        }
    }
    Ok(Outcome::ok(vec![out.finish()?]))
}

fn regret_sweep(ctx: &Ctx, a: &RegretSweepArgs) -> Result<Outcome, CliError> {
    let policy = build_policy(&a.policy)?;
    let estimator = single_estimator(a.estimator)?;
    let grid = GridSpec::with_gaps(a.grid, a.gaps.clone())?;
    let cps = geometric_checkpoints(a.horizon, a.checkpoint_ratio);
    let sweep = sup_sweep(
        &policy,
        &grid,
        a.horizon,
        &cps,
        ctx.replication(1_000),
        estimator,
    )?;
    let sup = match a.refine_reps {
        Some(reps) => {
            let rep = Replication::new(reps, derive_seed(ctx.seed, 1)).with_workers(ctx.workers);
            refine_sup(&policy, &sweep, a.horizon, a.top_k, rep, estimator)?
        }
        None => sweep.sup.clone(),
    };
    let extra = [
        ("policy", policy.name().to_string()),
        ("estimator", estimator.name().to_string()),
        ("refined", a.refine_reps.is_some().to_string()),
    ];
    let mut out = ctx.csv(
        "regret_sweep.csv",
        &extra,
        &["n", "sup_value", "stderr", "argmax_p1", "argmax_p2"],
    )?;
    for s in &sup {
        out.row([
            s.n.to_string(),
            s.sup.to_string(),
            s.std_error.to_string(),
            s.argmax_p1.to_string(),
            s.argmax_p2.to_string(),
        ])?;
    }
    let mut grid_out = ctx.csv(
        "regret_sweep_grid.csv",
        &extra,
        &["p1", "p2", "n", "normalized_estimate", "stderr", "reps"],
    )?;
    for (&(p1, p2), values) in sweep.grid.iter().zip(&sweep.values) {
        for v in values {
            grid_out.row([
                p1.to_string(),
                p2.to_string(),
                v.n.to_string(),
                v.estimate.to_string(),
                v.std_error.to_string(),
                v.reps.to_string(),
            ])?;
        }
    }
    Ok(Outcome::ok(vec![out.finish()?, grid_out.finish()?]))
}

fn regret_gap_cmd(ctx: &Ctx, a: &RegretGapArgs) -> Result<Outcome, CliError> {
    let policy = build_policy(&a.policy)?;
    let env = ArmEnvironment::new(a.p.clone())?;
    let gap = regret_gap(&policy, &env, a.horizon, ctx.replication(10_000))?;
    let mut out = ctx.csv(
        "regret_gap.csv",
        &[("policy", policy.name().to_string())],
        &[
            "n",
            "true_regret",
            "true_stderr",
            "pseudo_regret",
            "pseudo_stderr",
            "gap",
            "gap_stderr",
            "bound",
            "pass",
        ],
    )?;
    let pass = gap.holds(SE_MULTIPLIER);
    out.row([
        gap.n.to_string(),
        gap.true_regret.mean.to_string(),
        gap.true_regret.std_error.to_string(),
        gap.pseudo_regret.mean.to_string(),
        gap.pseudo_regret.std_error.to_string(),
        gap.gap.mean.to_string(),
        gap.gap.std_error.to_string(),
        gap.bound.to_string(),
        pass.to_string(),
    ])?;
    let mut outcome = Outcome::ok(vec![out.finish()?]);
    if !pass {
        outcome.failures.push(format!(
            "gap {} outside [0, {}] (3 SE slack)",
            gap.gap.mean, gap.bound
        ));
    }
    Ok(outcome)
}

fn bound_check(ctx: &Ctx, a: &BoundCheckArgs) -> Result<Outcome, CliError> {
    let schedule = StepSchedule::sqrt_decay(a.gamma1, a.gamma1 * a.rho_ratio)?;
    let policy = Policy::over_penalized(schedule, 0.0);
    let cps = geometric_checkpoints(a.horizon, a.checkpoint_ratio);
    let sweep = sup_sweep(
        &policy,
        &GridSpec::new(a.grid)?,
        a.horizon,
        &cps,
        ctx.replication(10_000),
        Estimator::Occupation,
    )?;
    let mut out = ctx.csv(
        "bound_check.csv",
        &[],
        &[
            "p1", "p2", "n", "estimate", "stderr", "bound", "margin", "pass",
        ],
    )?;
    let mut failures = Vec::new();
    for (&(p1, p2), values) in sweep.grid.iter().zip(&sweep.values) {
        for v in values {
            let root = (v.n as f64).sqrt();
            let (estimate, se) = (v.estimate * root, v.std_error * root);
            let bound = theoretical_bound_over_penalized(v.n);
            let margin = bound + SE_MULTIPLIER * se - estimate;
            if margin < 0.0 {
                failures.push(format!("bound exceeded at p=({p1},{p2}), n={}", v.n));
            }
            out.row([
                p1.to_string(),
                p2.to_string(),
                v.n.to_string(),
                estimate.to_string(),
                se.to_string(),
                bound.to_string(),
                margin.to_string(),
                (margin >= 0.0).to_string(),
            ])?;
        }
    }
    Ok(Outcome {
        files: vec![out.finish()?],
        failures,
    })
}

fn pdmp_params(a: &PdmpArgs) -> Result<PdmpParams, CliError> {
    Ok(PdmpParams::new(a.a, a.b, a.c, a.g)?)
}

fn pdmp_traj(ctx: &Ctx, a: &PdmpTrajArgs) -> Result<Outcome, CliError> {
    let params = pdmp_params(&a.params)?;
    let path = simulate(&params, a.x0, a.horizon, &mut stream_rng(ctx.seed, 0))?;
    let mut traj = ctx.csv("pdmp_traj.csv", &[], &["t", "x"])?;
    for (t, x) in path.render(a.points) {
        traj.row([t, x])?;
    }
    let mut events = ctx.csv("pdmp_events.csv", &[], &["t_jump", "x_before", "x_after"])?;
    for j in &path.jumps {
        events.row([j.t, j.before, j.after])?;
    }
    Ok(Outcome::ok(vec![traj.finish()?, events.finish()?]))
}

fn pdmp_moments(ctx: &Ctx, a: &PdmpMomentsArgs) -> Result<Outcome, CliError> {
    let params = pdmp_params(&a.params)?;
    let mut times = a.times.clone();
    times.sort_by(f64::total_cmp);
    let initial: Vec<f64> = (1..=a.order).map(|k| a.x0.powi(k as i32)).collect();
    let ode = moment_ode(&params, a.order, &initial, &times)?;
    let samples = ctx
        .replication(100_000)
        .map(|_, rng| sample_at_times(&params, a.x0, &times, rng))?;
    let mut out = ctx.csv(
        "pdmp_moments.csv",
        &[],
        &["t", "p", "ode_value", "mc_value", "mc_stderr"],
    )?;
    for (i, &t) in times.iter().enumerate() {
        for p in 1..=a.order {
            let acc: MeanAccumulator = samples.iter().map(|s| s[i].powi(p as i32)).collect();
            out.row([
                t.to_string(),
                p.to_string(),
                ode[i][p - 1].to_string(),
                acc.mean().to_string(),
                acc.std_error().to_string(),
            ])?;
        }
    }
    Ok(Outcome::ok(vec![out.finish()?]))
}

fn coupling_w1(ctx: &Ctx, a: &CouplingW1Args) -> Result<Outcome, CliError> {
    let params = pdmp_params(&a.params)?;
    let decay = w1_decay_estimate(&params, a.x, a.y, &a.times, ctx.replication(100_000))?;
    let extra: Vec<(&str, String)> = match &decay {
        W1Decay::Fit {
            rate,
            rate_low,
            rate_high,
            spectral_gap,
            ..
        } => vec![
            ("fitted_rate", rate.to_string()),
            ("rate_interval", format!("[{rate_low}, {rate_high}]")),
            ("spectral_gap", spectral_gap.to_string()),
        ],
        W1Decay::Degenerate { .. } => vec![("fitted_rate", "none (equal starts)".into())],
    };
    let mut out = ctx.csv(
        "coupling_w1.csv",
        &extra,
        &["t", "mean_gap", "stderr", "exact_gap"],
    )?;
    for p in decay.points() {
        out.row([p.t, p.mean_gap, p.std_error, p.exact_gap])?;
    }
    Ok(Outcome::ok(vec![out.finish()?]))
}

fn coupling_tv(ctx: &Ctx, a: &CouplingTvArgs) -> Result<Outcome, CliError> {
    let params = pdmp_params(&a.params)?;
    let start = match a.x0 {
        Some(x) => x,
        None => params.stationary_mean()?,
    };
    let decay = tv_decay(
        &params,
        move |_| start,
        &a.horizons,
        a.burn_in,
        ctx.replication(10_000),
    )?;
    let extra = [
        ("slope", decay.fit.slope.to_string()),
        ("slope_stderr", decay.fit.slope_std_error.to_string()),
        ("meets_half_rate", decay.meets_half_rate().to_string()),
    ];
    let mut out = ctx.csv(
        "coupling_tv.csv",
        &extra,
        &["t", "merge_fraction", "ci_low", "ci_high", "theory_rate"],
    )?;
    for p in &decay.points {
        out.row([
            p.setup.t,
            p.fraction,
            p.ci_low,
            p.ci_high,
            decay.theory_rate,
        ])?;
    }
    Ok(Outcome::ok(vec![out.finish()?]))
}

/// Rows of `(quantity, computed, bound_or_target, margin, pass)`.
struct Checks {
    rows: Vec<(String, f64, f64, f64, bool)>,
}

impl Checks {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    fn push(&mut self, quantity: String, computed: f64, target: f64, margin: f64) {
        self.rows
            .push((quantity, computed, target, margin, margin >= 0.0));
    }

    fn write(self, ctx: &Ctx, name: &str, mut files: Vec<PathBuf>) -> Result<Outcome, CliError> {
        let mut out = ctx.csv(
            name,
            &[],
            &["quantity", "computed", "bound_or_target", "margin", "pass"],
        )?;
        let mut failures = Vec::new();
        for (q, c, t, m, pass) in &self.rows {
            if !pass {
                failures.push(format!("{q}: {c} vs {t}"));
            }
            out.row([
                q.clone(),
                c.to_string(),
                t.to_string(),
                m.to_string(),
                pass.to_string(),
            ])?;
        }
        files.insert(0, out.finish()?);
        Ok(Outcome { files, failures })
    }
}

fn theory(ctx: &Ctx, target: &TheoryTarget) -> Result<Outcome, CliError> {
    let mut checks = Checks::new();
    let mut files = Vec::new();
    let name = match target {
        TheoryTarget::Hr { gamma, r_max } => {
            for &g in gamma {
                for r in 1..=*r_max {
                    let v = h_r(g, r);
                    let closed =
                        ((1.0 + g).powi(r as i32) - 1.0 - r as f64 * g) / (r as f64 * g * g);
                    let tol = 1e-6 * closed.abs().max(1.0);
                    checks.push(format!("h_{r}({g})"), v, closed, tol - (v - closed).abs());
                }
            }
            "theory_hr.csv"
        }
        TheoryTarget::Kappa {
            sigma,
            p1,
            p2,
            points,
        } => {
            let bound = 1.0 - sigma * p2;
            let m = (*points).max(2);
            for i in 0..m {
                let x = i as f64 / (m - 1) as f64;
                let k = kappa_sigma(x, *sigma, *p1, *p2);
                checks.push(format!("kappa({x})"), k, bound, bound - k.abs());
            }
            "theory_kappa.csv"
        }
        TheoryTarget::Drift {
            n,
            gamma1,
            rho1,
            sigma,
            p1,
            p2,
            points,
        } => {
            let sched = StepSchedule::sqrt_decay(*gamma1, *rho1)?;
            let curve = drift_curve(*n, &sched, *sigma, *p1, *p2, *points)?;
            let mut out = ctx.csv(
                "theory_drift_curve.csv",
                &[],
                &["n", "y", "phi1", "phi2", "total"],
            )?;
            for d in &curve {
                out.row([*n as f64, d.y, d.phi1, d.phi2, d.total()])?;
            }
            files.push(out.finish()?);
            let first = curve[0];
            let expected = sched.rho(n + 1) / sched.gamma(*n) * (1.0 - sigma * p1);
            checks.push(
                "drift(0)".into(),
                first.total(),
                expected,
                1e-12 - (first.total() - expected).abs(),
            );
            "theory_drift.csv"
        }
        TheoryTarget::N0 { eps, pi, gamma1 } => {
            let v = n0(*eps, *pi, *gamma1)?;
            let real = 1.0 / (4.0 * eps * eps * gamma1 * gamma1 * pi * pi);
            checks.push("n0".into(), v as f64, real, v as f64 - real);
            "theory_n0.csv"
        }
        TheoryTarget::Zmoment {
            r,
            eps,
            p1,
            p2,
            gamma1,
            rho_ratio,
            sigma,
            horizon,
        } => {
            let policy = Policy::over_penalized(
                StepSchedule::sqrt_decay(*gamma1, gamma1 * rho_ratio)?,
                *sigma,
            );
            let env = ArmEnvironment::two_armed(*p1, *p2)?;
            let rep = ctx.replication(10_000);
            let res = increase_of_exponent_check(r, *eps, &policy, &env, *horizon, rep)?;
            for c in &res {
                checks.push(
                    format!("sup E Z^({}) for n >= {}", c.r, c.n0),
                    c.lhs,
                    c.rhs,
                    c.rhs + SE_MULTIPLIER * c.std_error - c.lhs,
                );
            }
            let r_max = r.iter().copied().max().unwrap_or(1) + 1;
            let n_set = geometric_checkpoints(*horizon, 2.0);
            let moments = z_moment_estimate(r_max, &n_set, &policy, &env, rep)?;
            let mut out = ctx.csv(
                "theory_zmoment_curve.csv",
                &[],
                &["n", "r", "estimate", "stderr"],
            )?;
            for m in &moments {
                out.row([
                    m.n as f64,
                    m.r as f64,
                    m.estimate.mean,
                    m.estimate.std_error,
                ])?;
            }
            files.push(out.finish()?);
            "theory_zmoment.csv"
        }
        TheoryTarget::Sumlemma { cases, max_length } => {
            let mut rng = stream_rng(ctx.seed, 0);
            for _ in 0..*cases {
                let alpha = 0.2 + 4.8 * open_uniform(&mut rng);
                let gamma1 = 0.05 + 0.9 * open_uniform(&mut rng);
                let ag2 = (alpha * gamma1).powi(2);
                let lowest = ((1.0 / ag2).ceil() as u64).max(ag2.floor() as u64 + 1);
                let n_tilde = lowest + (open_uniform(&mut rng) * 100.0) as u64;
                let n = n_tilde + (open_uniform(&mut rng) * *max_length as f64) as u64;
                let s = sum_lemma_check(alpha, gamma1, n_tilde, n)?;
                checks.push(
                    format!("S(alpha={alpha:.4}, gamma1={gamma1:.4}, n~={n_tilde}, n={n})"),
                    s.lhs,
                    s.bound,
                    s.bound - s.lhs,
                );
            }
            "theory_sumlemma.csv"
        }
        TheoryTarget::Aslimit {
            p,
            sigma,
            gamma1,
            rho1,
            alpha,
            beta,
            horizon,
        } => {
            let res = as_limit_check(
                p,
                *sigma,
                *gamma1,
                *rho1,
                *alpha,
                *beta,
                *horizon,
                ctx.replication(200),
            )?;
            for a in &res.ratios {
                checks.push(
                    format!("median X^{}/rho_n", a.arm + 1),
                    a.median,
                    a.target,
                    0.1 - a.relative_error,
                );
            }
            checks.push(
                "fraction X^1 > 0.99".into(),
                res.best_arm_mass,
                0.95,
                res.best_arm_mass - 0.95,
            );
            "theory_aslimit.csv"
        }
        TheoryTarget::Weaklimit {
            p1,
            p2,
            gamma1,
            rho1,
            sigma,
            n_set,
            burn_in,
        } => {
            let res = weak_limit_check(
                *p1,
                *p2,
                *gamma1,
                *rho1,
                *sigma,
                n_set,
                *burn_in,
                ctx.replication(4_000),
            )?;
            let mut previous = f64::INFINITY;
            for w in &res.points {
                checks.push(format!("W1 at n={}", w.n), w.w1, previous, previous - w.w1);
                previous = w.w1;
            }
            if let Some(last) = res.points.last() {
                checks.push(
                    format!("mean (1-X_n)/rho_n at n={}", last.n),
                    last.bandit_mean.mean,
                    last.stationary_mean,
                    SE_MULTIPLIER * last.bandit_mean.std_error
                        - (last.bandit_mean.mean - last.stationary_mean).abs(),
                );
            }
            "theory_weaklimit.csv"
        }
    };
    checks.write(ctx, name, files)
}

fn write_curve(ctx: &Ctx, curve: &NamedCurve) -> Result<PathBuf, CliError> {
    let mut out = ctx.csv(
        &format!("sweep_{}.csv", curve.name),
        &[("policy", curve.name.clone())],
        &["n", "sup_value", "stderr", "argmax_p1", "argmax_p2"],
    )?;
    for s in &curve.points {
        out.row([s.n as f64, s.sup, s.std_error, s.argmax_p1, s.argmax_p2])?;
    }
    out.finish()
}

fn reproduce_all(ctx: &Ctx, a: &ReproduceArgs) -> Result<Outcome, CliError> {
    if a.scale <= 0.0 {
        return Err(CliError::Config(format!(
            "scale must be positive, got {}",
            a.scale
        )));
    }
    let config = AcceptanceConfig {
        seed: ctx.seed,
        workers: (ctx.workers > 0).then_some(ctx.workers),
        scale: a.scale,
    };
    let report = run_acceptance(&config, &a.only, |c| {
        eprintln!("{}  ({:.1}s)", c.line(), c.seconds)
    });
    let mut files = vec![write_json(ctx.out, "acceptance_report.json", &report)?];
    let mut out = ctx.csv(
        "acceptance.csv",
        &[],
        &["id", "title", "pass", "margin", "seconds", "detail"],
    )?;
    for c in &report.criteria {
        out.row([
            c.id.to_string(),
            c.title.clone(),
            c.passed.to_string(),
            c.margin.to_string(),
            format!("{:.3}", c.seconds),
            c.detail.clone(),
        ])?;
    }
    files.push(out.finish()?);
    for c in &report.criteria {
        for curve in &c.curves {
            files.push(write_curve(ctx, curve)?);
        }
    }
    let traj = PdmpTrajArgs {
        params: PdmpArgs {
            a: 0.2,
            b: 0.8,
            c: 0.2,
            g: 0.1,
        },
        x0: 1.0,
        horizon: 50.0,
        points: 1_000,
    };
    files.extend(pdmp_traj(ctx, &traj)?.files);
    let drift = TheoryTarget::Drift {
        n: 100,
        gamma1: 1.0,
        rho1: 1.0,
        sigma: 0.5,
        p1: 0.7,
        p2: 0.6,
        points: 201,
    };
    files.extend(theory(ctx, &drift)?.files);
    let failures = report
        .criteria
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("criterion {} ({}) failed: {}", c.id, c.title, c.detail))
        .collect();
    Ok(Outcome { files, failures })
}
