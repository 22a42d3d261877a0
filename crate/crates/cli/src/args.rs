use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "nsbandit",
    version,
    about = "Monte-Carlo laboratory for Narendra-Shapiro bandits"
)]
pub struct Cli {
    /// Master seed.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Replications (each subcommand has its own default).
    #[arg(long, global = true)]
    pub reps: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Regret estimates along one trajectory family.
    RegretCurve(RegretCurveArgs),
    /// Sup over a (p1, p2) grid of R/sqrt(n).
    RegretSweep(RegretSweepArgs),
    /// True regret minus pseudo-regret.
    RegretGap(RegretGapArgs),
    /// Checks R-bar_n <= 31.1 sqrt(2n) on a grid.
    BoundCheck(BoundCheckArgs),
    /// Exact path of the limiting PDMP.
    PdmpTraj(PdmpTrajArgs),
    /// Moment equations against Monte-Carlo.
    PdmpMoments(PdmpMomentsArgs),
    /// Mean gap of the Wasserstein coupling.
    CouplingW1(CouplingW1Args),
    /// Two-phase total-variation merge experiment.
    CouplingTv(CouplingTvArgs),
    /// Proof-side quantities and limit theorems.
    TheoryCheck {
        #[command(subcommand)]
        target: TheoryTarget,
    },
    /// Runs the acceptance suite and writes its report.
    ReproduceAll(ReproduceArgs),
    /// Runs the command described by a TOML file.
    Run {
        /// TOML file with a `command` key and one key per flag.
        config: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    /// Over-penalized NS (sigma = 1 is the penalized algorithm).
    Ns,
    /// Crude NS without penalty.
    Crude,
    Exp3,
    Klucb,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PolicyArgs {
    #[arg(long, value_enum, default_value = "ns")]
    pub policy: PolicyKind,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma1: f64,
    /// rho_1 (overrides --rho-ratio).
    #[arg(long)]
    pub rho1: Option<f64>,
    /// rho_1 / gamma_1.
    #[arg(long, default_value_t = 0.25)]
    pub rho_ratio: f64,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta: f64,
    /// Steps use index n + offset.
    #[arg(long, default_value_t = 0)]
    pub offset: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorArg {
    Reward,
    Occupation,
    TrueRegret,
    All,
}

#[derive(Debug, Args, Serialize)]
pub struct RegretCurveArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Arm means, best first or in any order.
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 0.6])]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    /// Ratio of the geometric checkpoint sequence.
    #[arg(long, default_value_t = 1.25)]
    pub checkpoint_ratio: f64,
    #[arg(long, value_enum, default_value = "occupation")]
    pub estimator: EstimatorArg,
}

#[derive(Debug, Args, Serialize)]
pub struct RegretSweepArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    /// Lattice step of the (p1, p2) triangle.
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    /// Extra gaps p1 - p2 added along the diagonal.
    #[arg(long, value_delimiter = ',')]
    pub gaps: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1.25)]
    pub checkpoint_ratio: f64,
    #[arg(long, value_enum, default_value = "occupation")]
    pub estimator: EstimatorArg,
    /// Re-estimate the leading grid points with this many fresh replications.
    #[arg(long)]
    pub refine_reps: Option<u64>,
    /// Grid points per checkpoint kept for re-estimation.
    #[arg(long, default_value_t = 3)]
    pub top_k: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RegretGapArgs {
    #[command(flatten)]
    pub policy: PolicyArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.7, 0.6])]
    pub p: Vec<f64>,
    #[arg(long, default_value_t = 1_000)]
    pub horizon: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundCheckArgs {
    #[arg(long, default_value_t = 0.89)]
    pub gamma1: f64,
    #[arg(long, default_value_t = 1.0 / 2.63)]
    pub rho_ratio: f64,
    #[arg(long, default_value_t = 0.05)]
    pub grid: f64,
    #[arg(long, default_value_t = 10_000)]
    pub horizon: u64,
    #[arg(long, default_value_t = 1.25)]
    pub checkpoint_ratio: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PdmpArgs {
    #[arg(long, default_value_t = 0.2)]
    pub a: f64,
    #[arg(long, default_value_t = 0.8)]
    pub b: f64,
    #[arg(long, default_value_t = 0.2)]
    pub c: f64,
    #[arg(long, default_value_t = 0.1)]
    pub g: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct PdmpTrajArgs {
    #[command(flatten)]
    pub params: PdmpArgs,
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    #[arg(long, default_value_t = 50.0)]
    pub horizon: f64,
    /// Render grid size.
    #[arg(long, default_value_t = 1_000)]
    pub points: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PdmpMomentsArgs {
    #[command(flatten)]
    pub params: PdmpArgs,
    #[arg(long, default_value_t = 1.0)]
    pub x0: f64,
    /// Highest moment order.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 2.0, 5.0])]
    pub times: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingW1Args {
    #[command(flatten)]
    pub params: PdmpArgs,
    #[arg(long, default_value_t = 2.0)]
    pub x: f64,
    #[arg(long, default_value_t = 1.0)]
    pub y: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0])]
    pub times: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct CouplingTvArgs {
    #[command(flatten)]
    pub params: PdmpArgs,
    /// Initial state of X (default: the stationary mean a/pi).
    #[arg(long)]
    pub x0: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 20.0, 30.0, 40.0])]
    pub horizons: Vec<f64>,
    /// Time the stationary copy runs before the experiment starts.
    #[arg(long, default_value_t = 20.0)]
    pub burn_in: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoryTarget {
    /// h_r(gamma) against its closed form.
    Hr {
        #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.3, 0.89, 1.0])]
        gamma: Vec<f64>,
        #[arg(long, default_value_t = 6)]
        r_max: u32,
    },
    /// kappa_sigma(x) and its bound 1 - sigma p2.
    Kappa {
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.7)]
        p1: f64,
        #[arg(long, default_value_t = 0.6)]
        p2: f64,
        #[arg(long, default_value_t = 101)]
        points: usize,
    },
    /// Drift decomposition of (1 - X_n)/gamma_n.
    Drift {
        #[arg(long, default_value_t = 100)]
        n: u64,
        #[arg(long, default_value_t = 1.0)]
        gamma1: f64,
        #[arg(long, default_value_t = 1.0)]
        rho1: f64,
        #[arg(long, default_value_t = 0.5)]
        sigma: f64,
        #[arg(long, default_value_t = 0.7)]
        p1: f64,
        #[arg(long, default_value_t = 0.6)]
        p2: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// First index of the moment recursion.
    N0 {
        #[arg(long, default_value_t = 1.0 / 3.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.1)]
        pi: f64,
        #[arg(long, default_value_t = 0.89)]
        gamma1: f64,
    },
    /// Moments of (1 - X_n)^r / gamma_n and the increase-of-exponent bound.
    Zmoment {
        #[arg(long, value_delimiter = ',', default_values_t = [1, 2])]
        r: Vec<u32>,
        #[arg(long, default_value_t = 1.0 / 3.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.7)]
        p1: f64,
        #[arg(long, default_value_t = 0.6)]
        p2: f64,
        #[arg(long, default_value_t = 0.89)]
        gamma1: f64,
        #[arg(long, default_value_t = 0.38)]
        rho_ratio: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, default_value_t = 100_000)]
        horizon: u64,
    },
    /// Discrete sum lemma on random cases.
    Sumlemma {
        #[arg(long, default_value_t = 1_000)]
        cases: u64,
        #[arg(long, default_value_t = 50_000)]
        max_length: u64,
    },
    /// Almost-sure limits of X_n^i / rho_n.
    Aslimit {
        #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.5, 0.3])]
        p: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma1: f64,
        #[arg(long, default_value_t = 0.5)]
        rho1: f64,
        #[arg(long, default_value_t = 0.6)]
        alpha: f64,
        #[arg(long, default_value_t = 0.3)]
        beta: f64,
        #[arg(long, default_value_t = 1_000_000)]
        horizon: u64,
    },
    /// Law of (1 - X_n)/rho_n against the stationary PDMP.
    Weaklimit {
        #[arg(long, default_value_t = 0.8)]
        p1: f64,
        #[arg(long, default_value_t = 0.5)]
        p2: f64,
        #[arg(long, default_value_t = 0.5)]
        gamma1: f64,
        #[arg(long, default_value_t = 0.5)]
        rho1: f64,
        #[arg(long, default_value_t = 0.0)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', default_values_t = [1_000, 10_000, 100_000])]
        n_set: Vec<u64>,
        #[arg(long, default_value_t = 50.0)]
        burn_in: f64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct ReproduceArgs {
    /// Multiplies every replication count of the suite.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Restrict to these criteria.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u8>,
}
