use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nsbandit::acceptance::AcceptanceReport;

fn nsbandit(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nsbandit"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

/// Lines of a CSV file after the `#` metadata block.
fn data(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[test]
fn pdmp_traj_writes_path_and_events() {
    let dir = tempfile::tempdir().unwrap();
    let out = nsbandit(
        &["pdmp-traj", "--horizon", "50", "--points", "101"],
        dir.path(),
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(dir.path().join("pdmp_traj.csv")).unwrap();
    assert!(text.starts_with("# nsbandit "));
    assert!(text.contains("# command: pdmp-traj"));
    let rows = data(&dir.path().join("pdmp_traj.csv"));
    assert_eq!(rows[0], "t,x");
    assert_eq!(rows.len(), 102);
    let events = data(&dir.path().join("pdmp_events.csv"));
    assert_eq!(events[0], "t_jump,x_before,x_after");
    assert!(events.len() > 1);
}

#[test]
fn identical_configs_give_identical_data() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "regret-curve",
        "--horizon",
        "500",
        "--reps",
        "64",
        "--seed",
        "9",
        "--estimator",
        "all",
    ];
    assert!(nsbandit(&args, a.path()).status.success());
    let mut with_workers = args.to_vec();
    with_workers.extend(["--workers", "2"]);
    assert!(nsbandit(&with_workers, b.path()).status.success());
    let da = data(&a.path().join("regret_curve.csv"));
    assert_eq!(da, data(&b.path().join("regret_curve.csv")));
    assert_eq!(
        da[0],
        "policy,sigma,gamma1,rho1,offset,p1,p2,n,estimator,estimate,stderr,reps,seed"
    );
    assert!(da.iter().any(|l| l.contains(",true-regret,")));
}

#[test]
fn toml_config_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let direct = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.toml");
    fs::write(
        &config,
        "command = \"coupling-w1\"\nseed = 4\nreps = 200\nx = 3.0\ny = 1.0\ntimes = [0.5, 1.0, 2.0]\na = 1.0\nb = 0.8\nc = 0.5\ng = 1.0\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_nsbandit"))
        .arg("run")
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let flags = [
        "coupling-w1",
        "--seed",
        "4",
        "--reps",
        "200",
        "--x",
        "3",
        "--y",
        "1",
        "--times",
        "0.5,1,2",
        "--a",
        "1",
        "--b",
        "0.8",
        "--c",
        "0.5",
        "--g",
        "1",
    ];
    assert!(nsbandit(&flags, direct.path()).status.success());
    assert_eq!(
        data(&dir.path().join("coupling_w1.csv")),
        data(&direct.path().join("coupling_w1.csv"))
    );
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let config_error = nsbandit(&["regret-curve", "--gamma1", "-1"], dir.path());
    assert_eq!(config_error.status.code(), Some(2));
    let parse_error = nsbandit(&["regret-curve", "--horizon", "many"], dir.path());
    assert_eq!(parse_error.status.code(), Some(2));
    // c·g ≥ b: the process is not ergodic
    let precondition = nsbandit(
        &["pdmp-moments", "--c", "1", "--g", "1", "--reps", "10"],
        dir.path(),
    );
    assert_eq!(precondition.status.code(), Some(3));
    let failed = nsbandit(&["reproduce-all", "--only", "99"], dir.path());
    assert_eq!(failed.status.code(), Some(5));
}

#[test]
fn theory_checks_write_pass_columns() {
    let dir = tempfile::tempdir().unwrap();
    for target in [
        vec!["theory-check", "hr"],
        vec!["theory-check", "kappa"],
        vec!["theory-check", "n0"],
        vec!["theory-check", "drift"],
        vec![
            "theory-check",
            "sumlemma",
            "--cases",
            "50",
            "--max-length",
            "2000",
        ],
    ] {
        let out = nsbandit(&target, dir.path());
        assert!(
            out.status.success(),
            "{target:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let rows = data(&dir.path().join("theory_n0.csv"));
    assert_eq!(rows[0], "quantity,computed,bound_or_target,margin,pass");
    assert!(rows[1].starts_with("n0,285,"));
    assert!(data(&dir.path().join("theory_sumlemma.csv"))[1..]
        .iter()
        .all(|r| r.ends_with(",true")));
    let drift = data(&dir.path().join("theory_drift_curve.csv"));
    assert_eq!(drift[0], "n,y,phi1,phi2,total");
    assert_eq!(drift.len(), 202);
}

#[test]
fn reproduce_all_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("fresh");
    let out = nsbandit(
        &["reproduce-all", "--only", "5,11,12", "--scale", "0.05"],
        &target,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = fs::read_to_string(target.join("acceptance_report.json")).unwrap();
    let report: AcceptanceReport = serde_json::from_str(&text).unwrap();
    assert_eq!(report.criteria.len(), 3);
    assert!(report.all_passed());
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again, text);
    assert!(target.join("pdmp_traj.csv").exists());
    assert!(target.join("acceptance.csv").exists());
}
