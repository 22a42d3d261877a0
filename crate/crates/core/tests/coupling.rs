use nsbandit::coupling::{
    coupled_states_at, psi, simulate_coupled, stick_lower_bound, tv_merge_experiment,
    w1_decay_estimate, StickCoupling, StickOutcome, StickParams, TvSetup, W1Decay,
};
use nsbandit::mc::Replication;
use nsbandit::pdmp::{sample_at_times, stationary_sample, PdmpParams};
use nsbandit::rng::stream_rng;
use nsbandit::stats::{ks_two_sample, MeanAccumulator};

fn params() -> PdmpParams {
    PdmpParams::new(1.0, 0.8, 0.5, 1.0).unwrap()
}

#[test]
fn coupled_pairs_keep_their_order_and_gap_dynamics() {
    let p = params();
    for (seed, (x, y)) in [(3.0, 1.0), (0.2, 4.0), (1.3, 1.2)].into_iter().enumerate() {
        for r in 0..200 {
            let path = simulate_coupled(&p, x, y, 30.0, &mut stream_rng(seed as u64, r)).unwrap();
            let sign = (x - y).signum();
            let (mut t, mut gap) = (0.0, x - y);
            for e in &path.events {
                let before = e.x_before - e.y_before;
                let expected = gap * (-p.b() * (e.t - t)).exp();
                assert!((before - expected).abs() <= 1e-10 * (1.0 + gap.abs()));
                let after = e.x_after - e.y_after;
                if e.simultaneous {
                    assert!((after - before).abs() <= 1e-12);
                } else {
                    assert!((after.abs() - before.abs() - p.g()).abs() <= 1e-12);
                }
                assert_eq!(after.signum(), sign);
                t = e.t;
                gap = after;
            }
        }
    }
}

#[test]
fn equal_starting_points_stay_together() {
    let p = params();
    let path = simulate_coupled(&p, 1.7, 1.7, 50.0, &mut stream_rng(1, 0)).unwrap();
    assert!(!path.events.is_empty());
    assert!(path
        .events
        .iter()
        .all(|e| e.simultaneous && e.x_after == e.y_after));
    let (x, y) = path.final_state();
    assert_eq!(x, y);
}

#[test]
fn each_coordinate_is_a_standalone_process() {
    let p = params();
    let (x, y, t) = (2.5, 0.4, 1.5);
    let pairs = Replication::new(20_000, 2)
        .map(|_, rng| Ok(coupled_states_at(&p, x, y, &[t], rng)?[0]))
        .unwrap();
    for (i, start) in [x, y].into_iter().enumerate() {
        let alone = Replication::new(20_000, 3 + i as u64)
            .map(|_, rng| Ok(sample_at_times(&p, start, &[t], rng)?[0]))
            .unwrap();
        let coordinate: Vec<f64> = pairs
            .iter()
            .map(|v| if i == 0 { v.0 } else { v.1 })
            .collect();
        let ks = ks_two_sample(&coordinate, &alone);
        assert!(ks.p_value > 1e-3, "coordinate {i}: {ks:?}");
    }
}

#[test]
fn mean_gap_decays_at_the_spectral_gap_and_scales_linearly() {
    let p = params();
    let times = [1.0, 2.0, 4.0];
    let base = w1_decay_estimate(&p, 2.0, 1.0, &times, Replication::new(100_000, 4)).unwrap();
    let doubled = w1_decay_estimate(&p, 3.0, 1.0, &times, Replication::new(100_000, 5)).unwrap();
    for (a, b) in base.points().iter().zip(doubled.points()) {
        assert!((a.exact_gap - (-0.3 * a.t).exp()).abs() < 1e-15);
        assert!((b.exact_gap - 2.0 * a.exact_gap).abs() < 1e-15);
        assert!((a.mean_gap - a.exact_gap).abs() <= 3.0 * a.std_error);
        assert!((b.mean_gap - b.exact_gap).abs() <= 3.0 * b.std_error);
    }
    match base {
        W1Decay::Fit {
            rate,
            rate_low,
            rate_high,
            ..
        } => {
            assert!(
                rate_low <= 0.3 && 0.3 <= rate_high,
                "rate {rate} in [{rate_low}, {rate_high}]"
            );
        }
        W1Decay::Degenerate { .. } => panic!("distinct starting points gave a degenerate fit"),
    }
    let same = w1_decay_estimate(&p, 1.0, 1.0, &times, Replication::new(100, 6)).unwrap();
    assert!(matches!(same, W1Decay::Degenerate { .. }));
    assert!(same.points().iter().all(|g| g.mean_gap == 0.0));
    assert!(w1_decay_estimate(&p, 2.0, 1.0, &[1.0, 2.0], Replication::new(10, 1)).is_err());
}

#[test]
fn stick_attempts_merge_onto_the_upper_path() {
    let p = params();
    let stick = StickParams::new(&p, 3.0, 0.05, 10.0).unwrap();
    let coupling = StickCoupling::new(&p, 2.0, 1.96, &stick).unwrap();
    let mut merged = 0;
    for r in 0..2_000 {
        let attempt = coupling.attempt(&mut stream_rng(7, r)).unwrap();
        if let StickOutcome::Merged { time, state } = attempt.outcome {
            merged += 1;
            assert_eq!(time, attempt.t1y);
            assert!(time <= stick.s);
            assert!(attempt.t2x > attempt.t1y);
            assert!((psi(attempt.t1x, 0.04, p.b(), p.g()) - attempt.t1y).abs() < 1e-9);
            assert!((coupling.upper_at(&attempt) - state).abs() < 1e-9);
        }
    }
    assert!(merged > 1_000);
}

#[test]
fn vanishing_gap_succeeds_with_the_deadline_probability() {
    let p = params();
    let s = 3.0;
    let stick = StickParams::new(&p, 3.0, 1e-6, s).unwrap();
    let coupling = StickCoupling::new(&p, 2.0, 2.0 - 1e-6, &stick).unwrap();
    let hits: MeanAccumulator = (0..20_000)
        .map(|r| {
            f64::from(u8::from(
                coupling
                    .attempt(&mut stream_rng(8, r))
                    .unwrap()
                    .outcome
                    .merged(),
            ))
        })
        .collect();
    let limit = 1.0 - (-(p.a() / p.b()) * p.c() * s).exp();
    assert!((stick_lower_bound(&p, 3.0, 0.0, s) - limit).abs() < 1e-15);
    assert!(
        hits.mean() >= limit - 3.0 * hits.std_error(),
        "{} vs {limit}",
        hits.mean()
    );
}

#[test]
fn stick_lower_bound_evaluates_the_closed_form() {
    let p = params();
    let value = stick_lower_bound(&p, 3.0, 0.05, 10.0);
    let expected = (1.0 - 0.09375 - (-6.25f64).exp() - 0.03125) * (1.0 - 0.125);
    assert!((value - expected).abs() < 1e-12);
    assert!((stick_lower_bound(&p, 3.0, 0.0, 1e6) - 1.0).abs() < 1e-12);
}

fn stationary_start(p: &PdmpParams) -> impl Fn(&mut nsbandit::rng::StreamRng) -> f64 + Sync + '_ {
    move |rng| stationary_sample(p, 20.0, rng).unwrap() + 0.5
}

#[test]
fn no_time_to_stick_means_no_merge() {
    let p = params();
    let setup = TvSetup {
        t1: 5.0,
        t: 5.0,
        x0: 6.0,
        eps: 0.2,
    };
    let est = tv_merge_experiment(
        &p,
        stationary_start(&p),
        setup,
        20.0,
        Replication::new(2_000, 9),
    )
    .unwrap();
    assert_eq!(est.merged, 0);
    assert_eq!(est.fraction, 0.0);
}

#[test]
fn merge_fraction_grows_with_the_horizon() {
    let p = params();
    let mut last: Option<(f64, f64)> = None;
    for (i, t) in [6.0, 8.0, 12.0, 20.0].into_iter().enumerate() {
        let setup = TvSetup {
            t1: 5.0,
            t,
            x0: 6.0,
            eps: 0.2,
        };
        let est = tv_merge_experiment(
            &p,
            stationary_start(&p),
            setup,
            20.0,
            Replication::new(4_000, 10 + i as u64),
        )
        .unwrap();
        assert!(est.ci_low <= est.fraction && est.fraction <= est.ci_high);
        if let Some((f, se)) = last {
            let combined = (se * se + est.std_error * est.std_error).sqrt();
            assert!(
                est.fraction >= f - 3.0 * combined,
                "t = {t}: {} after {f}",
                est.fraction
            );
        }
        last = Some((est.fraction, est.std_error));
    }
    assert!(last.unwrap().0 > 0.05);
}
