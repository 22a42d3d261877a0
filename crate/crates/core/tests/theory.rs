use nsbandit::bandit::{ArmEnvironment, Policy, StepSchedule};
use nsbandit::mc::Replication;
use nsbandit::stats::wasserstein1_sorted;
use nsbandit::theory::{
    as_limit_check, drift_curve, drift_profile, h_r, kappa_sigma, n0, normalized_samples,
    sum_lemma_check, sum_lemma_path, z_moment_estimate, Normalizer,
};
use proptest::prelude::*;

#[test]
fn closed_forms_at_rational_points() {
    // h_2 ≡ 1/2, h_3(γ) = (3 + γ)/3, h_4(γ) = (6 + 4γ + γ²)/4
    assert_eq!(h_r(0.37, 2), 0.5);
    assert!((h_r(0.5, 3) - 7.0 / 6.0).abs() < 1e-15);
    assert!((h_r(0.5, 4) - 8.25 / 4.0).abs() < 1e-15);
    assert!((kappa_sigma(0.5, 0.5, 0.7, 0.6) - 0.0125).abs() < 1e-15);
    assert!((kappa_sigma(1.0, 1.0, 0.7, 0.6) + 0.3).abs() < 1e-15);
    assert!((kappa_sigma(0.0, 0.0, 0.7, 0.6) - 1.0).abs() < 1e-15);
    assert_eq!(n0(1.0 / 3.0, 0.5, 1.0).unwrap(), 10);
}

proptest! {
    #[test]
    fn h_r_matches_the_unexpanded_form(gamma in 0.05f64..=1.0, r in 2u32..=10) {
        let closed = ((1.0 + gamma).powi(r as i32) - 1.0 - r as f64 * gamma) / (r as f64 * gamma * gamma);
        prop_assert!((h_r(gamma, r) - closed).abs() <= 1e-9 * closed);
    }

    #[test]
    fn n0_is_where_the_step_increments_fall_below_eps_pi(
        eps in 0.01f64..=1.0 / 3.0,
        pi in 0.05f64..=1.0,
        gamma1 in 0.1f64..=1.0,
    ) {
        let start = n0(eps, pi, gamma1).unwrap();
        let sched = StepSchedule::sqrt_decay(gamma1, 0.0).unwrap();
        prop_assert!(sched.eps(start) <= eps * pi);
        prop_assert!(sched.eps(start + 1) <= sched.eps(start));
    }

    #[test]
    fn sum_lemma_bound_holds_along_the_whole_path(
        alpha in 0.2f64..=5.0,
        gamma1 in 0.05f64..0.95,
        extra in 0u64..200,
        len in 1u64..5_000,
    ) {
        let threshold = (1.0 / (alpha * gamma1).powi(2)).ceil() as u64;
        let n_tilde = threshold.max((alpha * gamma1).powi(2).floor() as u64 + 1) + extra;
        let n = n_tilde + len;
        let check = sum_lemma_check(alpha, gamma1, n_tilde, n).unwrap();
        prop_assert!(check.holds());
        let path = sum_lemma_path(alpha, gamma1, n_tilde, n);
        prop_assert_eq!(path.len() as u64, len + 1);
        prop_assert_eq!(path[0], 0.0);
        prop_assert!(path.iter().all(|s| *s >= 0.0 && *s <= 1.0 / alpha));
        prop_assert_eq!(*path.last().unwrap(), check.lhs);
    }
}

#[test]
fn sum_lemma_rejects_inputs_outside_its_hypotheses() {
    assert!(sum_lemma_check(1.0, 1.0, 10, 20).is_err());
    assert!(sum_lemma_check(1.0, 0.5, 2, 20).is_err());
    assert!(sum_lemma_check(1.0, 0.5, 10, 5).is_err());
    assert!(sum_lemma_check(-1.0, 0.5, 10, 20).is_err());
}

#[test]
fn drift_is_positive_near_zero_and_negative_in_the_bulk() {
    let sched = StepSchedule::sqrt_decay(1.0, 1.0).unwrap();
    let (sigma, p1, p2) = (0.5, 0.7, 0.6);
    for n in [100, 1_000, 10_000] {
        let gamma = sched.gamma(n);
        let curve = drift_curve(n, &sched, sigma, p1, p2, 2_001).unwrap();
        assert!(curve[0].total() > 0.0);
        assert_eq!(curve[0].phi1, 0.0);
        let expected = (sched.rho(n + 1) / gamma) * (1.0 - sigma * p1);
        assert!((curve[0].phi2 - expected).abs() < 1e-12);
        for d in &curve {
            if d.y >= 0.6 / gamma && d.y <= 0.99 / gamma {
                assert!(d.total() < 0.0, "n = {n}, y = {}: {}", d.y, d.total());
            }
        }
    }
    assert!(drift_profile(100, 10.5, &sched, sigma, p1, p2).is_err());
    assert!(drift_profile(0, 1.0, &sched, sigma, p1, p2).is_err());
}

#[test]
fn higher_z_moments_are_smaller() {
    let policy = Policy::over_penalized(StepSchedule::sqrt_decay(0.89, 0.38 * 0.89).unwrap(), 0.0);
    let env = ArmEnvironment::two_armed(0.8, 0.5).unwrap();
    let moments = z_moment_estimate(
        4,
        &[100, 1_000, 5_000],
        &policy,
        &env,
        Replication::new(500, 3),
    )
    .unwrap();
    assert_eq!(moments.len(), 12);
    for pair in moments.windows(2) {
        if pair[0].n == pair[1].n {
            assert_eq!(pair[1].r, pair[0].r + 1);
            assert!(pair[1].estimate.mean <= pair[0].estimate.mean);
        }
    }
}

#[test]
fn normalized_samples_need_a_positive_normalizer() {
    let env = ArmEnvironment::two_armed(0.8, 0.5).unwrap();
    let crude_like = Policy::over_penalized(StepSchedule::sqrt_decay(0.5, 0.0).unwrap(), 0.0);
    assert!(normalized_samples(
        &crude_like,
        &env,
        &[10],
        Normalizer::Rho,
        Replication::new(4, 1)
    )
    .is_err());
    let samples = normalized_samples(
        &crude_like,
        &env,
        &[10, 100],
        Normalizer::Gamma,
        Replication::new(4, 1),
    )
    .unwrap();
    assert_eq!(samples.len(), 2);
    assert!(samples
        .iter()
        .all(|s| s.values.len() == 4 && s.values.iter().all(|v| *v >= 0.0)));
    assert!(normalized_samples(
        &Policy::Exp3,
        &env,
        &[10],
        Normalizer::Gamma,
        Replication::new(4, 1)
    )
    .is_err());
}

#[test]
fn empirical_w1_is_a_distance_between_sorted_samples() {
    let a = [0.3, 2.0, 1.1, 0.7];
    let b = [1.1, 0.3, 0.7, 2.0];
    assert_eq!(wasserstein1_sorted(&a, &b), 0.0);
    let shifted: Vec<f64> = a.iter().map(|v| v + 0.25).collect();
    assert!((wasserstein1_sorted(&a, &shifted) - 0.25).abs() < 1e-15);
}

#[test]
fn as_limit_needs_beta_below_alpha() {
    let rep = Replication::new(2, 1);
    assert!(as_limit_check(&[0.8, 0.5], 0.0, 0.5, 0.5, 0.4, 0.5, 100, rep).is_err());
    assert!(as_limit_check(&[0.8, 0.5], 0.0, 0.5, 0.5, 0.6, 0.5, 100, rep).is_err());
    assert!(as_limit_check(&[0.5, 0.8], 0.0, 0.5, 0.5, 0.6, 0.3, 100, rep).is_err());
    let ok = as_limit_check(&[0.8, 0.5], 0.0, 0.5, 0.5, 0.6, 0.3, 1_000, rep).unwrap();
    assert_eq!(ok.ratios.len(), 1);
    assert!((ok.ratios[0].target - 1.0 / 0.3).abs() < 1e-12);
}
