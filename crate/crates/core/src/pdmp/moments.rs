use super::PdmpParams;
use crate::error::{ensure, Result};

/// Fixed RK4 step for the moment equations.
pub const ODE_STEP: f64 = 1e-3;

/// `E X_t = a/π + (m₀ − a/π) e^{−πt}`.
pub fn mean_closed_form(params: &PdmpParams, m0: f64, t: f64) -> Result<f64> {
    let stationary = params.stationary_mean()?;
    Ok(stationary + (m0 - stationary) * (-params.spectral_gap() * t).exp())
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `α_p' = −pπ α_p + p a α_{p−1} + c Σ_{k=0}^{p−2} C(p,k) g^{p−k} α_{k+1}`
/// as a lower-triangular matrix acting on `(α₀ = 1, α₁, …, α_p)`.
fn system(params: &PdmpParams, p: usize) -> Vec<Vec<f64>> {
    let (a, c, g, pi) = (params.a(), params.c(), params.g(), params.spectral_gap());
    let mut m = vec![vec![0.0; p + 1]; p + 1];
    for q in 1..=p {
        let row = &mut m[q];
        row[q] -= q as f64 * pi;
        row[q - 1] += q as f64 * a;
        for k in 0..q.saturating_sub(1) {
            row[k + 1] += c * binomial(q, k) * g.powi((q - k) as i32);
        }
    }
    m
}

fn derivative(m: &[Vec<f64>], y: &[f64], out: &mut [f64]) {
    out[0] = 0.0;
    for q in 1..y.len() {
        out[q] = m[q][..=q].iter().zip(&y[..=q]).map(|(c, v)| c * v).sum();
    }
}

/// Integrates the moment equations for `α₁..α_p` and returns them at each time
/// of the non-decreasing `t_grid`.
pub fn moment_ode(
    params: &PdmpParams,
    p: usize,
    initial: &[f64],
    t_grid: &[f64],
) -> Result<Vec<Vec<f64>>> {
    ensure!(p >= 1, Precondition, "moment order must be at least 1");
    params.require_ergodic()?;
    ensure!(
        initial.len() == p,
        Precondition,
        "need {p} initial moments, got {}",
        initial.len()
    );
    ensure!(
        t_grid.windows(2).all(|w| w[0] <= w[1]) && t_grid.first().is_none_or(|t| *t >= 0.0),
        Precondition,
        "time grid must be non-negative and non-decreasing"
    );
    let m = system(params, p);
    let mut y: Vec<f64> = std::iter::once(1.0)
        .chain(initial.iter().copied())
        .collect();
    let n = y.len();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    );
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    for &target in t_grid {
        let span = target - t;
        let steps = (span / ODE_STEP - 1e-9).ceil().max(0.0) as u64;
        if steps > 0 {
            let h = span / steps as f64;
            for _ in 0..steps {
                derivative(&m, &y, &mut k1);
                for i in 0..n {
                    tmp[i] = y[i] + 0.5 * h * k1[i];
                }
                derivative(&m, &tmp, &mut k2);
                for i in 0..n {
                    tmp[i] = y[i] + 0.5 * h * k2[i];
                }
                derivative(&m, &tmp, &mut k3);
                for i in 0..n {
                    tmp[i] = y[i] + h * k3[i];
                }
                derivative(&m, &tmp, &mut k4);
                for i in 0..n {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
        }
        t = target;
        out.push(y[1..].to_vec());
    }
    Ok(out)
}

/// Equilibrium `α₁*..α_p*` of the moment equations, solved by forward
/// substitution.
pub fn stationary_moments(params: &PdmpParams, p: usize) -> Result<Vec<f64>> {
    ensure!(p >= 1, Precondition, "moment order must be at least 1");
    params.require_ergodic()?;
    let m = system(params, p);
    let mut alpha = vec![1.0; p + 1];
    for q in 1..=p {
        let rest: f64 = (0..q).map(|k| m[q][k] * alpha[k]).sum();
        alpha[q] = -rest / m[q][q];
    }
    Ok(alpha[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fig3() -> PdmpParams {
        PdmpParams::new(0.2, 0.8, 0.2, 0.1).unwrap()
    }

    #[test]
    fn mean_examples() {
        let p = fig3();
        let s = p.stationary_mean().unwrap();
        assert_abs_diff_eq!(s, 0.2 / 0.78, epsilon = 1e-15);
        assert_abs_diff_eq!(mean_closed_form(&p, s, 3.7).unwrap(), s, epsilon = 1e-15);
        assert_abs_diff_eq!(
            mean_closed_form(&p, 1.0, 1.0).unwrap(),
            0.59728,
            epsilon = 1e-5
        );
        assert_abs_diff_eq!(mean_closed_form(&p, 1.0, 1e6).unwrap(), s, epsilon = 1e-15);
    }

    #[test]
    fn second_stationary_moment() {
        let alpha = stationary_moments(&fig3(), 2).unwrap();
        assert_abs_diff_eq!(alpha[1], 0.402 * (0.2 / 0.78) / 1.56, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha[1], 0.066075, epsilon = 1e-6);
    }

    #[test]
    fn first_moment_ode_matches_closed_form() {
        let p = fig3();
        let grid = [0.0, 0.25, 1.0, 2.0, 5.0, 10.0];
        let ode = moment_ode(&p, 1, &[1.0], &grid).unwrap();
        for (t, v) in grid.iter().zip(&ode) {
            assert_abs_diff_eq!(v[0], mean_closed_form(&p, 1.0, *t).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn ode_relaxes_to_equilibrium() {
        let p = fig3();
        let star = stationary_moments(&p, 3).unwrap();
        let end = moment_ode(&p, 3, &[1.0, 1.0, 1.0], &[40.0]).unwrap();
        for (a, b) in end[0].iter().zip(&star) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
        let fixed = moment_ode(&p, 3, &star, &[3.0]).unwrap();
        for (a, b) in fixed[0].iter().zip(&star) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn rejects_bad_requests() {
        let p = fig3();
        assert!(moment_ode(&p, 0, &[], &[1.0]).is_err());
        assert!(moment_ode(&p, 2, &[1.0], &[1.0]).is_err());
        let explosive = PdmpParams::new(0.2, 0.5, 1.0, 1.0).unwrap();
        assert!(moment_ode(&explosive, 1, &[1.0], &[1.0]).is_err());
        assert!(mean_closed_form(&explosive, 1.0, 1.0).is_err());
    }
}
