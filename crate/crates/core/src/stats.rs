//! Small statistical toolbox shared by the Monte-Carlo experiments.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Number of standard errors used by every pass/fail comparison.
pub const SE_MULTIPLIER: f64 = 3.0;

/// Streaming mean/variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanAccumulator {
    count: u64,
    mean: f64,
    m2: f64,
}

impl MeanAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &MeanAccumulator) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero with fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        (self.variance() / self.count as f64).sqrt()
    }

    pub fn summary(&self) -> Summary {
        Summary {
            mean: self.mean(),
            std_error: self.std_error(),
            count: self.count,
        }
    }
}

impl FromIterator<f64> for MeanAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanAccumulator::new();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
}

impl Summary {
    /// `|mean - target| <= k * se`, with an absolute floor for exact data.
    pub fn agrees_with(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1.0)
    }
}

/// Median of a sample (average of the two central values for even sizes).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m]
    } else {
        0.5 * (sorted[m - 1] + sorted[m])
    }
}

/// Ordinary or weighted least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_std_error: f64,
    /// Half-width of the slope confidence interval.
    pub slope_half_width: f64,
}

impl LinearFit {
    pub fn slope_interval(&self) -> (f64, f64) {
        (
            self.slope - self.slope_half_width,
            self.slope + self.slope_half_width,
        )
    }
}

/// Ordinary least squares with a two-sided Student-t interval at `level`.
///
/// Returns `None` with fewer than three points or a degenerate design.
pub fn linear_fit(xs: &[f64], ys: &[f64], level: f64) -> Option<LinearFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let sigma2 = rss / (nf - 2.0);
    let slope_std_error = (sigma2 / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .expect("valid degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0);
    Some(LinearFit {
        slope,
        intercept,
        slope_std_error,
        slope_half_width: t * slope_std_error,
    })
}

/// Weighted least squares with known per-point standard deviations.
///
/// The slope standard error comes from the supplied `sds` (not from the
/// residuals); the interval is `k` standard errors wide on each side.
pub fn weighted_linear_fit(xs: &[f64], ys: &[f64], sds: &[f64], k: f64) -> Option<LinearFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n || sds.len() != n || sds.iter().any(|s| s.is_nan() || *s <= 0.0) {
        return None;
    }
    let ws: Vec<f64> = sds.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = ws.iter().sum();
    let mx = ws.iter().zip(xs).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = ws.iter().zip(ys).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = ws.iter().zip(xs).map(|(w, x)| w * (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = ws
        .iter()
        .zip(xs.iter().zip(ys))
        .map(|(w, (x, y))| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let slope_std_error = (1.0 / sxx).sqrt();
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        slope_std_error,
        slope_half_width: k * slope_std_error,
    })
}

/// W₁ distance between two empirical laws with the same number of atoms:
/// average absolute difference of the sorted samples.
pub fn wasserstein1_sorted(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(
        a.len(),
        b.len(),
        "sorted-sample W1 needs equal sample counts"
    );
    assert!(!a.is_empty(), "W1 of empty samples");
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    sa.iter().zip(&sb).map(|(x, y)| (x - y).abs()).sum::<f64>() / sa.len() as f64
}

/// Two-sample Kolmogorov-Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    assert!(!a.is_empty() && !b.is_empty());
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (n, m) = (sa.len(), sb.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = sa[i].min(sb[j]);
        while i < n && sa[i] <= x {
            i += 1;
        }
        while j < m && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let en = ((n * m) as f64 / (n + m) as f64).sqrt();
    let lambda = (en + 0.12 + 0.11 / en) * d;
    KsTest {
        statistic: d,
        p_value: kolmogorov_survival(lambda),
    }
}

/// `P(K > lambda)` for the Kolmogorov distribution.
fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=200 {
        let term = sign * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-14 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream_rng, uniform};
    use approx::assert_abs_diff_eq;

    #[test]
    fn welford_matches_two_pass() {
        let xs = [1.0, 4.0, 2.5, -3.0, 8.25, 0.0];
        let acc: MeanAccumulator = xs.iter().copied().collect();
        let mean = xs.iter().sum::<f64>() / 6.0;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 5.0;
        assert_abs_diff_eq!(acc.mean(), mean, epsilon = 1e-12);
        assert_abs_diff_eq!(acc.variance(), var, epsilon = 1e-12);

        let mut left: MeanAccumulator = xs[..2].iter().copied().collect();
        let right: MeanAccumulator = xs[2..].iter().copied().collect();
        left.merge(&right);
        assert_abs_diff_eq!(left.mean(), mean, epsilon = 1e-12);
        assert_abs_diff_eq!(left.variance(), var, epsilon = 1e-12);
    }

    #[test]
    fn median_odd_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn exact_line_is_recovered() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_fit(&xs, &ys, 0.95).unwrap();
        assert_abs_diff_eq!(fit.slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(fit.intercept, 2.0, epsilon = 1e-12);
        assert!(fit.slope_half_width < 1e-10);
        let wfit = weighted_linear_fit(&xs, &ys, &[1.0, 2.0, 1.0, 0.5], 3.0).unwrap();
        assert_abs_diff_eq!(wfit.slope, -0.5, epsilon = 1e-12);
        assert!(linear_fit(&xs[..2], &ys[..2], 0.95).is_none());
    }

    #[test]
    fn w1_of_shifted_sample() {
        let a = [0.0, 1.0, 2.0];
        let b = [2.5, 0.5, 1.5];
        assert_abs_diff_eq!(wasserstein1_sorted(&a, &b), 0.5, epsilon = 1e-15);
        assert_eq!(wasserstein1_sorted(&a, &a), 0.0);
    }

    #[test]
    fn ks_detects_shift_and_accepts_same_law() {
        let mut rng = stream_rng(3, 0);
        let a: Vec<f64> = (0..4000).map(|_| uniform(&mut rng)).collect();
        let b: Vec<f64> = (0..4000).map(|_| uniform(&mut rng)).collect();
        let c: Vec<f64> = (0..4000).map(|_| uniform(&mut rng) + 0.1).collect();
        assert!(ks_two_sample(&a, &b).p_value > 0.001);
        assert!(ks_two_sample(&a, &c).p_value < 1e-6);
    }
}
