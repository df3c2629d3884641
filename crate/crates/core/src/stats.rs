//! Small statistics toolkit: moments, regression on logs, jackknife,
//! variance-ratio intervals, and the two-sample Kolmogorov–Smirnov test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, FisherSnedecor};

use crate::exec::pairwise_sum;

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Unbiased sample variance (divisor `n − 1`).
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let sq: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    pairwise_sum(&sq) / (xs.len() as f64 - 1.0)
}

/// Sample covariance (divisor `n − 1`).
pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let p: Vec<f64> = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).collect();
    pairwise_sum(&p) / (xs.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn standard_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Moment skewness `m₃ / m₂^{3/2}` and its large-sample SE `sqrt(6/n)`.
pub fn skewness(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    (m3 / m2.powf(1.5), (6.0 / n).sqrt())
}

/// Excess kurtosis `m₄ / m₂² − 3` and its large-sample SE `sqrt(24/n)`.
pub fn excess_kurtosis(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    (m4 / (m2 * m2) - 3.0, (24.0 / n).sqrt())
}

/// Jackknife standard error of a statistic.
pub fn jackknife_se(xs: &[f64], stat: impl Fn(&[f64]) -> f64) -> f64 {
    let n = xs.len();
    let mut buf = Vec::with_capacity(n - 1);
    let reps: Vec<f64> = (0..n)
        .map(|k| {
            buf.clear();
            buf.extend(xs.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| *v));
            stat(&buf)
        })
        .collect();
    let m = mean(&reps);
    let nf = n as f64;
    ((nf - 1.0) / nf * reps.iter().map(|r| (r - m).powi(2)).sum::<f64>()).sqrt()
}

/// Least squares `y = slope·x + intercept`; returns
/// `(slope, intercept, slope_stderr, r2)`, or `None` for fewer than two
/// points or no spread in `x`.
pub fn ols(points: &[(f64, f64)]) -> Option<(f64, f64, f64, f64)> {
    let n = points.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = points.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if n > 2 { (ssr / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    let r2 = if syy > 0.0 { (1.0 - ssr / syy).clamp(0.0, 1.0) } else { 1.0 };
    Some((slope, intercept, stderr, r2))
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail `Q(λ) = 2 Σ (−1)^{j−1} e^{−2 j² λ²}`.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 1e-3 {
        return 1.0;
    }
    let a2 = -2.0 * lambda * lambda;
    let mut sum = 0.0;
    let mut fac = 2.0;
    let mut prev = 0.0f64;
    for j in 1..=200 {
        let term = fac * (a2 * (j * j) as f64).exp();
        sum += term;
        if term.abs() <= 1e-12 * prev || term.abs() <= 1e-300 {
            return sum.clamp(0.0, 1.0);
        }
        fac = -fac;
        prev = term.abs();
    }
    1.0
}

pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsResult {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(|p, q| p.total_cmp(q));
    y.sort_by(|p, q| p.total_cmp(q));
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < x.len() && j < y.len() {
        let (v1, v2) = (x[i], y[j]);
        if v1 <= v2 {
            while i < x.len() && x[i] == v1 {
                i += 1;
            }
        }
        if v2 <= v1 {
            while j < y.len() && y[j] == v2 {
                j += 1;
            }
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let ne = (n1 * n2 / (n1 + n2)).sqrt();
    KsResult {
        statistic: d,
        p_value: kolmogorov_q((ne + 0.12 + 0.11 / ne) * d),
    }
}

/// Ratio `s₁² / s₂²` of two sample variances with its equal-tailed
/// confidence interval from the F distribution.
pub fn variance_ratio_ci(var1: f64, n1: usize, var2: f64, n2: usize, level: f64) -> (f64, f64, f64) {
    let ratio = var1 / var2;
    let f = FisherSnedecor::new((n1 - 1) as f64, (n2 - 1) as f64).expect("degrees of freedom are positive");
    let a = (1.0 - level) / 2.0;
    (ratio, ratio / f.inverse_cdf(1.0 - a), ratio / f.inverse_cdf(a))
}

/// Ratio `s² / σ²` against a known variance, with the chi-square interval.
pub fn variance_ratio_known(sample_var: f64, n: usize, reference: f64, level: f64) -> (f64, f64, f64) {
    let ratio = sample_var / reference;
    let dof = (n - 1) as f64;
    let c = ChiSquared::new(dof).expect("degrees of freedom are positive");
    let a = (1.0 - level) / 2.0;
    (ratio, ratio * dof / c.inverse_cdf(1.0 - a), ratio * dof / c.inverse_cdf(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn normals(n: usize, sd: f64, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = Normal::new(0.0, sd).unwrap();
        (0..n).map(|_| d.sample(&mut rng)).collect()
    }

    #[test]
    fn ols_exact_line() {
        let pts: Vec<_> = (1..6).map(|k| ((k as f64).ln(), 2.0 * (k as f64).ln() - 1.0)).collect();
        let (s, i, se, r2) = ols(&pts).unwrap();
        assert!((s - 2.0).abs() < 1e-12 && (i + 1.0).abs() < 1e-12);
        assert!(se < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!(ols(&pts[..1]).is_none());
    }

    #[test]
    fn ks_power_and_identity() {
        let a = normals(400, 1.0, 1);
        let b = normals(400, 2.0, 2);
        assert!(ks_two_sample(&a, &b).p_value < 1e-6);
        let r = ks_two_sample(&a, &a);
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn kolmogorov_tail_known_values() {
        // Q(1.36) is the classic 5% point
        assert!((kolmogorov_q(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_q(1.628) - 0.01).abs() < 1e-3);
    }

    #[test]
    fn variance_intervals_contain_ratio() {
        let (r, lo, hi) = variance_ratio_ci(2.0, 100, 1.0, 200, 0.95);
        assert!(lo < r && r < hi && (r - 2.0).abs() < 1e-15);
        let (r, lo, hi) = variance_ratio_known(1.1, 400, 1.0, 0.95);
        assert!(lo < r && r < hi);
        assert!(hi - lo < 0.35);
    }

    #[test]
    fn jackknife_of_mean_is_standard_error() {
        let xs = normals(50, 1.0, 3);
        let a = jackknife_se(&xs, mean);
        assert!((a - standard_error(&xs)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_moments_near_zero() {
        let xs = normals(20000, 1.0, 4);
        let (s, se) = skewness(&xs);
        assert!(s.abs() < 4.0 * se);
        let (k, se) = excess_kurtosis(&xs);
        assert!(k.abs() < 4.0 * se);
    }
}
