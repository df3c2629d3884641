//! Pointwise transforms `Φ` of a Gaussian field and their Hermite data.

use std::f64::consts::PI;
use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of Gauss–Hermite nodes.
pub const GH_NODES: usize = 200;

/// Transform applied pointwise to the Gaussian field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Transform {
    /// `Φ(s) = s`; unbounded, so usable for diagnostics only.
    Identity,
    /// `Φ(s) = scale · tanh(s)`.
    Tanh { scale: f64 },
    /// `Φ(s) = s² − 1`, the second Hermite polynomial (rank two).
    Hermite2,
}

impl Transform {
    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Transform::Identity => s,
            Transform::Tanh { scale } => scale * s.tanh(),
            Transform::Hermite2 => s * s - 1.0,
        }
    }

    /// Closed range `[lo, hi]` containing every value, if bounded.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match *self {
            Transform::Tanh { scale } => Some((-scale.abs(), scale.abs())),
            Transform::Identity | Transform::Hermite2 => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Transform::Identity => "identity",
            Transform::Tanh { .. } => "tanh",
            Transform::Hermite2 => "hermite2",
        }
    }
}

/// Physicists' Gauss–Hermite rule (weight `e^{−x²}`). Nodes start from the
/// eigenvalues of the Jacobi matrix and are polished by Newton iteration on
/// the orthonormal recurrence, which also yields the weights.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (i.max(j) as f64 / 2.0).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    guesses.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for mut z in guesses {
        let mut pp = 1.0;
        for _ in 0..20 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-14 * z.abs().max(1.0) {
                break;
            }
        }
        x.push(z);
        w.push(2.0 / (pp * pp));
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(GH_NODES))
}

/// `∫ f(s) e^{−s²/2} ds` by the 200-node rule.
pub fn gaussian_weight_integral(f: impl Fn(f64) -> f64) -> f64 {
    let (x, w) = rule();
    let r2 = 2f64.sqrt();
    r2 * x.iter().zip(w).map(|(xi, wi)| wi * f(r2 * xi)).sum::<f64>()
}

/// `E f(Z)` for a standard normal `Z`.
pub fn standard_normal_expectation(f: impl Fn(f64) -> f64) -> f64 {
    gaussian_weight_integral(f) / (2.0 * PI).sqrt()
}

/// Zeroth and first Hermite data of a transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HermiteReport {
    /// `∫ Φ(s) e^{−s²/2} ds`.
    pub integral: f64,
    /// `∫ s Φ(s) e^{−s²/2} ds`.
    pub v1_unnormalized: f64,
    /// `E{g Φ(g)}` for standard normal `g`; the convention for which
    /// `R ≈ V₁² R_g` holds in the tail.
    pub v1: f64,
    /// `∫ |Φ(s)| e^{−s²/2} ds`, the reference scale of the rank test.
    pub scale: f64,
    pub rank_ok: bool,
}

/// Hermite rank-one test: the zeroth coefficient must vanish and the first
/// must not.
pub fn hermite_coefficients(phi: &Transform) -> Result<HermiteReport> {
    let integral = gaussian_weight_integral(|s| phi.eval(s));
    let v1_unnormalized = gaussian_weight_integral(|s| s * phi.eval(s));
    let scale = gaussian_weight_integral(|s| phi.eval(s).abs());
    if !(integral.is_finite() && v1_unnormalized.is_finite() && scale.is_finite()) {
        return Err(Error::NonFinite(format!(
            "Gauss-Hermite quadrature of {} is not finite",
            phi.name()
        )));
    }
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    let rank_ok = integral.abs() < tol && v1_unnormalized.abs() > tol;
    Ok(HermiteReport {
        integral,
        v1_unnormalized,
        v1: v1_unnormalized / (2.0 * PI).sqrt(),
        scale,
        rank_ok,
    })
}

/// Normalized Hermite coefficients `a_n = E[Φ(σZ) He_n(Z)] / sqrt(n!)` for
/// `n = 0..count`.
pub fn normalized_hermite_coefficients(phi: &Transform, sigma: f64, count: usize) -> Vec<f64> {
    let (x, w) = rule();
    let r2 = 2f64.sqrt();
    let mut a = vec![0.0; count];
    for (xi, wi) in x.iter().zip(w) {
        let z = r2 * xi;
        let f = phi.eval(sigma * z) * wi;
        // orthonormal recurrence: h_{n+1} = (z h_n − sqrt(n) h_{n−1}) / sqrt(n+1)
        let mut h_prev = 0.0;
        let mut h = 1.0;
        for (n, an) in a.iter_mut().enumerate() {
            *an += f * h;
            let next = (z * h - (n as f64).sqrt() * h_prev) / ((n + 1) as f64).sqrt();
            h_prev = h;
            h = next;
        }
    }
    let norm = PI.sqrt();
    a.iter_mut().for_each(|v| *v /= norm);
    a
}

/// `Cov(Φ(g_x), Φ(g_y))` for jointly Gaussian `g` with common variance
/// `σ²` and correlation `rho`, via the Mehler expansion `Σ_{n≥1} a_n² ρ^n`.
pub fn transformed_covariance(coeffs: &[f64], rho: f64) -> f64 {
    let mut acc = 0.0;
    let mut p = rho;
    for a in &coeffs[1..] {
        acc += a * a * p;
        p *= rho;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_low_moments() {
        let (x, w) = gauss_hermite(GH_NODES);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-12);
        assert!((m2 - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn identity_has_unit_normalized_v1() {
        let r = hermite_coefficients(&Transform::Identity).unwrap();
        assert!(r.integral.abs() < 1e-12);
        assert!((r.v1_unnormalized - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!((r.v1 - 1.0).abs() < 1e-12);
        assert!(r.rank_ok);
    }

    #[test]
    fn second_hermite_fails_the_gate() {
        let r = hermite_coefficients(&Transform::Hermite2).unwrap();
        assert!(r.integral.abs() < 1e-10);
        assert!(r.v1_unnormalized.abs() < 1e-10);
        assert!(!r.rank_ok);
    }

    #[test]
    fn tanh_passes_the_gate() {
        let r = hermite_coefficients(&Transform::Tanh { scale: 1.0 }).unwrap();
        assert!(r.rank_ok);
        // Stein: E[g tanh g] = E[sech² g]
        let stein = standard_normal_expectation(|s| 1.0 / s.cosh().powi(2));
        assert!((r.v1 - stein).abs() < 1e-12);
        assert!(r.v1 > 0.6 && r.v1 < 0.61);
    }

    #[test]
    fn mehler_series_recovers_identity_covariance() {
        let a = normalized_hermite_coefficients(&Transform::Identity, 1.0, 20);
        for rho in [0.0, 0.3, 0.9] {
            assert!((transformed_covariance(&a, rho) - rho).abs() < 1e-12);
        }
        let a = normalized_hermite_coefficients(&Transform::Hermite2, 1.0, 20);
        // Cov(He2(X), He2(Y)) = 2 ρ²
        assert!((transformed_covariance(&a, 0.5) - 0.5).abs() < 1e-10);
    }
}
