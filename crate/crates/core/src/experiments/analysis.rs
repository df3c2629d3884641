use serde::{Deserialize, Serialize};

use super::{Estimate, SweepResult};
use crate::error::{invalid, Result};
use crate::stats;

/// Least-squares fit of `log value` against `log ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub r2: f64,
    pub points: Vec<(f64, f64)>,
}

impl ScalingFit {
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn fit_scaling(eps: &[f64], values: &[f64]) -> Result<ScalingFit> {
    if eps.len() != values.len() {
        return invalid(format!("{} eps values but {} measurements", eps.len(), values.len()));
    }
    if eps.len() < 3 {
        return invalid(format!("a scaling fit needs at least 3 points, got {}", eps.len()));
    }
    if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return invalid(format!("scaling fits need positive finite values, got {v}"));
    }
    if let Some(e) = eps.iter().find(|e| !(**e > 0.0)) {
        return invalid(format!("eps must be positive, got {e}"));
    }
    let logs: Vec<(f64, f64)> = eps.iter().zip(values).map(|(e, v)| (e.ln(), v.ln())).collect();
    let (slope, intercept, slope_se, r2) =
        stats::ols(&logs).ok_or_else(|| crate::Error::InvalidArgument("eps values coincide".into()))?;
    Ok(ScalingFit {
        slope,
        intercept,
        slope_se,
        r2,
        points: eps.iter().copied().zip(values.iter().copied()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TightnessLevel {
    pub eps: f64,
    pub value: Estimate,
}

/// `Ê ε^{−d} ‖w^ε‖²_{H^s}` across levels; bounded for `s < 1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightnessReport {
    pub s: f64,
    pub levels: Vec<TightnessLevel>,
    /// Largest over smallest level value.
    pub max_min_ratio: f64,
}

/// Reads the diagnostic recorded by the sweep; only `s = 0` and the sweep's
/// `s_diag` are available.
pub fn tightness_diagnostic(sweep: &SweepResult, s: f64) -> Result<TightnessReport> {
    if !(0.0..0.5).contains(&s) {
        return invalid(format!("s must lie in [0, 1/2), got {s}"));
    }
    let pick_l2 = s == 0.0;
    if !pick_l2 && s != sweep.s_diag {
        return invalid(format!("the sweep recorded s = {}, not s = {s}", sweep.s_diag));
    }
    let mut levels = Vec::new();
    for l in &sweep.levels {
        let est = if pick_l2 { l.l2_diag } else { l.hs_diag };
        let Some(value) = est else {
            return invalid("the sweep ran without Neumann terms");
        };
        levels.push(TightnessLevel { eps: l.eps, value });
    }
    if levels.is_empty() {
        return invalid("the sweep has no completed levels");
    }
    let max = levels.iter().map(|l| l.value.mean).fold(f64::MIN, f64::max);
    let min = levels.iter().map(|l| l.value.mean).fold(f64::MAX, f64::min);
    Ok(TightnessReport {
        s,
        levels,
        max_min_ratio: max / min,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingLevel {
    pub eps: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// `ε^{−β} Var`, with `β` the variance exponent of the model.
    pub scaled_variance: f64,
    pub scaled_variance_se: f64,
    pub sd: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Moments of `(u^ε − Êu^ε, φ)` per level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakPairingStats {
    pub phi_index: usize,
    pub exponent: f64,
    pub levels: Vec<PairingLevel>,
}

impl WeakPairingStats {
    pub fn sd_fit(&self) -> Result<ScalingFit> {
        let eps: Vec<f64> = self.levels.iter().map(|l| l.eps).collect();
        let sd: Vec<f64> = self.levels.iter().map(|l| l.sd).collect();
        fit_scaling(&eps, &sd)
    }
}

/// Centred pairings of level `level` scaled by `ε^{−β/2}`.
pub fn scaled_fluctuations(sweep: &SweepResult, level: usize, phi_index: usize) -> Result<Vec<f64>> {
    let l = sweep
        .levels
        .get(level)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("no level {level}")))?;
    let p = l
        .pairings
        .get(phi_index)
        .ok_or_else(|| crate::Error::InvalidArgument(format!("no test function {phi_index}")))?;
    let m = stats::mean(p);
    let scale = l.eps.powf(-sweep.variance_exponent() / 2.0);
    Ok(p.iter().map(|x| scale * (x - m)).collect())
}

pub fn weak_pairing_stats(sweep: &SweepResult, phi_index: usize) -> Result<WeakPairingStats> {
    let beta = sweep.variance_exponent();
    let mut levels = Vec::new();
    for l in &sweep.levels {
        let p = l
            .pairings
            .get(phi_index)
            .ok_or_else(|| crate::Error::InvalidArgument(format!("no test function {phi_index}")))?;
        let variance = stats::variance(p);
        let variance_se = stats::jackknife_se(p, stats::variance);
        let scale = l.eps.powf(-beta);
        levels.push(PairingLevel {
            eps: l.eps,
            variance,
            variance_se,
            scaled_variance: scale * variance,
            scaled_variance_se: scale * variance_se,
            sd: variance.sqrt(),
            skewness: stats::skewness(p).0,
            excess_kurtosis: stats::excess_kurtosis(p).0,
        });
    }
    Ok(WeakPairingStats {
        phi_index,
        exponent: beta,
        levels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let eps = [0.125, 0.0625, 0.03125, 0.015625];
        let vals: Vec<f64> = eps.iter().map(|e: &f64| 3.0 * e.powf(1.5)).collect();
        let fit = fit_scaling(&eps, &vals).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.prefactor() - 3.0).abs() < 1e-10);
        assert!(fit.r2 > 0.999_999);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_scaling(&[0.1, 0.05], &[1.0, 2.0]).is_err());
        assert!(fit_scaling(&[0.1, 0.05, 0.02], &[1.0, 0.0, 2.0]).is_err());
        assert!(fit_scaling(&[0.1, 0.05, 0.02], &[1.0, 2.0]).is_err());
    }
}
