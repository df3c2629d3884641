//! Statistical validators for lattice realizations: empirical
//! autocorrelation, heavy-tail check, and fourth-order moments.
//!
//! Standard errors are computed across independent realizations, so the
//! spatial correlation inside one realization is accounted for.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{rng_from_seed, LatticeField};
use crate::error::{invalid, Result};
use crate::fft::NdFft;

/// Empirical autocorrelation at one lag vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagEstimate {
    /// Lag in lattice points.
    pub lag: Vec<i64>,
    /// Euclidean length in correlation units (`|lag| · spacing`).
    pub distance: f64,
    pub value: f64,
    pub se: f64,
}

/// Shell average over lags whose length rounds to the same number of points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialBin {
    /// Mean lag length in correlation units.
    pub distance: f64,
    pub value: f64,
    pub se: f64,
    pub lags: usize,
}

/// Correlation constants, analytic or estimated.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    /// `R(0) = Var ν`.
    pub r0: f64,
    pub r0_se: Option<f64>,
    /// `∫R` (short range).
    pub sigma2: Option<f64>,
    pub sigma2_se: Option<f64>,
    /// Hermite coefficient (long range).
    pub v1: Option<f64>,
    /// Tail constant `κ = V₁² κ_g` (long range).
    pub kappa: Option<f64>,
    pub alpha: Option<f64>,
    pub spacing: f64,
    /// Largest lag per axis, in lattice points.
    pub max_lag: usize,
    pub realizations: usize,
    pub lags: Vec<LagEstimate>,
    pub radial: Vec<RadialBin>,
}

/// Streaming estimator of `R̂(x) = mean_y ν(y + x) ν(y)` for a known zero
/// mean, with realization-level standard errors.
pub struct AutocorrelationAccumulator {
    dim: usize,
    side: usize,
    spacing: f64,
    max_lag: usize,
    fft: NdFft,
    /// Lag vectors in `[−max_lag, max_lag]^d` and their radial bin.
    lags: Vec<Vec<i64>>,
    bin_of: Vec<usize>,
    bins: usize,
    /// Indices of lags inside the closed ball of radius `max_lag`.
    ball: Vec<usize>,
    sum: Vec<f64>,
    sumsq: Vec<f64>,
    bin_sum: Vec<f64>,
    bin_sumsq: Vec<f64>,
    bin_count: Vec<usize>,
    bin_dist: Vec<f64>,
    s2_sum: f64,
    s2_sumsq: f64,
    count: usize,
}

impl std::fmt::Debug for AutocorrelationAccumulator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AutocorrelationAccumulator")
            .field("dim", &self.dim)
            .field("side", &self.side)
            .field("max_lag", &self.max_lag)
            .field("count", &self.count)
            .finish()
    }
}

impl AutocorrelationAccumulator {
    pub fn new(dim: usize, side: usize, spacing: f64, max_lag: usize) -> Result<Self> {
        if max_lag == 0 || 4 * max_lag > side {
            return invalid(format!(
                "max_lag = {max_lag} must be positive and at most a quarter of the lattice side {side}"
            ));
        }
        let width = 2 * max_lag + 1;
        let nlag = width.pow(dim as u32);
        let mut lags = Vec::with_capacity(nlag);
        let mut bin_of = Vec::with_capacity(nlag);
        let mut ball = Vec::new();
        let bins = ((dim as f64).sqrt() * max_lag as f64).round() as usize + 1;
        let mut bin_count = vec![0usize; bins];
        let mut bin_dist = vec![0.0; bins];
        for idx in 0..nlag {
            let mut rem = idx;
            let mut lag = vec![0i64; dim];
            for a in (0..dim).rev() {
                lag[a] = (rem % width) as i64 - max_lag as i64;
                rem /= width;
            }
            let len = (lag.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
            let b = len.round() as usize;
            if len <= max_lag as f64 + 1e-12 {
                ball.push(idx);
            }
            bin_count[b] += 1;
            bin_dist[b] += len * spacing;
            bin_of.push(b);
            lags.push(lag);
        }
        for (d, c) in bin_dist.iter_mut().zip(&bin_count) {
            if *c > 0 {
                *d /= *c as f64;
            }
        }
        Ok(AutocorrelationAccumulator {
            dim,
            side,
            spacing,
            max_lag,
            fft: NdFft::new(&vec![2 * side; dim]),
            lags,
            bin_of,
            bins,
            ball,
            sum: vec![0.0; nlag],
            sumsq: vec![0.0; nlag],
            bin_sum: vec![0.0; bins],
            bin_sumsq: vec![0.0; bins],
            bin_count,
            bin_dist,
            s2_sum: 0.0,
            s2_sumsq: 0.0,
            count: 0,
        })
    }

    /// Adds one realization (row-major, `side^d` values).
    pub fn push(&mut self, values: &[f64]) -> Result<()> {
        let dim = self.dim;
        let side = self.side;
        if values.len() != side.pow(dim as u32) {
            return invalid("realization does not match the lattice");
        }
        let big = 2 * side;
        let mut buf = vec![Complex64::default(); big.pow(dim as u32)];
        for (idx, v) in values.iter().enumerate() {
            let mut rem = idx;
            let mut flat = 0;
            let mut mul = 1;
            for _ in 0..dim {
                flat += (rem % side) * mul;
                rem /= side;
                mul *= big;
            }
            buf[flat] = Complex64::new(*v, 0.0);
        }
        self.fft.forward(&mut buf);
        for z in buf.iter_mut() {
            *z = Complex64::new(z.norm_sqr(), 0.0);
        }
        self.fft.inverse(&mut buf);
        let norm = buf.len() as f64;
        let mut per_bin = vec![0.0; self.bins];
        let mut s2 = 0.0;
        let mut vals = vec![0.0; self.lags.len()];
        for (li, lag) in self.lags.iter().enumerate() {
            let mut flat = 0;
            let mut count = 1.0;
            for l in lag {
                let k = if *l >= 0 { *l as usize } else { big - (-*l) as usize };
                flat = flat * big + k;
                count *= (side as i64 - l.abs()) as f64;
            }
            let r = buf[flat].re / norm / count;
            vals[li] = r;
            self.sum[li] += r;
            self.sumsq[li] += r * r;
            per_bin[self.bin_of[li]] += r;
        }
        for &li in &self.ball {
            s2 += vals[li];
        }
        s2 *= self.spacing.powi(dim as i32);
        for b in 0..self.bins {
            if self.bin_count[b] > 0 {
                let m = per_bin[b] / self.bin_count[b] as f64;
                self.bin_sum[b] += m;
                self.bin_sumsq[b] += m * m;
            }
        }
        self.s2_sum += s2;
        self.s2_sumsq += s2 * s2;
        self.count += 1;
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    fn mean_se(sum: f64, sumsq: f64, n: usize) -> (f64, f64) {
        let nf = n as f64;
        let mean = sum / nf;
        let var = ((sumsq - nf * mean * mean) / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt())
    }

    pub fn finish(&self) -> Result<CorrelationSpec> {
        if self.count < 2 {
            return invalid("need at least two realizations for standard errors");
        }
        let n = self.count;
        let lags: Vec<LagEstimate> = self
            .lags
            .iter()
            .enumerate()
            .map(|(li, lag)| {
                let (value, se) = Self::mean_se(self.sum[li], self.sumsq[li], n);
                let len = (lag.iter().map(|v| (v * v) as f64).sum::<f64>()).sqrt();
                LagEstimate {
                    lag: lag.clone(),
                    distance: len * self.spacing,
                    value,
                    se,
                }
            })
            .collect();
        let radial = (0..self.bins)
            .filter(|b| self.bin_count[*b] > 0)
            .map(|b| {
                let (value, se) = Self::mean_se(self.bin_sum[b], self.bin_sumsq[b], n);
                RadialBin {
                    distance: self.bin_dist[b],
                    value,
                    se,
                    lags: self.bin_count[b],
                }
            })
            .collect();
        let zero = lags.iter().position(|l| l.lag.iter().all(|v| *v == 0)).unwrap_or(0);
        let (s2, s2_se) = Self::mean_se(self.s2_sum, self.s2_sumsq, n);
        Ok(CorrelationSpec {
            r0: lags[zero].value,
            r0_se: Some(lags[zero].se),
            sigma2: Some(s2),
            sigma2_se: Some(s2_se),
            v1: None,
            kappa: None,
            alpha: None,
            spacing: self.spacing,
            max_lag: self.max_lag,
            realizations: n,
            lags,
            radial,
        })
    }

    pub fn max_lag(&self) -> usize {
        self.max_lag
    }
}

/// Estimates `R̂` from at least 30 realizations on a common lattice.
/// `sigma2` is the lattice quadrature of `R̂` over the ball of radius
/// `max_lag` points.
pub fn empirical_autocorrelation(realizations: &[LatticeField], max_lag: usize) -> Result<CorrelationSpec> {
    if realizations.len() < 30 {
        return invalid(format!("need at least 30 realizations, got {}", realizations.len()));
    }
    let first = &realizations[0];
    if realizations
        .iter()
        .any(|r| r.dim != first.dim || r.side != first.side || r.spacing != first.spacing)
    {
        return invalid("realizations must share one lattice");
    }
    let mut acc = AutocorrelationAccumulator::new(first.dim, first.side, first.spacing, max_lag)?;
    for r in realizations {
        acc.push(&r.values)?;
    }
    acc.finish()
}

/// One radial shell of the tail check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailBin {
    pub distance: f64,
    pub r_hat: f64,
    pub se: f64,
    /// Shell average of `V₁² R_g`.
    pub leading: f64,
    /// Shell average of `R_g²`.
    pub r_g_sq: f64,
    /// `(|R̂ − V₁²R_g| − C R_g²) / SE`.
    pub excess_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub t_min: f64,
    pub r_max: f64,
    /// Weighted least-squares fit of `R̂ − V₁²R_g = C R_g²`.
    pub fitted_c: f64,
    /// Largest `|R̂ − V₁²R_g − C R_g²| / SE` over the shells.
    pub max_violation_se: f64,
    /// Log-log slope of `R̂` against distance over the positive shells.
    pub tail_slope: f64,
    pub tail_slope_se: f64,
    pub bins: Vec<TailBin>,
    pub violation_threshold_se: f64,
    pub pass: bool,
}

/// Shells with at most this standardized deviation from the fitted
/// `V₁²R_g + C R_g²` pass.
pub const TAIL_VIOLATION_SE: f64 = 4.0;

/// Checks `|R̂ − V₁² R_g| ≤ C R_g²` for `t_min ≤ |x| ≤ max_lag`.
/// `r_g` is the Gaussian covariance as a function of the lag vector in
/// correlation units.
pub fn tail_check(empirical: &CorrelationSpec, r_g: &dyn Fn(&[f64]) -> f64, v1: f64, t_min: f64) -> TailReport {
    let spacing = empirical.spacing;
    let r_max = empirical.max_lag as f64 * spacing;
    let mut bins = Vec::new();
    // rebuild shell averages of the model on exactly the lags in each shell
    let mut by_bin: std::collections::BTreeMap<usize, (f64, f64, usize)> = Default::default();
    for l in &empirical.lags {
        let b = (l.distance / spacing).round() as usize;
        let z: Vec<f64> = l.lag.iter().map(|v| *v as f64 * spacing).collect();
        let rg = r_g(&z);
        let e = by_bin.entry(b).or_insert((0.0, 0.0, 0));
        e.0 += rg;
        e.1 += rg * rg;
        e.2 += 1;
    }
    for rb in &empirical.radial {
        if rb.distance < t_min || rb.distance > r_max {
            continue;
        }
        let b = (rb.distance / spacing).round() as usize;
        let (sg, sg2, c) = by_bin[&b];
        bins.push(TailBin {
            distance: rb.distance,
            r_hat: rb.value,
            se: rb.se,
            leading: v1 * v1 * sg / c as f64,
            r_g_sq: sg2 / c as f64,
            excess_se: 0.0,
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for b in &bins {
        let w = 1.0 / (b.se * b.se).max(1e-300);
        num += w * (b.r_hat - b.leading) * b.r_g_sq;
        den += w * b.r_g_sq * b.r_g_sq;
    }
    let fitted_c = if den > 0.0 { num / den } else { 0.0 };
    let mut max_violation_se = 0.0f64;
    for b in bins.iter_mut() {
        let resid = b.r_hat - b.leading - fitted_c * b.r_g_sq;
        let z = resid.abs() / b.se.max(1e-300);
        b.excess_se = ((b.r_hat - b.leading).abs() - fitted_c.abs() * b.r_g_sq) / b.se.max(1e-300);
        max_violation_se = max_violation_se.max(z);
    }
    let pts: Vec<(f64, f64)> = bins
        .iter()
        .filter(|b| b.r_hat > 0.0)
        .map(|b| (b.distance.ln(), b.r_hat.ln()))
        .collect();
    let (tail_slope, tail_slope_se) = crate::stats::ols(&pts).map(|f| (f.0, f.2)).unwrap_or((f64::NAN, f64::NAN));
    TailReport {
        t_min,
        r_max,
        fitted_c,
        max_violation_se,
        tail_slope,
        tail_slope_se,
        bins,
        violation_threshold_se: TAIL_VIOLATION_SE,
        pass: max_violation_se <= TAIL_VIOLATION_SE,
    }
}

/// Random point quadruples: the first point at the origin, the others
/// uniform in `[−spread, spread]^d`.
pub fn sample_quadruples(dim: usize, count: usize, spread: i64, seed: u64) -> Vec<[Vec<i64>; 4]> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let mut pt = || -> Vec<i64> { (0..dim).map(|_| rng.random_range(-spread..=spread)).collect() };
            [vec![0; dim], pt(), pt(), pt()]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrupleResult {
    pub points: [Vec<i64>; 4],
    /// `Ψ̂ = Ê ν₁ν₂ν₃ν₄ − Ê ν₁ν₂ · Ê ν₃ν₄`.
    pub psi: f64,
    pub se: f64,
    /// Gaussian prediction `R₁₃R₂₄ + R₁₄R₂₃`.
    pub isserlis: f64,
    pub isserlis_z: f64,
    /// `C Σ_{U^*} ϑϑ`.
    pub bound: f64,
    /// `|Ψ̂ − R₁₃R₂₄ − R₁₄R₂₃| − 3 SE > bound`.
    pub bound_violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourthMomentReport {
    pub quadruples: Vec<QuadrupleResult>,
    pub realizations: usize,
    pub max_abs_isserlis_z: f64,
    /// Quadruples whose estimate is more than 3 SE from the Gaussian value.
    pub isserlis_exceedances: usize,
    pub bound_violations: usize,
}

/// The twelve pairs of distinct index pairs that do not partition
/// `{0, 1, 2, 3}`.
fn incomplete_pairings() -> Vec<((usize, usize), (usize, usize))> {
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let mut out = Vec::new();
    for i in 0..pairs.len() {
        for j in (i + 1)..pairs.len() {
            let (a, b) = (pairs[i], pairs[j]);
            let disjoint = a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1;
            if !disjoint {
                out.push((a, b));
            }
        }
    }
    out
}

/// Monte Carlo fourth moments averaged over realizations and all
/// translations that keep the quadruple inside the lattice.
///
/// `r` is the model autocorrelation used for the Gaussian prediction and
/// `theta`, scaled by `c`, is the majorant of the non-Gaussian remainder.
/// Both take lag vectors in correlation units.
pub fn fourth_moment_check(
    realizations: &[LatticeField],
    quadruples: &[[Vec<i64>; 4]],
    r: &dyn Fn(&[f64]) -> f64,
    theta: &dyn Fn(&[f64]) -> f64,
    c: f64,
) -> Result<FourthMomentReport> {
    if realizations.len() < 200 {
        return invalid(format!("need at least 200 realizations, got {}", realizations.len()));
    }
    let first = &realizations[0];
    let (dim, side, spacing) = (first.dim, first.side as i64, first.spacing);
    let nr = realizations.len();
    let incomplete = incomplete_pairings();
    let mut results = Vec::with_capacity(quadruples.len());
    for quad in quadruples {
        let lo: Vec<i64> = (0..dim).map(|a| quad.iter().map(|p| p[a]).min().unwrap()).collect();
        let hi: Vec<i64> = (0..dim).map(|a| quad.iter().map(|p| p[a]).max().unwrap()).collect();
        let span: Vec<i64> = (0..dim).map(|a| side - (hi[a] - lo[a])).collect();
        if span.iter().any(|s| *s <= 0) {
            return invalid("quadruple does not fit in the lattice");
        }
        let positions: usize = span.iter().map(|s| *s as usize).product();
        let flat_of = |base: &[i64], p: &[i64]| -> usize {
            (0..dim).fold(0usize, |acc, a| acc * side as usize + (base[a] + p[a] - lo[a]) as usize)
        };
        let mut a_r = Vec::with_capacity(nr);
        let mut b_r = Vec::with_capacity(nr);
        let mut c_r = Vec::with_capacity(nr);
        for real in realizations {
            let v = &real.values;
            let (mut sa, mut sb, mut sc) = (0.0, 0.0, 0.0);
            let mut base = vec![0i64; dim];
            for pos in 0..positions {
                let mut rem = pos;
                for a in (0..dim).rev() {
                    base[a] = (rem % span[a] as usize) as i64;
                    rem /= span[a] as usize;
                }
                let x: [f64; 4] = std::array::from_fn(|k| v[flat_of(&base, &quad[k])]);
                sa += x[0] * x[1] * x[2] * x[3];
                sb += x[0] * x[1];
                sc += x[2] * x[3];
            }
            let pf = positions as f64;
            a_r.push(sa / pf);
            b_r.push(sb / pf);
            c_r.push(sc / pf);
        }
        let psi_of = |a: f64, b: f64, c: f64| a - b * c;
        let (ta, tb, tc): (f64, f64, f64) = (a_r.iter().sum(), b_r.iter().sum(), c_r.iter().sum());
        let nf = nr as f64;
        let psi = psi_of(ta / nf, tb / nf, tc / nf);
        let jack: Vec<f64> = (0..nr)
            .map(|k| psi_of((ta - a_r[k]) / (nf - 1.0), (tb - b_r[k]) / (nf - 1.0), (tc - c_r[k]) / (nf - 1.0)))
            .collect();
        let jm = jack.iter().sum::<f64>() / nf;
        let se = ((nf - 1.0) / nf * jack.iter().map(|j| (j - jm).powi(2)).sum::<f64>()).sqrt();
        let lag = |i: usize, j: usize| -> Vec<f64> {
            (0..dim).map(|a| (quad[i][a] - quad[j][a]) as f64 * spacing).collect()
        };
        let isserlis = r(&lag(0, 2)) * r(&lag(1, 3)) + r(&lag(0, 3)) * r(&lag(1, 2));
        let bound = c * incomplete
            .iter()
            .map(|((a, b), (p, q))| theta(&lag(*a, *b)) * theta(&lag(*p, *q)))
            .sum::<f64>();
        let isserlis_z = if se > 0.0 { (psi - isserlis) / se } else { 0.0 };
        results.push(QuadrupleResult {
            points: quad.clone(),
            psi,
            se,
            isserlis,
            isserlis_z,
            bound,
            bound_violated: (psi - isserlis).abs() - 3.0 * se > bound,
        });
    }
    Ok(FourthMomentReport {
        realizations: nr,
        max_abs_isserlis_z: results.iter().map(|q| q.isserlis_z.abs()).fold(0.0, f64::max),
        isserlis_exceedances: results.iter().filter(|q| q.isserlis_z.abs() > 3.0).count(),
        bound_violations: results.iter().filter(|q| q.bound_violated).count(),
        quadruples: results,
    })
}
