//! Limiting Gaussian laws of the scaled fluctuations: full-field and
//! projection samplers, covariance quadrature, and distribution comparison.
//!
//! The limit is `X = G(u Ẇ)` with `G` the homogenized solution operator and
//! `Ẇ` either white noise of intensity `σ²` or a field with covariance
//! `κ |x − y|^{−α}`. Since `G` is self-adjoint, `(X, φ) = (u Ẇ, Gφ)`, which
//! lets projections be sampled without solves.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Execution};
use crate::fft::NdFft;
use crate::fields::CirculantEmbedding;
use crate::fields::{derive_seed, rng_from_seed};
use crate::grid::{Grid, GridFunction};
use crate::operator::{homogenized_operator, DirichletOperator};
use crate::solver::{solve_with, SolverOptions};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitKind {
    White { sigma: f64 },
    LongRange { kappa: f64, alpha: f64 },
}

/// A limit law together with the homogenized problem it is driven by.
#[derive(Debug, Clone)]
pub struct LimitLawSpec {
    pub kind: LimitKind,
    pub u: GridFunction,
    operator: DirichletOperator,
    pub solver: SolverOptions,
}

impl LimitLawSpec {
    pub fn new(kind: LimitKind, a_bar: &[f64], q_bar: f64, u: GridFunction) -> Result<Self> {
        let dim = u.grid.dim;
        match kind {
            LimitKind::White { sigma } => {
                if !(sigma > 0.0 && sigma.is_finite()) {
                    return invalid(format!("sigma must be positive, got {sigma}"));
                }
            }
            LimitKind::LongRange { kappa, alpha } => {
                if !(kappa > 0.0 && kappa.is_finite()) {
                    return invalid(format!("kappa must be positive, got {kappa}"));
                }
                if !(alpha > 0.0 && alpha < dim as f64) {
                    return invalid(format!("alpha must lie in (0, {dim}), got {alpha}"));
                }
            }
        }
        let operator = homogenized_operator(a_bar, q_bar, &u.grid)?;
        Ok(LimitLawSpec {
            kind,
            u,
            operator,
            solver: SolverOptions::default(),
        })
    }

    pub fn grid(&self) -> Grid {
        self.u.grid
    }

    /// Homogenized solve `G f`.
    pub fn green(&self, f: &GridFunction) -> Result<GridFunction> {
        solve_with(&self.operator, f, None, &self.solver).map(|(x, _)| x)
    }

    /// `u · Gφ` for each test function.
    pub fn adjoint_weights(&self, phis: &[GridFunction]) -> Result<Vec<GridFunction>> {
        phis.iter().map(|phi| Ok(self.u.mul(&self.green(phi)?))).collect()
    }
}

/// Mean of `|x − y|^{−α}` over `x, y` drawn uniformly from the unit cube,
/// i.e. `∫_{[−1,1]^d} |z|^{−α} Π(1 − |z_k|) dz`.
///
/// The positive orthant splits into `d` congruent pieces by the largest
/// coordinate; on each the radial integral is exact and the remaining cube
/// face is integrated by tensor Gauss–Legendre.
pub fn cell_average_kernel(dim: usize, alpha: f64) -> Result<f64> {
    if !(1..=3).contains(&dim) {
        return invalid(format!("dimension must be 1, 2 or 3, got {dim}"));
    }
    if !(alpha >= 0.0 && alpha < dim as f64) {
        return invalid(format!("alpha must lie in [0, {dim}), got {alpha}"));
    }
    let d = dim as f64;
    let radial = |omega: &[f64], big_r: f64| -> f64 {
        // elementary symmetric polynomials of the direction
        let mut e = vec![0.0; dim + 1];
        e[0] = 1.0;
        for &w in omega {
            for k in (1..=dim).rev() {
                e[k] += e[k - 1] * w;
            }
        }
        (0..=dim)
            .map(|k| {
                let p = d - alpha + k as f64;
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                sign * e[k] * big_r.powf(p) / p
            })
            .sum()
    };
    let face = if dim == 1 {
        radial(&[1.0], 1.0)
    } else {
        let (x, w) = gauss_legendre_unit(48);
        let m = dim - 1;
        let count = x.len().pow(m as u32);
        let mut acc = 0.0;
        let mut p = vec![0.0; m];
        let mut omega = vec![0.0; dim];
        for idx in 0..count {
            let mut rem = idx;
            let mut weight = 1.0;
            for slot in p.iter_mut() {
                let j = rem % x.len();
                rem /= x.len();
                *slot = x[j];
                weight *= w[j];
            }
            let norm = (1.0 + p.iter().map(|v| v * v).sum::<f64>()).sqrt();
            for (o, v) in omega.iter_mut().zip(&p) {
                *o = v / norm;
            }
            omega[m] = 1.0 / norm;
            acc += weight * radial(&omega, norm) / norm.powi(dim as i32);
        }
        acc
    };
    Ok(2f64.powi(dim as i32) * d * face)
}

/// Gauss–Legendre rule on `[0, 1]` (Golub–Welsch).
fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jacobi);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            ((eig.eigenvalues[k] + 1.0) / 2.0, v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Grid kernel `|lag·h|^{−α}`, with the zero lag replaced by the cell
/// average.
fn regularized_kernel(alpha: f64, h: f64, k0: f64) -> impl Fn(&[f64]) -> f64 {
    move |lag: &[f64]| {
        let r2: f64 = lag.iter().map(|l| l * l).sum();
        if r2 == 0.0 {
            k0 * h.powf(-alpha)
        } else {
            (h * h * r2).powf(-alpha / 2.0)
        }
    }
}

fn white_noise(grid: Grid, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect()
}

/// Full-field samples of the white-noise limit, one homogenized solve each.
pub fn sample_white_limit(
    spec: &LimitLawSpec,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<GridFunction>> {
    let LimitKind::White { sigma } = spec.kind else {
        return invalid("sample_white_limit needs a white-noise spec");
    };
    let grid = spec.grid();
    let c = sigma * grid.cell_volume().powf(-0.5);
    map_indexed(exec, n_samples, |k| {
        let xi = white_noise(grid, derive_seed(seed, &[k as u64]));
        let src: Vec<f64> = spec.u.values.iter().zip(&xi).map(|(u, x)| c * u * x).collect();
        spec.green(&GridFunction::new(grid, src)?)
    })
    .into_iter()
    .collect()
}

fn longrange_embedding(grid: Grid, kappa: f64, alpha: f64) -> Result<CirculantEmbedding> {
    let k0 = cell_average_kernel(grid.dim, alpha)?;
    let kernel = regularized_kernel(alpha, grid.h(), k0);
    CirculantEmbedding::new(grid.dim, grid.n, 2, move |lag| kappa * kernel(lag))
}

/// Full-field samples of the long-range limit, one homogenized solve each.
pub fn sample_longrange_limit(
    spec: &LimitLawSpec,
    n_samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<GridFunction>> {
    let LimitKind::LongRange { kappa, alpha } = spec.kind else {
        return invalid("sample_longrange_limit needs a long-range spec");
    };
    let grid = spec.grid();
    let emb = longrange_embedding(grid, kappa, alpha)?;
    map_indexed(exec, n_samples, |k| {
        let mut rng = rng_from_seed(derive_seed(seed, &[k as u64]));
        let w = emb.sample(&mut rng);
        let src: Vec<f64> = spec.u.values.iter().zip(&w).map(|(u, x)| u * x).collect();
        spec.green(&GridFunction::new(grid, src)?)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawTag {
    EmpiricalEps,
    Limit,
}

/// Scalar samples of `(X, φ_i)`, indexed `[i][k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSample {
    pub values: Vec<Vec<f64>>,
    pub law_tag: LawTag,
    pub count: usize,
}

impl ProjectionSample {
    pub fn new(values: Vec<Vec<f64>>, law_tag: LawTag) -> Result<Self> {
        let count = values.first().map_or(0, |v| v.len());
        if values.iter().any(|v| v.len() != count) {
            return invalid("every test function needs the same number of samples");
        }
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("projection sample contains non-finite values".into()));
        }
        Ok(ProjectionSample { values, law_tag, count })
    }

    /// Sample covariance matrix, row-major.
    pub fn covariance(&self) -> Vec<f64> {
        let m = self.values.len();
        let mut c = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                c[i * m + j] = stats::covariance(&self.values[i], &self.values[j]);
            }
        }
        c
    }
}

/// Restriction of a Dirichlet grid function to every `stride`-th node.
fn restrict(g: &GridFunction, stride: usize) -> Result<GridFunction> {
    let grid = g.grid;
    if stride == 0 || !(grid.n + 1).is_multiple_of(stride) || (grid.n + 1) / stride < 2 {
        return invalid(format!("stride {stride} does not divide the {} cells of the grid", grid.n + 1));
    }
    let nc = (grid.n + 1) / stride - 1;
    let coarse = Grid::new(grid.dim, nc, grid.extent, false)?;
    let mut fine_ix = [0usize; 3];
    let values = (0..coarse.len())
        .map(|idx| {
            let ix = coarse.unravel(idx);
            for a in 0..grid.dim {
                fine_ix[a] = (ix[a] + 1) * stride - 1;
            }
            g.values[grid.ravel(&fine_ix[..grid.dim])]
        })
        .collect();
    GridFunction::new(coarse, values)
}

/// Samples `(X, φ_i) = (u Ẇ, Gφ_i)` with `Ẇ` synthesized on every
/// `stride`-th node, without solves.
pub fn sample_projections(
    spec: &LimitLawSpec,
    phis: &[GridFunction],
    n_samples: usize,
    seed: u64,
    stride: usize,
    exec: Execution,
) -> Result<ProjectionSample> {
    let weights = spec
        .adjoint_weights(phis)?
        .iter()
        .map(|g| restrict(g, stride))
        .collect::<Result<Vec<_>>>()?;
    let coarse = match weights.first() {
        Some(g) => g.grid,
        None => return invalid("at least one test function is required"),
    };
    let hd = coarse.cell_volume();
    let draw: Box<dyn Fn(u64) -> Vec<f64> + Sync + Send> = match spec.kind {
        LimitKind::White { sigma } => {
            let c = sigma * hd.sqrt();
            Box::new(move |s| white_noise(coarse, s).into_iter().map(|x| c * x).collect())
        }
        LimitKind::LongRange { kappa, alpha } => {
            let emb = longrange_embedding(coarse, kappa, alpha)?;
            Box::new(move |s| {
                let mut rng = rng_from_seed(s);
                emb.sample(&mut rng).into_iter().map(|x| hd * x).collect()
            })
        }
    };
    let rows = map_indexed(exec, n_samples, |k| {
        let w = draw(derive_seed(seed, &[k as u64]));
        weights
            .iter()
            .map(|g| {
                let prod: Vec<f64> = g.values.iter().zip(&w).map(|(a, b)| a * b).collect();
                pairwise_sum(&prod)
            })
            .collect::<Vec<f64>>()
    });
    let values = (0..phis.len()).map(|i| rows.iter().map(|r| r[i]).collect()).collect();
    ProjectionSample::new(values, LawTag::Limit)
}

/// Quadrature covariance of `(X, φ_i)` and `(X, φ_j)`.
pub fn covariance_quadrature(spec: &LimitLawSpec, phi_i: &GridFunction, phi_j: &GridFunction) -> Result<f64> {
    let w = spec.adjoint_weights(&[phi_i.clone(), phi_j.clone()])?;
    weight_covariance(spec.kind, &w[0], &w[1])
}

/// Quadrature covariance matrix over several test functions, row-major.
pub fn covariance_matrix(spec: &LimitLawSpec, phis: &[GridFunction]) -> Result<Vec<f64>> {
    let w = spec.adjoint_weights(phis)?;
    let m = w.len();
    let mut c = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let v = weight_covariance(spec.kind, &w[i], &w[j])?;
            c[i * m + j] = v;
            c[j * m + i] = v;
        }
    }
    Ok(c)
}

/// Covariance of `(Ẇ, g_i)` and `(Ẇ, g_j)` on the grid of the weights.
pub fn weight_covariance(kind: LimitKind, gi: &GridFunction, gj: &GridFunction) -> Result<f64> {
    if !gi.grid.same_shape(&gj.grid) {
        return Err(Error::GridMismatch("weights live on different grids".into()));
    }
    let grid = gi.grid;
    match kind {
        LimitKind::White { sigma } => Ok(sigma * sigma * gi.inner(gj)),
        LimitKind::LongRange { kappa, alpha } => {
            if !(alpha > 0.0 && alpha < grid.dim as f64) {
                return invalid(format!("alpha must lie in (0, {}), got {alpha}", grid.dim));
            }
            let k0 = cell_average_kernel(grid.dim, alpha)?;
            let conv = kernel_convolution(&gj.values, grid, regularized_kernel(alpha, grid.h(), k0));
            let prod: Vec<f64> = gi.values.iter().zip(&conv).map(|(a, b)| a * b).collect();
            let hd = grid.cell_volume();
            Ok(kappa * hd * hd * pairwise_sum(&prod))
        }
    }
}

/// Linear (non-periodic) convolution `Σ_y K(x − y) g(y)` over interior nodes
/// via a zero-padded FFT of side `2n`.
fn kernel_convolution(g: &[f64], grid: Grid, kernel: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let dim = grid.dim;
    let n = grid.n;
    let side = 2 * n;
    let fft = NdFft::new(&vec![side; dim]);
    let len = fft.len();
    let flat_of = |ix: &[usize]| ix.iter().fold(0, |acc, &i| acc * side + i);
    let mut a = vec![Complex64::default(); len];
    for (idx, v) in g.iter().enumerate() {
        let ix = grid.unravel(idx);
        a[flat_of(&ix[..dim])] = Complex64::new(*v, 0.0);
    }
    let mut k = vec![Complex64::default(); len];
    let mut lag = vec![0.0; dim];
    for (flat, slot) in k.iter_mut().enumerate() {
        let mut rem = flat;
        for a in (0..dim).rev() {
            let c = rem % side;
            rem /= side;
            lag[a] = if c <= side / 2 { c as f64 } else { c as f64 - side as f64 };
        }
        *slot = Complex64::new(kernel(&lag), 0.0);
    }
    fft.forward(&mut a);
    fft.forward(&mut k);
    for (x, y) in a.iter_mut().zip(&k) {
        *x *= y;
    }
    fft.inverse(&mut a);
    (0..grid.len())
        .map(|idx| {
            let ix = grid.unravel(idx);
            a[flat_of(&ix[..dim])].re / len as f64
        })
        .collect()
}

/// Thresholds of the per-test-function verdict.
pub const KS_MIN_P: f64 = 0.01;
pub const VARIANCE_RATIO_RANGE: (f64, f64) = (0.8, 1.25);
pub const MAX_ABS_SKEWNESS: f64 = 0.3;
pub const MAX_ABS_EXCESS_KURTOSIS: f64 = 0.6;
/// Minimum sample size accepted by [`compare_distributions`].
pub const MIN_COMPARISON_SAMPLES: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub phi_index: usize,
    /// Zero variance on either side; no tests were run.
    pub degenerate: bool,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub variance_ratio: f64,
    pub variance_ratio_ci: (f64, f64),
    pub skewness: f64,
    pub skewness_z: f64,
    pub excess_kurtosis: f64,
    pub excess_kurtosis_z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// Whether variance ratios use reference variances rather than the
    /// limit sample.
    pub against_reference: bool,
    pub empirical_count: usize,
    pub limit_count: usize,
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Compares an empirical projection sample with limit-law samples. The
/// variance ratio is taken against the limit sample's variance.
pub fn compare_distributions(empirical: &ProjectionSample, limit: &ProjectionSample) -> Result<ComparisonReport> {
    compare_with_reference(empirical, limit, None)
}

/// As [`compare_distributions`], but with the variance ratio taken against
/// known reference variances (e.g. quadrature values) when given.
pub fn compare_with_reference(
    empirical: &ProjectionSample,
    limit: &ProjectionSample,
    reference: Option<&[f64]>,
) -> Result<ComparisonReport> {
    if empirical.values.len() != limit.values.len() {
        return invalid("samples cover different numbers of test functions");
    }
    if let Some(r) = reference {
        if r.len() != empirical.values.len() {
            return invalid("one reference variance per test function is required");
        }
    }
    if empirical.count < MIN_COMPARISON_SAMPLES || limit.count < MIN_COMPARISON_SAMPLES {
        return invalid(format!(
            "comparison needs at least {MIN_COMPARISON_SAMPLES} values per sample, got {} and {}",
            empirical.count, limit.count
        ));
    }
    let rows = empirical
        .values
        .iter()
        .zip(&limit.values)
        .enumerate()
        .map(|(i, (e, l))| {
            let (ve, vl) = (stats::variance(e), stats::variance(l));
            let ref_ok = reference.is_none_or(|r| r[i] > 0.0);
            if !(ve > 0.0 && vl > 0.0 && ref_ok) {
                return ComparisonRow {
                    phi_index: i,
                    degenerate: true,
                    ks_statistic: f64::NAN,
                    ks_p_value: f64::NAN,
                    variance_ratio: f64::NAN,
                    variance_ratio_ci: (f64::NAN, f64::NAN),
                    skewness: f64::NAN,
                    skewness_z: f64::NAN,
                    excess_kurtosis: f64::NAN,
                    excess_kurtosis_z: f64::NAN,
                    pass: false,
                };
            }
            let ks = stats::ks_two_sample(e, l);
            let (ratio, lo, hi) = match reference {
                Some(r) => stats::variance_ratio_known(ve, e.len(), r[i], 0.95),
                None => stats::variance_ratio_ci(ve, e.len(), vl, l.len(), 0.95),
            };
            let (skew, skew_se) = stats::skewness(e);
            let (kurt, kurt_se) = stats::excess_kurtosis(e);
            let pass = ks.p_value > KS_MIN_P
                && ratio >= VARIANCE_RATIO_RANGE.0
                && ratio <= VARIANCE_RATIO_RANGE.1
                && skew.abs() < MAX_ABS_SKEWNESS
                && kurt.abs() < MAX_ABS_EXCESS_KURTOSIS;
            ComparisonRow {
                phi_index: i,
                degenerate: false,
                ks_statistic: ks.statistic,
                ks_p_value: ks.p_value,
                variance_ratio: ratio,
                variance_ratio_ci: (lo, hi),
                skewness: skew,
                skewness_z: skew / skew_se,
                excess_kurtosis: kurt,
                excess_kurtosis_z: kurt / kurt_se,
                pass,
            }
        })
        .collect();
    Ok(ComparisonReport {
        against_reference: reference.is_some(),
        empirical_count: empirical.count,
        limit_count: limit.count,
        rows,
    })
}
