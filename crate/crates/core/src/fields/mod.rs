//! Random potentials `q(y) = q̄ + ν(y)` with short- or long-range
//! correlations, evaluated at `y = x/ε` on the domain grid.
//!
//! Short range: `ν(y) = c Σ_k (U_k − ½) B((y − θ − k)/r)` with iid uniform
//! `U_k`, a uniform random shift `θ` of the unit lattice and the smooth bump
//! `B(x) = exp(1 − 1/(1 − |x|²))` on the unit ball. The shift makes the field
//! exactly stationary, with `R(z) = c²/12 · r^d (B ⋆ B)(z/r)` supported in
//! `|z| < 2r`.
//!
//! Long range: `ν = Φ(g)` with `g` a Gaussian lattice field of covariance
//! `κ_g (1 + |k|²)^{−α/2}`, looked up at the nearest lattice node.

mod diagnostics;
mod embedding;
mod hermite;

pub use diagnostics::{
    empirical_autocorrelation, fourth_moment_check, sample_quadruples, tail_check,
    AutocorrelationAccumulator, CorrelationSpec, FourthMomentReport, LagEstimate, QuadrupleResult,
    RadialBin, TailBin, TailReport,
};
pub use embedding::{CirculantEmbedding, MAX_DOUBLINGS, NEGATIVE_MASS_TOL};
pub use hermite::{
    gauss_hermite, gaussian_weight_integral, hermite_coefficients, normalized_hermite_coefficients,
    standard_normal_expectation, transformed_covariance, HermiteReport, Transform, GH_NODES,
};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, GridFunction};

/// Largest tolerated fraction of clipped potential samples.
pub const CLIP_BUDGET: f64 = 1e-3;

/// Default torus-to-lattice side ratio of the circulant embedding.
pub const DEFAULT_PADDING: usize = 4;

/// Derives an independent 64-bit seed from a base seed and stream labels.
pub fn derive_seed(base: u64, stream: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    stream.iter().fold(mix(base), |acc, s| mix(acc ^ mix(*s)))
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// The smooth bump as a function of the squared radius.
#[inline]
pub fn bump(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

fn unit_sphere_area(dim: usize) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked by callers"),
    }
}

/// `∫ B^p` over the unit ball (radial trapezoid; the integrand is flat at 1).
pub fn bump_power_integral(dim: usize, p: i32) -> f64 {
    let n = 4000;
    let h = 1.0 / n as f64;
    let s: f64 = (1..n)
        .map(|i| {
            let r = i as f64 * h;
            bump(r * r).powi(p) * r.powi(dim as i32 - 1)
        })
        .sum();
    unit_sphere_area(dim) * s * h
}

/// `(B ⋆ B)(w) = ∫ B(t) B(t + w) dt` by a tensor midpoint rule.
pub fn bump_autoconvolution(dim: usize, w: &[f64]) -> f64 {
    let n: usize = if dim == 2 { 400 } else { 96 };
    let h = 2.0 / n as f64;
    let total = n.pow(dim as u32);
    let mut acc = 0.0;
    let mut t = [0.0; 3];
    for idx in 0..total {
        let mut rem = idx;
        for a in 0..dim {
            t[a] = -1.0 + (rem % n) as f64 * h + 0.5 * h;
            rem /= n;
        }
        let r2: f64 = t[..dim].iter().map(|v| v * v).sum();
        if r2 >= 1.0 {
            continue;
        }
        let s2: f64 = t[..dim].iter().zip(w).map(|(a, b)| (a + b) * (a + b)).sum();
        acc += bump(r2) * bump(s2);
    }
    acc * h.powi(dim as i32)
}

/// `max_y Σ_k B((y − k)/r)`, searched on a 64-point grid per axis of the
/// unit cell (which contains the symmetric points 0 and ½).
pub fn bump_max_lattice_sum(dim: usize, radius: f64) -> f64 {
    let res: usize = 64;
    let reach = radius.ceil() as i64 + 1;
    let mut best = 0.0f64;
    let total = res.pow(dim as u32);
    let span = (2 * reach + 1) as usize;
    let nk = span.pow(dim as u32);
    for idx in 0..total {
        let mut y = [0.0; 3];
        let mut rem = idx;
        for ya in y.iter_mut().take(dim) {
            *ya = (rem % res) as f64 / res as f64;
            rem /= res;
        }
        let mut s = 0.0;
        for kidx in 0..nk {
            let mut rem = kidx;
            let mut r2 = 0.0;
            for ya in y.iter().take(dim) {
                let k = (rem % span) as i64 - reach;
                rem /= span;
                let z = (ya - k as f64) / radius;
                r2 += z * z;
            }
            s += bump(r2);
        }
        best = best.max(s);
    }
    best
}

/// Short-range bump moving average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShortRangeModel {
    pub q_bar: f64,
    /// Upper bound `M` of the potential.
    pub m: f64,
    pub bump_radius: f64,
    /// Amplitude `c`; when absent, the largest value that never clips.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

impl ShortRangeModel {
    pub fn validate(&self) -> Result<()> {
        check_bounds(self.q_bar, self.m)?;
        if !(self.bump_radius > 0.0 && self.bump_radius.is_finite()) {
            return invalid(format!("bump_radius must be positive, got {}", self.bump_radius));
        }
        if let Some(c) = self.amplitude {
            if !(c >= 0.0 && c.is_finite()) {
                return invalid(format!("amplitude must be nonnegative, got {c}"));
            }
        }
        Ok(())
    }

    /// Amplitude actually used.
    pub fn amplitude_for(&self, dim: usize) -> f64 {
        self.amplitude.unwrap_or_else(|| {
            2.0 * self.q_bar.min(self.m - self.q_bar) / bump_max_lattice_sum(dim, self.bump_radius)
        })
    }

    /// `Var ν = c²/12 · r^d ∫B²`.
    pub fn variance(&self, dim: usize) -> f64 {
        let c = self.amplitude_for(dim);
        c * c / 12.0 * self.bump_radius.powi(dim as i32) * bump_power_integral(dim, 2)
    }

    /// `σ² = ∫R = c²/12 · r^{2d} (∫B)²`.
    pub fn sigma2(&self, dim: usize) -> f64 {
        let c = self.amplitude_for(dim);
        let ib = bump_power_integral(dim, 1);
        c * c / 12.0 * self.bump_radius.powi(2 * dim as i32) * ib * ib
    }

    /// `R(z) = c²/12 · r^d (B ⋆ B)(z/r)`.
    pub fn autocorrelation(&self, dim: usize, z: &[f64]) -> f64 {
        let r = self.bump_radius;
        let c = self.amplitude_for(dim);
        let w: Vec<f64> = z.iter().map(|v| v / r).collect();
        if w.iter().map(|v| v * v).sum::<f64>() >= 4.0 {
            return 0.0;
        }
        c * c / 12.0 * r.powi(dim as i32) * bump_autoconvolution(dim, &w)
    }
}

/// Long-range transformed Gaussian model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongRangeModel {
    pub q_bar: f64,
    pub m: f64,
    pub alpha: f64,
    pub kappa_g: f64,
    pub phi: Transform,
    #[serde(default = "default_padding")]
    pub padding: usize,
}

fn default_padding() -> usize {
    DEFAULT_PADDING
}

impl LongRangeModel {
    /// Validates parameters, bounds of `Φ`, and the Hermite rank-one gate.
    pub fn validate(&self, dim: usize) -> Result<()> {
        check_bounds(self.q_bar, self.m)?;
        if !(self.alpha > 0.0 && self.alpha < dim as f64) {
            return Err(Error::ModelRejected(format!(
                "alpha must lie in (0, d) = (0, {dim}), got {}",
                self.alpha
            )));
        }
        if !(self.kappa_g > 0.0 && self.kappa_g.is_finite()) {
            return invalid(format!("kappa_g must be positive, got {}", self.kappa_g));
        }
        if self.padding < 2 {
            return invalid(format!("padding must be at least 2, got {}", self.padding));
        }
        let rep = hermite_coefficients(&self.phi)?;
        if !rep.rank_ok {
            return Err(Error::ModelRejected(format!(
                "transform {} does not have Hermite rank one (rank >= 2)",
                self.phi.name()
            )));
        }
        Ok(())
    }

    /// Additionally requires `Φ` to keep `q̄ + Φ` inside `[0, M]`.
    pub fn validate_bounded(&self, dim: usize) -> Result<()> {
        self.validate(dim)?;
        match self.phi.bounds() {
            Some((lo, hi)) if lo >= -self.q_bar - 1e-12 && hi <= self.m - self.q_bar + 1e-12 => Ok(()),
            Some((lo, hi)) => Err(Error::ModelRejected(format!(
                "transform range [{lo}, {hi}] exceeds [-q_bar, M - q_bar] = [{}, {}]",
                -self.q_bar,
                self.m - self.q_bar
            ))),
            None => Err(Error::ModelRejected(format!(
                "transform {} is unbounded and cannot define a potential",
                self.phi.name()
            ))),
        }
    }

    /// `R_g(z) = κ_g (1 + |z|²)^{−α/2}`.
    pub fn covariance_g(&self, z: &[f64]) -> f64 {
        let r2: f64 = z.iter().map(|v| v * v).sum();
        self.kappa_g * (1.0 + r2).powf(-0.5 * self.alpha)
    }

    /// `V₁ = E{g Φ(g)} / Var g`, the tail coefficient in `R ≈ V₁² R_g`.
    /// Equals `E{g Φ(g)}` when `κ_g = 1`.
    pub fn v1(&self) -> f64 {
        let s = self.kappa_g.sqrt();
        standard_normal_expectation(|z| z * self.phi.eval(s * z)) / s
    }

    /// `κ = V₁² κ_g`.
    pub fn kappa(&self) -> f64 {
        let v = self.v1();
        v * v * self.kappa_g
    }

    /// Exact `R(z) = Cov(Φ(g_0), Φ(g_z))` through the Mehler expansion.
    pub fn autocorrelation(&self, z: &[f64]) -> f64 {
        let rho = self.covariance_g(z) / self.kappa_g;
        let s = self.kappa_g.sqrt();
        if rho >= 1.0 - 1e-15 {
            let mean = standard_normal_expectation(|t| self.phi.eval(s * t));
            return standard_normal_expectation(|t| self.phi.eval(s * t).powi(2)) - mean * mean;
        }
        let a = normalized_hermite_coefficients(&self.phi, s, 120);
        transformed_covariance(&a, rho)
    }
}

fn check_bounds(q_bar: f64, m: f64) -> Result<()> {
    if !(q_bar >= 0.0 && m >= q_bar && m.is_finite()) {
        return Err(Error::ModelRejected(format!(
            "need 0 <= q_bar <= M, got q_bar = {q_bar}, M = {m}"
        )));
    }
    Ok(())
}

/// Declarative law of the random potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PotentialModel {
    ShortRange(ShortRangeModel),
    LongRange(LongRangeModel),
    /// `ν ≡ 0`.
    Constant { q_bar: f64, m: f64 },
}

impl PotentialModel {
    pub fn q_bar(&self) -> f64 {
        match self {
            PotentialModel::ShortRange(s) => s.q_bar,
            PotentialModel::LongRange(l) => l.q_bar,
            PotentialModel::Constant { q_bar, .. } => *q_bar,
        }
    }

    pub fn bound(&self) -> f64 {
        match self {
            PotentialModel::ShortRange(s) => s.m,
            PotentialModel::LongRange(l) => l.m,
            PotentialModel::Constant { m, .. } => *m,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PotentialModel::ShortRange(_) => "short-range",
            PotentialModel::LongRange(_) => "long-range",
            PotentialModel::Constant { .. } => "constant",
        }
    }

    /// Checks the model can define a potential on a `dim`-dimensional domain.
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            PotentialModel::ShortRange(s) => s.validate(),
            PotentialModel::LongRange(l) => l.validate_bounded(dim),
            PotentialModel::Constant { q_bar, m } => check_bounds(*q_bar, *m),
        }
    }

    /// Analytic correlation constants of the model.
    pub fn correlation_spec(&self, dim: usize) -> CorrelationSpec {
        let mut spec = CorrelationSpec::default();
        match self {
            PotentialModel::ShortRange(s) => {
                spec.r0 = s.variance(dim);
                spec.sigma2 = Some(s.sigma2(dim));
            }
            PotentialModel::LongRange(l) => {
                spec.r0 = l.autocorrelation(&vec![0.0; dim]);
                spec.v1 = Some(l.v1());
                spec.kappa = Some(l.kappa());
                spec.alpha = Some(l.alpha);
            }
            PotentialModel::Constant { .. } => {}
        }
        spec
    }
}

/// One realization of the potential at the domain nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldRealization {
    /// `q(x/ε)` at every interior node, inside `[0, M]`.
    pub q: GridFunction,
    pub q_bar: f64,
    pub eps: f64,
    pub seed: u64,
    /// Number of values moved onto the bounds.
    pub clipped: usize,
}

impl FieldRealization {
    /// Fluctuation `ν = q − q̄`.
    pub fn nu(&self) -> GridFunction {
        GridFunction {
            grid: self.q.grid,
            values: self.q.values.iter().map(|v| v - self.q_bar).collect(),
        }
    }
}

/// Unit-scale lattice samples of `ν` used by the statistical diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    pub dim: usize,
    /// Points per axis.
    pub side: usize,
    /// Distance between neighbouring points in units of the correlation
    /// scale.
    pub spacing: f64,
    pub values: Vec<f64>,
    pub seed: u64,
}

/// Returns `m = ε/h` and `1/ε` as integers, rejecting misaligned pairs.
fn alignment(grid: &Grid, eps: f64) -> Result<(usize, usize)> {
    if !(eps > 0.0 && eps <= grid.extent) {
        return invalid(format!("eps must lie in (0, {}], got {eps}", grid.extent));
    }
    let per_period = eps / grid.h();
    let m = per_period.round();
    let inv = (grid.extent / eps).round();
    if (per_period - m).abs() > 1e-9 * m || (grid.extent / eps - inv).abs() > 1e-9 * inv {
        return invalid(format!(
            "eps = {eps} is not aligned with the grid (eps/h = {per_period}, 1/eps = {})",
            grid.extent / eps
        ));
    }
    Ok((m as usize, inv as usize))
}

/// Bump moving average evaluated at `y_a(i) = (i + offset)/m` per axis.
#[derive(Debug, Clone)]
struct BumpEvaluator {
    dim: usize,
    count: usize,
    offset: usize,
    m: usize,
    amplitude: f64,
    radius: f64,
}

impl BumpEvaluator {
    fn evaluate<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let dim = self.dim;
        let m = self.m;
        let reach = self.radius.ceil() as i64;
        // offsets o with |φ − o| < r for some φ ∈ [0, 1)
        let offsets: Vec<i64> = ((1 - reach)..=reach).collect();
        let p = offsets.len();
        let theta: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
        let ymax = (self.count - 1 + self.offset) as f64 / m as f64;
        let kmin = -reach - 1;
        let kmax = ymax.floor() as i64 + reach + 1;
        let kside = (kmax - kmin + 1) as usize;
        let uniforms: Vec<f64> = (0..kside.pow(dim as u32)).map(|_| rng.random::<f64>() - 0.5).collect();
        // per axis and residue: base lattice index and fractional offset
        let mut base = vec![vec![0i64; m]; dim];
        let mut frac = vec![vec![0.0; m]; dim];
        for a in 0..dim {
            for rho in 0..m {
                let z = rho as f64 / m as f64 - theta[a];
                let k0 = z.floor();
                base[a][rho] = k0 as i64;
                frac[a][rho] = z - k0;
            }
        }
        // table[(ρ multi-index) * p^d + (offset multi-index)]
        let np = p.pow(dim as u32);
        let nres = m.pow(dim as u32);
        let mut table = vec![0.0; nres * np];
        for r_idx in 0..nres {
            let mut rho = [0usize; 3];
            let mut rem = r_idx;
            for a in (0..dim).rev() {
                rho[a] = rem % m;
                rem /= m;
            }
            for o_idx in 0..np {
                let mut rem = o_idx;
                let mut r2 = 0.0;
                for a in (0..dim).rev() {
                    let o = offsets[rem % p];
                    rem /= p;
                    let z = (frac[a][rho[a]] - o as f64) / self.radius;
                    r2 += z * z;
                }
                table[r_idx * np + o_idx] = self.amplitude * bump(r2);
            }
        }
        let total = self.count.pow(dim as u32);
        let mut out = vec![0.0; total];
        let mut kbase = [0i64; 3];
        let mut rho = [0usize; 3];
        for (idx, slot) in out.iter_mut().enumerate() {
            let mut rem = idx;
            for a in (0..dim).rev() {
                let i = rem % self.count + self.offset;
                rem /= self.count;
                rho[a] = i % m;
                kbase[a] = (i / m) as i64 + base[a][rho[a]];
            }
            let r_idx = rho[..dim].iter().fold(0, |acc, r| acc * m + r);
            let row = &table[r_idx * np..(r_idx + 1) * np];
            let mut acc = 0.0;
            for (o_idx, w) in row.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                let mut rem = o_idx;
                let mut flat = 0usize;
                let mut mul = 1usize;
                for a in (0..dim).rev() {
                    let k = kbase[a] + offsets[rem % p] - kmin;
                    rem /= p;
                    flat += k as usize * mul;
                    mul *= kside;
                }
                acc += w * uniforms[flat];
            }
            *slot = acc;
        }
        out
    }
}

#[derive(Debug)]
enum SamplerKind {
    Short(BumpEvaluator),
    Long {
        embedding: CirculantEmbedding,
        phi: Transform,
        m: usize,
    },
    Constant,
}

/// Reusable sampler of domain potentials for one `(model, grid, ε)`.
#[derive(Debug)]
pub struct PotentialSampler {
    model: PotentialModel,
    grid: Grid,
    eps: f64,
    kind: SamplerKind,
}

impl PotentialSampler {
    pub fn new(model: &PotentialModel, grid: &Grid, eps: f64) -> Result<Self> {
        if grid.periodic {
            return invalid("potentials are sampled on Dirichlet grids");
        }
        model.validate(grid.dim)?;
        let (m, inv_eps) = alignment(grid, eps)?;
        let kind = match model {
            PotentialModel::ShortRange(s) => SamplerKind::Short(BumpEvaluator {
                dim: grid.dim,
                count: grid.n,
                offset: 1,
                m,
                amplitude: s.amplitude_for(grid.dim),
                radius: s.bump_radius,
            }),
            PotentialModel::LongRange(l) => {
                let side = inv_eps + 1;
                let embedding = CirculantEmbedding::new(grid.dim, side, l.padding, |z| l.covariance_g(z))?;
                SamplerKind::Long {
                    embedding,
                    phi: l.phi,
                    m,
                }
            }
            PotentialModel::Constant { .. } => SamplerKind::Constant,
        };
        Ok(PotentialSampler {
            model: *model,
            grid: *grid,
            eps,
            kind,
        })
    }

    pub fn model(&self) -> &PotentialModel {
        &self.model
    }

    /// Realization for `seed`; bitwise reproducible.
    pub fn sample(&self, seed: u64) -> Result<FieldRealization> {
        let mut rng = rng_from_seed(seed);
        let grid = self.grid;
        let nu = match &self.kind {
            SamplerKind::Short(ev) => ev.evaluate(&mut rng),
            SamplerKind::Long { embedding, phi, m } => {
                let g = embedding.sample(&mut rng);
                let side = embedding.side();
                let n = grid.n;
                // nearest lattice node to y = (i + 1)/m
                let near: Vec<usize> = (0..n).map(|i| (2 * (i + 1) + m) / (2 * m)).collect();
                (0..grid.len())
                    .map(|idx| {
                        let ix = grid.unravel(idx);
                        let flat = ix[..grid.dim].iter().fold(0, |acc, i| acc * side + near[*i]);
                        phi.eval(g[flat])
                    })
                    .collect()
            }
            SamplerKind::Constant => vec![0.0; grid.len()],
        };
        let q_bar = self.model.q_bar();
        let bound = self.model.bound();
        let mut clipped = 0;
        let values: Vec<f64> = nu
            .iter()
            .map(|v| {
                let q = q_bar + v;
                if q < 0.0 {
                    clipped += 1;
                    0.0
                } else if q > bound {
                    clipped += 1;
                    bound
                } else {
                    q
                }
            })
            .collect();
        if clipped as f64 > CLIP_BUDGET * values.len() as f64 {
            return Err(Error::ModelRejected(format!(
                "{clipped} of {} potential samples clipped; amplitude is mis-scaled",
                values.len()
            )));
        }
        Ok(FieldRealization {
            q: GridFunction::new(grid, values)?,
            q_bar,
            eps: self.eps,
            seed,
            clipped,
        })
    }
}

/// Short-range potential realization at `y = x/ε` on the domain nodes.
pub fn sample_short_range(model: &PotentialModel, grid: &Grid, eps: f64, seed: u64) -> Result<FieldRealization> {
    if !matches!(model, PotentialModel::ShortRange(_)) {
        return invalid("sample_short_range needs a short-range model");
    }
    PotentialSampler::new(model, grid, eps)?.sample(seed)
}

/// Long-range potential realization at `y = x/ε` on the domain nodes.
pub fn sample_long_range(model: &PotentialModel, grid: &Grid, eps: f64, seed: u64) -> Result<FieldRealization> {
    if !matches!(model, PotentialModel::LongRange(_)) {
        return invalid("sample_long_range needs a long-range model");
    }
    PotentialSampler::new(model, grid, eps)?.sample(seed)
}

/// Reusable sampler of `ν` on a unit-scale lattice for diagnostics.
#[derive(Debug)]
pub struct LatticeSampler {
    dim: usize,
    side: usize,
    spacing: f64,
    kind: SamplerKind,
}

impl LatticeSampler {
    /// `side^d` points with the given spacing. Long-range fields live on the
    /// integer lattice, so their spacing must be 1. Unbounded transforms are
    /// allowed here.
    pub fn new(model: &PotentialModel, dim: usize, side: usize, spacing: f64) -> Result<Self> {
        if !(2..=3).contains(&dim) || side < 2 {
            return invalid("lattice needs dimension 2 or 3 and at least 2 points per axis");
        }
        let kind = match model {
            PotentialModel::ShortRange(s) => {
                s.validate()?;
                let m = (1.0 / spacing).round();
                if !(spacing > 0.0) || (1.0 / spacing - m).abs() > 1e-9 * m {
                    return invalid(format!("spacing must be 1/m for an integer m, got {spacing}"));
                }
                SamplerKind::Short(BumpEvaluator {
                    dim,
                    count: side,
                    offset: 0,
                    m: m as usize,
                    amplitude: s.amplitude_for(dim),
                    radius: s.bump_radius,
                })
            }
            PotentialModel::LongRange(l) => {
                l.validate(dim)?;
                if spacing != 1.0 {
                    return invalid("long-range lattice fields use unit spacing");
                }
                SamplerKind::Long {
                    embedding: CirculantEmbedding::new(dim, side, l.padding, |z| l.covariance_g(z))?,
                    phi: l.phi,
                    m: 1,
                }
            }
            PotentialModel::Constant { .. } => SamplerKind::Constant,
        };
        Ok(LatticeSampler {
            dim,
            side,
            spacing,
            kind,
        })
    }

    pub fn sample(&self, seed: u64) -> LatticeField {
        let mut rng = rng_from_seed(seed);
        let len = self.side.pow(self.dim as u32);
        let values = match &self.kind {
            SamplerKind::Short(ev) => ev.evaluate(&mut rng),
            SamplerKind::Long { embedding, phi, .. } => {
                embedding.sample(&mut rng).into_iter().map(|g| phi.eval(g)).collect()
            }
            SamplerKind::Constant => vec![0.0; len],
        };
        LatticeField {
            dim: self.dim,
            side: self.side,
            spacing: self.spacing,
            values,
            seed,
        }
    }

    /// Clipped-mass ratio of the embedding (long-range only).
    pub fn negative_fraction(&self) -> Option<f64> {
        match &self.kind {
            SamplerKind::Long { embedding, .. } => Some(embedding.negative_fraction()),
            _ => None,
        }
    }
}
