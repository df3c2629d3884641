//! Monte Carlo sweeps over `ε`: fluctuation norms, weak pairings, the
//! Neumann-series terms, and the fractional-norm tightness diagnostic.

mod analysis;
mod neumann;

pub use analysis::{
    fit_scaling, scaled_fluctuations, tightness_diagnostic, weak_pairing_stats, PairingLevel, ScalingFit, TightnessLevel,
    TightnessReport, WeakPairingStats,
};
pub use neumann::{neumann_decomposition, NeumannDecomposition};

use serde::{Deserialize, Serialize};

use crate::corrector::EffectiveModel;
use crate::error::{invalid, Error, Result};
use crate::exec::{map_indexed, pairwise_sum, Execution};
use crate::fields::{derive_seed, PotentialModel, PotentialSampler};
use crate::grid::{Grid, GridFunction};
use crate::operator::{assemble_oscillatory, check_resolution, homogenized_operator, DirichletOperator};
use crate::sobolev::sobolev_norm;
use crate::solver::{solve_with, SolverOptions};
use crate::torus::TorusField;

/// Minimum number of grid cells per period.
pub const MIN_CELLS_PER_PERIOD: f64 = 8.0;

/// Minimum realizations per level.
pub const MIN_REALIZATIONS: usize = 50;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub grid: Grid,
    pub coefficients: TorusField,
    /// Resolution of the cell problems.
    pub cell_n: usize,
    /// Strictly decreasing.
    pub eps_list: Vec<f64>,
    pub n_realizations: usize,
    pub test_functions: Vec<GridFunction>,
    pub source: GridFunction,
    pub model: PotentialModel,
    /// Exponent of the fractional-norm diagnostic.
    pub s_diag: f64,
    pub base_seed: u64,
    /// Also solve for the first two Neumann terms (two extra solves per
    /// realization).
    pub neumann_terms: bool,
    /// Reuse the realization seed across levels.
    pub common_random_numbers: bool,
    pub solver: SolverOptions,
    pub execution: Execution,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        if g.periodic {
            return invalid("sweeps run on Dirichlet grids");
        }
        if self.coefficients.dim() != g.dim {
            return invalid("coefficient dimension differs from the grid");
        }
        if self.n_realizations < MIN_REALIZATIONS {
            return invalid(format!(
                "n_realizations must be at least {MIN_REALIZATIONS}, got {}",
                self.n_realizations
            ));
        }
        if self.eps_list.is_empty() {
            return invalid("eps_list is empty");
        }
        if self.eps_list.windows(2).any(|w| w[1] >= w[0]) {
            return invalid("eps_list must be strictly decreasing");
        }
        for &eps in &self.eps_list {
            check_resolution(g, eps, MIN_CELLS_PER_PERIOD)?;
        }
        if !(self.s_diag >= 0.0 && self.s_diag < 0.5) {
            return invalid(format!("s_diag must lie in [0, 1/2), got {}", self.s_diag));
        }
        if !self.source.grid.same_shape(g) || self.test_functions.iter().any(|p| !p.grid.same_shape(g)) {
            return Err(Error::GridMismatch("source and test functions must live on the sweep grid".into()));
        }
        self.model.validate(g.dim)?;
        Ok(())
    }

    /// Seed of realization `r` at level `level`.
    pub fn seed(&self, level: usize, r: usize) -> u64 {
        if self.common_random_numbers {
            derive_seed(self.base_seed, &[r as u64])
        } else {
            derive_seed(self.base_seed, &[level as u64, r as u64])
        }
    }
}

/// Mean and standard error of a per-realization scalar.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let var = if xs.len() > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Estimate {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

/// Per-realization record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub seed: u64,
    pub iterations: usize,
    pub clipped: usize,
    /// `‖u_r − Ê_{−r} u‖`.
    pub fluctuation_norm: f64,
    /// `‖w_r‖`, when Neumann terms were computed.
    pub w_norm: Option<f64>,
    /// `ε^{−d} ‖w_r‖²_{H^s}` at `s_diag`.
    pub hs_diag: Option<f64>,
}

/// Statistics of one `ε` level.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelRecord {
    pub eps: f64,
    pub n_realizations: usize,
    /// `‖v^ε − u‖`.
    pub periodic_error: f64,
    /// `‖Êu^ε − u‖`.
    pub mean_error: f64,
    /// Leave-one-out `Ê‖u^ε − Êu^ε‖`.
    pub energy: Estimate,
    /// Same with the plain sample mean.
    pub energy_plain: Estimate,
    /// Pairings `(u^ε_r − Êu^ε, φ_i)` with the plain sample mean, indexed
    /// `[i][r]`.
    pub pairings: Vec<Vec<f64>>,
    /// `Ê‖w^ε‖`.
    pub w_norm: Option<Estimate>,
    /// Leave-one-out `Ê‖s^ε − Ês^ε‖` of the second Neumann term.
    pub second_term: Option<Estimate>,
    /// `Ê‖(u − v) − w − s‖`.
    pub remainder: Option<Estimate>,
    /// `Ê ε^{−d} ‖w‖²` (the `s = 0` diagnostic).
    pub l2_diag: Option<Estimate>,
    /// `Ê ε^{−d} ‖w‖²_{H^s}` at `s_diag`.
    pub hs_diag: Option<Estimate>,
    pub realizations: Vec<RealizationRecord>,
    #[serde(skip)]
    pub mean_field: Option<GridFunction>,
}

/// A level that could not be completed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelFailure {
    pub eps: f64,
    pub realization: Option<usize>,
    pub seed: Option<u64>,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub dim: usize,
    pub n: usize,
    pub model: PotentialModel,
    pub a_bar: Vec<f64>,
    pub q_bar: f64,
    pub s_diag: f64,
    pub base_seed: u64,
    pub levels: Vec<LevelRecord>,
    pub failures: Vec<LevelFailure>,
    #[serde(skip)]
    pub homogenized: Option<GridFunction>,
}

impl SweepResult {
    pub fn eps_list(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.eps).collect()
    }

    /// Exponent `β` in `Var (u^ε, φ) ~ ε^β`: `d` for short range, `α` for
    /// long range.
    pub fn variance_exponent(&self) -> f64 {
        match &self.model {
            PotentialModel::LongRange(l) => l.alpha,
            _ => self.dim as f64,
        }
    }
}

struct RealizationOutput {
    record: RealizationRecord,
    d: Vec<f32>,
    s: Option<Vec<f32>>,
    pairings: Vec<f64>,
    remainder: Option<f64>,
}

fn l2(values: &[f64], hd: f64) -> f64 {
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    (pairwise_sum(&sq) * hd).sqrt()
}

/// Runs the full sweep. Levels that fail are reported in
/// [`SweepResult::failures`] and skipped.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let q_bar = cfg.model.q_bar();
    let effective = EffectiveModel::compute(&cfg.coefficients, q_bar, cfg.cell_n)?;
    let grid = cfg.grid;
    let hom = homogenized_operator(&effective.a_bar, q_bar, &grid)?;
    let (u, _) = solve_with(&hom, &cfg.source, None, &cfg.solver)?;
    let mut levels = Vec::new();
    let mut failures = Vec::new();
    for (li, &eps) in cfg.eps_list.iter().enumerate() {
        match run_level(cfg, li, eps, &u) {
            Ok(rec) => levels.push(rec),
            Err(f) => failures.push(f),
        }
    }
    Ok(SweepResult {
        dim: grid.dim,
        n: grid.n,
        model: cfg.model,
        a_bar: effective.a_bar,
        q_bar,
        s_diag: cfg.s_diag,
        base_seed: cfg.base_seed,
        levels,
        failures,
        homogenized: Some(u),
    })
}

fn level_failure(eps: f64, e: Error) -> LevelFailure {
    LevelFailure {
        eps,
        realization: None,
        seed: None,
        message: e.to_string(),
    }
}

fn run_level(cfg: &SweepConfig, level: usize, eps: f64, u: &GridFunction) -> std::result::Result<LevelRecord, LevelFailure> {
    let grid = cfg.grid;
    let q_bar = cfg.model.q_bar();
    let hd = grid.cell_volume();
    let dim = grid.dim;
    let base = assemble_oscillatory(&cfg.coefficients, eps, &GridFunction::constant(grid, q_bar), &grid)
        .map_err(|e| level_failure(eps, e))?;
    let (v, _) = solve_with(&base, &cfg.source, None, &cfg.solver).map_err(|e| level_failure(eps, e))?;
    let sampler = PotentialSampler::new(&cfg.model, &grid, eps).map_err(|e| level_failure(eps, e))?;
    let n_real = cfg.n_realizations;
    let outputs = map_indexed(cfg.execution, n_real, |r| {
        let seed = cfg.seed(level, r);
        realization(cfg, &base, &sampler, &v, eps, seed).map_err(|e| LevelFailure {
            eps,
            realization: Some(r),
            seed: Some(seed),
            message: e.to_string(),
        })
    });
    let mut outs = Vec::with_capacity(n_real);
    for o in outputs {
        outs.push(o?);
    }
    let len = grid.len();
    let nf = n_real as f64;
    // mean of d_r = u_r − v, accumulated in realization order
    let mut mean_d = vec![0.0f64; len];
    for o in &outs {
        for (m, x) in mean_d.iter_mut().zip(&o.d) {
            *m += *x as f64;
        }
    }
    mean_d.iter_mut().for_each(|m| *m /= nf);
    let loo = nf / (nf - 1.0);
    let mut plain = Vec::with_capacity(n_real);
    let mut records = Vec::with_capacity(n_real);
    for o in &outs {
        let diff: Vec<f64> = o.d.iter().zip(&mean_d).map(|(x, m)| *x as f64 - m).collect();
        let nrm = l2(&diff, hd);
        plain.push(nrm);
        let mut rec = o.record.clone();
        rec.fluctuation_norm = loo * nrm;
        records.push(rec);
    }
    let energy = Estimate::from_samples(&records.iter().map(|r| r.fluctuation_norm).collect::<Vec<_>>());
    let energy_plain = Estimate::from_samples(&plain);
    let mean_field: Vec<f64> = v.values.iter().zip(&mean_d).map(|(a, b)| a + b).collect();
    let mean_field = GridFunction::new(grid, mean_field).map_err(|e| level_failure(eps, e))?;
    let mean_error = mean_field.sub(u).l2_norm();
    let periodic_error = v.sub(u).l2_norm();
    let pairings = (0..cfg.test_functions.len())
        .map(|i| {
            let raw: Vec<f64> = outs.iter().map(|o| o.pairings[i]).collect();
            let m = pairwise_sum(&raw) / nf;
            raw.iter().map(|a| a - m).collect()
        })
        .collect();
    let (w_norm, second_term, remainder, l2_diag, hs_diag) = if cfg.neumann_terms {
        let mut mean_s = vec![0.0f64; len];
        for o in &outs {
            for (m, x) in mean_s.iter_mut().zip(o.s.as_ref().expect("neumann terms requested")) {
                *m += *x as f64;
            }
        }
        mean_s.iter_mut().for_each(|m| *m /= nf);
        let s_norms: Vec<f64> = outs
            .iter()
            .map(|o| {
                let s = o.s.as_ref().expect("neumann terms requested");
                let diff: Vec<f64> = s.iter().zip(&mean_s).map(|(x, m)| *x as f64 - m).collect();
                loo * l2(&diff, hd)
            })
            .collect();
        let w: Vec<f64> = records.iter().map(|r| r.w_norm.unwrap_or(0.0)).collect();
        let scale = eps.powi(-(dim as i32));
        let l2d: Vec<f64> = w.iter().map(|x| scale * x * x).collect();
        let hs: Vec<f64> = records.iter().map(|r| r.hs_diag.unwrap_or(0.0)).collect();
        let rem: Vec<f64> = outs.iter().map(|o| o.remainder.unwrap_or(0.0)).collect();
        (
            Some(Estimate::from_samples(&w)),
            Some(Estimate::from_samples(&s_norms)),
            Some(Estimate::from_samples(&rem)),
            Some(Estimate::from_samples(&l2d)),
            Some(Estimate::from_samples(&hs)),
        )
    } else {
        (None, None, None, None, None)
    };
    Ok(LevelRecord {
        eps,
        n_realizations: n_real,
        periodic_error,
        mean_error,
        energy,
        energy_plain,
        pairings,
        w_norm,
        second_term,
        remainder,
        l2_diag,
        hs_diag,
        realizations: records,
        mean_field: Some(mean_field),
    })
}

fn realization(
    cfg: &SweepConfig,
    base: &DirichletOperator,
    sampler: &PotentialSampler,
    v: &GridFunction,
    eps: f64,
    seed: u64,
) -> Result<RealizationOutput> {
    let grid = cfg.grid;
    let hd = grid.cell_volume();
    let field = sampler.sample(seed)?;
    let nu = field.nu();
    let op = base.with_potential(&field.q)?;
    let mut iterations = 0;
    let (w, s, guess) = if cfg.neumann_terms {
        let rhs = nu.mul(v).scaled(-1.0);
        let (w, st) = solve_with(base, &rhs, None, &cfg.solver)?;
        iterations += st.iterations;
        let rhs = nu.mul(&w).scaled(-1.0);
        let (s, st) = solve_with(base, &rhs, None, &cfg.solver)?;
        iterations += st.iterations;
        let guess = v.add(&w).add(&s);
        (Some(w), Some(s), guess)
    } else {
        (None, None, v.clone())
    };
    let (ur, st) = solve_with(&op, &cfg.source, Some(&guess), &cfg.solver)?;
    iterations += st.iterations;
    let d = ur.sub(v);
    let pairings = cfg.test_functions.iter().map(|phi| d.inner(phi)).collect();
    let (w_norm, hs_diag, remainder) = match (&w, &s) {
        (Some(w), Some(s)) => {
            let scale = eps.powi(-(grid.dim as i32));
            let hs = if cfg.s_diag == 0.0 {
                w.l2_norm().powi(2)
            } else {
                sobolev_norm(w, cfg.s_diag)?.powi(2)
            };
            let rem: Vec<f64> = d
                .values
                .iter()
                .zip(&w.values)
                .zip(&s.values)
                .map(|((a, b), c)| a - b - c)
                .collect();
            (Some(w.l2_norm()), Some(scale * hs), Some(l2(&rem, hd)))
        }
        _ => (None, None, None),
    };
    Ok(RealizationOutput {
        record: RealizationRecord {
            seed,
            iterations,
            clipped: field.clipped,
            fluctuation_norm: 0.0,
            w_norm,
            hs_diag,
        },
        d: d.values.iter().map(|x| *x as f32).collect(),
        s: s.map(|s| s.values.iter().map(|x| *x as f32).collect()),
        pairings,
        remainder,
    })
}
