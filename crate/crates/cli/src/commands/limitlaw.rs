use homlab::corrector::symmetric_eigenvalues;
use homlab::experiments::{scaled_fluctuations, SweepResult};
use homlab::fields::derive_seed;
use homlab::limit_law::{
    compare_distributions, compare_with_reference, covariance_matrix, sample_projections, ComparisonReport,
    LawTag, LimitKind, LimitLawSpec, ProjectionSample,
};
use homlab::{homogenized_operator, solve_dirichlet};
use serde::{Deserialize, Serialize};

use super::sweep::limit_kind;
use super::{Context, Outcome, Verdict, LIMIT_STREAM};
use crate::config::Stage;
use crate::error::{CliError, CliResult};
use crate::output::{num, stem, SeedLedger, StageOutput};

/// Entrywise tolerance of the sampled limit covariance against quadrature.
pub const COVARIANCE_REL_TOL: f64 = 0.1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitLawReport {
    pub limit: LimitKind,
    /// Period of the compared sweep level.
    pub eps: f64,
    pub scale_exponent: f64,
    pub stride: usize,
    /// `Cov((X, φ_i), (X, φ_j))` by quadrature, row-major.
    pub quadrature: Vec<f64>,
    /// Same from the limit samples.
    pub limit_covariance: Vec<f64>,
    pub covariance_rel_error: Vec<f64>,
    pub max_covariance_rel_error: f64,
    pub quadrature_eigenvalues: Vec<f64>,
    pub sample_eigenvalues: Vec<f64>,
    /// Sweep projections at `eps` against the limit samples, with the
    /// variance ratio taken against quadrature.
    pub comparison: ComparisonReport,
    /// First half of the limit samples against the second half.
    pub self_check: ComparisonReport,
    pub verdicts: Vec<Verdict>,
}

impl LimitLawReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

pub fn run_limitlaw(ctx: &Context) -> CliResult<(Outcome, LimitLawReport)> {
    let loaded = &ctx.loaded;
    let block = loaded.limit_block()?.clone();
    let sweep_block = loaded.sweep_block()?;
    let model = loaded.potential()?;
    let grid = loaded.grid();
    let kind = limit_kind(&model, grid.dim, Some(&block))
        .ok_or_else(|| CliError::config("potential", "the limit law needs a random potential (kind = \"constant\" has none)"))?;

    let sweep_path = ctx.out.join(format!("{}_result.json", stem(loaded, Stage::Sweep, ctx.seed)));
    let text = std::fs::read_to_string(&sweep_path).map_err(|_| {
        CliError::Runtime(format!(
            "sweep outputs not found at {}; run `homlab sweep` with the same config, seed and --out first",
            sweep_path.display()
        ))
    })?;
    let sweep: SweepResult = serde_json::from_str(&text)?;
    let last = sweep
        .levels
        .len()
        .checked_sub(1)
        .ok_or_else(|| CliError::Runtime("the stored sweep has no completed level".into()))?;

    let phis: Vec<_> = sweep_block.test_functions.iter().map(|f| f.on(grid)).collect();
    let op = homogenized_operator(&sweep.a_bar, sweep.q_bar, &grid)?;
    // same tolerance as the sweep, whose u this reproduces
    let u = solve_dirichlet(&op, &sweep_block.source.on(grid), sweep_block.solver_tol)?;
    let spec = LimitLawSpec::new(kind, &sweep.a_bar, sweep.q_bar, u)?;

    let empirical = ProjectionSample::new(
        (0..phis.len())
            .map(|i| scaled_fluctuations(&sweep, last, i))
            .collect::<homlab::Result<_>>()?,
        LawTag::EmpiricalEps,
    )?;
    let limit_seed = derive_seed(ctx.seed, &[LIMIT_STREAM]);
    let limit = sample_projections(&spec, &phis, block.n_samples, limit_seed, block.stride, ctx.execution())?;
    let quad = covariance_matrix(&spec, &phis)?;
    let k = phis.len();
    let reference: Vec<f64> = (0..k).map(|i| quad[i * k + i]).collect();
    let comparison = compare_with_reference(&empirical, &limit, Some(&reference))?;
    let half = limit.count / 2;
    let split = |range: std::ops::Range<usize>| {
        ProjectionSample::new(limit.values.iter().map(|v| v[range.clone()].to_vec()).collect(), LawTag::Limit)
    };
    let self_check = compare_distributions(&split(0..half)?, &split(half..2 * half)?)?;

    let sample_cov = limit.covariance();
    let rel: Vec<f64> = sample_cov.iter().zip(&quad).map(|(s, q)| (s / q - 1.0).abs()).collect();
    let max_rel = rel.iter().cloned().fold(0.0, f64::max);
    let quad_ev = symmetric_eigenvalues(&quad, k);
    let sample_ev = symmetric_eigenvalues(&sample_cov, k);
    let trace: f64 = reference.iter().sum();
    let psd = quad_ev[0] >= -1e-12 * trace && sample_ev[0] >= -1e-12 * trace;

    let verdicts = vec![
        Verdict::new(
            "projection-clt",
            comparison.all_pass(),
            format!(
                "{} projections at ε = {} against {} limit samples",
                comparison.rows.len(),
                sweep.levels[last].eps,
                limit.count
            ),
        ),
        Verdict::new(
            "limit-covariance",
            max_rel < COVARIANCE_REL_TOL && psd,
            format!("max entrywise relative error {max_rel:.4} < {COVARIANCE_REL_TOL}, PSD {psd}"),
        ),
        Verdict::new(
            "limit-self-consistency",
            self_check.rows.iter().all(|r| r.ks_p_value > homlab::limit_law::KS_MIN_P),
            format!(
                "KS p-values of the two halves: {}",
                self_check.rows.iter().map(|r| format!("{:.3}", r.ks_p_value)).collect::<Vec<_>>().join(", ")
            ),
        ),
    ];
    let report = LimitLawReport {
        limit: kind,
        eps: sweep.levels[last].eps,
        scale_exponent: sweep.variance_exponent(),
        stride: block.stride,
        quadrature: quad.clone(),
        limit_covariance: sample_cov.clone(),
        covariance_rel_error: rel.clone(),
        max_covariance_rel_error: max_rel,
        quadrature_eigenvalues: quad_ev,
        sample_eigenvalues: sample_ev,
        comparison,
        self_check,
        verdicts,
    };

    let mut out = StageOutput::new(loaded, Stage::LimitLaw, ctx.seed, &ctx.out)?;
    out.json("_report", &report)?;
    let mut rows = Vec::new();
    for (sample, tag) in [(&empirical, "empirical_eps"), (&limit, "limit")] {
        for (i, vals) in sample.values.iter().enumerate() {
            for (r, v) in vals.iter().enumerate() {
                rows.push(vec![r.to_string(), i.to_string(), num(*v), tag.to_string()]);
            }
        }
    }
    out.csv("_projections", &["realization", "phi_index", "value", "law_tag"], rows)?;
    let rows = (0..k * k)
        .map(|e| vec![(e / k).to_string(), (e % k).to_string(), num(quad[e]), num(sample_cov[e]), num(rel[e])])
        .collect();
    out.csv("_covariance", &["i", "j", "quadrature", "limit_samples", "rel_error"], rows)?;
    let manifest = out.finish(
        ctx.jobs,
        SeedLedger {
            base_seed: ctx.seed,
            streams: vec![(
                "limit samples".into(),
                format!("derive_seed(derive_seed(base, [{LIMIT_STREAM:#x}]), [k]) = stream of sample k"),
            )],
        },
    )?;

    let mut lines = Vec::new();
    for row in &report.comparison.rows {
        lines.push(format!(
            "phi{}: variance ratio {:.3} [{:.3}, {:.3}], skewness {:.3}, excess kurtosis {:.3}, KS p {:.3}",
            row.phi_index,
            row.variance_ratio,
            row.variance_ratio_ci.0,
            row.variance_ratio_ci.1,
            row.skewness,
            row.excess_kurtosis,
            row.ks_p_value
        ));
    }
    lines.extend(report.verdicts.iter().map(Verdict::line));
    Ok((Outcome { manifest, lines }, report))
}
