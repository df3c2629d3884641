use homlab::corrector::EffectiveModel;
use serde::{Deserialize, Serialize};

use super::{Context, Outcome};
use crate::config::Stage;
use crate::error::CliResult;
use crate::output::{num, SeedLedger, StageOutput};

/// Correctors whose largest value is below this are reported as zero.
const ZERO_CORRECTOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorInfo {
    pub direction: usize,
    pub max_abs: f64,
    pub l2_norm: f64,
    pub zero: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrectorSummary {
    pub dim: usize,
    pub cell_n: usize,
    pub a_bar: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    /// Ellipticity bounds of the cell field.
    pub lambda: f64,
    pub big_lambda: f64,
    /// Elementary bounds `harmonic ≤ ā ≤ arithmetic`.
    pub arithmetic_mean: Vec<f64>,
    pub harmonic_mean: Vec<f64>,
    pub correctors: Vec<CorrectorInfo>,
}

pub fn run_corrector(ctx: &Context) -> CliResult<(Outcome, CorrectorSummary)> {
    let loaded = &ctx.loaded;
    let a = loaded.coefficients()?;
    let cell_n = loaded.config.coefficients.cell_n;
    let model = EffectiveModel::compute(&a, 0.0, cell_n)?;
    let dim = model.dim;
    let summary = CorrectorSummary {
        dim,
        cell_n,
        a_bar: model.a_bar.clone(),
        eigenvalues: model.eigenvalues(),
        lambda: a.lambda(),
        big_lambda: a.big_lambda(),
        arithmetic_mean: a.arithmetic_mean(),
        harmonic_mean: a.harmonic_mean(),
        correctors: model
            .correctors
            .iter()
            .enumerate()
            .map(|(k, chi)| CorrectorInfo {
                direction: k + 1,
                max_abs: chi.max_abs(),
                l2_norm: chi.l2_norm(),
                zero: chi.max_abs() < ZERO_CORRECTOR,
            })
            .collect(),
    };

    let mut out = StageOutput::new(loaded, Stage::Corrector, ctx.seed, &ctx.out)?;
    out.json("_summary", &summary)?;
    let rows = (0..dim * dim)
        .map(|k| vec![(k / dim + 1).to_string(), (k % dim + 1).to_string(), num(summary.a_bar[k])])
        .collect();
    out.csv("_a_bar", &["i", "j", "value"], rows)?;
    for (k, chi) in model.correctors.iter().enumerate() {
        out.binary(&format!("_chi{}", k + 1), chi)?;
    }
    let manifest = out.finish(
        ctx.jobs,
        SeedLedger {
            base_seed: ctx.seed,
            streams: vec![("corrector".into(), "deterministic; seed unused".into())],
        },
    )?;

    let mut lines = vec![format!("a_bar = {}", format_matrix(&summary.a_bar, dim))];
    lines.push(format!(
        "eigenvalues = [{}]",
        summary.eigenvalues.iter().map(|v| format!("{v:.7}")).collect::<Vec<_>>().join(", ")
    ));
    for c in &summary.correctors {
        if c.zero {
            lines.push(format!("chi{} is identically zero", c.direction));
        }
    }
    Ok((Outcome { manifest, lines }, summary))
}

fn format_matrix(m: &[f64], dim: usize) -> String {
    let rows: Vec<String> = m
        .chunks(dim)
        .map(|r| format!("[{}]", r.iter().map(|v| format!("{v:.7}")).collect::<Vec<_>>().join(", ")))
        .collect();
    format!("[{}]", rows.join(", "))
}
