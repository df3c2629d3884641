use homlab::exec::map_indexed;
use homlab::fields::{
    derive_seed, fourth_moment_check, hermite_coefficients, sample_quadruples, AutocorrelationAccumulator,
    CorrelationSpec, FourthMomentReport, HermiteReport, LatticeField, LatticeSampler, LongRangeModel, PotentialModel,
    PotentialSampler, TailReport, Transform,
};
use homlab::fields::tail_check;
use serde::{Deserialize, Serialize};

use super::{Context, Outcome, Verdict, FIELDCHECK_STREAM};
use crate::config::{FieldcheckBlock, Stage};
use crate::error::CliResult;
use crate::output::{num, SeedLedger, StageOutput};

/// Realizations generated per batch before they enter the accumulator.
const BATCH: usize = 16;
/// Fitted tail slope must be within this of `−α`.
pub const TAIL_SLOPE_TOL: f64 = 0.2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationSummary {
    pub realizations: usize,
    pub r0: f64,
    pub r0_se: Option<f64>,
    pub r0_model: f64,
    pub sigma2: Option<f64>,
    pub sigma2_se: Option<f64>,
    pub sigma2_model: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SupportCheck {
    pub range: f64,
    pub shells: usize,
    /// Shells beyond `range` more than 3 SE from zero.
    pub exceedances: usize,
    pub allowed: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldcheckReport {
    pub model: PotentialModel,
    pub hermite: Option<HermiteReport>,
    pub correlation: Option<CorrelationSummary>,
    pub support: Option<SupportCheck>,
    pub tail: Option<TailReport>,
    pub fourth_moment: Option<FourthMomentReport>,
    pub isserlis_allowed: Option<usize>,
    pub verdicts: Vec<Verdict>,
}

impl FieldcheckReport {
    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

fn accumulate(
    sampler: &LatticeSampler,
    fc: &FieldcheckBlock,
    dim: usize,
    seed: u64,
    ctx: &Context,
) -> CliResult<CorrelationSpec> {
    let mut acc = AutocorrelationAccumulator::new(dim, fc.side, fc.spacing, fc.max_lag)?;
    let mut start = 0;
    while start < fc.n_realizations {
        let count = BATCH.min(fc.n_realizations - start);
        let batch = map_indexed(ctx.execution(), count, |k| sampler.sample(derive_seed(seed, &[(start + k) as u64])));
        for f in &batch {
            acc.push(&f.values)?;
        }
        start += count;
    }
    Ok(acc.finish()?)
}

/// Shells of `R̂` beyond the dependency range should vanish.
fn support_check(est: &CorrelationSpec, range: f64) -> SupportCheck {
    let far: Vec<_> = est.radial.iter().filter(|b| b.distance > range + 1e-9).collect();
    let exceedances = far.iter().filter(|b| b.value.abs() > 3.0 * b.se).count();
    SupportCheck {
        range,
        shells: far.len(),
        exceedances,
        allowed: 1 + far.len() / 100,
    }
}

/// Isserlis exceedances tolerated at 3 SE; the expected count is
/// `0.0027 · quadruples`.
pub fn isserlis_allowance(quadruples: usize) -> usize {
    2 + quadruples / 100
}

pub fn run_fieldcheck(ctx: &Context) -> CliResult<(Outcome, FieldcheckReport)> {
    let loaded = &ctx.loaded;
    let model = loaded.potential()?;
    let fc = loaded.fieldcheck_block();
    let dim = loaded.config.grid.d;
    let seed = derive_seed(ctx.seed, &[FIELDCHECK_STREAM]);
    let mut verdicts = Vec::new();
    let mut report = FieldcheckReport {
        model,
        hermite: None,
        correlation: None,
        support: None,
        tail: None,
        fourth_moment: None,
        isserlis_allowed: None,
        verdicts: Vec::new(),
    };
    let mut est = None;

    let analytic = model.correlation_spec(dim);
    let gate_ok = match &model {
        PotentialModel::LongRange(l) => {
            let h = hermite_coefficients(&l.phi)?;
            report.hermite = Some(h);
            let detail = if h.rank_ok {
                format!("Φ = {} has Hermite rank one (V₁ = {:.6})", l.phi.name(), h.v1)
            } else {
                format!(
                    "Φ = {} has Hermite rank ≥ 2 (zeroth coefficient {:.2e}, V₁ = {:.2e}); the heavy tail is not inherited",
                    l.phi.name(),
                    h.integral,
                    h.v1
                )
            };
            verdicts.push(Verdict::new("hermite-gate", h.rank_ok, detail));
            h.rank_ok
        }
        _ => true,
    };

    if gate_ok && !matches!(model, PotentialModel::Constant { .. }) {
        let sampler = LatticeSampler::new(&model, dim, fc.side, fc.spacing)?;
        let e = accumulate(&sampler, &fc, dim, derive_seed(seed, &[0]), ctx)?;
        report.correlation = Some(CorrelationSummary {
            realizations: e.realizations,
            r0: e.r0,
            r0_se: e.r0_se,
            r0_model: analytic.r0,
            sigma2: e.sigma2,
            sigma2_se: e.sigma2_se,
            sigma2_model: analytic.sigma2,
        });
        match &model {
            PotentialModel::ShortRange(s) => {
                let sc = support_check(&e, 2.0 * s.bump_radius);
                verdicts.push(Verdict::new(
                    "compact-support",
                    sc.exceedances <= sc.allowed,
                    format!(
                        "{} of {} shells beyond |x| = {} differ from zero by > 3 SE (allowed {})",
                        sc.exceedances, sc.shells, sc.range, sc.allowed
                    ),
                ));
                report.support = Some(sc);
            }
            PotentialModel::LongRange(l) => {
                let tail = tail_check(&e, &|z: &[f64]| l.covariance_g(z), l.v1(), fc.tail_t_min);
                verdicts.push(Verdict::new(
                    "tail-bound",
                    tail.pass,
                    format!(
                        "|R̂ − V₁²R_g| ≤ C R_g² with C = {:.4}; worst shell {:.2} SE (threshold {})",
                        tail.fitted_c, tail.max_violation_se, tail.violation_threshold_se
                    ),
                ));
                verdicts.push(Verdict::new(
                    "tail-slope",
                    (tail.tail_slope + l.alpha).abs() <= TAIL_SLOPE_TOL,
                    format!(
                        "log-log slope {:.3} ± {:.3} within {TAIL_SLOPE_TOL} of −α = {}",
                        tail.tail_slope, tail.tail_slope_se, -l.alpha
                    ),
                ));
                report.tail = Some(tail);
            }
            PotentialModel::Constant { .. } => unreachable!(),
        }
        est = Some(e);
    }

    if let PotentialModel::LongRange(l) = &model {
        // Gaussian case: the underlying field g itself
        let gaussian = LongRangeModel {
            phi: Transform::Identity,
            ..*l
        };
        let g_model = PotentialModel::LongRange(gaussian);
        let sampler = LatticeSampler::new(&g_model, dim, fc.gaussian_side, 1.0)?;
        let fields: Vec<LatticeField> =
            map_indexed(ctx.execution(), fc.n_realizations, |k| sampler.sample(derive_seed(seed, &[1, k as u64])));
        let quads = sample_quadruples(dim, fc.quadruples, fc.quadruple_spread, derive_seed(seed, &[2]));
        let r = |z: &[f64]| gaussian.covariance_g(z);
        let fm = fourth_moment_check(&fields, &quads, &r, &r, 1.0)?;
        let allowed = isserlis_allowance(fc.quadruples);
        verdicts.push(Verdict::new(
            "isserlis",
            fm.isserlis_exceedances <= allowed,
            format!(
                "{} of {} Gaussian quadruples differ from the Isserlis value by > 3 SE (allowed {allowed}); max |z| {:.2}",
                fm.isserlis_exceedances,
                fm.quadruples.len(),
                fm.max_abs_isserlis_z
            ),
        ));
        report.fourth_moment = Some(fm);
        report.isserlis_allowed = Some(allowed);
    }
    report.verdicts = verdicts;

    let mut out = StageOutput::new(loaded, Stage::FieldCheck, ctx.seed, &ctx.out)?;
    out.json("_report", &report)?;
    if let Some(e) = &est {
        let model_r = |z: &[f64]| match &model {
            PotentialModel::ShortRange(s) => s.autocorrelation(dim, z),
            PotentialModel::LongRange(l) => l.autocorrelation(z),
            PotentialModel::Constant { .. } => 0.0,
        };
        let mut header: Vec<String> = (1..=dim).map(|a| format!("lag{a}")).collect();
        header.extend(["distance", "r_hat", "se", "r_model"].map(String::from));
        let rows = e
            .lags
            .iter()
            .map(|l| {
                let z: Vec<f64> = l.lag.iter().map(|v| *v as f64 * e.spacing).collect();
                let mut r: Vec<String> = l.lag.iter().map(|v| v.to_string()).collect();
                r.extend([num(l.distance), num(l.value), num(l.se), num(model_r(&z))]);
                r
            })
            .collect();
        out.csv("_correlation", &header.iter().map(String::as_str).collect::<Vec<_>>(), rows)?;
        let rows = e
            .radial
            .iter()
            .map(|b| vec![num(b.distance), num(b.value), num(b.se), b.lags.to_string()])
            .collect();
        out.csv("_radial", &["distance", "r_hat", "se", "lags"], rows)?;
    }
    if let Some(t) = &report.tail {
        let rows = t
            .bins
            .iter()
            .map(|b| vec![num(b.distance), num(b.r_hat), num(b.se), num(b.leading), num(b.r_g_sq), num(b.excess_se)])
            .collect();
        out.csv("_tail", &["distance", "r_hat", "se", "leading", "r_g_sq", "excess_se"], rows)?;
    }
    if let Some(fm) = &report.fourth_moment {
        let rows = fm
            .quadruples
            .iter()
            .map(|q| {
                let pts: Vec<String> = q
                    .points
                    .iter()
                    .map(|p| p.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "))
                    .collect();
                let mut r = pts;
                r.extend([num(q.psi), num(q.se), num(q.isserlis), num(q.isserlis_z)]);
                r
            })
            .collect();
        out.csv("_fourth", &["p1", "p2", "p3", "p4", "psi", "se", "isserlis", "isserlis_z"], rows)?;
    }
    if gate_ok {
        if let Some(s) = &loaded.config.sweep {
            let grid = loaded.grid();
            let field = PotentialSampler::new(&model, &grid, s.eps[0])?.sample(derive_seed(seed, &[3]))?;
            out.binary("_potential", &field.q)?;
        }
    }
    let manifest = out.finish(
        ctx.jobs,
        SeedLedger {
            base_seed: ctx.seed,
            streams: vec![
                ("correlation realization k".into(), format!("derive_seed(derive_seed(s, [0]), [k]), s = derive_seed(base, [{FIELDCHECK_STREAM:#x}])")),
                ("gaussian realization k".into(), "derive_seed(s, [1, k])".into()),
                ("quadruples".into(), "derive_seed(s, [2])".into()),
                ("potential dump".into(), "derive_seed(s, [3])".into()),
            ],
        },
    )?;
    let lines = report.verdicts.iter().map(Verdict::line).collect();
    Ok((Outcome { manifest, lines }, report))
}
