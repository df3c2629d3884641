use homlab::experiments::{
    fit_scaling, run_sweep, tightness_diagnostic, weak_pairing_stats, ScalingFit, SweepResult, TightnessReport,
};
use homlab::fields::PotentialModel;
use homlab::limit_law::{covariance_quadrature, LimitKind, LimitLawSpec};
use homlab::GridFunction;
use serde::{Deserialize, Serialize};

use super::{Context, Outcome, Verdict};
use crate::config::{LimitBlock, Stage};
use crate::error::{CliError, CliResult};
use crate::output::{num, SeedLedger, StageOutput};

/// Limit law matching the potential model; `None` for `ν ≡ 0`.
pub(crate) fn limit_kind(model: &PotentialModel, dim: usize, overrides: Option<&LimitBlock>) -> Option<LimitKind> {
    match model {
        PotentialModel::ShortRange(s) => Some(LimitKind::White {
            sigma: overrides.and_then(|l| l.sigma).unwrap_or_else(|| s.sigma2(dim).sqrt()),
        }),
        PotentialModel::LongRange(l) => Some(LimitKind::LongRange {
            kappa: overrides.and_then(|b| b.kappa).unwrap_or_else(|| l.kappa()),
            alpha: l.alpha,
        }),
        PotentialModel::Constant { .. } => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NamedFit {
    pub quantity: String,
    pub expected_slope: f64,
    /// `None` when the values admit no log fit (e.g. all zero).
    pub fit: Option<ScalingFit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakSummary {
    pub phi_index: usize,
    pub sd_fit: Option<ScalingFit>,
    /// `(ε, ε^{−β} Var, SE)` per level.
    pub scaled_variance: Vec<(f64, f64, f64)>,
    /// `|a − b| / min(a, b)` over the two smallest periods.
    pub plateau_variation: f64,
    /// Variance of the limit projection.
    pub quadrature: Option<f64>,
    /// Smallest-period scaled variance over the quadrature.
    pub ratio_to_quadrature: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub model: String,
    pub dim: usize,
    pub n: usize,
    pub eps: Vec<f64>,
    pub n_realizations: usize,
    pub base_seed: u64,
    pub a_bar: Vec<f64>,
    pub q_bar: f64,
    pub variance_exponent: f64,
    pub limit: Option<LimitKind>,
    pub fits: Vec<NamedFit>,
    pub weak: Vec<WeakSummary>,
    pub tightness: Option<TightnessReport>,
    pub failures: usize,
    pub verdicts: Vec<Verdict>,
}

impl SweepSummary {
    pub fn fit(&self, quantity: &str) -> Option<&ScalingFit> {
        self.fits.iter().find(|f| f.quantity == quantity)?.fit.as_ref()
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

fn named_fit(quantity: &str, expected: f64, eps: &[f64], values: &[f64]) -> NamedFit {
    match fit_scaling(eps, values) {
        Ok(fit) => NamedFit {
            quantity: quantity.into(),
            expected_slope: expected,
            fit: Some(fit),
            note: None,
        },
        Err(e) => NamedFit {
            quantity: quantity.into(),
            expected_slope: expected,
            fit: None,
            note: Some(e.to_string()),
        },
    }
}

pub fn summarize(
    result: &SweepResult,
    u: &GridFunction,
    limit: Option<LimitKind>,
    phis: &[GridFunction],
) -> CliResult<SweepSummary> {
    let eps = result.eps_list();
    let dim = result.dim as f64;
    let beta = result.variance_exponent();
    let long = matches!(result.model, PotentialModel::LongRange(_));
    let energy_target = if long { beta / 2.0 } else { (dim / 2.0).min(2.0) };
    let col = |f: &dyn Fn(&homlab::experiments::LevelRecord) -> Option<f64>| -> Option<Vec<f64>> {
        result.levels.iter().map(f).collect()
    };

    let mut fits = vec![
        named_fit("periodic_error", 1.0, &eps, &col(&|l| Some(l.periodic_error)).unwrap()),
        named_fit("mean_error", 1.0, &eps, &col(&|l| Some(l.mean_error)).unwrap()),
        named_fit("energy", energy_target, &eps, &col(&|l| Some(l.energy.mean)).unwrap()),
    ];
    if let Some(w) = col(&|l| l.w_norm.map(|e| e.mean)) {
        fits.push(named_fit("w_norm", energy_target, &eps, &w));
    }
    if let Some(s) = col(&|l| l.second_term.map(|e| e.mean)) {
        fits.push(named_fit("second_term", if long { beta } else { dim }, &eps, &s));
    }
    if let Some(r) = col(&|l| l.remainder.map(|e| e.mean)) {
        fits.push(named_fit("remainder", if long { 1.5 * beta } else { 1.5 * dim }, &eps, &r));
    }

    let spec = match limit {
        Some(kind) => Some(LimitLawSpec::new(kind, &result.a_bar, result.q_bar, u.clone())?),
        None => None,
    };
    let mut weak = Vec::new();
    for (i, phi) in phis.iter().enumerate() {
        let stats = weak_pairing_stats(result, i)?;
        let scaled: Vec<(f64, f64, f64)> = stats
            .levels
            .iter()
            .map(|l| (l.eps, l.scaled_variance, l.scaled_variance_se))
            .collect();
        let k = scaled.len();
        let plateau_variation = if k >= 2 {
            let (a, b) = (scaled[k - 2].1, scaled[k - 1].1);
            if a == 0.0 && b == 0.0 {
                0.0
            } else {
                (a - b).abs() / a.min(b)
            }
        } else {
            0.0
        };
        let quadrature = match &spec {
            Some(s) => Some(covariance_quadrature(s, phi, phi)?),
            None => None,
        };
        let ratio = quadrature.map(|q| scaled[k - 1].1 / q);
        weak.push(WeakSummary {
            phi_index: i,
            sd_fit: stats.sd_fit().ok(),
            scaled_variance: scaled,
            plateau_variation,
            quadrature,
            ratio_to_quadrature: ratio,
        });
    }
    // without fluctuations the max/min ratio is 0/0
    let tightness = match limit {
        Some(_) => tightness_diagnostic(result, result.s_diag).ok(),
        None => None,
    };

    let mut summary = SweepSummary {
        model: result.model.name().into(),
        dim: result.dim,
        n: result.n,
        eps,
        n_realizations: result.levels.first().map(|l| l.n_realizations).unwrap_or(0),
        base_seed: result.base_seed,
        a_bar: result.a_bar.clone(),
        q_bar: result.q_bar,
        variance_exponent: beta,
        limit,
        fits,
        weak,
        tightness,
        failures: result.failures.len(),
        verdicts: Vec::new(),
    };
    summary.verdicts = verdicts(&summary, long, energy_target);
    Ok(summary)
}

fn band(name: &str, fit: Option<&ScalingFit>, lo: f64, hi: f64, min_r2: Option<f64>) -> Option<Verdict> {
    let f = fit?;
    let mut pass = (lo..=hi).contains(&f.slope);
    let mut detail = format!("slope {:.3} ± {:.3} in [{lo}, {hi}]", f.slope, f.slope_se);
    if let Some(r) = min_r2 {
        pass &= f.r2 > r;
        detail.push_str(&format!(", r² {:.4} > {r}", f.r2));
    }
    Some(Verdict::new(name, pass, detail))
}

fn verdicts(s: &SweepSummary, long: bool, energy_target: f64) -> Vec<Verdict> {
    let mut v = Vec::new();
    v.extend(band("periodic-rate", s.fit("periodic_error"), 0.85, 1.15, Some(0.98)));
    v.extend(band("mean-error", s.fit("mean_error"), 0.8, 1.2, None));
    let half = if long { 0.15 } else { 0.2 };
    v.extend(band("energy", s.fit("energy"), energy_target - half, energy_target + half, None));
    if !long && s.limit.is_some() {
        let target = s.variance_exponent / 2.0;
        for w in &s.weak {
            v.extend(band(&format!("weak-sd-phi{}", w.phi_index), w.sd_fit.as_ref(), target - 0.2, target + 0.2, None));
            v.push(Verdict::new(
                format!("weak-plateau-phi{}", w.phi_index),
                w.plateau_variation < 0.3,
                format!("scaled variance varies by {:.1}% (< 30%) over the two smallest ε", 100.0 * w.plateau_variation),
            ));
        }
        if let (Some(second), Some(w)) = (s.fit("second_term"), s.fit("w_norm")) {
            let lo = 0.8 * s.dim as f64;
            v.push(Verdict::new(
                "neumann-hierarchy",
                second.slope >= lo && second.slope - w.slope >= 0.5,
                format!("second-term slope {:.3} ≥ {lo}, gap to leading term {:.3} ≥ 0.5", second.slope, second.slope - w.slope),
            ));
        }
        if let Some(t) = &s.tightness {
            v.push(Verdict::new(
                "tightness",
                t.max_min_ratio < 3.0,
                format!("H^{} diagnostic max/min ratio {:.3} < 3", t.s, t.max_min_ratio),
            ));
        }
    }
    if long {
        for w in &s.weak {
            if let Some(r) = w.ratio_to_quadrature {
                v.push(Verdict::new(
                    format!("long-range-weak-variance-phi{}", w.phi_index),
                    (r - 1.0).abs() < 0.25,
                    format!("scaled variance / quadrature = {r:.3} within 25% at the smallest ε"),
                ));
            }
        }
    }
    v
}

pub fn run_sweep_command(ctx: &Context) -> CliResult<(Outcome, SweepSummary)> {
    let loaded = &ctx.loaded;
    let cfg = loaded.sweep_config(ctx.seed, ctx.execution())?;
    let result = run_sweep(&cfg)?;
    let u = result
        .homogenized
        .clone()
        .ok_or_else(|| CliError::Runtime("sweep returned no homogenized solution".into()))?;
    let limit = limit_kind(&cfg.model, cfg.grid.dim, None);
    let summary = summarize(&result, &u, limit, &cfg.test_functions)?;

    let mut out = StageOutput::new(loaded, Stage::Sweep, ctx.seed, &ctx.out)?;
    out.json("_result", &result)?;
    out.json("_summary", &summary)?;
    write_tables(&mut out, &result, &summary)?;
    out.binary("_homogenized", &u)?;
    for (k, l) in result.levels.iter().enumerate() {
        if let Some(m) = &l.mean_field {
            out.binary(&format!("_mean_eps{k}"), m)?;
        }
    }
    let manifest = out.finish(
        ctx.jobs,
        SeedLedger {
            base_seed: ctx.seed,
            streams: vec![(
                "realization".into(),
                if cfg.common_random_numbers {
                    "derive_seed(base, [r]) shared by all levels".into()
                } else {
                    "derive_seed(base, [level, r])".into()
                },
            )],
        },
    )?;

    let mut lines: Vec<String> = summary
        .fits
        .iter()
        .map(|f| match &f.fit {
            Some(fit) => format!("{}: slope {:.3} (expected {:.2}), r² {:.3}", f.quantity, fit.slope, f.expected_slope, fit.r2),
            None => format!("{}: no fit ({})", f.quantity, f.note.as_deref().unwrap_or("")),
        })
        .collect();
    lines.extend(summary.verdicts.iter().map(Verdict::line));
    if !result.failures.is_empty() {
        let list: Vec<String> = result
            .failures
            .iter()
            .map(|f| {
                format!(
                    "ε = {}, realization {}, seed {}: {}",
                    f.eps,
                    f.realization.map_or("-".into(), |r| r.to_string()),
                    f.seed.map_or("-".into(), |s| s.to_string()),
                    f.message
                )
            })
            .collect();
        return Err(CliError::Runtime(format!(
            "{} level(s) failed (outputs for the other levels were written):\n{}",
            list.len(),
            list.join("\n")
        )));
    }
    Ok((Outcome { manifest, lines }, summary))
}

fn opt(e: Option<homlab::experiments::Estimate>) -> [String; 2] {
    match e {
        Some(e) => [num(e.mean), num(e.se)],
        None => [String::new(), String::new()],
    }
}

fn write_tables(out: &mut StageOutput, result: &SweepResult, summary: &SweepSummary) -> CliResult<()> {
    let rows = result
        .levels
        .iter()
        .map(|l| {
            let mut r = vec![num(l.eps), num(l.periodic_error), num(l.mean_error), num(l.energy.mean), num(l.energy.se)];
            for e in [l.w_norm, l.second_term, l.remainder, l.l2_diag, l.hs_diag] {
                r.extend(opt(e));
            }
            r
        })
        .collect();
    out.csv(
        "_levels",
        &[
            "eps", "periodic_error", "mean_error", "energy", "energy_se", "w_norm", "w_norm_se", "second_term",
            "second_term_se", "remainder", "remainder_se", "l2_diag", "l2_diag_se", "hs_diag", "hs_diag_se",
        ],
        rows,
    )?;

    let beta = result.variance_exponent();
    let mut rows = Vec::new();
    for l in &result.levels {
        let scale = l.eps.powf(-beta / 2.0);
        for (i, p) in l.pairings.iter().enumerate() {
            for (r, v) in p.iter().enumerate() {
                rows.push(vec![num(l.eps), r.to_string(), l.realizations[r].seed.to_string(), i.to_string(), num(*v), num(scale * v)]);
            }
        }
    }
    out.csv("_pairings", &["eps", "realization", "seed", "phi_index", "value", "scaled"], rows)?;

    let rows = summary
        .fits
        .iter()
        .filter_map(|f| {
            f.fit.as_ref().map(|fit| {
                vec![f.quantity.clone(), num(f.expected_slope), num(fit.slope), num(fit.slope_se), num(fit.intercept), num(fit.r2)]
            })
        })
        .collect();
    out.csv("_fits", &["quantity", "expected_slope", "slope", "slope_se", "intercept", "r2"], rows)?;

    let mut rows = Vec::new();
    for i in 0..summary.weak.len() {
        for l in weak_pairing_stats(result, i)?.levels {
            rows.push(vec![
                i.to_string(),
                num(l.eps),
                num(l.variance),
                num(l.variance_se),
                num(l.scaled_variance),
                num(l.scaled_variance_se),
                num(l.sd),
                num(l.skewness),
                num(l.excess_kurtosis),
            ]);
        }
    }
    out.csv(
        "_weak",
        &["phi_index", "eps", "variance", "variance_se", "scaled_variance", "scaled_variance_se", "sd", "skewness", "excess_kurtosis"],
        rows,
    )
}
