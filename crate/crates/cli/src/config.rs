//! Experiment configuration: a TOML file with one block per stage.
//!
//! The hash of a stage is taken over the canonical JSON rendering of the
//! typed config (defaults filled in, keys sorted, numbers in shortest
//! round-trip form) restricted to the blocks that stage reads. The seed and
//! the output block never enter a hash.

use std::path::{Path, PathBuf};

use homlab::experiments::{SweepConfig, MIN_CELLS_PER_PERIOD, MIN_REALIZATIONS};
use homlab::fields::PotentialModel;
use homlab::limit_law::MIN_COMPARISON_SAMPLES;
use homlab::solver::SolverOptions;
use homlab::{Execution, Grid, GridFunction, Pattern, TorusField};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Hex digits of the hash used in file names.
pub const HASH_LEN: usize = 12;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridBlock,
    pub coefficients: CoefficientsBlock,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialModel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<LimitBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fieldcheck: Option<FieldcheckBlock>,
    #[serde(default)]
    pub output: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    #[default]
    #[serde(alias = "unit-square")]
    UnitCube,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBlock {
    pub d: usize,
    /// Interior nodes per axis; `h = 1/(n+1)`.
    pub n: usize,
    #[serde(default)]
    pub domain: Domain,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<Pattern>,
    /// Matrix-sample file (plain text or `.json`), relative to the config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    /// Samples per axis when a built-in pattern is tabulated.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Cell-problem resolution per axis.
    #[serde(default = "default_cell_n")]
    pub cell_n: usize,
}

fn default_samples() -> usize {
    64
}

fn default_cell_n() -> usize {
    128
}

/// Named test functions on the unit cube.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NamedFunction {
    /// `1`.
    One,
    /// `exp(−8 |x − 0.3|²)`.
    GaussianBump,
    /// `x₁ + x₂²`.
    Polynomial,
    /// `Π sin(π x_k)`.
    SineProduct,
}

impl NamedFunction {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            NamedFunction::One => 1.0,
            NamedFunction::GaussianBump => (-8.0 * x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>()).exp(),
            NamedFunction::Polynomial => x[0] + x[1] * x[1],
            NamedFunction::SineProduct => x.iter().map(|v| (std::f64::consts::PI * v).sin()).product(),
        }
    }

    pub fn on(self, grid: Grid) -> GridFunction {
        GridFunction::from_fn(grid, |x| self.eval(x))
    }
}

fn default_test_functions() -> Vec<NamedFunction> {
    vec![NamedFunction::One, NamedFunction::GaussianBump, NamedFunction::Polynomial]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    /// Strictly decreasing periods.
    pub eps: Vec<f64>,
    pub n_realizations: usize,
    #[serde(default = "default_test_functions")]
    pub test_functions: Vec<NamedFunction>,
    #[serde(default = "default_source")]
    pub source: NamedFunction,
    #[serde(default = "default_s_diag")]
    pub s_diag: f64,
    #[serde(default = "yes")]
    pub neumann_terms: bool,
    #[serde(default)]
    pub common_random_numbers: bool,
    #[serde(default = "default_tol")]
    pub solver_tol: f64,
}

fn default_source() -> NamedFunction {
    NamedFunction::One
}

fn default_s_diag() -> f64 {
    0.25
}

fn yes() -> bool {
    true
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitBlock {
    #[serde(default = "default_limit_samples")]
    pub n_samples: usize,
    /// Noise is synthesized on every `stride`-th node.
    #[serde(default = "one")]
    pub stride: usize,
    /// Overrides `σ = √(∫R)` of the short-range model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    /// Overrides `κ = V₁² κ_g` of the long-range model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
}

fn default_limit_samples() -> usize {
    10_000
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldcheckBlock {
    /// Lattice side of the diagnostic realizations.
    #[serde(default = "default_side")]
    pub side: usize,
    /// Lattice spacing in correlation units.
    #[serde(default = "default_spacing")]
    pub spacing: f64,
    #[serde(default = "default_fc_realizations")]
    pub n_realizations: usize,
    #[serde(default = "default_max_lag")]
    pub max_lag: usize,
    /// Smallest distance entering the tail check.
    #[serde(default = "default_t_min")]
    pub tail_t_min: f64,
    #[serde(default = "default_quadruples")]
    pub quadruples: usize,
    /// Quadruple points lie in a box of this half-width (lattice units).
    #[serde(default = "default_spread")]
    pub quadruple_spread: i64,
    /// Lattice side of the Gaussian fields of the fourth-moment check.
    #[serde(default = "default_gaussian_side")]
    pub gaussian_side: usize,
}

fn default_side() -> usize {
    256
}
fn default_spacing() -> f64 {
    1.0
}
fn default_fc_realizations() -> usize {
    200
}
fn default_max_lag() -> usize {
    64
}
fn default_t_min() -> f64 {
    4.0
}
fn default_quadruples() -> usize {
    100
}
fn default_spread() -> i64 {
    6
}
fn default_gaussian_side() -> usize {
    48
}

impl Default for FieldcheckBlock {
    fn default() -> Self {
        FieldcheckBlock {
            side: default_side(),
            spacing: default_spacing(),
            n_realizations: default_fc_realizations(),
            max_lag: default_max_lag(),
            tail_t_min: default_t_min(),
            quadruples: default_quadruples(),
            quadruple_spread: default_spread(),
            gaussian_side: default_gaussian_side(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Bin,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// JSON is always written; CSV tables and binary dumps are optional.
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_formats() -> Vec<Format> {
    vec![Format::Json, Format::Csv, Format::Bin]
}

impl Default for OutputBlock {
    fn default() -> Self {
        OutputBlock {
            dir: default_dir(),
            formats: default_formats(),
        }
    }
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        f == Format::Json || self.formats.contains(&f)
    }
}

/// Pipeline stage; fixes the blocks entering the stage hash.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Corrector,
    Sweep,
    LimitLaw,
    FieldCheck,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Corrector => "corrector",
            Stage::Sweep => "sweep",
            Stage::LimitLaw => "limitlaw",
            Stage::FieldCheck => "fieldcheck",
        }
    }

    fn blocks(self) -> &'static [&'static str] {
        match self {
            Stage::Corrector => &["grid", "coefficients"],
            Stage::Sweep => &["grid", "coefficients", "potential", "sweep"],
            Stage::LimitLaw => &["grid", "coefficients", "potential", "sweep", "limit"],
            Stage::FieldCheck => &["grid", "potential", "fieldcheck"],
        }
    }
}

/// A parsed config together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Directory relative paths in the config resolve against.
    pub base_dir: PathBuf,
    /// SHA-256 of the coefficient file, when one is used.
    coefficient_digest: Option<String>,
}

impl LoadedConfig {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, base)
    }

    pub fn from_str(text: &str, base_dir: PathBuf) -> CliResult<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        let mut loaded = LoadedConfig {
            config,
            base_dir,
            coefficient_digest: None,
        };
        if let Some(file) = &loaded.config.coefficients.file {
            let path = loaded.base_dir.join(file);
            let bytes = std::fs::read(&path)
                .map_err(|e| CliError::config("coefficients.file", format!("cannot read {}: {e}", path.display())))?;
            loaded.coefficient_digest = Some(hex(&Sha256::digest(&bytes)));
        }
        loaded.validate_common()?;
        Ok(loaded)
    }

    /// Full-config hash (all blocks but seed and output).
    pub fn config_hash(&self) -> String {
        self.hash_of(&["grid", "coefficients", "potential", "sweep", "limit", "fieldcheck"])
    }

    pub fn stage_hash(&self, stage: Stage) -> String {
        self.hash_of(stage.blocks())
    }

    /// Canonical JSON of the listed blocks.
    pub fn canonical(&self, blocks: &[&str]) -> String {
        let full = serde_json::to_value(&self.config).expect("config serializes");
        let mut out = serde_json::Map::new();
        for b in blocks {
            if let Some(v) = full.get(*b) {
                out.insert((*b).to_string(), v.clone());
            }
        }
        if let Some(d) = &self.coefficient_digest {
            if blocks.contains(&"coefficients") {
                out.insert("coefficient_file_sha256".into(), serde_json::Value::String(d.clone()));
            }
        }
        // serde_json maps are ordered by key, so this rendering is canonical
        serde_json::to_string(&serde_json::Value::Object(out)).expect("json renders")
    }

    fn hash_of(&self, blocks: &[&str]) -> String {
        let digest = Sha256::digest(self.canonical(blocks).as_bytes());
        hex(&digest)[..HASH_LEN].to_string()
    }

    pub fn grid(&self) -> Grid {
        Grid::dirichlet(self.config.grid.d, self.config.grid.n).expect("validated grid")
    }

    pub fn coefficients(&self) -> CliResult<TorusField> {
        let c = &self.config.coefficients;
        let d = self.config.grid.d;
        let field = match (&c.pattern, &c.file) {
            (Some(p), None) => TorusField::pattern(*p, d, c.samples),
            (None, Some(f)) => TorusField::load(&self.base_dir.join(f)),
            _ => unreachable!("validated"),
        };
        let field = field.map_err(|e| CliError::config("coefficients", e))?;
        if field.dim() != d {
            return Err(CliError::config(
                "coefficients.file",
                format!("field has dimension {} but grid.d = {d}", field.dim()),
            ));
        }
        Ok(field)
    }

    pub fn potential(&self) -> CliResult<PotentialModel> {
        self.config
            .potential
            .ok_or_else(|| CliError::Config("missing [potential] block".into()))
    }

    pub fn sweep_block(&self) -> CliResult<&SweepBlock> {
        self.config
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [sweep] block".into()))
    }

    pub fn limit_block(&self) -> CliResult<&LimitBlock> {
        self.config
            .limit
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [limit] block".into()))
    }

    pub fn fieldcheck_block(&self) -> FieldcheckBlock {
        self.config.fieldcheck.clone().unwrap_or_default()
    }

    /// Checks independent of the command.
    fn validate_common(&self) -> CliResult<()> {
        let cfg = &self.config;
        let d = cfg.grid.d;
        if !(2..=3).contains(&d) {
            return Err(CliError::config("grid.d", format!("dimension must be 2 or 3, got {d}")));
        }
        if cfg.grid.n < 3 {
            return Err(CliError::config("grid.n", format!("need at least 3 interior nodes, got {}", cfg.grid.n)));
        }
        let c = &cfg.coefficients;
        match (&c.pattern, &c.file) {
            (Some(_), Some(_)) => return Err(CliError::config("coefficients", "set either pattern or file, not both")),
            (None, None) => return Err(CliError::config("coefficients", "set pattern or file")),
            _ => {}
        }
        if c.samples == 0 {
            return Err(CliError::config("coefficients.samples", "must be positive"));
        }
        if c.cell_n < 4 {
            return Err(CliError::config("coefficients.cell_n", format!("need at least 4, got {}", c.cell_n)));
        }
        if let Some(model) = &cfg.potential {
            validate_potential(model, d)?;
        }
        if let Some(s) = &cfg.sweep {
            self.validate_sweep(s)?;
        }
        if let Some(l) = &cfg.limit {
            self.validate_limit(l)?;
        }
        if let Some(f) = &cfg.fieldcheck {
            validate_fieldcheck(f)?;
            if matches!(cfg.potential, Some(PotentialModel::LongRange(_))) && f.spacing != 1.0 {
                return Err(CliError::config("fieldcheck.spacing", "long-range lattice fields use unit spacing"));
            }
        }
        Ok(())
    }

    fn validate_sweep(&self, s: &SweepBlock) -> CliResult<()> {
        let n = self.config.grid.n;
        let h = 1.0 / (n + 1) as f64;
        if s.eps.is_empty() {
            return Err(CliError::config("sweep.eps", "at least one period is needed"));
        }
        for (k, e) in s.eps.iter().enumerate() {
            if !(*e > 0.0 && e.is_finite()) {
                return Err(CliError::config("sweep.eps", format!("entry {k} must be positive, got {e}")));
            }
            if k > 0 && !(*e < s.eps[k - 1]) {
                return Err(CliError::config("sweep.eps", "periods must be strictly decreasing"));
            }
            let cells = e / h;
            if cells < MIN_CELLS_PER_PERIOD - 1e-9 {
                return Err(CliError::config(
                    "sweep.eps",
                    format!("ε = {e} has {cells:.2} grid cells per period with h = 1/{} (need {MIN_CELLS_PER_PERIOD})", n + 1),
                ));
            }
            if (cells - cells.round()).abs() > 1e-9 * cells {
                return Err(CliError::config(
                    "sweep.eps",
                    format!("ε = {e} is not a multiple of h = 1/{}, so periods do not align with the grid", n + 1),
                ));
            }
        }
        if s.n_realizations < MIN_REALIZATIONS {
            return Err(CliError::config(
                "sweep.n_realizations",
                format!("need at least {MIN_REALIZATIONS}, got {}", s.n_realizations),
            ));
        }
        if s.test_functions.is_empty() {
            return Err(CliError::config("sweep.test_functions", "at least one test function is needed"));
        }
        if !(0.0..0.5).contains(&s.s_diag) {
            return Err(CliError::config("sweep.s_diag", format!("must lie in [0, 1/2), got {}", s.s_diag)));
        }
        if !(s.solver_tol > 0.0 && s.solver_tol < 1.0) {
            return Err(CliError::config("sweep.solver_tol", format!("must lie in (0, 1), got {}", s.solver_tol)));
        }
        Ok(())
    }

    fn validate_limit(&self, l: &LimitBlock) -> CliResult<()> {
        if l.n_samples < MIN_COMPARISON_SAMPLES {
            return Err(CliError::config(
                "limit.n_samples",
                format!("need at least {MIN_COMPARISON_SAMPLES}, got {}", l.n_samples),
            ));
        }
        if let Some(s) = &self.config.sweep {
            if s.n_realizations < MIN_COMPARISON_SAMPLES {
                return Err(CliError::config(
                    "sweep.n_realizations",
                    format!(
                        "the limit-law comparison needs at least {MIN_COMPARISON_SAMPLES} realizations, got {}",
                        s.n_realizations
                    ),
                ));
            }
        }
        let cells = self.config.grid.n + 1;
        if l.stride == 0 || !cells.is_multiple_of(l.stride) || cells / l.stride < 4 {
            return Err(CliError::config(
                "limit.stride",
                format!("must divide n + 1 = {cells} and leave at least 4 coarse cells, got {}", l.stride),
            ));
        }
        for (key, v) in [("limit.sigma", l.sigma), ("limit.kappa", l.kappa)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(CliError::config(key, format!("must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    /// The core sweep configuration for this config.
    pub fn sweep_config(&self, seed: u64, execution: Execution) -> CliResult<SweepConfig> {
        let s = self.sweep_block()?;
        let grid = self.grid();
        let cfg = SweepConfig {
            grid,
            coefficients: self.coefficients()?,
            cell_n: self.config.coefficients.cell_n,
            eps_list: s.eps.clone(),
            n_realizations: s.n_realizations,
            test_functions: s.test_functions.iter().map(|f| f.on(grid)).collect(),
            source: s.source.on(grid),
            model: self.potential()?,
            s_diag: s.s_diag,
            base_seed: seed,
            neumann_terms: s.neumann_terms,
            common_random_numbers: s.common_random_numbers,
            solver: SolverOptions::with_tol(s.solver_tol),
            execution,
        };
        cfg.validate().map_err(|e| CliError::config("sweep", e))?;
        Ok(cfg)
    }
}

fn validate_potential(model: &PotentialModel, d: usize) -> CliResult<()> {
    if let PotentialModel::LongRange(l) = model {
        if !(l.alpha > 0.0 && l.alpha < d as f64) {
            return Err(CliError::config(
                "potential.alpha",
                format!("long-range exponent must satisfy 0 < α < d = {d}, got {}", l.alpha),
            ));
        }
    }
    // the Hermite gate is a finding of `fieldcheck`, not a config error
    if let PotentialModel::LongRange(l) = model {
        if !homlab::fields::hermite_coefficients(&l.phi).map(|r| r.rank_ok).unwrap_or(false) {
            return Ok(());
        }
    }
    model.validate(d).map_err(|e| CliError::config("potential", e))
}

fn validate_fieldcheck(f: &FieldcheckBlock) -> CliResult<()> {
    if f.side < 8 {
        return Err(CliError::config("fieldcheck.side", format!("need at least 8, got {}", f.side)));
    }
    if !(f.spacing > 0.0 && f.spacing.is_finite()) {
        return Err(CliError::config("fieldcheck.spacing", format!("must be positive, got {}", f.spacing)));
    }
    if f.max_lag == 0 || 4 * f.max_lag > f.side {
        return Err(CliError::config(
            "fieldcheck.max_lag",
            format!("must lie in [1, side/4], got {} with side {}", f.max_lag, f.side),
        ));
    }
    if f.n_realizations < 200 {
        return Err(CliError::config(
            "fieldcheck.n_realizations",
            format!("the fourth-moment check needs at least 200, got {}", f.n_realizations),
        ));
    }
    if f.quadruple_spread < 1 || 2 * f.quadruple_spread as usize >= f.gaussian_side {
        return Err(CliError::config(
            "fieldcheck.quadruple_spread",
            format!("must lie in [1, gaussian_side/2), got {}", f.quadruple_spread),
        ));
    }
    Ok(())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
seed = 5
[grid]
d = 2
n = 63
[coefficients]
pattern = "sin-layered"
samples = 32
cell_n = 32
[potential]
kind = "short-range"
q_bar = 1.0
m = 2.0
bump_radius = 1.0
[sweep]
eps = [0.5, 0.25, 0.125]
n_realizations = 50
"#;

    fn load(text: &str) -> CliResult<LoadedConfig> {
        LoadedConfig::from_str(text, PathBuf::new())
    }

    #[test]
    fn hash_ignores_formatting_seed_and_output() {
        let a = load(BASE).unwrap();
        let reordered = BASE.replace("seed = 5", "seed = 9\n[output]\ndir = \"elsewhere\"").replace("q_bar = 1.0", "q_bar = 1.00");
        let b = load(&reordered).unwrap();
        assert_eq!(a.config_hash(), b.config_hash());
        assert_eq!(a.stage_hash(Stage::Sweep), b.stage_hash(Stage::Sweep));
        let c = load(&BASE.replace("n_realizations = 50", "n_realizations = 51")).unwrap();
        assert_ne!(a.stage_hash(Stage::Sweep), c.stage_hash(Stage::Sweep));
        assert_eq!(a.stage_hash(Stage::Corrector), c.stage_hash(Stage::Corrector));
        assert_eq!(a.config_hash().len(), HASH_LEN);
    }

    #[test]
    fn defaults_are_explicit_in_canonical_form() {
        let a = load(BASE).unwrap();
        let canon = a.canonical(&["sweep"]);
        assert!(canon.contains("\"s_diag\":0.25"));
        assert!(canon.contains("\"test_functions\":[\"one\",\"gaussian-bump\",\"polynomial\"]"));
    }

    #[test]
    fn errors_name_the_key() {
        let cases = [
            (BASE.replace("n = 63", "n = 31"), "sweep.eps"),
            (BASE.replace("n_realizations = 50", "n_realizations = 10"), "sweep.n_realizations"),
            (BASE.replace("[0.5, 0.25, 0.125]", "[0.25, 0.5]"), "sweep.eps"),
            (BASE.replace("d = 2", "d = 4"), "grid.d"),
            (BASE.replace("cell_n = 32", "cell_n = 32\nbogus = 1"), "bogus"),
        ];
        for (text, key) in cases {
            let err = load(&text).unwrap_err();
            assert_eq!(err.exit_code(), 2);
            assert!(err.to_string().contains(key), "{err}");
        }
    }

    #[test]
    fn long_range_alpha_must_be_below_dimension() {
        let text = BASE.replace(
            "kind = \"short-range\"\nq_bar = 1.0\nm = 2.0\nbump_radius = 1.0",
            "kind = \"long-range\"\nq_bar = 1.0\nm = 2.0\nalpha = 3.0\nkappa_g = 1.0\nphi = { kind = \"tanh\", scale = 1.0 }",
        );
        let err = load(&text).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("potential.alpha") && err.to_string().contains("α < d"), "{err}");
    }

    #[test]
    fn misaligned_periods_are_rejected() {
        let err = load(&BASE.replace("[0.5, 0.25, 0.125]", "[0.5, 0.3, 0.125]")).unwrap_err();
        assert!(err.to_string().contains("multiple of h"), "{err}");
    }

    #[test]
    fn named_functions() {
        assert_eq!(NamedFunction::GaussianBump.eval(&[0.3, 0.3]), 1.0);
        assert_eq!(NamedFunction::Polynomial.eval(&[0.5, 0.5]), 0.75);
        assert!(NamedFunction::SineProduct.eval(&[0.5, 0.5]) == 1.0);
    }
}
