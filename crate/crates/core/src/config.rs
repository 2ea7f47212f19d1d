//! TOML experiment files.
//!
//! ```toml
//! [experiment]
//! name = "decay"
//! seed = 7
//! checks = ["decay-32"]
//!
//! [grid]
//! dim = 1
//! n = 128
//!
//! [operator]
//! form = "fractional_laplacian"
//! alpha = 0.5
//!
//! [initial]
//! kind = "rough"
//! mollify = 0.01
//!
//! [time]
//! dt = 0.01
//! t_final = 1.0
//! ```
//!
//! Unknown keys are rejected in every section. Random seeds inside
//! `[initial]` and `[drift]` are offsets added to the experiment seed (the
//! drift stream is additionally shifted by one).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{LevyKernelSpec, OperatorSection};
use crate::quadrature::QuadratureConfig;
use crate::report::config_hash;
use crate::solver::{DriftSpec, ForcingSpec, InitialSpec, SolverConfig};
use crate::spectral::Grid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: String,
    #[serde(default)]
    pub checks: Vec<String>,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_output() -> String {
    "out".into()
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            name: default_name(),
            seed: 0,
            output: default_output(),
            checks: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub dim: usize,
    pub n: usize,
    #[serde(default = "one")]
    pub period_scale: f64,
}

fn one() -> f64 {
    1.0
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.period_scale)
            .map_err(|e| Error::Config(format!("[grid] {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default)]
    pub record_times: Vec<f64>,
    /// Adds the log-spaced record times `T·2^{−i/2}`, `i = 1..=log_records`.
    #[serde(default)]
    pub log_records: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn default_cfl() -> f64 {
    0.5
}

fn default_record_every() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_lp_orders")]
    pub lp_orders: Vec<f64>,
}

fn default_lp_orders() -> Vec<f64> {
    vec![2.0]
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            lp_orders: default_lp_orders(),
        }
    }
}

/// `[initial]`: an [`InitialSpec`] plus the optional `mollify` scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "toml::Table", into = "toml::Table")]
pub struct InitialSection {
    pub spec: InitialSpec,
    pub mollify: Option<f64>,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            spec: InitialSpec::Zero {},
            mollify: None,
        }
    }
}

impl TryFrom<toml::Table> for InitialSection {
    type Error = String;

    fn try_from(mut table: toml::Table) -> std::result::Result<Self, String> {
        let mollify = match table.remove("mollify") {
            None => None,
            Some(v) => Some(
                v.as_float()
                    .or_else(|| v.as_integer().map(|i| i as f64))
                    .ok_or_else(|| format!("[initial] key 'mollify' must be a number, got {v}"))?,
            ),
        };
        let spec = InitialSpec::deserialize(toml::Value::Table(table))
            .map_err(|e| format!("[initial] {e}"))?;
        Ok(Self { spec, mollify })
    }
}

impl From<InitialSection> for toml::Table {
    fn from(s: InitialSection) -> Self {
        let mut t = toml::Table::try_from(&s.spec).expect("initial spec serializes to a table");
        if let Some(m) = s.mollify {
            t.insert("mollify".into(), toml::Value::Float(m));
        }
        t
    }
}

/// Parameters of the estimate checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct HarnessSection {
    /// Smoothing exponent `s`.
    pub s: Option<f64>,
    /// Integrability order of the `L^p` path.
    pub p: Option<f64>,
    /// Start `t̃` of the `C^{1,γ}` window.
    pub t_tilde: Option<f64>,
    /// Target `γ`.
    pub gamma: Option<f64>,
    /// Hölder exponent of the drift when it is not declared by `[drift]`.
    pub delta: Option<f64>,
    /// Waypoint overrides.
    pub waypoints: Option<Vec<f64>>,
    /// Number of randomized runs (maximum principle preset).
    pub runs: Option<usize>,
    /// Amplitude of the weak drift in the decay preset.
    pub weak_drift: Option<f64>,
    pub lambdas: Option<Vec<f64>>,
    pub ls: Option<Vec<f64>>,
    pub ts: Option<Vec<f64>>,
    pub quad_tol: Option<f64>,
    /// Golden constants file (relative to the config file).
    pub golden: Option<String>,
    /// Relative slack of golden comparisons.
    pub golden_slack: Option<f64>,
    /// Accept `δ` at the endpoint `1 − α + σ`.
    #[serde(default)]
    pub allow_endpoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `epsilon`, `n`, `dt` or `seed`.
    pub axis: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SymbolSection {
    /// Log-damped `λ` values; one symbol table per value.
    pub lambdas: Option<Vec<f64>>,
    /// Evaluate by quadrature of the kernel even when a closed form exists.
    #[serde(default)]
    pub from_kernel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecomposeSection {
    #[serde(default = "default_s")]
    pub s: f64,
    #[serde(default = "infinity")]
    pub p: f64,
    #[serde(default = "infinity")]
    pub r: f64,
}

fn default_s() -> f64 {
    0.5
}

fn infinity() -> f64 {
    f64::INFINITY
}

impl Default for DecomposeSection {
    fn default() -> Self {
        Self {
            s: default_s(),
            p: infinity(),
            r: infinity(),
        }
    }
}

/// Whole experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    pub grid: Option<GridSection>,
    pub operator: Option<OperatorSection>,
    #[serde(default)]
    pub drift: DriftSpec,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub initial: InitialSection,
    pub time: Option<TimeSection>,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub harness: HarnessSection,
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub symbol: SymbolSection,
    #[serde(default)]
    pub decompose: DecomposeSection,
    pub quadrature: Option<QuadratureConfig>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// Parse TOML text; `context` names the source in diagnostics.
    pub fn from_toml(text: &str, context: &str, base_dir: &Path) -> Result<Self> {
        let mut c: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        c.base_dir = base_dir.to_path_buf();
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &path.display().to_string(), &base)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment config serializes")
    }

    /// Hash of every semantic field (the output directory is excluded).
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.experiment.output.clear();
        config_hash(&c)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| Error::Config("missing [grid] section".into()))?
            .grid()
    }

    pub fn operator_spec(&self) -> Result<LevyKernelSpec> {
        let g = self.grid()?;
        self.operator
            .as_ref()
            .ok_or_else(|| Error::Config("missing [operator] section".into()))?
            .to_spec(g.dim(), &self.base_dir)
    }

    pub fn quadrature(&self) -> QuadratureConfig {
        self.quadrature.unwrap_or_default()
    }

    pub fn time(&self) -> Result<&TimeSection> {
        self.time
            .as_ref()
            .ok_or_else(|| Error::Config("missing [time] section".into()))
    }

    pub fn initial_spec(&self) -> InitialSpec {
        let spec = self.initial.spec.clone();
        match spec.seed() {
            Some(offset) => spec.with_seed(self.experiment.seed.wrapping_add(offset)),
            None => spec,
        }
    }

    pub fn drift_spec(&self) -> DriftSpec {
        let spec = self.drift.clone();
        match spec.seed() {
            Some(offset) => {
                spec.with_seed(self.experiment.seed.wrapping_add(1).wrapping_add(offset))
            }
            None => spec,
        }
    }

    /// Declared drift exponent: `[drift]` first, then `[harness] delta`.
    pub fn drift_delta(&self) -> Option<f64> {
        self.drift.declared_delta().or(self.harness.delta)
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let grid = self.grid()?;
        let time = self.time()?;
        let mut record_times = time.record_times.clone();
        record_times
            .extend((1..=time.log_records).map(|i| time.t_final * 2f64.powf(-(i as f64) / 2.0)));
        record_times.sort_by(f64::total_cmp);
        let config = SolverConfig {
            grid,
            operator: self.operator_spec()?,
            epsilon: time.epsilon,
            dt: time.dt,
            t_final: time.t_final,
            cfl: time.cfl,
            drift: self.drift_spec(),
            forcing: self.forcing.clone(),
            initial: self.initial_spec(),
            mollify: self.initial.mollify,
            record_every: time.record_every,
            record_times,
            snapshot_times: time.snapshot_times.clone(),
            lp_orders: self.output.lp_orders.clone(),
            quadrature: self.quadrature(),
            base_dir: self.base_dir.clone(),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.experiment.seed = seed;
        self
    }

    pub fn output_dir(&self) -> PathBuf {
        self.base_dir.join(&self.experiment.output)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = r#"
[experiment]
name = "t"
seed = 3

[grid]
dim = 1
n = 64

[operator]
form = "fractional_laplacian"
alpha = 0.5

[drift]
mode = "weierstrass"
amplitude = 0.2
delta = 0.8

[initial]
kind = "rough"
mollify = 0.05

[time]
dt = 0.01
t_final = 0.5
log_records = 4
"#;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::from_toml(text, "test", Path::new("."))
    }

    #[test]
    fn basic_config_builds_a_solver_config() {
        let c = parse(BASIC).unwrap();
        let s = c.solver_config().unwrap();
        assert_eq!(s.mollify, Some(0.05));
        assert_eq!(
            s.initial,
            InitialSpec::Rough {
                amplitude: 1.0,
                seed: 3
            }
        );
        assert_eq!(s.drift.seed(), Some(4));
        assert_eq!(s.record_times.len(), 4);
        assert!((s.record_times[3] - 0.5 / 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let bad = BASIC.replace("dt = 0.01", "dt = 0.01\nstep = 2");
        let e = parse(&bad).unwrap_err().to_string();
        assert!(e.contains("step") && e.contains("line"), "{e}");
        let bad = BASIC.replace("mollify = 0.05", "mollify = 0.05\nsede = 1");
        assert!(parse(&bad).is_err());
        let bad = BASIC.replace("[drift]", "[drift]\nfoo = 1");
        assert!(parse(&bad).is_err());
    }

    #[test]
    fn missing_alpha_is_rejected() {
        let bad = BASIC.replace("alpha = 0.5\n", "");
        let e = parse(&bad).unwrap_err().to_string();
        assert!(e.contains("alpha"), "{e}");
    }

    #[test]
    fn hash_tracks_semantic_fields_only() {
        let a = parse(BASIC).unwrap();
        let mut b = a.clone();
        b.experiment.output = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        let c = a.clone().with_seed(4);
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.initial.mollify = Some(0.1);
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn round_trips_through_toml() {
        let a = parse(BASIC).unwrap();
        let b = parse(&a.to_toml()).unwrap();
        assert_eq!(a, b);
    }
}
