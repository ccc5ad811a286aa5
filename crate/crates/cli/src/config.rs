//! Run configuration: TOML file plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use bhchain::dynamics::{Ansatz, IntegrateOptions, SteadyStateOptions};
use bhchain::model::{default_border, ChainParams, Gauge, ProfileKind};
use bhchain::oracle::FockConfig;
use bhchain::sweep::{ScalingOptions, SweepOptions};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("bad override `{0}`: expected section.key=value")]
    Override(String),
    #[error("invalid value for {field}: {message}")]
    Invalid { field: &'static str, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub chain: ChainSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub scaling: ScalingSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    #[serde(rename = "N")]
    pub sites: usize,
    pub delta_base: f64,
    pub epsilon_base: f64,
    #[serde(default = "one")]
    pub hopping: f64,
    #[serde(default = "third_pi")]
    pub phi: f64,
    #[serde(default = "reference_kerr")]
    pub kerr: f64,
    #[serde(default = "one")]
    pub kappa: f64,
    /// Defaults to `max(2, round(N/8))`.
    #[serde(default)]
    pub border: Option<usize>,
    #[serde(default = "tanh_border")]
    pub profile: ProfileKind,
    #[serde(default = "hopping_phase")]
    pub gauge: Gauge,
}

fn one() -> f64 {
    1.0
}
fn third_pi() -> f64 {
    std::f64::consts::FRAC_PI_3
}
fn reference_kerr() -> f64 {
    -2e-4
}
fn tanh_border() -> ProfileKind {
    ProfileKind::TanhBorder
}
fn hopping_phase() -> Gauge {
    Gauge::HoppingPhase
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorSection {
    pub dt_init: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub t_max: f64,
    pub tol_ss: f64,
    pub window: f64,
    pub settle: Option<f64>,
    pub sample_interval: f64,
    pub ansatz: Ansatz,
    pub divergence_guard: f64,
    pub tail_fraction: f64,
    pub oscillation_band: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        let s = SteadyStateOptions::default();
        Self {
            dt_init: s.integrate.dt_init,
            rel_tol: s.integrate.rel_tol,
            abs_tol: s.integrate.abs_tol,
            t_max: s.integrate.t_max,
            tol_ss: s.tol_ss,
            window: s.window,
            settle: s.settle,
            sample_interval: s.integrate.sample_interval,
            ansatz: s.integrate.ansatz,
            divergence_guard: s.divergence_guard,
            tail_fraction: s.tail_fraction,
            oscillation_band: s.oscillation_band,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub delta_range: [f64; 2],
    pub epsilon_range: [f64; 2],
    pub delta_points: usize,
    pub epsilon_points: usize,
    /// `0` uses every available core.
    pub workers: usize,
    pub warm_start: bool,
    /// ε step of the per-site critical-drive scan.
    pub epsilon_step: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            delta_range: [0.0, 1.0],
            epsilon_range: [0.0, 100.0],
            delta_points: 11,
            epsilon_points: 21,
            workers: 0,
            warm_start: false,
            epsilon_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingSection {
    pub sizes: Vec<usize>,
    pub epsilon_range: [f64; 2],
    pub coarse_step: f64,
    pub fine_step: f64,
}

impl Default for ScalingSection {
    fn default() -> Self {
        let s = ScalingOptions::default();
        Self {
            sizes: vec![30, 40, 50, 60],
            epsilon_range: [s.epsilon_range.0, s.epsilon_range.1],
            coarse_step: s.coarse_step,
            fine_step: s.fine_step,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub kerr_values: Vec<f64>,
    pub fock_dim: usize,
    pub tail_tol: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        let f = FockConfig::default();
        Self {
            kerr_values: vec![0.0, -1e-3, -1e-2, -2e-2],
            fock_dim: f.dim,
            tail_tol: f.tail_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

fn ordered(field: &'static str, r: [f64; 2]) -> Result<(), ConfigError> {
    if r.iter().all(|v| v.is_finite()) && r[0] <= r[1] {
        Ok(())
    } else {
        Err(invalid(field, format!("range [{}, {}] is not ordered", r[0], r[1])))
    }
}

fn positive(field: &'static str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be positive, got {v}")))
    }
}

impl RunConfig {
    /// Reads `path` (if any), applies overrides in order and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, ConfigError> {
        let (origin, mut table) = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.to_path_buf(),
                    source,
                })?;
                let table = text.parse::<toml::Table>().map_err(|e| ConfigError::Parse {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                (p.display().to_string(), table)
            }
            None => ("<overrides>".to_string(), toml::Table::new()),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| ConfigError::Parse {
            path: origin,
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let c = &self.chain;
        if c.sites == 0 {
            return Err(invalid("chain.N", "must be at least 1"));
        }
        self.params()
            .validate()
            .map_err(|e| invalid("chain", e.to_string()))?;
        let i = &self.integrator;
        positive("integrator.rel_tol", i.rel_tol)?;
        positive("integrator.abs_tol", i.abs_tol)?;
        positive("integrator.t_max", i.t_max)?;
        positive("integrator.tol_ss", i.tol_ss)?;
        positive("integrator.divergence_guard", i.divergence_guard)?;
        if let Some(h) = i.dt_init {
            positive("integrator.dt_init", h)?;
        }
        if let Some(s) = i.settle {
            if !(s >= 0.0) {
                return Err(invalid("integrator.settle", "must be non-negative"));
            }
        }
        if !(i.window >= 0.0) {
            return Err(invalid("integrator.window", "must be non-negative"));
        }
        if !(i.sample_interval >= 0.0) {
            return Err(invalid("integrator.sample_interval", "must be non-negative"));
        }
        if !(i.tail_fraction > 0.0 && i.tail_fraction <= 1.0) {
            return Err(invalid("integrator.tail_fraction", "must lie in (0, 1]"));
        }
        let s = &self.sweep;
        ordered("sweep.delta_range", s.delta_range)?;
        ordered("sweep.epsilon_range", s.epsilon_range)?;
        if s.delta_points == 0 || s.epsilon_points == 0 {
            return Err(invalid("sweep", "grid sizes must be at least 1"));
        }
        positive("sweep.epsilon_step", s.epsilon_step)?;
        let sc = &self.scaling;
        ordered("scaling.epsilon_range", sc.epsilon_range)?;
        positive("scaling.coarse_step", sc.coarse_step)?;
        positive("scaling.fine_step", sc.fine_step)?;
        if sc.sizes.iter().any(|&n| n < 2) {
            return Err(invalid("scaling.sizes", "every size must be at least 2"));
        }
        if self.oracle.fock_dim < 4 {
            return Err(invalid("oracle.fock_dim", "must be at least 4"));
        }
        positive("oracle.tail_tol", self.oracle.tail_tol)?;
        Ok(())
    }

    pub fn params(&self) -> ChainParams {
        let c = &self.chain;
        ChainParams {
            sites: c.sites,
            hopping: c.hopping,
            phi: c.phi,
            kerr: c.kerr,
            kappa: c.kappa,
            delta: c.delta_base,
            epsilon: c.epsilon_base,
            border: c.border.unwrap_or_else(|| default_border(c.sites)),
            profile: c.profile,
            gauge: c.gauge,
        }
    }

    pub fn steady(&self) -> SteadyStateOptions {
        let i = &self.integrator;
        SteadyStateOptions {
            integrate: IntegrateOptions {
                dt_init: i.dt_init,
                rel_tol: i.rel_tol,
                abs_tol: i.abs_tol,
                t_max: i.t_max,
                sample_interval: i.sample_interval,
                ansatz: i.ansatz,
            },
            tol_ss: i.tol_ss,
            window: i.window,
            divergence_guard: i.divergence_guard,
            tail_fraction: i.tail_fraction,
            oscillation_band: i.oscillation_band,
            settle: i.settle,
        }
    }

    pub fn sweep_options(&self) -> SweepOptions {
        SweepOptions {
            steady: self.steady(),
            warm_start: self.sweep.warm_start,
            workers: self.sweep.workers,
        }
    }

    pub fn scaling_options(&self) -> ScalingOptions {
        let s = &self.scaling;
        ScalingOptions {
            epsilon_range: (s.epsilon_range[0], s.epsilon_range[1]),
            coarse_step: s.coarse_step,
            fine_step: s.fine_step,
        }
    }

    pub fn fock(&self) -> FockConfig {
        FockConfig {
            dim: self.oracle.fock_dim,
            tail_tol: self.oracle.tail_tol,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

/// `linspace` over a closed range; a single point sits at the lower end.
pub fn linspace(range: [f64; 2], points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![range[0]];
    }
    let step = (range[1] - range[0]) / (points - 1) as f64;
    (0..points).map(|i| range[0] + i as f64 * step).collect()
}

/// Sets `section.key` to the TOML value in `value`; bare words are strings.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(spec.to_string()));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let (last, parents) = keys.split_last().expect("non-empty path");
    let mut cur = table;
    for k in parents {
        cur = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| ConfigError::Override(spec.to_string()))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
