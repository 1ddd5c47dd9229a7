//! Run configuration.
//!
//! A configuration is a TOML document with the sections `[physics]`,
//! `[discretization]`, `[integrator]`, `[analysis]`, `[output]` and an
//! optional `[sweep]`. Every physical key carries its unit in the name and
//! all frequencies are angular (s⁻¹), so a lab frequency in Hz must be
//! multiplied by 2π first. Unknown keys are rejected.
//!
//! The `config` object of a `meta.json` written by `simulate` is accepted
//! in place of a TOML file.

use std::fs;
use std::path::{Path, PathBuf};

use atomlaser_core::dynamics::IntegratorSettings;
use atomlaser_core::params::{EtaSchedule, PhysicalParams, SODIUM_MASS, SODIUM_SCATTERING_LENGTH};
use atomlaser_core::peaks::PeakConfig;
use atomlaser_core::RunSetup;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("--override {0}: expected key=value")]
    OverrideSyntax(String),
    #[error("--override {key}: {message}")]
    OverrideKey { key: String, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicsConfig {
    pub mass_kg: f64,
    pub scattering_length_m: f64,
    pub omega_z_per_s: f64,
    pub lambda_ratio: f64,
    pub eta: f64,
    /// Knots `[t_s, eta]` of a piecewise-linear separation; replaces `eta`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_schedule: Option<Vec<[f64; 2]>>,
    #[serde(rename = "Lambda_per_s2")]
    pub lambda_per_s2: f64,
    #[serde(rename = "N_total")]
    pub n_total: f64,
    pub alpha0_frac: f64,
    pub beta0_frac: f64,
    pub phi0_rad: f64,
    pub tau_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_override_per_s: Option<f64>,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self::from_params(&PhysicalParams::default())
    }
}

impl PhysicsConfig {
    pub fn from_params(p: &PhysicalParams) -> Self {
        Self {
            mass_kg: p.mass,
            scattering_length_m: p.scattering_length,
            omega_z_per_s: p.omega_z,
            lambda_ratio: p.lambda_ratio,
            eta: p.eta,
            eta_schedule: p.eta_schedule.as_ref().map(|s| s.knots().iter().map(|&(t, e)| [t, e]).collect()),
            lambda_per_s2: p.outcoupling,
            n_total: p.n_total,
            alpha0_frac: p.alpha0_frac,
            beta0_frac: p.beta0_frac,
            phi0_rad: p.phi0,
            tau_s: p.tau,
            kappa_override_per_s: p.kappa_override,
        }
    }

    pub fn to_params(&self) -> Result<PhysicalParams, ConfigError> {
        let eta_schedule = match &self.eta_schedule {
            Some(knots) => Some(
                EtaSchedule::new(knots.iter().map(|&[t, e]| (t, e)).collect())
                    .map_err(|e| ConfigError::Invalid(format!("physics.eta_schedule: {e}")))?,
            ),
            None => None,
        };
        let p = PhysicalParams {
            mass: self.mass_kg,
            scattering_length: self.scattering_length_m,
            omega_z: self.omega_z_per_s,
            lambda_ratio: self.lambda_ratio,
            eta: self.eta,
            eta_schedule,
            outcoupling: self.lambda_per_s2,
            n_total: self.n_total,
            alpha0_frac: self.alpha0_frac,
            beta0_frac: self.beta0_frac,
            phi0: self.phi0_rad,
            tau: self.tau_s,
            kappa_override: self.kappa_override_per_s,
        };
        p.check().map_err(|e| ConfigError::Invalid(format!("[physics] {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub modes: usize,
    pub omega_up_per_s: f64,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        let s = RunSetup::default();
        Self { modes: s.modes, omega_up_per_s: s.omega_up }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    pub sample_dt_s: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let s = IntegratorSettings::default();
        Self { rtol: s.rtol, atol: s.atol, sample_dt_s: s.sample_dt }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Minimum peak prominence, as a fraction of the spectrum maximum.
    pub peak_threshold: f64,
    /// Minimum dip prominence, as a fraction of the spectrum maximum.
    pub dip_threshold: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let p = PeakConfig::default();
        Self { peak_threshold: p.peak_threshold, dip_threshold: p.dip_threshold }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    /// `trajectory.csv` and `spectrum.csv`.
    Csv,
    /// `meta.json`.
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), formats: vec![Format::Csv, Format::Json] }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

/// One sweep dimension: explicit `values`, or `linspace = [start, stop, count]`
/// with both ends included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linspace: Option<(f64, f64, usize)>,
}

impl AxisConfig {
    pub fn resolve(&self) -> Result<Vec<f64>, ConfigError> {
        match (&self.values, self.linspace) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some((start, stop, count))) => Ok(match count {
                0 => Vec::new(),
                1 => vec![start],
                _ => (0..count).map(|i| start + (stop - start) * i as f64 / (count - 1) as f64).collect(),
            }),
            _ => Err(ConfigError::Invalid(format!(
                "sweep axis {:?}: give exactly one of `values` or `linspace`",
                self.name
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub axes: Vec<AxisConfig>,
    pub observables: Vec<String>,
    pub max_points: usize,
    /// Also write the simulate outputs of every grid point to `point_NNNNN/`.
    pub per_point_output: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            axes: Vec::new(),
            observables: Vec::new(),
            max_points: crate::sweep::DEFAULT_MAX_POINTS,
            per_point_output: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: PhysicsConfig,
    pub discretization: DiscretizationConfig,
    pub integrator: IntegratorConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "physics",
        &[
            "mass_kg",
            "scattering_length_m",
            "omega_z_per_s",
            "lambda_ratio",
            "eta",
            "eta_schedule",
            "Lambda_per_s2",
            "N_total",
            "alpha0_frac",
            "beta0_frac",
            "phi0_rad",
            "tau_s",
            "kappa_override_per_s",
        ],
    ),
    ("discretization", &["modes", "omega_up_per_s"]),
    ("integrator", &["rtol", "atol", "sample_dt_s"]),
    ("analysis", &["peak_threshold", "dip_threshold"]),
    ("output", &["directory", "formats"]),
    ("sweep", &["axes", "observables", "max_points", "per_point_output"]),
];

impl RunConfig {
    /// Reads a TOML configuration, or the `config` object of a `meta.json`.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let parse = |message: String| ConfigError::Parse { path: path.into(), message };
        let mut table = if path.extension().is_some_and(|e| e == "json") {
            let mut doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| parse(e.to_string()))?;
            let cfg = doc.get_mut("config").map(serde_json::Value::take).unwrap_or(doc);
            let cfg: RunConfig = serde_json::from_value(cfg).map_err(|e| parse(e.to_string()))?;
            toml::Table::try_from(&cfg).map_err(|e| parse(e.to_string()))?
        } else {
            // typed parse first, so errors in the file itself carry line numbers
            toml::from_str::<RunConfig>(&text).map_err(|e| parse(e.to_string()))?;
            text.parse::<toml::Table>().map_err(|e| parse(e.to_string()))?
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| parse(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse { path: "<string>".into(), message: e.to_string() })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        self.physics.to_params()?;
        if self.discretization.modes == 0 {
            return Err(ConfigError::Invalid("discretization.modes must be at least 1".into()));
        }
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::Invalid(format!("{name} must be finite and > 0 (got {v})")))
            }
        };
        positive("discretization.omega_up_per_s", self.discretization.omega_up_per_s)?;
        positive("integrator.rtol", self.integrator.rtol)?;
        positive("integrator.atol", self.integrator.atol)?;
        positive("integrator.sample_dt_s", self.integrator.sample_dt_s)?;
        for (name, v) in [
            ("analysis.peak_threshold", self.analysis.peak_threshold),
            ("analysis.dip_threshold", self.analysis.dip_threshold),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(ConfigError::Invalid(format!("{name} must be finite and >= 0 (got {v})")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<PhysicalParams, ConfigError> {
        self.physics.to_params()
    }

    pub fn setup(&self) -> RunSetup {
        RunSetup {
            modes: self.discretization.modes,
            omega_up: self.discretization.omega_up_per_s,
            integrator: IntegratorSettings {
                rtol: self.integrator.rtol,
                atol: self.integrator.atol,
                sample_dt: self.integrator.sample_dt_s,
            },
            peaks: PeakConfig {
                peak_threshold: self.analysis.peak_threshold,
                dip_threshold: self.analysis.dip_threshold,
            },
        }
    }

    /// Sodium constants are the defaults; true when the file kept them.
    pub fn is_sodium(&self) -> bool {
        self.physics.mass_kg == SODIUM_MASS && self.physics.scattering_length_m == SODIUM_SCATTERING_LENGTH
    }
}

fn parse_value(raw: &str) -> toml::Value {
    // anything that is not a TOML literal is taken as a bare string
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Applies `section.key=value`, or `key=value` when the key names exactly one field.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<(), ConfigError> {
    let (key, raw) = spec.split_once('=').ok_or_else(|| ConfigError::OverrideSyntax(spec.into()))?;
    let key = key.trim();
    let bad = |message: String| ConfigError::OverrideKey { key: key.into(), message };
    let (section, field) = match key.split_once('.') {
        Some((s, f)) => {
            let fields = SECTIONS
                .iter()
                .find(|(name, _)| *name == s)
                .map(|(_, f)| *f)
                .ok_or_else(|| bad(format!("unknown section {s:?}")))?;
            if !fields.contains(&f) {
                return Err(bad(format!("unknown key {f:?} in [{s}]")));
            }
            (s, f)
        }
        None => {
            let hits: Vec<&str> =
                SECTIONS.iter().filter(|(_, fields)| fields.contains(&key)).map(|(s, _)| *s).collect();
            match hits.as_slice() {
                [s] => (*s, key),
                [] => return Err(bad("unknown key".into())),
                many => return Err(bad(format!("ambiguous, qualify with one of {many:?}"))),
            }
        }
    };
    let entry = table
        .entry(section)
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        return Err(bad(format!("[{section}] is not a table")));
    };
    sec.insert(field.into(), parse_value(raw.trim()));
    Ok(())
}
