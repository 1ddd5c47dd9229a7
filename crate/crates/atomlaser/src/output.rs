//! Plot-ready files: `trajectory.csv`, `spectrum.csv` and `meta.json`.
//!
//! Numbers are written in scientific notation with 16 significant digits,
//! so every value round-trips exactly.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use atomlaser_core::continuum::DiscretizedContinuum;
use atomlaser_core::dynamics::Trajectory;
use atomlaser_core::params::{CheckStatus, DerivedParams, ValidationReport};
use atomlaser_core::{SpectrumAnalysis, Simulation};
use serde::Serialize;

use crate::config::{Format, RunConfig};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const META_FILE: &str = "meta.json";

pub const TRAJECTORY_HEADER: [&str; 10] =
    ["t_s", "N_A", "N_B", "N_C", "frac_A", "frac_B", "frac_C", "phi_rad", "p_tilde", "H_c"];
pub const SPECTRUM_HEADER: [&str; 4] = ["omega_per_s", "density_atoms_s", "is_peak", "is_dip"];

pub fn num(x: f64) -> String {
    format!("{x:.15e}")
}

/// An empty field for an undefined value.
pub fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

pub fn write_trajectory<W: Write>(out: W, tr: &Trajectory) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAJECTORY_HEADER).map_err(csv_error)?;
    let n = tr.n_total;
    for s in &tr.samples {
        w.write_record([
            num(s.t),
            num(s.n_a),
            num(s.n_b),
            num(s.n_c),
            num(s.n_a / n),
            num(s.n_b / n),
            num(s.n_c / n),
            num(s.phi),
            num(s.p_tilde),
            opt_num(s.h_c),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_spectrum<W: Write>(out: W, sp: &SpectrumAnalysis) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SPECTRUM_HEADER).map_err(csv_error)?;
    for (i, (&om, &d)) in sp.omegas.iter().zip(&sp.density).enumerate() {
        w.write_record([num(om), num(d), sp.is_peak(i).to_string(), sp.is_dip(i).to_string()])
            .map_err(csv_error)?;
    }
    w.flush()
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivedRecord {
    #[serde(rename = "J_per_s")]
    pub josephson_per_s: f64,
    pub kappa_per_s: f64,
    #[serde(rename = "S_per_s")]
    pub shift_per_s: f64,
    pub epsilon_per_s: f64,
    #[serde(rename = "N_max")]
    pub n_max: f64,
    pub t_collapse_s: f64,
    pub l_z_m: f64,
    #[serde(rename = "mu_A0_J")]
    pub mu_a0_joule: f64,
    #[serde(rename = "mu_B0_J")]
    pub mu_b0_joule: f64,
    pub interaction_free: bool,
}

impl DerivedRecord {
    pub fn new(d: &DerivedParams, cont: &DiscretizedContinuum) -> Self {
        Self {
            josephson_per_s: d.josephson,
            kappa_per_s: d.kappa,
            shift_per_s: cont.shift,
            epsilon_per_s: cont.spacing,
            n_max: d.n_max,
            t_collapse_s: d.t_collapse,
            l_z_m: d.l_z,
            mu_a0_joule: d.mu_a0,
            mu_b0_joule: d.mu_b0,
            interaction_free: d.interaction_free(),
        }
    }
}

pub fn warnings(report: &ValidationReport) -> Vec<String> {
    report.checks.iter().filter(|c| c.status == CheckStatus::Warn).map(|c| c.message.clone()).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub max_norm_drift_atoms: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub rhs_evaluations: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSummary {
    pub total_outcoupled_atoms: f64,
    pub peaks_per_s: Vec<f64>,
    pub dips_per_s: Vec<f64>,
    pub peak_ratio: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta<'a> {
    pub version: &'static str,
    pub config: &'a RunConfig,
    pub derived: DerivedRecord,
    pub warnings: Vec<String>,
    pub diagnostics: Diagnostics,
    pub spectrum: SpectrumSummary,
    /// Excluded from any reproducibility comparison.
    pub wall_time_s: f64,
}

pub const VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

impl<'a> Meta<'a> {
    pub fn new(config: &'a RunConfig, sim: &Simulation, wall_time_s: f64) -> Self {
        let tr = &sim.trajectory;
        Self {
            version: VERSION,
            config,
            derived: DerivedRecord::new(&sim.derived, &sim.continuum),
            warnings: warnings(&sim.validation),
            diagnostics: Diagnostics {
                max_norm_drift_atoms: tr.max_norm_drift,
                accepted_steps: tr.stats.accepted,
                rejected_steps: tr.stats.rejected,
                rhs_evaluations: tr.stats.evaluations,
                samples: tr.samples.len(),
            },
            spectrum: SpectrumSummary {
                total_outcoupled_atoms: sim.spectrum.total_outcoupled,
                peaks_per_s: sim.spectrum.peaks.iter().map(|p| p.omega).collect(),
                dips_per_s: sim.spectrum.dips.iter().map(|d| d.omega).collect(),
                peak_ratio: sim.spectrum.peak_ratio,
            },
            wall_time_s,
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()
}

/// Writes the files selected by `config.output.formats` into `dir`.
pub fn write_run(dir: &Path, config: &RunConfig, sim: &Simulation, wall_time_s: f64) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    if config.output.wants(Format::Csv) {
        write_trajectory(BufWriter::new(File::create(dir.join(TRAJECTORY_FILE))?), &sim.trajectory)?;
        write_spectrum(BufWriter::new(File::create(dir.join(SPECTRUM_FILE))?), &sim.spectrum)?;
    }
    if config.output.wants(Format::Json) {
        write_json(&dir.join(META_FILE), &Meta::new(config, sim, wall_time_s))?;
    }
    Ok(())
}
