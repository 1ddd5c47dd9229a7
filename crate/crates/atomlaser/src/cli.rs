//! Subcommands `simulate`, `sweep` and `validate`.
//!
//! Exit codes: 0 success (validation warnings included), 1 I/O failure,
//! 2 configuration error, 3 numerical failure.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use atomlaser_core::continuum::{compute_shift, ContinuumError};
use atomlaser_core::params::{derive, validate, CheckStatus};
use atomlaser_core::{simulate, Simulation, SimulationError};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, RunConfig};
use crate::output::{self, write_json, write_run, VERSION};
use crate::sweep::{run_sweep_with, Axis, Extractor, RowTiming, SweepError, SweepSpec};

pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_META_FILE: &str = "sweep_meta.json";

#[derive(Debug, Parser)]
#[command(name = "atomlaser", version, about = "Atom-laser outcoupling from two tunnel-coupled condensates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one run and write trajectory.csv, spectrum.csv and meta.json.
    Simulate(CommonArgs),
    /// Run the [sweep] grid and write sweep.csv.
    Sweep(CommonArgs),
    /// Print derived parameters and validity warnings.
    Validate(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML configuration, or a meta.json from an earlier run.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory; replaces output.directory.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available cores).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    /// `section.key=value` or `key=value`, applied after the file is read.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("sweep: {0}")]
    Sweep(#[from] SweepError),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Sweep(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<SimulationError> for CliError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Params(_) | SimulationError::Continuum(ContinuumError::NoModes)
            | SimulationError::Continuum(ContinuumError::BadCutoff(_))
            | SimulationError::Continuum(ContinuumError::BadInput { .. }) => {
                CliError::Config(ConfigError::Invalid(e.to_string()))
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

pub fn load(args: &CommonArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&args.config, &args.overrides)?;
    if let Some(out) = &args.out {
        cfg.output.directory = out.clone();
    }
    Ok(cfg)
}

/// Runs a parsed command line and returns the text for stdout.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(&load(a)?),
        Command::Sweep(a) => cmd_sweep(&load(a)?, a.workers.unwrap_or_else(default_workers)),
        Command::Validate(a) => cmd_validate(&load(a)?),
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

pub fn cmd_simulate(cfg: &RunConfig) -> Result<String, CliError> {
    let params = cfg.params()?;
    let start = Instant::now();
    let sim = simulate(&params, &cfg.setup())?;
    let wall = start.elapsed().as_secs_f64();
    let dir = &cfg.output.directory;
    write_run(dir, cfg, &sim, wall)?;
    Ok(run_summary(dir, &sim, wall))
}

fn run_summary(dir: &Path, sim: &Simulation, wall: f64) -> String {
    let mut s = String::new();
    let tr = &sim.trajectory;
    let _ = writeln!(s, "wrote {}", dir.display());
    let _ = writeln!(s, "samples: {}  steps: {} accepted, {} rejected", tr.samples.len(), tr.stats.accepted, tr.stats.rejected);
    let _ = writeln!(s, "max norm drift: {:.3e} atoms", tr.max_norm_drift);
    let _ = writeln!(s, "outcoupled: {:.6} atoms", sim.spectrum.total_outcoupled);
    let peaks: Vec<String> = sim.spectrum.peaks.iter().map(|p| format!("{:.2}", p.omega)).collect();
    let _ = writeln!(s, "spectral peaks (s^-1): [{}]", peaks.join(", "));
    for w in output::warnings(&sim.validation) {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "wall time: {wall:.2} s");
    s
}

pub fn sweep_spec(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    let sw = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| ConfigError::Invalid("sweep needs a [sweep] section".into()))?;
    let axes = sw
        .axes
        .iter()
        .map(|a| Ok(Axis { name: a.name.clone(), values: a.resolve()? }))
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let observables = sw.observables.iter().map(|o| o.parse()).collect::<Result<Vec<Extractor>, _>>()?;
    Ok(SweepSpec::new(cfg.params()?, cfg.setup(), axes, observables, sw.max_points)?)
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    version: &'static str,
    config: &'a RunConfig,
    workers: usize,
    points: usize,
    reference_runs: usize,
    failed: usize,
    wall_time_s: f64,
    rows: Vec<RowTiming>,
}

pub fn cmd_sweep(cfg: &RunConfig, workers: usize) -> Result<String, CliError> {
    let spec = sweep_spec(cfg)?;
    let dir = cfg.output.directory.clone();
    fs::create_dir_all(&dir)?;
    let per_point = cfg.sweep.as_ref().is_some_and(|s| s.per_point_output);
    let first_io_error: Mutex<Option<io::Error>> = Mutex::new(None);
    let start = Instant::now();
    let result = run_sweep_with(&spec, workers, |i, p, sim| {
        if !per_point {
            return;
        }
        let mut point_cfg = cfg.clone();
        point_cfg.sweep = None;
        point_cfg.physics = crate::config::PhysicsConfig::from_params(p);
        point_cfg.output.directory = dir.join(format!("point_{i:05}"));
        if let Err(e) = write_run(&point_cfg.output.directory, &point_cfg, sim, 0.0) {
            first_io_error.lock().unwrap_or_else(|p| p.into_inner()).get_or_insert(e);
        }
    })?;
    let wall = start.elapsed().as_secs_f64();
    if let Some(e) = first_io_error.into_inner().unwrap_or_else(|p| p.into_inner()) {
        return Err(e.into());
    }
    let mut w = BufWriter::new(File::create(dir.join(SWEEP_FILE))?);
    result.write_csv(&mut w)?;
    let failed = result.rows.iter().filter(|r| r.error.is_some()).count();
    write_json(
        &dir.join(SWEEP_META_FILE),
        &SweepMeta {
            version: VERSION,
            config: cfg,
            workers,
            points: result.rows.len(),
            reference_runs: result.reference_runs,
            failed,
            wall_time_s: wall,
            rows: result.rows.iter().map(|r| RowTiming { index: r.index, wall_time_s: r.wall_time_s }).collect(),
        },
    )?;
    let partial = result.rows.iter().filter(|r| r.status() == "partial").count();
    Ok(format!(
        "wrote {} ({} points, {} failed, {} with missing summaries) in {:.2} s\n",
        dir.join(SWEEP_FILE).display(),
        result.rows.len(),
        failed,
        partial,
        wall
    ))
}

pub fn cmd_validate(cfg: &RunConfig) -> Result<String, CliError> {
    let params = cfg.params()?;
    let d = derive(&params).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let omega_up = cfg.discretization.omega_up_per_s;
    let shift = compute_shift(params.outcoupling, params.omega_z, omega_up).map_err(|e| CliError::Numerical(e.to_string()))?;
    let report = validate(&params, &d);

    let mut s = String::new();
    let _ = writeln!(s, "{VERSION}");
    if cfg.is_sodium() {
        let _ = writeln!(s, "species: 23Na (default constants)");
    }
    let _ = writeln!(s, "derived parameters (angular frequencies):");
    let _ = writeln!(s, "  J          = {:.6e} s^-1", d.josephson);
    let _ = writeln!(s, "  kappa      = {:.6e} s^-1", d.kappa);
    let _ = writeln!(s, "  N_max      = {:.6e}", d.n_max);
    let _ = writeln!(s, "  t_collapse = {:.6e} s", d.t_collapse);
    let _ = writeln!(s, "  l_z        = {:.6e} m", d.l_z);
    let _ = writeln!(s, "  S          = {shift:.6e} s^-1");
    let _ = writeln!(s, "  epsilon    = {:.6e} s^-1", omega_up / cfg.discretization.modes as f64);
    if d.interaction_free() {
        let _ = writeln!(s, "mode: interaction-free (kappa = 0)");
    } else {
        let _ = writeln!(s, "mode: interacting");
    }
    let _ = writeln!(s, "checks:");
    for c in &report.checks {
        let tag = match c.status {
            CheckStatus::Pass => "ok",
            CheckStatus::Warn => "warning",
        };
        let _ = writeln!(s, "  [{tag}] {}: {}", c.name, c.message);
    }
    Ok(s)
}
