//! Parameter grids run concurrently, one trajectory per grid point, reduced
//! to a table of summary observables.
//!
//! Grid points are enumerated row-major (the last axis varies fastest) and
//! rows come back in that order whatever the worker count. Each run owns its
//! state, so a row is bitwise identical to a direct [`simulate`] call with
//! the same inputs.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use atomlaser_core::peaks::{local_maxima, log_contrast, prominence};
use atomlaser_core::{simulate, PhysicalParams, RunSetup, Simulation};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::output::num;

pub const DEFAULT_MAX_POINTS: usize = 10_000;

/// Population-fraction range below which `N_A(t)` counts as flat; well
/// above the default integrator tolerance.
pub const FLAT_TOL: f64 = 1e-8;

/// Maxima of `N_A(t)` less prominent than this fraction of its range are
/// ripples, not oscillation peaks.
pub const OSCILLATION_PROMINENCE: f64 = 0.02;

/// Dips below this fraction of `ω_z` sit in the finite-pulse fringes of the
/// band edge and are ignored by `dip_depth`.
pub const EMISSION_BAND_FRACTION: f64 = 0.25;

/// Parameters that can span a sweep axis, named as in `[physics]`.
pub const AXIS_NAMES: &[&str] = &[
    "omega_z_per_s",
    "lambda_ratio",
    "eta",
    "Lambda_per_s2",
    "N_total",
    "alpha0_frac",
    "beta0_frac",
    "phi0_rad",
    "tau_s",
    "kappa_override_per_s",
    "mass_kg",
    "scattering_length_m",
];

#[derive(Debug, Error, PartialEq)]
pub enum SweepError {
    #[error("sweep needs at least one axis")]
    NoAxes,
    #[error("sweep axis {0:?} has no values")]
    EmptyAxis(String),
    #[error("unknown sweep axis {0:?}; expected one of {AXIS_NAMES:?}")]
    UnknownAxis(String),
    #[error("sweep axis {0:?} given twice")]
    DuplicateAxis(String),
    #[error("unknown observable {0:?}")]
    UnknownObservable(String),
    #[error("grid has {points} points, more than the limit of {limit}")]
    TooManyPoints { points: usize, limit: usize },
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Extractor {
    /// Peak-to-trough swing of `N_A/N` at its second maximum, minus the same
    /// swing of the `φ(0) = 0` run. A falling start is the first maximum.
    OscillationAmplitudeSecondPeak,
    /// Right over left height of the main spectral doublet.
    PeakRatio,
    /// `N_A(τ)/N`.
    SteadyStateNA,
    /// Log contrast, in decades, of the deepest dip in the emission band.
    DipDepth,
    /// First time `N_A = N_B`, s.
    RegimeTransitionTimes,
}

impl Extractor {
    pub const ALL: [Extractor; 5] = [
        Extractor::OscillationAmplitudeSecondPeak,
        Extractor::PeakRatio,
        Extractor::SteadyStateNA,
        Extractor::DipDepth,
        Extractor::RegimeTransitionTimes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Extractor::OscillationAmplitudeSecondPeak => "oscillation_amplitude_second_peak",
            Extractor::PeakRatio => "peak_ratio",
            Extractor::SteadyStateNA => "steady_state_NA",
            Extractor::DipDepth => "dip_depth",
            Extractor::RegimeTransitionTimes => "regime_transition_times",
        }
    }
}

impl fmt::Display for Extractor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Extractor {
    type Err = SweepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| SweepError::UnknownObservable(s.into()))
    }
}

/// A summary value, or the reason it does not exist for this run.
pub type Summary = Result<f64, String>;

fn swing_at_second_peak(sim: &Simulation) -> Summary {
    let n = sim.trajectory.n_total;
    let na: Vec<f64> = sim.trajectory.samples.iter().map(|s| s.n_a / n).collect();
    let lo = na.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = na.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if na.is_empty() || hi - lo <= FLAT_TOL {
        return Ok(0.0);
    }
    // a falling start counts as the first peak
    let mut maxima: Vec<usize> = if na.len() > 1 && na[1] < na[0] { vec![0] } else { Vec::new() };
    maxima.extend(
        local_maxima(&na)
            .into_iter()
            .filter(|&i| prominence(&na, i).0 >= OSCILLATION_PROMINENCE * (hi - lo)),
    );
    if maxima.len() < 2 {
        return Err("N_A has fewer than two maxima".into());
    }
    let trough = na[maxima[0]..maxima[1]].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(na[maxima[1]] - trough)
}

fn first_crossing(sim: &Simulation) -> Summary {
    // differences inside the integration noise carry no sign
    let tol = FLAT_TOL * sim.trajectory.n_total;
    let mut last: Option<(f64, f64)> = None;
    for s in &sim.trajectory.samples {
        let d = s.n_a - s.n_b;
        if d.abs() <= tol {
            continue;
        }
        if let Some((t0, d0)) = last {
            if d0 * d < 0.0 {
                return Ok(t0 + (s.t - t0) * d0 / (d0 - d));
            }
        }
        last = Some((s.t, d));
    }
    Err("no N_A = N_B crossing".into())
}

/// Evaluates one extractor on a finished run. The phase reference of
/// `oscillation_amplitude_second_peak` is not applied here; this returns
/// the raw swing.
pub fn extract_summary(sim: &Simulation, extractor: Extractor) -> Summary {
    match extractor {
        Extractor::OscillationAmplitudeSecondPeak => swing_at_second_peak(sim),
        Extractor::PeakRatio => sim.spectrum.peak_ratio.ok_or_else(|| "fewer than two peaks".into()),
        Extractor::SteadyStateNA => Ok(sim.trajectory.final_state.amp_a.norm_sqr() / sim.trajectory.n_total),
        Extractor::DipDepth => {
            let band = EMISSION_BAND_FRACTION * sim.continuum.omega_z;
            sim.spectrum
                .dips
                .iter()
                .filter(|d| d.omega >= band)
                .filter_map(|d| log_contrast(d, &sim.spectrum.peaks))
                .fold(None, |best: Option<f64>, c| Some(best.map_or(c, |b| b.max(c))))
                .ok_or_else(|| "no dip in the emission band".into())
        }
        Extractor::RegimeTransitionTimes => first_crossing(sim),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

pub fn set_param(p: &mut PhysicalParams, name: &str, v: f64) -> Result<(), SweepError> {
    match name {
        "omega_z_per_s" => p.omega_z = v,
        "lambda_ratio" => p.lambda_ratio = v,
        "eta" => {
            // a fixed value on the axis replaces any schedule
            p.eta = v;
            p.eta_schedule = None;
        }
        "Lambda_per_s2" => p.outcoupling = v,
        "N_total" => p.n_total = v,
        "alpha0_frac" => {
            p.alpha0_frac = v;
            p.beta0_frac = 1.0 - v;
        }
        "beta0_frac" => {
            p.beta0_frac = v;
            p.alpha0_frac = 1.0 - v;
        }
        "phi0_rad" => p.phi0 = v,
        "tau_s" => p.tau = v,
        "kappa_override_per_s" => p.kappa_override = Some(v),
        "mass_kg" => p.mass = v,
        "scattering_length_m" => p.scattering_length = v,
        other => return Err(SweepError::UnknownAxis(other.into())),
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: PhysicalParams,
    pub setup: RunSetup,
    pub axes: Vec<Axis>,
    pub observables: Vec<Extractor>,
    pub max_points: usize,
}

impl SweepSpec {
    pub fn new(
        base: PhysicalParams,
        setup: RunSetup,
        axes: Vec<Axis>,
        observables: Vec<Extractor>,
        max_points: usize,
    ) -> Result<Self, SweepError> {
        if axes.is_empty() {
            return Err(SweepError::NoAxes);
        }
        for (i, a) in axes.iter().enumerate() {
            if !AXIS_NAMES.contains(&a.name.as_str()) {
                return Err(SweepError::UnknownAxis(a.name.clone()));
            }
            if a.values.is_empty() {
                return Err(SweepError::EmptyAxis(a.name.clone()));
            }
            if axes[..i].iter().any(|b| b.name == a.name) {
                return Err(SweepError::DuplicateAxis(a.name.clone()));
            }
        }
        let points = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.values.len()))
            .unwrap_or(usize::MAX);
        if points > max_points {
            return Err(SweepError::TooManyPoints { points, limit: max_points });
        }
        Ok(Self { base, setup, axes, observables, max_points })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.values.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Axis values of grid point `index`, row-major.
    pub fn coords(&self, mut index: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.axes.len()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            out[k] = a.values[index % a.values.len()];
            index /= a.values.len();
        }
        out
    }

    pub fn params_at(&self, index: usize) -> PhysicalParams {
        let mut p = self.base.clone();
        for (a, v) in self.axes.iter().zip(self.coords(index)) {
            // names were checked in `new`
            let _ = set_param(&mut p, &a.name, v);
        }
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub coords: Vec<f64>,
    pub summaries: Vec<Summary>,
    pub max_norm_drift: Option<f64>,
    pub wall_time_s: f64,
    /// Set when the run itself failed; all summaries are then absent.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn status(&self) -> &'static str {
        if self.error.is_some() {
            "failed"
        } else if self.summaries.iter().any(Result::is_err) {
            "partial"
        } else {
            "ok"
        }
    }

    pub fn notes(&self, observables: &[Extractor]) -> String {
        if let Some(e) = &self.error {
            return e.clone();
        }
        observables
            .iter()
            .zip(&self.summaries)
            .filter_map(|(o, s)| s.as_ref().err().map(|r| format!("{o}: {r}")))
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn value(&self, k: usize) -> Option<f64> {
        self.summaries.get(k).and_then(|s| s.as_ref().ok().copied())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axes: Vec<String>,
    pub observables: Vec<Extractor>,
    pub rows: Vec<SweepRow>,
    /// Extra `φ(0) = 0` runs made for the amplitude reference.
    pub reference_runs: usize,
}

impl SweepResult {
    pub fn column(&self, e: Extractor) -> Option<Vec<Option<f64>>> {
        let k = self.observables.iter().position(|&o| o == e)?;
        Some(self.rows.iter().map(|r| r.value(k)).collect())
    }

    /// Axis values, summaries, norm drift, status and notes; no timing, so
    /// identical specs give identical bytes.
    pub fn write_csv<W: Write>(&self, out: W) -> io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.axes.clone();
        header.extend(self.observables.iter().map(|o| o.name().to_string()));
        header.extend(["max_norm_drift_atoms", "status", "notes"].map(String::from));
        w.write_record(&header).map_err(io::Error::other)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.coords.iter().map(|&v| num(v)).collect();
            rec.extend(r.summaries.iter().map(|s| s.as_ref().map(|&v| num(v)).unwrap_or_default()));
            rec.push(r.max_norm_drift.map(num).unwrap_or_default());
            rec.push(r.status().into());
            rec.push(r.notes(&self.observables));
            w.write_record(&rec).map_err(io::Error::other)?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RowTiming {
    pub index: usize,
    pub wall_time_s: f64,
}

struct Outcome {
    summaries: Vec<Summary>,
    drift: Option<f64>,
    wall: f64,
    error: Option<String>,
}

fn run_point<F>(index: usize, p: &PhysicalParams, spec: &SweepSpec, on_point: &F) -> Outcome
where
    F: Fn(usize, &PhysicalParams, &Simulation) + Sync,
{
    let start = Instant::now();
    let fail = |e: String| Outcome { summaries: Vec::new(), drift: None, wall: start.elapsed().as_secs_f64(), error: Some(e) };
    if let Err(e) = p.check() {
        return fail(format!("invalid parameters: {e}"));
    }
    match simulate(p, &spec.setup) {
        Ok(sim) => {
            let summaries = spec.observables.iter().map(|&e| extract_summary(&sim, e)).collect();
            on_point(index, p, &sim);
            Outcome {
                summaries,
                drift: Some(sim.trajectory.max_norm_drift),
                wall: start.elapsed().as_secs_f64(),
                error: None,
            }
        }
        Err(e) => fail(e.to_string()),
    }
}

fn reference_swing(p: &PhysicalParams, setup: &RunSetup) -> Summary {
    let sim = simulate(p, setup).map_err(|e| format!("reference run failed: {e}"))?;
    swing_at_second_peak(&sim)
}

pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepResult, SweepError> {
    run_sweep_with(spec, workers, |_, _, _| {})
}

/// As [`run_sweep`], calling `on_point` with every successful run (from
/// worker threads, in no particular order).
pub fn run_sweep_with<F>(spec: &SweepSpec, workers: usize, on_point: F) -> Result<SweepResult, SweepError>
where
    F: Fn(usize, &PhysicalParams, &Simulation) + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    let params: Vec<PhysicalParams> = (0..spec.len()).map(|i| spec.params_at(i)).collect();
    let outcomes: Vec<Outcome> =
        pool.install(|| params.par_iter().enumerate().map(|(i, p)| run_point(i, p, spec, &on_point)).collect());

    let mut rows: Vec<SweepRow> = outcomes
        .into_iter()
        .enumerate()
        .map(|(i, o)| SweepRow {
            index: i,
            coords: spec.coords(i),
            summaries: o.summaries,
            max_norm_drift: o.drift,
            wall_time_s: o.wall,
            error: o.error,
        })
        .collect();

    let mut reference_runs = 0;
    if let Some(k) = spec.observables.iter().position(|&e| e == Extractor::OscillationAmplitudeSecondPeak) {
        // each point is referred to the same configuration at φ(0) = 0
        let refs: Vec<PhysicalParams> = params.iter().map(|p| PhysicalParams { phi0: 0.0, ..p.clone() }).collect();
        let mut unique: Vec<PhysicalParams> = Vec::new();
        let mut source: Vec<Result<usize, usize>> = Vec::with_capacity(refs.len());
        for r in &refs {
            if let Some(j) = params.iter().position(|p| p == r) {
                source.push(Ok(j));
            } else if let Some(u) = unique.iter().position(|u| u == r) {
                source.push(Err(u));
            } else {
                unique.push(r.clone());
                source.push(Err(unique.len() - 1));
            }
        }
        reference_runs = unique.len();
        let extra: Vec<Summary> = pool.install(|| unique.par_iter().map(|p| reference_swing(p, &spec.setup)).collect());
        let base: Vec<Summary> = source
            .iter()
            .map(|s| match *s {
                Ok(j) => match &rows[j].error {
                    Some(e) => Err(format!("reference run failed: {e}")),
                    None => rows[j].summaries[k].clone(),
                },
                Err(u) => extra[u].clone(),
            })
            .collect();
        for (row, b) in rows.iter_mut().zip(base) {
            if row.error.is_some() {
                continue;
            }
            let raw = row.summaries[k].clone();
            row.summaries[k] = match (raw, b) {
                (Ok(v), Ok(r)) => Ok(v - r),
                (Err(e), _) => Err(e),
                (_, Err(e)) => Err(format!("reference: {e}")),
            };
        }
    }

    Ok(SweepResult {
        axes: spec.axes.iter().map(|a| a.name.clone()).collect(),
        observables: spec.observables.clone(),
        rows,
        reference_runs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> (PhysicalParams, RunSetup) {
        let p = PhysicalParams { tau: 0.05, n_total: 20.0, ..Default::default() };
        let s = RunSetup { modes: 60, ..Default::default() };
        (p, s)
    }

    #[test]
    fn observable_names_round_trip() {
        for e in Extractor::ALL {
            assert_eq!(e.name().parse::<Extractor>().unwrap(), e);
        }
        assert!("bogus".parse::<Extractor>().is_err());
    }

    #[test]
    fn spec_checks() {
        let (p, s) = quick();
        let ax = |n: &str, v: Vec<f64>| Axis { name: n.into(), values: v };
        assert_eq!(SweepSpec::new(p.clone(), s, vec![], vec![], 10).unwrap_err(), SweepError::NoAxes);
        assert!(matches!(
            SweepSpec::new(p.clone(), s, vec![ax("phi0_rad", vec![])], vec![], 10),
            Err(SweepError::EmptyAxis(_))
        ));
        assert!(matches!(
            SweepSpec::new(p.clone(), s, vec![ax("colour", vec![1.0])], vec![], 10),
            Err(SweepError::UnknownAxis(_))
        ));
        assert!(matches!(
            SweepSpec::new(p.clone(), s, vec![ax("eta", vec![1.0]), ax("eta", vec![2.0])], vec![], 10),
            Err(SweepError::DuplicateAxis(_))
        ));
        assert_eq!(
            SweepSpec::new(p, s, vec![ax("eta", vec![1.0; 4]), ax("N_total", vec![1.0; 3])], vec![], 11).unwrap_err(),
            SweepError::TooManyPoints { points: 12, limit: 11 }
        );
    }

    #[test]
    fn grid_is_row_major() {
        let (p, s) = quick();
        let spec = SweepSpec::new(
            p,
            s,
            vec![
                Axis { name: "eta".into(), values: vec![1.5, 1.7] },
                Axis { name: "alpha0_frac".into(), values: vec![0.6, 0.8] },
            ],
            vec![],
            DEFAULT_MAX_POINTS,
        )
        .unwrap();
        let coords: Vec<Vec<f64>> = (0..spec.len()).map(|i| spec.coords(i)).collect();
        assert_eq!(coords, vec![vec![1.5, 0.6], vec![1.5, 0.8], vec![1.7, 0.6], vec![1.7, 0.8]]);
        let p3 = spec.params_at(3);
        assert_eq!((p3.eta, p3.alpha0_frac), (1.7, 0.8));
        assert!((p3.beta0_frac - 0.2).abs() < 1e-15);
    }

    #[test]
    fn failed_points_are_recorded_not_fatal() {
        let (p, s) = quick();
        let spec = SweepSpec::new(
            p,
            s,
            vec![Axis { name: "N_total".into(), values: vec![-1.0, 20.0] }],
            vec![Extractor::SteadyStateNA, Extractor::PeakRatio],
            DEFAULT_MAX_POINTS,
        )
        .unwrap();
        let r = run_sweep(&spec, 1).unwrap();
        assert_eq!(r.rows[0].status(), "failed");
        assert!(r.rows[0].notes(&r.observables).contains("N_total") || r.rows[0].notes(&r.observables).contains("n_total"));
        assert_ne!(r.rows[1].status(), "failed");
        assert!(r.rows[1].value(0).is_some());
    }

    #[test]
    fn flat_trajectory_has_zero_amplitude() {
        // equal populations in phase with the symmetric mode do not oscillate
        let p = PhysicalParams {
            tau: 0.5,
            outcoupling: 0.0,
            alpha0_frac: 0.5,
            beta0_frac: 0.5,
            kappa_override: Some(0.0),
            ..Default::default()
        };
        let s = RunSetup { modes: 20, ..Default::default() };
        let sim = simulate(&p, &s).unwrap();
        assert_eq!(extract_summary(&sim, Extractor::OscillationAmplitudeSecondPeak), Ok(0.0));
        assert!(extract_summary(&sim, Extractor::RegimeTransitionTimes).is_err());
        assert_eq!(extract_summary(&sim, Extractor::SteadyStateNA).map(|v| (v - 0.5).abs() < 1e-9), Ok(true));
    }
}
