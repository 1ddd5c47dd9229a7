//! Mean-field equations of the two condensate modes coupled to the
//! discretized continuum, and their time integration.
//!
//! With `e = e^{−η²}`, `μ_X/ħ = ω_z/2 + 2κ|X|²` and the pulse on:
//!
//! ```text
//! dA/dt  = −i(μ_A/ħ − S) A − i(J − S e) B − i Σ_j g̃_j C_j
//! dB/dt  = −i(μ_B/ħ − S e²) B − i(J − S e) A − i e Σ_j g̃_j C_j
//! dC_j/dt = −i ω_j C_j − i g̃_j (A + e B)
//! ```
//!
//! The oscillation `ω_z/2` of the traps and `ω_j` of every continuum mode is
//! handled exactly by the integrating-factor stepper in [`crate::ode`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::continuum::{spectral_response, DiscretizedContinuum};
use crate::observables::{self, ImbalanceNormalization};
use crate::ode::{self, DiagonalSplitSystem, OdeError, SampleFrame, StepStats, StepperSettings};
use crate::params::{DerivedParams, PhysicalParams};

const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

/// Amplitudes `⟨a⟩`, `⟨b⟩`, `⟨c_j⟩` (units of √atoms) at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub amp_a: Complex64,
    pub amp_b: Complex64,
    pub amp_c: Vec<Complex64>,
}

impl SystemState {
    /// Coherent initial state with an empty continuum of `modes` modes.
    pub fn initial(params: &PhysicalParams, modes: usize) -> Self {
        let (amp_a, amp_b) = params.initial_amplitudes();
        Self { t: 0.0, amp_a, amp_b, amp_c: vec![Complex64::new(0.0, 0.0); modes] }
    }

    pub fn total_norm(&self) -> f64 {
        self.amp_a.norm_sqr() + self.amp_b.norm_sqr() + self.continuum_population()
    }

    pub fn continuum_population(&self) -> f64 {
        self.amp_c.iter().map(|c| c.norm_sqr()).sum()
    }

    fn to_vector(&self) -> Vec<Complex64> {
        let mut y = Vec::with_capacity(2 + self.amp_c.len());
        y.push(self.amp_a);
        y.push(self.amp_b);
        y.extend_from_slice(&self.amp_c);
        y
    }

    fn from_vector(t: f64, y: &[Complex64]) -> Self {
        Self { t, amp_a: y[0], amp_b: y[1], amp_c: y[2..].to_vec() }
    }

    /// Multiplies every amplitude by `e^{iθ}`.
    pub fn rotate_global_phase(&mut self, theta: f64) {
        let r = Complex64::from_polar(1.0, theta);
        self.amp_a *= r;
        self.amp_b *= r;
        self.amp_c.iter_mut().for_each(|c| *c *= r);
    }
}

/// Rectangular outcoupling pulse `Λ(t) = Λ` for `t ∈ [t_on, t_off]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    pub outcoupling: f64,
    pub t_on: f64,
    pub t_off: f64,
}

impl PulseSchedule {
    pub fn rectangular(outcoupling: f64, tau: f64) -> Self {
        Self { outcoupling, t_on: 0.0, t_off: tau }
    }

    pub fn is_on(&self, t: f64) -> bool {
        t >= self.t_on && t <= self.t_off
    }

    pub fn strength_at(&self, t: f64) -> f64 {
        if self.is_on(t) {
            self.outcoupling
        } else {
            0.0
        }
    }
}

/// Coefficients of the trap equations at one instant.
#[derive(Debug, Clone, Copy)]
struct TrapCoefficients {
    kappa: f64,
    josephson: f64,
    overlap: f64,
    shift: f64,
}

/// Remainder of the equations after removing `ω_z/2` from the traps and
/// `ω_j` from the modes. `dc` receives the mode derivatives.
fn trap_continuum_terms(
    a: Complex64,
    b: Complex64,
    c: &[Complex64],
    couplings: &[f64],
    k: TrapCoefficients,
    dc: &mut [Complex64],
) -> (Complex64, Complex64) {
    let e = k.overlap;
    let source = a + b * e;
    let mut field = Complex64::new(0.0, 0.0);
    for ((cj, &g), d) in c.iter().zip(couplings).zip(dc.iter_mut()) {
        field += cj * g;
        *d = MINUS_I * (source * g);
    }
    let tunnel = k.josephson - k.shift * e;
    let da = MINUS_I * (a * (2.0 * k.kappa * a.norm_sqr() - k.shift) + b * tunnel + field);
    let db = MINUS_I * (b * (2.0 * k.kappa * b.norm_sqr() - k.shift * e * e) + a * tunnel + field * e);
    (da, db)
}

/// Full time derivative of `state` at fixed separation `eta`, with the
/// continuum couplings and shift of `cont` switched on.
pub fn rhs(state: &SystemState, derived: &DerivedParams, cont: &DiscretizedContinuum, eta: f64) -> SystemState {
    let k = TrapCoefficients {
        kappa: derived.kappa,
        josephson: derived.josephson_at(eta),
        overlap: (-eta * eta).exp(),
        shift: cont.shift,
    };
    let mut dc = vec![Complex64::new(0.0, 0.0); state.amp_c.len()];
    let (mut da, mut db) = trap_continuum_terms(state.amp_a, state.amp_b, &state.amp_c, &cont.couplings, k, &mut dc);
    let half = 0.5 * derived.omega_z;
    da += MINUS_I * state.amp_a * half;
    db += MINUS_I * state.amp_b * half;
    for ((d, c), w) in dc.iter_mut().zip(&state.amp_c).zip(&cont.frequencies) {
        *d += MINUS_I * c * *w;
    }
    SystemState { t: state.t, amp_a: da, amp_b: db, amp_c: dc }
}

/// The discretized mean-field equations as a split system for the stepper.
pub struct MeanFieldModel<'a> {
    params: &'a PhysicalParams,
    derived: &'a DerivedParams,
    cont: &'a DiscretizedContinuum,
    pulse: PulseSchedule,
    frequencies: Vec<f64>,
    // (J, e^{-η²}) when η does not depend on time
    fixed_eta: Option<(f64, f64)>,
}

impl<'a> MeanFieldModel<'a> {
    pub fn new(params: &'a PhysicalParams, derived: &'a DerivedParams, cont: &'a DiscretizedContinuum) -> Self {
        let mut frequencies = Vec::with_capacity(2 + cont.modes);
        frequencies.push(0.5 * params.omega_z);
        frequencies.push(0.5 * params.omega_z);
        frequencies.extend_from_slice(&cont.frequencies);
        let fixed_eta = match params.eta_schedule {
            None => Some((derived.josephson_at(params.eta), (-params.eta * params.eta).exp())),
            Some(_) => None,
        };
        Self {
            params,
            derived,
            cont,
            pulse: PulseSchedule::rectangular(params.outcoupling, params.tau),
            frequencies,
            fixed_eta,
        }
    }

    pub fn pulse(&self) -> PulseSchedule {
        self.pulse
    }

    /// `(J, e^{−η²})` at time `t`.
    pub fn tunneling_at(&self, t: f64) -> (f64, f64) {
        match self.fixed_eta {
            Some(v) => v,
            None => {
                let eta = self.params.eta_at(t);
                (self.derived.josephson_at(eta), (-eta * eta).exp())
            }
        }
    }
}

impl DiagonalSplitSystem for MeanFieldModel<'_> {
    fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    fn remainder(&self, t: f64, y: &[Complex64], out: &mut [Complex64]) {
        let (josephson, overlap) = self.tunneling_at(t);
        let (head, dc) = out.split_at_mut(2);
        if self.pulse.is_on(t) {
            let k = TrapCoefficients { kappa: self.derived.kappa, josephson, overlap, shift: self.cont.shift };
            let (da, db) = trap_continuum_terms(y[0], y[1], &y[2..], &self.cont.couplings, k, dc);
            head[0] = da;
            head[1] = db;
        } else {
            let k = TrapCoefficients { kappa: self.derived.kappa, josephson, overlap, shift: 0.0 };
            let (da, db) = trap_continuum_terms(y[0], y[1], &[], &[], k, &mut []);
            head[0] = da;
            head[1] = db;
            dc.iter_mut().for_each(|d| *d = Complex64::new(0.0, 0.0));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Spacing of recorded observables, s.
    pub sample_dt: f64,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self { rtol: 1e-9, atol: 1e-12, sample_dt: 1e-3 }
    }
}

impl IntegratorSettings {
    pub fn stepper(&self) -> StepperSettings {
        StepperSettings { rtol: self.rtol, atol: self.atol, ..StepperSettings::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Integration(#[from] OdeError),
    #[error("sample_dt must be finite and > 0 (got {0})")]
    BadSampleDt(f64),
    #[error("tolerances must be finite and > 0 (rtol {rtol}, atol {atol})")]
    BadTolerance { rtol: f64, atol: f64 },
    #[error("continuum was discretized for Lambda = {continuum}, omega_z = {omega_z_cont} but the run uses Lambda = {run}, omega_z = {omega_z_run}")]
    InconsistentContinuum { continuum: f64, run: f64, omega_z_cont: f64, omega_z_run: f64 },
    #[error("state has {got} continuum modes, expected {expected}")]
    ModeCount { got: usize, expected: usize },
}

/// Observables recorded at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    /// `arg(⟨a⟩* ⟨b⟩)`, rad.
    pub phi: f64,
    /// `(N_A − N_B)/N`.
    pub p_tilde: f64,
    /// Regime indicator; `None` where `J = 0`.
    pub h_c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Spacing of the samples; a last sample at `τ` is added when `τ` is
    /// not a multiple of it.
    pub sample_dt: f64,
    pub n_total: f64,
    pub samples: Vec<Sample>,
    pub final_state: SystemState,
    /// `max |N_A + N_B + N_C − N|` over samples and the final state.
    pub max_norm_drift: f64,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.t)
    }
}

fn check_inputs(
    params: &PhysicalParams,
    cont: &DiscretizedContinuum,
    settings: &IntegratorSettings,
) -> Result<(), DynamicsError> {
    if !(settings.rtol.is_finite() && settings.rtol > 0.0 && settings.atol.is_finite() && settings.atol > 0.0) {
        return Err(DynamicsError::BadTolerance { rtol: settings.rtol, atol: settings.atol });
    }
    if cont.outcoupling != params.outcoupling || cont.omega_z != params.omega_z {
        return Err(DynamicsError::InconsistentContinuum {
            continuum: cont.outcoupling,
            run: params.outcoupling,
            omega_z_cont: cont.omega_z,
            omega_z_run: params.omega_z,
        });
    }
    Ok(())
}

fn record(model: &MeanFieldModel<'_>, kappa: f64, n_total: f64, t: f64, y: &[Complex64]) -> Sample {
    let n_a = y[0].norm_sqr();
    let n_b = y[1].norm_sqr();
    let n_c: f64 = y[2..].iter().map(|c| c.norm_sqr()).sum();
    let phi = observables::relative_phase(y[0], y[1]);
    let p_tilde = (n_a - n_b) / n_total;
    let (josephson, _) = model.tunneling_at(t);
    let h_c = observables::indicator_from_populations(
        n_a,
        n_b,
        phi,
        josephson,
        kappa,
        n_total,
        ImbalanceNormalization::Total,
    );
    Sample { t, n_a, n_b, n_c, phi, p_tilde, h_c }
}

/// Integrates the initial coherent state over `[0, τ]`, sampling observables
/// every `sample_dt`.
pub fn integrate(
    params: &PhysicalParams,
    derived: &DerivedParams,
    cont: &DiscretizedContinuum,
    settings: &IntegratorSettings,
) -> Result<Trajectory, DynamicsError> {
    check_inputs(params, cont, settings)?;
    if !(settings.sample_dt.is_finite() && settings.sample_dt > 0.0) {
        return Err(DynamicsError::BadSampleDt(settings.sample_dt));
    }
    let model = MeanFieldModel::new(params, derived, cont);
    let y0 = SystemState::initial(params, cont.modes).to_vector();
    let n_total = params.n_total;
    let capacity = (params.tau / settings.sample_dt) as usize + 2;
    let mut samples = Vec::with_capacity(capacity);
    let mut drift = 0.0f64;
    // the recorded observables are blind to the common ω_z/2 rotation of A and B
    let (y_final, stats) = ode::integrate_sampled_in(
        &model,
        0.0,
        &y0,
        params.tau,
        settings.sample_dt,
        settings.stepper(),
        SampleFrame::Unrotated,
        |t, y| {
            let s = record(&model, derived.kappa, n_total, t, y);
            drift = drift.max((s.n_a + s.n_b + s.n_c - n_total).abs());
            samples.push(s);
        },
    )?;
    if samples.last().is_some_and(|s| s.t < params.tau * (1.0 - 1e-12)) {
        samples.push(record(&model, derived.kappa, n_total, params.tau, &y_final));
    }
    let final_state = SystemState::from_vector(params.tau, &y_final);
    drift = drift.max((final_state.total_norm() - n_total).abs());
    Ok(Trajectory {
        sample_dt: settings.sample_dt,
        n_total,
        samples,
        final_state,
        max_norm_drift: drift,
        stats,
    })
}

/// Propagates an arbitrary state to `t_end` (forwards or backwards) without sampling.
pub fn evolve(
    params: &PhysicalParams,
    derived: &DerivedParams,
    cont: &DiscretizedContinuum,
    state: &SystemState,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<SystemState, DynamicsError> {
    check_inputs(params, cont, settings)?;
    if state.amp_c.len() != cont.modes {
        return Err(DynamicsError::ModeCount { got: state.amp_c.len(), expected: cont.modes });
    }
    let model = MeanFieldModel::new(params, derived, cont);
    let (y, _) = ode::integrate_sampled(&model, state.t, &state.to_vector(), t_end, 0.0, settings.stepper(), |_, _| {})?;
    Ok(SystemState::from_vector(t_end, &y))
}

/// Golden-rule population decay rate of the trapped atoms, `π D(ω_z/2)`.
///
/// Only meaningful in the weak-outcoupling regime; used as a cross-check
/// against the fitted envelope of `N_A + N_B`.
pub fn markovian_reference(params: &PhysicalParams) -> f64 {
    PI * spectral_response(0.5 * params.omega_z, params.outcoupling, params.omega_z)
}
