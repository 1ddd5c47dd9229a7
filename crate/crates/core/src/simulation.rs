//! One-call driver: parameters in, trajectory and spectrum out.

use thiserror::Error;

use crate::continuum::{discretize, ContinuumError, DiscretizedContinuum, DEFAULT_MODES, DEFAULT_OMEGA_UP};
use crate::dynamics::{integrate, DynamicsError, IntegratorSettings, Trajectory};
use crate::observables::{spectrum, SpectrumAnalysis};
use crate::params::{derive, validate, DerivedParams, ParamsError, PhysicalParams, ValidationReport};
use crate::peaks::PeakConfig;

/// Numerical settings that are not part of the physics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSetup {
    pub modes: usize,
    pub omega_up: f64,
    pub integrator: IntegratorSettings,
    pub peaks: PeakConfig,
}

impl Default for RunSetup {
    fn default() -> Self {
        Self {
            modes: DEFAULT_MODES,
            omega_up: DEFAULT_OMEGA_UP,
            integrator: IntegratorSettings::default(),
            peaks: PeakConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("invalid parameters: {0}")]
    Params(#[from] ParamsError),
    #[error("continuum: {0}")]
    Continuum(#[from] ContinuumError),
    #[error("integration: {0}")]
    Dynamics(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub derived: DerivedParams,
    pub validation: ValidationReport,
    pub continuum: DiscretizedContinuum,
    pub trajectory: Trajectory,
    pub spectrum: SpectrumAnalysis,
}

pub fn simulate(params: &PhysicalParams, setup: &RunSetup) -> Result<Simulation, SimulationError> {
    let derived = derive(params)?;
    let validation = validate(params, &derived);
    let continuum = discretize(params.outcoupling, params.omega_z, setup.modes, setup.omega_up)?;
    let trajectory = integrate(params, &derived, &continuum, &setup.integrator)?;
    let spectrum = spectrum(&trajectory.final_state, &continuum, &setup.peaks);
    Ok(Simulation { derived, validation, continuum, trajectory, spectrum })
}
