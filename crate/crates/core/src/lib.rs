//! Mean-field simulation of atom-laser outcoupling from two tunnel-coupled
//! Bose-Einstein condensates into a one-dimensional atomic continuum.
//!
//! The lasing condensate (A) is coupled to a structured continuum of free-atom
//! modes whose density of states diverges as `ω^{-1/2}` at the band edge. The
//! pumping condensate (B) tunnels into A with Josephson coupling `J` and leaks
//! into the continuum with amplitude suppressed by `e^{-η²}`. The continuum is
//! replaced by `M` uniformly spaced modes below a cutoff `ω_up`; modes above
//! the cutoff enter only through a static level shift `S`.
//!
//! All frequencies are angular (s⁻¹). The crate is `no_std` (it needs `alloc`)
//! so the physics can be embedded anywhere; file formats, the CLI, and the
//! parallel sweep driver live in the `atomlaser` companion crate.
//!
//! Modules:
//! * [`params`]: physical inputs, closed-form model parameters, validity checks.
//! * [`continuum`]: density of states, spectral response, discretization, shift.
//! * [`ode`]: integrating-factor Dormand–Prince stepper with dense output.
//! * [`dynamics`]: the discretized mean-field equations and trajectory sampling.
//! * [`observables`]: populations, relative phase, regime classifier, spectra.
//! * [`peaks`]: prominence-based peak and dip detection on uniform grids.
//! * [`simulation`]: one-call driver from parameters to trajectory and spectrum.
//! * `oracles` (feature `oracles`): independent references for the test suites.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod continuum;
pub mod dynamics;
pub mod ode;
pub mod observables;
pub mod params;
pub mod peaks;
pub mod quadrature;
pub mod simulation;

#[cfg(any(test, feature = "oracles"))]
pub mod oracles;

pub use num_complex::Complex64;

pub use continuum::DiscretizedContinuum;
pub use dynamics::{PulseSchedule, Sample, SystemState, Trajectory};
pub use observables::{Regime, RegimeRecord, SpectrumAnalysis};
pub use params::{DerivedParams, EtaSchedule, PhysicalParams, ValidationReport};
pub use simulation::{simulate, RunSetup, Simulation, SimulationError};
