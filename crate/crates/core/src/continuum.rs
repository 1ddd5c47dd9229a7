//! The one-dimensional free-atom continuum and its uniform discretization.
//!
//! Free atoms with `ω = ħk²/2m` have a density of states diverging as
//! `ω^{-1/2}` at the band edge. Weighted by the Gaussian outcoupling matrix
//! element this gives the spectral response
//!
//! ```text
//! D(ω) = √2 Λ / √(π ω_z) · e^{−2ω/ω_z} / √ω,   ω > 0
//! ```
//!
//! which integrates to exactly `Λ` over `(0, ∞)`. Modes `ω_j = jε` for
//! `j = 1..=M` replace the continuum below `ω_up = Mε`, each coupled with
//! `g̃_j = √(D(ω_j) ε)`. Everything above the cutoff is folded into the level
//! shift `S = ∫_{ω_up}^∞ D(ω)/ω dω`.

use alloc::vec::Vec;
use core::f64::consts::PI;

// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::params::HBAR;
use crate::quadrature::{self, QuadratureError};

/// Mode count and cutoff used throughout the reference simulations.
pub const DEFAULT_MODES: usize = 1500;
pub const DEFAULT_OMEGA_UP: f64 = 300.0;

/// Relative accuracy requested from the shift quadrature.
pub const SHIFT_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContinuumError {
    #[error("mode count must be at least 1")]
    NoModes,
    #[error("omega_up must be finite and > 0 (got {0})")]
    BadCutoff(f64),
    #[error("{name} must be finite and {requirement} (got {value})")]
    BadInput { name: &'static str, requirement: &'static str, value: f64 },
    #[error("level shift: {0}")]
    Shift(#[from] QuadratureError),
}

/// `ρ(ω) = √(m / 2ħω) Θ(ω)`, in s per unit angular frequency.
pub fn density_of_states(omega: f64, mass: f64) -> f64 {
    if omega > 0.0 {
        (mass / (2.0 * HBAR * omega)).sqrt()
    } else {
        0.0
    }
}

/// `D(ω) = 2|g(ω)|² ρ(ω)`, in s⁻¹.
pub fn spectral_response(omega: f64, outcoupling: f64, omega_z: f64) -> f64 {
    if omega > 0.0 {
        2.0.sqrt() * outcoupling / (PI * omega_z).sqrt() * (-2.0 * omega / omega_z).exp() / omega.sqrt()
    } else {
        0.0
    }
}

/// Level shift from the modes above `ω_up`.
///
/// With `x = 2ω/ω_z` the integral becomes `2Λ/(√π ω_z) ∫_{x_up}^∞ e^{−x} x^{−3/2} dx`.
/// The tail beyond `x_up + 1 + 40` is bounded by `e^{−40}` relative to the
/// total and is added to the error instead of integrated.
pub fn compute_shift(outcoupling: f64, omega_z: f64, omega_up: f64) -> Result<f64, ContinuumError> {
    if !(omega_up.is_finite() && omega_up > 0.0) {
        return Err(ContinuumError::BadCutoff(omega_up));
    }
    if !(omega_z.is_finite() && omega_z > 0.0) {
        return Err(ContinuumError::BadInput { name: "omega_z", requirement: "> 0", value: omega_z });
    }
    if !(outcoupling.is_finite() && outcoupling >= 0.0) {
        return Err(ContinuumError::BadInput {
            name: "outcoupling",
            requirement: ">= 0",
            value: outcoupling,
        });
    }
    if outcoupling == 0.0 {
        return Ok(0.0);
    }
    let x_up = 2.0 * omega_up / omega_z;
    let x_end = x_up + 41.0;
    let r = quadrature::integrate(
        |x| (-(x - x_up)).exp() * x.powf(-1.5),
        x_up,
        x_end,
        0.0,
        SHIFT_REL_TOL,
        2000,
    )?;
    // the e^{-x_up} factor is pulled out to keep the integrand O(1)
    let integral = r.value * (-x_up).exp();
    Ok(2.0 * outcoupling / (PI.sqrt() * omega_z) * integral)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedContinuum {
    pub modes: usize,
    /// Mode spacing `ε`, s⁻¹.
    pub spacing: f64,
    pub omega_up: f64,
    /// `ω_j = jε`, `j = 1..=M`.
    pub frequencies: Vec<f64>,
    /// `g̃_j = √(D(ω_j) ε)`.
    pub couplings: Vec<f64>,
    /// Level shift `S`, s⁻¹.
    pub shift: f64,
    pub outcoupling: f64,
    pub omega_z: f64,
}

impl DiscretizedContinuum {
    /// `Σ_j g̃_j²`, the discrete counterpart of `∫_0^{ω_up} D`.
    pub fn total_coupling_sq(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }
}

pub fn discretize(
    outcoupling: f64,
    omega_z: f64,
    modes: usize,
    omega_up: f64,
) -> Result<DiscretizedContinuum, ContinuumError> {
    if modes == 0 {
        return Err(ContinuumError::NoModes);
    }
    let shift = compute_shift(outcoupling, omega_z, omega_up)?;
    let spacing = omega_up / modes as f64;
    let frequencies: Vec<f64> = (1..=modes).map(|j| j as f64 * spacing).collect();
    let couplings = frequencies
        .iter()
        .map(|&w| (spectral_response(w, outcoupling, omega_z) * spacing).sqrt())
        .collect();
    Ok(DiscretizedContinuum {
        modes,
        spacing,
        omega_up,
        frequencies,
        couplings,
        shift,
        outcoupling,
        omega_z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // mpmath, 30 digits
    const D_AT_100: f64 = 0.207_553_748_710_297_35;
    const S_REF: f64 = 3.823_025_348_901_694_4e-3;

    #[test]
    fn dos_step_and_scaling() {
        let m = crate::params::SODIUM_MASS;
        assert_eq!(density_of_states(-1.0, m), 0.0);
        assert_eq!(density_of_states(0.0, m), 0.0);
        assert_relative_eq!(density_of_states(40.0, m), density_of_states(10.0, m) / 2.0, max_relative = 1e-15);
        assert!(density_of_states(1e-12, m) > 1e3 * density_of_states(1.0, m));
    }

    #[test]
    fn spectral_response_values() {
        assert_relative_eq!(spectral_response(100.0, 100.0, 200.0), D_AT_100, max_relative = 1e-14);
        assert_eq!(spectral_response(50.0, 0.0, 200.0), 0.0);
        assert_eq!(spectral_response(-3.0, 100.0, 200.0), 0.0);
        for w in [0.1, 5.0, 120.0, 800.0] {
            assert_relative_eq!(
                spectral_response(w, 200.0, 200.0),
                2.0 * spectral_response(w, 100.0, 200.0),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn grid_layout() {
        let c = discretize(100.0, 200.0, 1500, 300.0).unwrap();
        assert_relative_eq!(c.spacing, 0.2, max_relative = 1e-15);
        assert_relative_eq!(c.frequencies[0], 0.2, max_relative = 1e-15);
        assert_relative_eq!(c.frequencies[1499], 300.0, max_relative = 1e-15);
        assert_eq!(c.modes as f64 * c.spacing, c.omega_up);
        assert!(c.frequencies.windows(2).all(|w| w[1] > w[0]));
        assert!(c.couplings.iter().all(|g| g.is_finite() && *g > 0.0));
        for (w, g) in c.frequencies.iter().zip(&c.couplings) {
            assert_relative_eq!(g * g, spectral_response(*w, 100.0, 200.0) * c.spacing, max_relative = 1e-14);
        }
    }

    #[test]
    fn zero_outcoupling() {
        let c = discretize(0.0, 200.0, 100, 300.0).unwrap();
        assert!(c.couplings.iter().all(|&g| g == 0.0));
        assert_eq!(c.shift, 0.0);
    }

    #[test]
    fn rejects_empty_grid() {
        assert_eq!(discretize(100.0, 200.0, 0, 300.0), Err(ContinuumError::NoModes));
        assert!(matches!(compute_shift(100.0, 200.0, 0.0), Err(ContinuumError::BadCutoff(_))));
    }

    #[test]
    fn shift_value_and_linearity() {
        let s = compute_shift(100.0, 200.0, 300.0).unwrap();
        assert_relative_eq!(s, S_REF, max_relative = 1e-10);
        let s2 = compute_shift(200.0, 200.0, 300.0).unwrap();
        assert_relative_eq!(s2, 2.0 * s, max_relative = 1e-13);
    }

    #[test]
    fn shift_decreases_with_cutoff() {
        let mut prev = compute_shift(100.0, 200.0, 10.0).unwrap();
        for w in [50.0, 100.0, 300.0, 1000.0, 3000.0] {
            let s = compute_shift(100.0, 200.0, w).unwrap();
            assert!(s < prev && s >= 0.0);
            prev = s;
        }
        assert!(prev < 1e-14);
    }
}
