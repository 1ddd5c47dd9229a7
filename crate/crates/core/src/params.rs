//! Physical inputs and the closed-form two-mode model parameters.
//!
//! The condensate ground states are taken to be Gaussians, which gives closed
//! forms for the Josephson coupling `J`, the onsite interaction `κ`, and the
//! atom-number bound under which the two-mode description holds.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

/// Reduced Planck constant in J·s.
pub const HBAR: f64 = 1.0545718e-34;

/// Mass of a ²³Na atom in kg.
pub const SODIUM_MASS: f64 = 3.818e-26;

/// s-wave scattering length of trapped ²³Na atoms in m.
pub const SODIUM_SCATTERING_LENGTH: f64 = 2.75e-9;

/// Tolerance on `alpha0_frac + beta0_frac = 1`.
pub const FRACTION_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("{field} must be finite (got {value})")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be > 0 (got {value})")]
    NotPositive { field: &'static str, value: f64 },
    #[error("{field} must be >= 0 (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("alpha0_frac must lie in [0, 1] (got {0})")]
    FractionRange(f64),
    #[error("alpha0_frac + beta0_frac must equal 1 (got {0})")]
    FractionSum(f64),
    #[error("eta schedule: {0}")]
    Schedule(String),
}

/// Piecewise-linear trap separation `η(t)`, held constant outside the knots.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSchedule {
    knots: Vec<(f64, f64)>,
}

impl EtaSchedule {
    /// `knots` are `(t, η)` pairs with strictly increasing `t`.
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, ParamsError> {
        if knots.is_empty() {
            return Err(ParamsError::Schedule("at least one knot is required".into()));
        }
        for (i, &(t, eta)) in knots.iter().enumerate() {
            if !t.is_finite() || !eta.is_finite() {
                return Err(ParamsError::Schedule(format!("knot {i} is not finite")));
            }
            if eta < 0.0 {
                return Err(ParamsError::Schedule(format!("knot {i} has negative eta")));
            }
            if i > 0 && t <= knots[i - 1].0 {
                return Err(ParamsError::Schedule(format!(
                    "knot times must be strictly increasing (knot {i})"
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn at(&self, t: f64) -> f64 {
        let first = self.knots[0];
        let last = self.knots[self.knots.len() - 1];
        if t <= first.0 {
            return first.1;
        }
        if t >= last.0 {
            return last.1;
        }
        // knots is sorted, so the partition point is the first knot strictly after t
        let hi = self.knots.partition_point(|&(tk, _)| tk <= t);
        let (t0, e0) = self.knots[hi - 1];
        let (t1, e1) = self.knots[hi];
        e0 + (e1 - e0) * (t - t0) / (t1 - t0)
    }
}

/// Raw experimental inputs (SI units, angular frequencies).
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalParams {
    /// Atomic mass, kg.
    pub mass: f64,
    /// s-wave scattering length between trapped atoms, m.
    pub scattering_length: f64,
    /// Longitudinal trap frequency, s⁻¹.
    pub omega_z: f64,
    /// Aspect ratio `λ = ω_z/ω_x`.
    pub lambda_ratio: f64,
    /// Dimensionless trap separation, used when no schedule is given.
    pub eta: f64,
    /// Optional time-dependent separation; overrides `eta`.
    pub eta_schedule: Option<EtaSchedule>,
    /// Outcoupling strength `Λ` of the rectangular pulse, s⁻².
    pub outcoupling: f64,
    /// Total atom number `N`.
    pub n_total: f64,
    /// Initial fraction of atoms in trap A.
    pub alpha0_frac: f64,
    /// Initial fraction of atoms in trap B.
    pub beta0_frac: f64,
    /// Initial relative phase `φ(0)`, rad.
    pub phi0: f64,
    /// Pulse and simulation duration, s.
    pub tau: f64,
    /// Forces `κ` (s⁻¹), e.g. `Some(0.0)` for an ideal gas.
    pub kappa_override: Option<f64>,
}

impl Default for PhysicalParams {
    /// ²³Na in the weak-outcoupling configuration: `ω_z = 200 s⁻¹`, `λ = 0.4`,
    /// `η = 1.7`, `Λ = 100 s⁻²`, 70/30 initial split, `τ = 10 s`.
    fn default() -> Self {
        Self {
            mass: SODIUM_MASS,
            scattering_length: SODIUM_SCATTERING_LENGTH,
            omega_z: 200.0,
            lambda_ratio: 0.4,
            eta: 1.7,
            eta_schedule: None,
            outcoupling: 100.0,
            n_total: 100.0,
            alpha0_frac: 0.7,
            beta0_frac: 0.3,
            phi0: 0.0,
            tau: 10.0,
            kappa_override: None,
        }
    }
}

fn finite(field: &'static str, value: f64) -> Result<f64, ParamsError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ParamsError::NonFinite { field, value })
    }
}

fn positive(field: &'static str, value: f64) -> Result<(), ParamsError> {
    if finite(field, value)? > 0.0 {
        Ok(())
    } else {
        Err(ParamsError::NotPositive { field, value })
    }
}

fn non_negative(field: &'static str, value: f64) -> Result<(), ParamsError> {
    if finite(field, value)? >= 0.0 {
        Ok(())
    } else {
        Err(ParamsError::Negative { field, value })
    }
}

impl PhysicalParams {
    pub fn check(&self) -> Result<(), ParamsError> {
        positive("mass", self.mass)?;
        non_negative("scattering_length", self.scattering_length)?;
        positive("omega_z", self.omega_z)?;
        positive("lambda_ratio", self.lambda_ratio)?;
        non_negative("eta", self.eta)?;
        non_negative("outcoupling", self.outcoupling)?;
        positive("n_total", self.n_total)?;
        positive("tau", self.tau)?;
        finite("phi0", self.phi0)?;
        finite("alpha0_frac", self.alpha0_frac)?;
        finite("beta0_frac", self.beta0_frac)?;
        if !(0.0..=1.0).contains(&self.alpha0_frac) {
            return Err(ParamsError::FractionRange(self.alpha0_frac));
        }
        let sum = self.alpha0_frac + self.beta0_frac;
        if (sum - 1.0).abs() > FRACTION_SUM_TOL {
            return Err(ParamsError::FractionSum(sum));
        }
        if let Some(k) = self.kappa_override {
            non_negative("kappa_override", k)?;
        }
        Ok(())
    }

    pub fn eta_at(&self, t: f64) -> f64 {
        match &self.eta_schedule {
            Some(s) => s.at(t),
            None => self.eta,
        }
    }

    /// Coherent-state amplitudes `(⟨a(0)⟩, ⟨b(0)⟩)`; the continuum starts empty.
    pub fn initial_amplitudes(&self) -> (Complex64, Complex64) {
        let a = Complex64::new((self.n_total * self.alpha0_frac).sqrt(), 0.0);
        let b = Complex64::from_polar((self.n_total * self.beta0_frac).sqrt(), self.phi0);
        (a, b)
    }
}

/// `l_z = √(ħ/mω_z)`.
pub fn oscillator_length(mass: f64, omega_z: f64) -> f64 {
    (HBAR / (mass * omega_z)).sqrt()
}

/// `J = ω_z (1/2 + 1/λ − η/(λ√π)) e^{−η²}`.
pub fn josephson_coupling(omega_z: f64, lambda_ratio: f64, eta: f64) -> f64 {
    let geometric = 0.5 + 1.0 / lambda_ratio - eta / (lambda_ratio * PI.sqrt());
    omega_z * geometric * (-eta * eta).exp()
}

/// `κ = ħ a / (λ m √(2π) l_z³)`.
pub fn onsite_interaction(mass: f64, scattering_length: f64, omega_z: f64, lambda_ratio: f64) -> f64 {
    let l_z = oscillator_length(mass, omega_z);
    HBAR * scattering_length / (lambda_ratio * mass * (2.0 * PI).sqrt() * l_z.powi(3))
}

/// Closed-form parameters of the two-mode model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    pub omega_z: f64,
    pub lambda_ratio: f64,
    pub n_total: f64,
    /// Oscillator length, m.
    pub l_z: f64,
    /// Josephson coupling at `t = 0`, s⁻¹.
    pub josephson: f64,
    /// Onsite interaction per particle, s⁻¹.
    pub kappa: f64,
    /// Atom-number bound of the two-mode model (∞ for an ideal gas).
    pub n_max: f64,
    /// Mean-field collapse time `1/(2√N κ)`, s (∞ for an ideal gas).
    pub t_collapse: f64,
    /// Initial chemical potentials, J.
    pub mu_a0: f64,
    pub mu_b0: f64,
}

impl DerivedParams {
    pub fn interaction_free(&self) -> bool {
        self.kappa == 0.0
    }

    pub fn josephson_at(&self, eta: f64) -> f64 {
        josephson_coupling(self.omega_z, self.lambda_ratio, eta)
    }
}

pub fn derive(params: &PhysicalParams) -> Result<DerivedParams, ParamsError> {
    params.check()?;
    let l_z = oscillator_length(params.mass, params.omega_z);
    let josephson = josephson_coupling(params.omega_z, params.lambda_ratio, params.eta_at(0.0));
    let (kappa, n_max) = match params.kappa_override {
        None => {
            let kappa = onsite_interaction(
                params.mass,
                params.scattering_length,
                params.omega_z,
                params.lambda_ratio,
            );
            let n_max = if params.scattering_length > 0.0 {
                params.lambda_ratio.cbrt() * (2.0 * PI).sqrt() * l_z / params.scattering_length
            } else {
                f64::INFINITY
            };
            (kappa, n_max)
        }
        // (ω_x ω_y ω_z)^{1/3} = ω_z λ^{-2/3}; same bound, but with the forced κ
        Some(kappa) => {
            let n_max = if kappa > 0.0 {
                params.omega_z * params.lambda_ratio.powf(-2.0 / 3.0) / kappa
            } else {
                f64::INFINITY
            };
            (kappa, n_max)
        }
    };
    let t_collapse = if kappa > 0.0 {
        1.0 / (2.0 * params.n_total.sqrt() * kappa)
    } else {
        f64::INFINITY
    };
    let mu = |n: f64| HBAR * (0.5 * params.omega_z + 2.0 * kappa * n);
    Ok(DerivedParams {
        omega_z: params.omega_z,
        lambda_ratio: params.lambda_ratio,
        n_total: params.n_total,
        l_z,
        josephson,
        kappa,
        n_max,
        t_collapse,
        mu_a0: mu(params.n_total * params.alpha0_frac),
        mu_b0: mu(params.n_total * params.beta0_frac),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub checks: Vec<ValidationCheck>,
}

impl ValidationReport {
    pub fn warnings(&self) -> impl Iterator<Item = &ValidationCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Warn)
    }

    pub fn has_warnings(&self) -> bool {
        self.warnings().next().is_some()
    }

    pub fn check(&self, name: &str) -> Option<&ValidationCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_TWO_MODE: &str = "two-mode validity";
pub const CHECK_COHERENCE: &str = "coherence time";
pub const CHECK_TUNNELING: &str = "tunneling range";

/// `N ≪ N_max` is read as `N < N_max / 10`.
pub const TWO_MODE_MARGIN: f64 = 0.1;

/// Below this overlap `e^{-η²}` the traps are effectively decoupled.
pub const MIN_OVERLAP: f64 = 1e-6;

/// Soft checks of the model's validity; never fails.
pub fn validate(params: &PhysicalParams, derived: &DerivedParams) -> ValidationReport {
    let mut checks = Vec::with_capacity(3);

    let bound = TWO_MODE_MARGIN * derived.n_max;
    checks.push(if params.n_total < bound {
        ValidationCheck {
            name: CHECK_TWO_MODE,
            status: CheckStatus::Pass,
            message: format!("N = {} < 0.1 N_max = {:.1}", params.n_total, bound),
        }
    } else {
        ValidationCheck {
            name: CHECK_TWO_MODE,
            status: CheckStatus::Warn,
            message: format!(
                "two-mode validity: N = {} is not << N_max = {:.1}",
                params.n_total, derived.n_max
            ),
        }
    });

    checks.push(if params.tau <= derived.t_collapse {
        ValidationCheck {
            name: CHECK_COHERENCE,
            status: CheckStatus::Pass,
            message: format!("tau = {} s <= t_collapse = {:.4e} s", params.tau, derived.t_collapse),
        }
    } else {
        ValidationCheck {
            name: CHECK_COHERENCE,
            status: CheckStatus::Warn,
            message: format!(
                "tau exceeds t_collapse: tau = {} s > t_collapse = {:.4e} s; mean-field coherence is not guaranteed",
                params.tau, derived.t_collapse
            ),
        }
    });

    let etas: Vec<f64> = match &params.eta_schedule {
        Some(s) => s.knots().iter().map(|&(_, e)| e).collect(),
        None => alloc::vec![params.eta],
    };
    let worst = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let j = josephson_coupling(params.omega_z, params.lambda_ratio, worst);
    let overlap = (-worst * worst).exp();
    checks.push(if j > 0.0 && overlap >= MIN_OVERLAP {
        ValidationCheck {
            name: CHECK_TUNNELING,
            status: CheckStatus::Pass,
            message: format!("eta <= {worst}: J = {j:.4e} s^-1 > 0"),
        }
    } else {
        ValidationCheck {
            name: CHECK_TUNNELING,
            status: CheckStatus::Warn,
            message: format!(
                "eta = {worst} is outside the tunneling range (J = {j:.4e} s^-1, e^-eta^2 = {overlap:.2e})"
            ),
        }
    });

    ValidationReport { checks }
}
