//! Populations, relative phase, regime classification and the spectrum of
//! outcoupled atoms.

use alloc::vec::Vec;

use num_complex::Complex64;
// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::continuum::DiscretizedContinuum;
use crate::dynamics::SystemState;
use crate::params::DerivedParams;
use crate::peaks::{self, Dip, Peak, PeakConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Populations {
    pub n_a: f64,
    pub n_b: f64,
    pub n_c: f64,
    pub frac_a: f64,
    pub frac_b: f64,
    pub frac_c: f64,
}

impl Populations {
    pub fn trapped(&self) -> f64 {
        self.n_a + self.n_b
    }
}

/// Populations of `state`; fractions are relative to `n_total`.
pub fn populations(state: &SystemState, n_total: f64) -> Populations {
    let n_a = state.amp_a.norm_sqr();
    let n_b = state.amp_b.norm_sqr();
    let n_c = state.continuum_population();
    Populations { n_a, n_b, n_c, frac_a: n_a / n_total, frac_b: n_b / n_total, frac_c: n_c / n_total }
}

/// `arg(A* B)` in `(−π, π]`.
pub fn relative_phase(a: Complex64, b: Complex64) -> f64 {
    (a.conj() * b).arg()
}

/// Denominator of the population imbalance `p̃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ImbalanceNormalization {
    /// `(N_A − N_B)/N` with the initial total number.
    #[default]
    Total,
    /// `(N_A − N_B)/(N_A + N_B)`.
    Trapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Josephson,
    SelfTrapping,
}

impl Regime {
    pub fn from_indicator(h_c: f64) -> Self {
        if h_c < 1.0 {
            Regime::Josephson
        } else {
            Regime::SelfTrapping
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeRecord {
    pub t: f64,
    pub h_c: f64,
    pub p_tilde: f64,
    /// `κ N_trap / J`.
    pub nu: f64,
    pub phi: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("Josephson coupling is zero; the regime indicator is undefined")]
    NoTunneling,
}

/// `H_c = ν p̃²/2 + √(1 − p̃²) cos φ`.
pub fn regime_indicator(nu: f64, p_tilde: f64, phi: f64) -> f64 {
    0.5 * nu * p_tilde * p_tilde + (1.0 - p_tilde * p_tilde).sqrt() * phi.cos()
}

/// `H_c` from populations and phase, `None` when `J = 0`.
pub fn indicator_from_populations(
    n_a: f64,
    n_b: f64,
    phi: f64,
    josephson: f64,
    kappa: f64,
    n_total: f64,
    norm: ImbalanceNormalization,
) -> Option<f64> {
    if josephson == 0.0 {
        return None;
    }
    let trapped = n_a + n_b;
    let denom = match norm {
        ImbalanceNormalization::Total => n_total,
        ImbalanceNormalization::Trapped => trapped,
    };
    let p = if denom > 0.0 { (n_a - n_b) / denom } else { 0.0 };
    Some(regime_indicator(kappa * trapped / josephson, p, phi))
}

/// Classifies `state` with the coupling `josephson` in effect at `state.t`.
pub fn classify_with(
    state: &SystemState,
    josephson: f64,
    kappa: f64,
    n_total: f64,
    norm: ImbalanceNormalization,
) -> Result<RegimeRecord, ClassifyError> {
    if josephson == 0.0 {
        return Err(ClassifyError::NoTunneling);
    }
    let n_a = state.amp_a.norm_sqr();
    let n_b = state.amp_b.norm_sqr();
    let trapped = n_a + n_b;
    let denom = match norm {
        ImbalanceNormalization::Total => n_total,
        ImbalanceNormalization::Trapped => trapped,
    };
    let p_tilde = if denom > 0.0 { (n_a - n_b) / denom } else { 0.0 };
    let nu = kappa * trapped / josephson;
    let phi = relative_phase(state.amp_a, state.amp_b);
    let h_c = regime_indicator(nu, p_tilde, phi);
    Ok(RegimeRecord { t: state.t, h_c, p_tilde, nu, phi, regime: Regime::from_indicator(h_c) })
}

/// Classifies `state` using the static coupling of `derived`.
pub fn classify(state: &SystemState, derived: &DerivedParams) -> Result<RegimeRecord, ClassifyError> {
    classify_with(state, derived.josephson, derived.kappa, derived.n_total, ImbalanceNormalization::Total)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalStateRatio {
    /// `P₊/P₋`; `±∞` when `singular`.
    pub value: f64,
    pub singular: bool,
}

/// Ratio of the symmetric and antisymmetric global-state populations,
/// `(1 + 2√(αβ) cos φ)/(1 − 2√(αβ) cos φ)`.
pub fn global_state_ratio(alpha0_frac: f64, beta0_frac: f64, phi0: f64) -> GlobalStateRatio {
    let x = 2.0 * (alpha0_frac * beta0_frac).sqrt() * phi0.cos();
    let num = 1.0 + x;
    let den = 1.0 - x;
    if den.abs() <= 1e-15 {
        let value = if num >= 0.0 { f64::INFINITY } else { f64::NEG_INFINITY };
        return GlobalStateRatio { value, singular: true };
    }
    GlobalStateRatio { value: num / den, singular: false }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumAnalysis {
    /// Mode frequencies, s⁻¹.
    pub omegas: Vec<f64>,
    /// `|C_j|²/ε`, atoms per unit angular frequency.
    pub density: Vec<f64>,
    pub total_outcoupled: f64,
    pub peaks: Vec<Peak>,
    pub dips: Vec<Dip>,
    /// Height of the higher-frequency over the lower-frequency of the two
    /// most prominent peaks.
    pub peak_ratio: Option<f64>,
}

impl SpectrumAnalysis {
    /// The two most prominent peaks ordered by frequency.
    pub fn main_doublet(&self) -> Option<(Peak, Peak)> {
        if self.peaks.len() < 2 {
            return None;
        }
        let mut by_prom = self.peaks.clone();
        // stable sort keeps lower ω first among equal prominences
        by_prom.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
        let (x, y) = (by_prom[0], by_prom[1]);
        Some(if x.omega < y.omega { (x, y) } else { (y, x) })
    }

    pub fn is_peak(&self, index: usize) -> bool {
        self.peaks.iter().any(|p| p.index == index)
    }

    pub fn is_dip(&self, index: usize) -> bool {
        self.dips.iter().any(|d| d.index == index)
    }
}

/// Spectrum of the outcoupled atoms left in the continuum modes of `final_state`.
pub fn spectrum(final_state: &SystemState, cont: &DiscretizedContinuum, cfg: &PeakConfig) -> SpectrumAnalysis {
    let eps = cont.spacing;
    let density: Vec<f64> = final_state.amp_c.iter().map(|c| c.norm_sqr() / eps).collect();
    let total_outcoupled = final_state.continuum_population();
    let omegas = cont.frequencies.clone();
    let peaks = peaks::detect_peaks(&omegas, &density, cfg);
    let dips = peaks::detect_dips(&omegas, &density, &peaks, cfg);
    let mut out = SpectrumAnalysis { omegas, density, total_outcoupled, peaks, dips, peak_ratio: None };
    out.peak_ratio = out.main_doublet().map(|(l, r)| r.height / l.height);
    out
}

/// Upper envelope of `values`: maximum over a centred window of `2·half + 1` samples.
pub fn rolling_max_envelope(values: &[f64], half: usize) -> Vec<f64> {
    rolling(values, half, f64::max, f64::NEG_INFINITY)
}

/// Lower envelope of `values`: minimum over a centred window of `2·half + 1` samples.
pub fn rolling_min_envelope(values: &[f64], half: usize) -> Vec<f64> {
    rolling(values, half, f64::min, f64::INFINITY)
}

fn rolling(values: &[f64], half: usize, pick: fn(f64, f64) -> f64, init: f64) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            values[lo..hi].iter().copied().fold(init, pick)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, PhysicalParams};
    use alloc::vec;
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    #[test]
    fn initial_populations() {
        let p = PhysicalParams::default();
        let s = SystemState::initial(&p, 40);
        let pop = populations(&s, p.n_total);
        assert_relative_eq!(pop.n_a, 70.0, max_relative = 1e-14);
        assert_relative_eq!(pop.n_b, 30.0, max_relative = 1e-14);
        assert_eq!(pop.n_c, 0.0);
        assert_relative_eq!(pop.frac_a + pop.frac_b + pop.frac_c, 1.0, max_relative = 1e-14);

        let z = SystemState { t: 0.0, amp_a: Complex64::new(0.0, 0.0), amp_b: Complex64::new(0.0, 0.0), amp_c: vec![] };
        let pop = populations(&z, 100.0);
        assert_eq!((pop.n_a, pop.n_b, pop.n_c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn relative_phase_convention() {
        let a = Complex64::from_polar(2.0, 0.3);
        let b = Complex64::from_polar(1.0, 1.1);
        assert_relative_eq!(relative_phase(a, b), 0.8, max_relative = 1e-14);
        assert_relative_eq!(relative_phase(b, a), -0.8, max_relative = 1e-14);
    }

    #[test]
    fn indicator_examples() {
        assert_relative_eq!(regime_indicator(0.0, 0.4, 0.0), 0.84f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(regime_indicator(0.0, 0.4, 0.0), 0.9165, max_relative = 1e-4);
        assert_eq!(regime_indicator(0.0, 0.0, 0.0), 1.0);
        assert_eq!(Regime::from_indicator(1.0), Regime::SelfTrapping);
        assert_eq!(Regime::from_indicator(0.9165), Regime::Josephson);
    }

    #[test]
    fn self_trapped_start() {
        let p = PhysicalParams { n_total: 200.0, ..Default::default() };
        let d = derive(&p).unwrap();
        let r = classify(&SystemState::initial(&p, 0), &d).unwrap();
        assert_relative_eq!(r.h_c, 1.269_350_471_1, max_relative = 1e-9);
        assert_eq!(r.regime, Regime::SelfTrapping);
        assert_relative_eq!(r.p_tilde, 0.4, max_relative = 1e-14);
        assert_relative_eq!(r.nu, d.kappa * 200.0 / d.josephson, max_relative = 1e-14);
    }

    #[test]
    fn normalizations_differ_once_atoms_leave() {
        let s = SystemState {
            t: 1.0,
            amp_a: Complex64::new(6.0f64.sqrt(), 0.0),
            amp_b: Complex64::new(2.0f64.sqrt(), 0.0),
            amp_c: vec![],
        };
        let t = classify_with(&s, 5.0, 0.1, 10.0, ImbalanceNormalization::Total).unwrap();
        let r = classify_with(&s, 5.0, 0.1, 10.0, ImbalanceNormalization::Trapped).unwrap();
        assert_relative_eq!(t.p_tilde, 0.4, max_relative = 1e-14);
        assert_relative_eq!(r.p_tilde, 0.5, max_relative = 1e-14);
        assert_eq!(classify_with(&s, 0.0, 0.1, 10.0, ImbalanceNormalization::Total), Err(ClassifyError::NoTunneling));
    }

    #[test]
    fn global_ratio_examples() {
        assert_relative_eq!(global_state_ratio(0.7, 0.3, 0.5 * PI).value, 1.0, max_relative = 1e-15);
        let r = global_state_ratio(0.7, 0.3, 0.0);
        assert!(!r.singular);
        assert_relative_eq!(r.value, 22.956_439_237_389_595, max_relative = 1e-13);
        let r = global_state_ratio(0.5, 0.5, 0.0);
        assert!(r.singular && r.value == f64::INFINITY);
        let r = global_state_ratio(0.5, 0.5, PI);
        assert!(!r.singular);
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn empty_continuum_spectrum() {
        let p = PhysicalParams::default();
        let d = derive(&p).unwrap();
        let _ = d;
        let c = crate::continuum::discretize(p.outcoupling, p.omega_z, 30, 300.0).unwrap();
        let s = SystemState::initial(&p, 30);
        let sp = spectrum(&s, &c, &PeakConfig::default());
        assert_eq!(sp.total_outcoupled, 0.0);
        assert!(sp.peaks.is_empty() && sp.dips.is_empty() && sp.peak_ratio.is_none());
        assert_eq!(sp.omegas.len(), 30);
    }

    #[test]
    fn spectrum_bookkeeping() {
        let c = crate::continuum::discretize(100.0, 200.0, 200, 300.0).unwrap();
        let amp_c: Vec<Complex64> = c
            .frequencies
            .iter()
            .map(|&w| Complex64::new((-(w - 100.0) * (w - 100.0) / 50.0).exp(), 0.2 * (-(w - 120.0) * (w - 120.0) / 30.0).exp()))
            .collect();
        let s = SystemState { t: 10.0, amp_a: Complex64::new(0.0, 0.0), amp_b: Complex64::new(0.0, 0.0), amp_c };
        let sp = spectrum(&s, &c, &PeakConfig::default());
        let sum: f64 = sp.density.iter().sum::<f64>() * c.spacing;
        assert_relative_eq!(sum, sp.total_outcoupled, max_relative = 1e-13);
        // the weaker bump at 120 holds 4% of the main height
        assert_eq!(sp.peaks.len(), 2);
        assert_relative_eq!(sp.peak_ratio.unwrap(), 0.04, max_relative = 1e-2);
    }

    #[test]
    fn envelopes() {
        let v = [0.0, 3.0, 1.0, -2.0, 5.0, 0.0];
        assert_eq!(rolling_max_envelope(&v, 1), vec![3.0, 3.0, 3.0, 5.0, 5.0, 5.0]);
        assert_eq!(rolling_min_envelope(&v, 1), vec![0.0, 0.0, -2.0, -2.0, -2.0, 0.0]);
        assert_eq!(rolling_max_envelope(&v, 0), v.to_vec());
    }
}
