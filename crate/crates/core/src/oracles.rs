//! Reference implementations kept independent of the production path.
//!
//! None of these share numerical machinery with [`crate::ode`] or
//! [`crate::quadrature`]: the two-mode reference uses an implicit
//! Gauss–Legendre scheme in the lab frame, the integrals use
//! double-exponential substitutions, and the level shift has a closed form
//! through the incomplete gamma function.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::params::{josephson_coupling, DerivedParams, PhysicalParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("double-exponential quadrature did not reach rel. tol {tol:e} (last two levels {prev:e}, {last:e})")]
    NotConverged { tol: f64, prev: f64, last: f64 },
    #[error("the two-mode reference needs Lambda = 0 (got {0})")]
    NotIsolated(f64),
    #[error("implicit stage iteration failed at t = {0}")]
    StageIteration(f64),
    #[error("invalid argument: {0}")]
    BadArgument(&'static str),
}

/// Outcome of comparing a computed series against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub name: String,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub passed: bool,
    pub tolerance: f64,
}

impl OracleResult {
    /// Pointwise comparison; relative errors use `max(|reference|, floor)`
    /// as denominator so that zeros of the reference do not dominate.
    pub fn compare(name: &str, reference: &[f64], actual: &[f64], floor: f64, tolerance: f64) -> Self {
        let mut max_abs = 0.0f64;
        let mut max_rel = 0.0f64;
        for (r, a) in reference.iter().zip(actual) {
            let e = (a - r).abs();
            max_abs = max_abs.max(e);
            max_rel = max_rel.max(e / r.abs().max(floor));
        }
        if reference.len() != actual.len() {
            max_abs = f64::INFINITY;
            max_rel = f64::INFINITY;
        }
        Self {
            name: String::from(name),
            max_abs_error: max_abs,
            max_rel_error: max_rel,
            passed: max_rel <= tolerance,
            tolerance,
        }
    }
}

/// `N_A(t)` of two isolated ideal condensates.
pub fn isolated_closed_form(n_a0: f64, n_b0: f64, phi0: f64, josephson: f64, t: f64) -> f64 {
    let jt = josephson * t;
    let (s, c) = jt.sin_cos();
    n_a0 * c * c + n_b0 * s * s + (n_a0 * n_b0).sqrt() * (2.0 * jt).sin() * phi0.sin()
}

/// `Γ(−1/2, x) = 2(x^{−1/2} e^{−x} − √π erfc(√x))`.
pub fn upper_gamma_minus_half(x: f64) -> f64 {
    2.0 * ((-x).exp() / x.sqrt() - PI.sqrt() * libm::erfc(x.sqrt()))
}

/// Level shift `2Λ/(√π ω_z) Γ(−1/2, 2ω_up/ω_z)`.
pub fn shift_closed_form(outcoupling: f64, omega_z: f64, omega_up: f64) -> f64 {
    2.0 * outcoupling / (PI.sqrt() * omega_z) * upper_gamma_minus_half(2.0 * omega_up / omega_z)
}

const DE_MAX_LEVEL: u32 = 14;
const DE_T_MAX: f64 = 4.5;

fn de_refine<G: Fn(f64) -> f64>(g: G, rel_tol: f64) -> Result<f64, OracleError> {
    // trapezoidal sums of the transformed integrand g over [-T, T], halving h each level
    let mut h = 1.0;
    let mut sum = g(0.0);
    let mut t = h;
    while t <= DE_T_MAX {
        sum += g(t) + g(-t);
        t += h;
    }
    let mut prev = sum * h;
    for _ in 0..DE_MAX_LEVEL {
        h *= 0.5;
        let mut k = 1.0;
        while k * h <= DE_T_MAX {
            sum += g(k * h) + g(-k * h);
            k += 2.0;
        }
        let est = sum * h;
        if (est - prev).abs() <= rel_tol * est.abs() {
            return Ok(est);
        }
        prev = est;
    }
    Err(OracleError::NotConverged { tol: rel_tol, prev, last: sum * h })
}

/// Tanh-sinh quadrature of `f` over `[a, b]`; integrable endpoint
/// singularities are allowed since `f` is never evaluated at `a` or `b`.
pub fn tanh_sinh<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64, OracleError> {
    if a.partial_cmp(&b) != Some(core::cmp::Ordering::Less) {
        return Err(OracleError::BadArgument("tanh_sinh needs a < b"));
    }
    let half = 0.5 * (b - a);
    let g = |t: f64| {
        let u = 0.5 * PI * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        // distance to the nearer endpoint, free of cancellation
        let d = half * 2.0 * e / (1.0 + e);
        if d <= 0.0 {
            return 0.0;
        }
        let x = if t < 0.0 { a + d } else { b - d };
        let cu = u.cosh();
        let w = half * 0.5 * PI * t.cosh() / (cu * cu);
        let v = f(x) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    de_refine(g, rel_tol)
}

/// Exp-sinh quadrature of `f` over `[a, ∞)`.
pub fn exp_sinh<F: Fn(f64) -> f64>(f: F, a: f64, rel_tol: f64) -> Result<f64, OracleError> {
    let g = |t: f64| {
        let u = 0.5 * PI * t.sinh();
        let e = u.exp();
        if e == 0.0 || !e.is_finite() {
            return 0.0;
        }
        let w = 0.5 * PI * t.cosh() * e;
        let v = f(a + e) * w;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    de_refine(g, rel_tol)
}

/// The integrals the production code evaluates by other means.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntegrandSpec {
    /// `∫_{ω_up}^∞ D(ω)/ω dω`.
    Shift { outcoupling: f64, omega_z: f64, omega_up: f64 },
    /// `∫_0^{ω_up} D(ω) dω`.
    CouplingWeight { outcoupling: f64, omega_z: f64, omega_up: f64 },
    /// `∫_0^∞ D(ω) dω`.
    TotalWeight { outcoupling: f64, omega_z: f64 },
}

fn response(omega: f64, outcoupling: f64, omega_z: f64) -> f64 {
    (2.0 / (PI * omega_z)).sqrt() * outcoupling * (-2.0 * omega / omega_z).exp() / omega.sqrt()
}

/// Default relative tolerance of [`quadrature_oracle`].
pub const ORACLE_REL_TOL: f64 = 1e-10;

pub fn quadrature_oracle(spec: IntegrandSpec) -> Result<f64, OracleError> {
    match spec {
        IntegrandSpec::Shift { outcoupling, omega_z, omega_up } => {
            exp_sinh(|w| response(w, outcoupling, omega_z) / w, omega_up, ORACLE_REL_TOL)
        }
        IntegrandSpec::CouplingWeight { outcoupling, omega_z, omega_up } => {
            tanh_sinh(|w| response(w, outcoupling, omega_z), 0.0, omega_up, ORACLE_REL_TOL)
        }
        IntegrandSpec::TotalWeight { outcoupling, omega_z } => {
            exp_sinh(|w| response(w, outcoupling, omega_z), 0.0, ORACLE_REL_TOL)
        }
    }
}

/// Amplitudes of the isolated two-mode problem on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedTrajectory {
    pub times: Vec<f64>,
    pub amp_a: Vec<Complex64>,
    pub amp_b: Vec<Complex64>,
}

impl ReducedTrajectory {
    pub fn n_a(&self) -> Vec<f64> {
        self.amp_a.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn n_b(&self) -> Vec<f64> {
        self.amp_b.iter().map(|b| b.norm_sqr()).collect()
    }
}

/// Largest Gauss–Legendre step of [`reduced_two_mode`], s.
pub const REDUCED_MAX_STEP: f64 = 2e-5;

const GL_SQ3: f64 = 0.288_675_134_594_812_9; // √3/6
const GL_A: [[f64; 2]; 2] = [[0.25, 0.25 - GL_SQ3], [0.25 + GL_SQ3, 0.25]];

struct TwoMode {
    half_omega: f64,
    kappa: f64,
}

impl TwoMode {
    fn f(&self, josephson: f64, y: [Complex64; 2]) -> [Complex64; 2] {
        let mi = Complex64::new(0.0, -1.0);
        let [a, b] = y;
        [
            mi * (a * (self.half_omega + 2.0 * self.kappa * a.norm_sqr()) + b * josephson),
            mi * (b * (self.half_omega + 2.0 * self.kappa * b.norm_sqr()) + a * josephson),
        ]
    }
}

fn add(y: [Complex64; 2], s: f64, k1: [Complex64; 2], c1: f64, k2: [Complex64; 2], c2: f64) -> [Complex64; 2] {
    [y[0] + (k1[0] * c1 + k2[0] * c2) * s, y[1] + (k1[1] * c1 + k2[1] * c2) * s]
}

/// Integrates `dA/dt = −i(ω_z/2 + 2κ|A|²)A − iJB` (and its mirror for B) with
/// the two-stage Gauss–Legendre method, recording every `sample_dt` up to `t_end`.
pub fn reduced_two_mode(
    params: &PhysicalParams,
    derived: &DerivedParams,
    t_end: f64,
    sample_dt: f64,
) -> Result<ReducedTrajectory, OracleError> {
    if params.outcoupling != 0.0 {
        return Err(OracleError::NotIsolated(params.outcoupling));
    }
    if !(sample_dt > 0.0 && t_end >= 0.0 && t_end.is_finite()) {
        return Err(OracleError::BadArgument("need sample_dt > 0 and finite t_end >= 0"));
    }
    let sys = TwoMode { half_omega: 0.5 * params.omega_z, kappa: derived.kappa };
    let substeps = (sample_dt / REDUCED_MAX_STEP).ceil().max(1.0) as usize;
    let h = sample_dt / substeps as f64;
    let n_samples = (t_end / sample_dt + 1e-9).floor() as usize;
    let coupling = |t: f64| josephson_coupling(params.omega_z, params.lambda_ratio, params.eta_at(t));

    let (a0, b0) = params.initial_amplitudes();
    let mut y = [a0, b0];
    let mut out = ReducedTrajectory {
        times: Vec::with_capacity(n_samples + 1),
        amp_a: Vec::with_capacity(n_samples + 1),
        amp_b: Vec::with_capacity(n_samples + 1),
    };
    out.times.push(0.0);
    out.amp_a.push(y[0]);
    out.amp_b.push(y[1]);
    let c = [0.5 - GL_SQ3, 0.5 + GL_SQ3];
    for k in 0..n_samples {
        let t_sample = k as f64 * sample_dt;
        for s in 0..substeps {
            let t = t_sample + s as f64 * h;
            let j1 = coupling(t + c[0] * h);
            let j2 = coupling(t + c[1] * h);
            let mut k1 = sys.f(j1, y);
            let mut k2 = k1;
            let mut converged = false;
            for _ in 0..100 {
                let n1 = sys.f(j1, add(y, h, k1, GL_A[0][0], k2, GL_A[0][1]));
                let n2 = sys.f(j2, add(y, h, k1, GL_A[1][0], k2, GL_A[1][1]));
                let delta = (n1[0] - k1[0]).norm() + (n1[1] - k1[1]).norm() + (n2[0] - k2[0]).norm() + (n2[1] - k2[1]).norm();
                let scale = n1[0].norm() + n1[1].norm() + n2[0].norm() + n2[1].norm();
                k1 = n1;
                k2 = n2;
                if delta <= 1e-15 * scale.max(1e-300) {
                    converged = true;
                    break;
                }
            }
            if !converged {
                return Err(OracleError::StageIteration(t));
            }
            y = add(y, h, k1, 0.5, k2, 0.5);
        }
        out.times.push((k + 1) as f64 * sample_dt);
        out.amp_a.push(y[0]);
        out.amp_b.push(y[1]);
    }
    Ok(out)
}
