//! Integrating-factor Dormand–Prince 5(4) for complex systems of the form
//!
//! ```text
//! dy/dt = −i·diag(ω)·y + g(t, y)
//! ```
//!
//! Each step is taken in the frame rotating with the diagonal part from the
//! start of the step, `v(t) = e^{iω(t−t_n)} y(t)`, so the free rotation is
//! applied exactly and only `g` is seen by the Runge–Kutta error control.
//! Stages, the embedded error estimate, and the continuous extension all
//! live in that frame; results are rotated back on output. Because the
//! rotation is unitary the error norm is frame independent.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// unused when another crate in the graph links std
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

/// A complex ODE split into a diagonal oscillation and a remainder.
pub trait DiagonalSplitSystem {
    /// Angular frequencies of the diagonal part; defines the dimension.
    fn frequencies(&self) -> &[f64];

    /// Writes `g(t, y)` into `out`.
    fn remainder(&self, t: f64, y: &[Complex64], out: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxSteps { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperSettings {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; the controller takes over afterwards.
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepperSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: 1e-4,
            h_min: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b − b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// continuous extension (Hairer & Wanner, dopri5)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const HOLD_MAX: f64 = 1.2;

/// Stepper state. After a successful [`step`](Self::step) the interval
/// `[t_prev, t]` can be interpolated with [`dense`](Self::dense).
pub struct LawsonDopri5<'s, S: DiagonalSplitSystem> {
    system: &'s S,
    settings: StepperSettings,
    t: f64,
    t_prev: f64,
    h: f64,
    h_last: f64,
    y: Vec<Complex64>,
    y_prev: Vec<Complex64>,
    // v_{n+1} in the frame of t_n
    v_new: Vec<Complex64>,
    // remainder g(t, y) at the current point, lab frame
    g_now: Vec<Complex64>,
    k: [Vec<Complex64>; 7],
    stage: Vec<Complex64>,
    // e^{−iω c h} for c ∈ {1/5, 3/10, 4/5, 8/9, 1}
    rot: [Vec<Complex64>; 5],
    rot_h: f64,
    stats: StepStats,
}

impl<'s, S: DiagonalSplitSystem> LawsonDopri5<'s, S> {
    pub fn new(system: &'s S, t0: f64, y0: &[Complex64], settings: StepperSettings) -> Self {
        let n = system.frequencies().len();
        assert_eq!(y0.len(), n, "state dimension does not match the system");
        let zeros = || vec![Complex64::new(0.0, 0.0); n];
        let mut g_now = zeros();
        system.remainder(t0, y0, &mut g_now);
        Self {
            system,
            settings,
            t: t0,
            t_prev: t0,
            h: settings.h_init,
            h_last: 0.0,
            y: y0.to_vec(),
            y_prev: y0.to_vec(),
            v_new: zeros(),
            g_now,
            k: core::array::from_fn(|_| zeros()),
            stage: zeros(),
            rot: core::array::from_fn(|_| zeros()),
            rot_h: f64::NAN,
            stats: StepStats { evaluations: 1, ..StepStats::default() },
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[Complex64] {
        &self.y
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    /// Size of the next trial step (signed).
    pub fn next_step(&self) -> f64 {
        self.h
    }

    fn prepare_rotations(&mut self, h: f64) {
        if h == self.rot_h {
            return;
        }
        // c = 2/10, 3/10, 8/10, 1 from powers of e^{-iωh/10}; 8/9 directly
        let freqs = self.system.frequencies();
        let [r2, r3, r8, r89, r10] = &mut self.rot;
        for (i, &w) in freqs.iter().enumerate() {
            let (s, c) = (-w * h * 0.1).sin_cos();
            let b = Complex64::new(c, s);
            let b2 = b * b;
            let b3 = b2 * b;
            let b8 = b3 * b3 * b2;
            r2[i] = b2;
            r3[i] = b3;
            r8[i] = b8;
            r10[i] = b8 * b2;
            let (s, c) = (-w * h * (8.0 / 9.0)).sin_cos();
            r89[i] = Complex64::new(c, s);
        }
        self.rot_h = h;
    }

    /// Builds `y_n + h Σ a_j k_j`, rotates it to the stage time, evaluates
    /// the remainder there, and rotates the result back into `k[s]`.
    fn stage(&mut self, s: usize, h: f64, coeffs: &[f64]) {
        self.stage.copy_from_slice(&self.y);
        for (j, &a) in coeffs.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let ah = a * h;
            for (st, kj) in self.stage.iter_mut().zip(&self.k[j]) {
                *st += kj * ah;
            }
        }
        for (st, r) in self.stage.iter_mut().zip(&self.rot[s - 1]) {
            *st *= r;
        }
        let out = &mut self.k[s];
        self.system.remainder(self.t + C[s] * h, &self.stage, out);
        for (o, r) in out.iter_mut().zip(&self.rot[s - 1]) {
            *o *= r.conj();
        }
    }

    /// Attempts steps until one is accepted, never stepping past `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<(), OdeError> {
        let span = t_limit - self.t;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut h = self.h.abs().min(self.settings.h_max) * dir;
        let mut fac_max = FAC_MAX;
        loop {
            if self.stats.accepted + self.stats.rejected >= self.settings.max_steps {
                return Err(OdeError::MaxSteps { t: self.t });
            }
            let mut last = false;
            if (h.abs() >= span.abs()) || ((self.t + h - t_limit) * dir > 0.0) {
                h = span;
                last = true;
            } else if h.abs() < self.settings.h_min {
                return Err(OdeError::StepSizeUnderflow { t: self.t, h });
            }
            self.prepare_rotations(h);
            self.k[0].copy_from_slice(&self.g_now);
            self.stage(1, h, &[A21]);
            self.stage(2, h, &[A31, A32]);
            self.stage(3, h, &[A41, A42, A43]);
            self.stage(4, h, &[A51, A52, A53, A54]);
            self.stage(5, h, &[A61, A62, A63, A64, A65]);

            let n = self.y.len();
            let (rtol, atol) = (self.settings.rtol, self.settings.atol);
            for i in 0..n {
                let incr = self.k[0][i] * B1
                    + self.k[2][i] * B3
                    + self.k[3][i] * B4
                    + self.k[4][i] * B5
                    + self.k[5][i] * B6;
                self.v_new[i] = self.y[i] + incr * h;
                self.stage[i] = self.v_new[i] * self.rot[4][i];
            }
            let t_new = if last { t_limit } else { self.t + h };
            self.system.remainder(t_new, &self.stage, &mut self.k[6]);
            self.stats.evaluations += 6;

            // k7 still holds the lab-frame remainder; keep it for FSAL before rotating
            let mut err = 0.0f64;
            for i in 0..n {
                let k7 = self.k[6][i] * self.rot[4][i].conj();
                let e = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + k7 * E7)
                    * h;
                // squared moduli and one sqrt; hypot is needlessly slow here
                let scale = atol + rtol * self.y[i].norm_sqr().max(self.v_new[i].norm_sqr()).sqrt();
                let ratio = e.norm_sqr().sqrt() / scale;
                // NaN must poison the norm
                err = if ratio.is_nan() || err.is_nan() { f64::NAN } else { err.max(ratio) };
            }

            if err.is_nan() {
                self.stats.rejected += 1;
                h *= FAC_MIN;
                fac_max = 1.0;
                if h.abs() < self.settings.h_min {
                    return Err(OdeError::NonFinite { t: self.t });
                }
                continue;
            }

            let fac = if err == 0.0 { fac_max } else { (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, fac_max) };
            if err <= 1.0 {
                self.stats.accepted += 1;
                core::mem::swap(&mut self.y_prev, &mut self.y);
                self.y.copy_from_slice(&self.stage);
                self.g_now.copy_from_slice(&self.k[6]);
                for (k7, r) in self.k[6].iter_mut().zip(&self.rot[4]) {
                    *k7 *= r.conj();
                }
                if self.y.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                    return Err(OdeError::NonFinite { t: t_new });
                }
                self.t_prev = self.t;
                self.t = t_new;
                self.h_last = h;
                // a clipped final step says little about the natural step size
                // small increases are skipped so the cached rotations stay valid
                if !last && !(1.0..=HOLD_MAX).contains(&fac) {
                    self.h = h * fac;
                } else if !last {
                    self.h = h;
                }
                return Ok(());
            }
            self.stats.rejected += 1;
            h *= fac;
            fac_max = 1.0;
        }
    }

    /// Interpolates the state at `t` within the last accepted step.
    pub fn dense(&self, t: f64, out: &mut [Complex64]) {
        self.dense_in(t, SampleFrame::Lab, out);
    }

    fn dense_in(&self, t: f64, frame: SampleFrame, out: &mut [Complex64]) {
        let h = self.h_last;
        let theta = (t - self.t_prev) / h;
        let theta1 = 1.0 - theta;
        let freqs = self.system.frequencies();
        for i in 0..self.y.len() {
            let y0 = self.y_prev[i];
            let ydiff = self.v_new[i] - y0;
            let bspl = self.k[0][i] * h - ydiff;
            let c4 = ydiff - self.k[6][i] * h - bspl;
            let c5 = (self.k[0][i] * D1
                + self.k[2][i] * D3
                + self.k[3][i] * D4
                + self.k[4][i] * D5
                + self.k[5][i] * D6
                + self.k[6][i] * D7)
                * h;
            let v = y0 + (ydiff + (bspl + (c4 + c5 * theta1) * theta) * theta1) * theta;
            out[i] = match frame {
                SampleFrame::Lab => {
                    let (s, c) = (-freqs[i] * theta * h).sin_cos();
                    v * Complex64::new(c, s)
                }
                SampleFrame::Unrotated => v,
            };
        }
    }
}

/// Frame of the states handed to a sampling callback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleFrame {
    /// The actual solution.
    #[default]
    Lab,
    /// Interpolated samples skip the final rotation `e^{−iω_i θh}`. Moduli,
    /// and phase differences between components of equal frequency, are
    /// those of the solution; absolute phases are not.
    Unrotated,
}

/// Integrates from `t0` to `t_end` (either direction) and reports the state
/// at `t0 + k·sample_dt` for every `k` with `k·sample_dt ≤ |t_end − t0|`.
pub fn integrate_sampled<S, F>(
    system: &S,
    t0: f64,
    y0: &[Complex64],
    t_end: f64,
    sample_dt: f64,
    settings: StepperSettings,
    on_sample: F,
) -> Result<(Vec<Complex64>, StepStats), OdeError>
where
    S: DiagonalSplitSystem,
    F: FnMut(f64, &[Complex64]),
{
    integrate_sampled_in(system, t0, y0, t_end, sample_dt, settings, SampleFrame::Lab, on_sample)
}

/// [`integrate_sampled`] with a choice of sample frame. The returned final
/// state is always the lab-frame solution.
#[allow(clippy::too_many_arguments)]
pub fn integrate_sampled_in<S, F>(
    system: &S,
    t0: f64,
    y0: &[Complex64],
    t_end: f64,
    sample_dt: f64,
    settings: StepperSettings,
    frame: SampleFrame,
    mut on_sample: F,
) -> Result<(Vec<Complex64>, StepStats), OdeError>
where
    S: DiagonalSplitSystem,
    F: FnMut(f64, &[Complex64]),
{
    let span = t_end - t0;
    let dir = if span < 0.0 { -1.0 } else { 1.0 };
    let dt = sample_dt.abs();
    // tolerate rounding in span / dt
    let n_samples = if dt > 0.0 { ((span.abs() / dt) * (1.0 + 1e-12)).floor() as usize } else { 0 };
    let sample_time = |k: usize| t0 + dir * (k as f64) * dt;

    on_sample(t0, y0);
    let mut next = 1usize;
    let mut stepper = LawsonDopri5::new(system, t0, y0, settings);
    let mut buf = vec![Complex64::new(0.0, 0.0); y0.len()];
    while (t_end - stepper.t()) * dir > 0.0 {
        stepper.step(t_end)?;
        let t_now = stepper.t();
        while next <= n_samples {
            let ts = sample_time(next);
            if (ts - t_now) * dir > 0.0 {
                break;
            }
            if ts == t_now {
                on_sample(ts, stepper.y());
            } else {
                stepper.dense_in(ts, frame, &mut buf);
                on_sample(ts, &buf);
            }
            next += 1;
        }
    }
    // a sample that rounding placed a hair beyond t_end
    while next <= n_samples {
        on_sample(sample_time(next), stepper.y());
        next += 1;
    }
    Ok((stepper.y().to_vec(), stepper.stats()))
}
