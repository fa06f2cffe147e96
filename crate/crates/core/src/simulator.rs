//! Fixed-step RK4 integration of the coupled Bloch / cavity equations.
//!
//! The state is the Bloch vector `(U, V, W)` of every detuning class plus the
//! intracavity Rabi frequency Ω:
//!
//! ```text
//! dU/dt = −Δ·V − Im Ω·W
//! dV/dt =  Δ·U + Re Ω·W
//! dW/dt = −Re Ω·V + Im Ω·U
//! dΩ/dt = D·[ −(κ/2)·Ω + √κ·Ω_in − i·αL·Σ_k (U_k + i·V_k)·dΔ ]
//! Ω_out = √κ·Ω − Ω_in
//! ```
//!
//! For a real Ω these reduce to the usual two-level Bloch equations without
//! damping.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pulse::{self, GaussianPulseSpec};
use crate::types::{CavityParams, DetuningGrid, EnsembleState, SimulationRecord, Waveform};

/// Default rms duration of the incoming Gaussian, 2 µs.
pub const DEFAULT_SIGMA_T: f64 = 2e-6;
/// Default pulse center, 15 µs after the window opens.
pub const DEFAULT_CENTER: f64 = 15e-6;
/// Default record length, 600 µs. Pulses close to the π area leave a slowly
/// decaying tail that needs most of it.
pub const DEFAULT_WINDOW: f64 = 600e-6;
/// Default RK4 step, 1.25 ns.
pub const DEFAULT_DT: f64 = 1.25e-9;

/// Fraction of the fastest time scale a step may cover.
const STEP_FRACTION: f64 = 0.05;
/// Steps per pulse rms duration, at least.
const STEPS_PER_SIGMA: f64 = 100.0;
/// Required ratio of grid half-span to the pulse spectral rms width.
const SPAN_PER_BANDWIDTH: f64 = 8.0;
/// Input must fall below this fraction of its peak at both record ends.
const QUIESCENT_INPUT: f64 = 1e-6;

/// How the intracavity field evolves during a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FieldUpdate {
    /// Ω follows the cavity equation.
    #[default]
    Cavity,
    /// Ω is held at its current value; only the atoms evolve.
    Clamped,
}

/// Right-hand side of the coupled system for one cavity and one grid.
#[derive(Debug, Clone)]
pub struct Dynamics<'a> {
    pub params: CavityParams,
    pub grid: &'a DetuningGrid,
    /// Rate multiplying the bracket of the cavity equation. Equal to the
    /// free spectral range unless the band-edge correction is applied.
    pub field_rate: f64,
    pub field: FieldUpdate,
}

impl<'a> Dynamics<'a> {
    pub fn new(params: CavityParams, grid: &'a DetuningGrid) -> Self {
        Dynamics {
            params,
            grid,
            field_rate: params.fsr,
            field: FieldUpdate::Cavity,
        }
    }

    /// Accounts for the detuning classes beyond the grid edge.
    ///
    /// Classes with `|Δ| > S` (`S` the half-span) follow the field
    /// adiabatically from the ground state and contribute `−(2αL/S)·dΩ/dt` to
    /// the source sum, which is equivalent to replacing `1/D` by
    /// `1/D + 2αL/S`. Without it a band narrower than the cavity line adds
    /// its own edge dispersion to the response.
    pub fn with_band_tail_correction(mut self) -> Self {
        let s = self.grid.half_span();
        self.field_rate = 1.0 / (1.0 / self.params.fsr + 2.0 * self.params.alpha_l / s);
        self
    }

    pub fn clamped(mut self) -> Self {
        self.field = FieldUpdate::Clamped;
        self
    }

    /// Writes the time derivative of `state` into `out`.
    pub fn eval(&self, state: &EnsembleState, omega_in: f64, out: &mut Derivative) {
        let (or, oi) = (state.omega.re, state.omega.im);
        let mut sum_u = 0.0;
        let mut sum_v = 0.0;
        let iter = self
            .grid
            .points()
            .iter()
            .zip(&state.u)
            .zip(&state.v)
            .zip(&state.w)
            .zip(out.du.iter_mut().zip(out.dv.iter_mut()).zip(out.dw.iter_mut()));
        for ((((&delta, &u), &v), &w), ((du, dv), dw)) in iter {
            (*du, *dv, *dw) = bloch(delta, u, v, w, or, oi);
            sum_u += u;
            sum_v += v;
        }
        out.domega = Rk4::field_derivative(self, state.omega, omega_in, sum_u, sum_v);
    }
}

/// Time derivative of an [`EnsembleState`].
#[derive(Debug, Clone, PartialEq)]
pub struct Derivative {
    pub du: Vec<f64>,
    pub dv: Vec<f64>,
    pub dw: Vec<f64>,
    pub domega: Complex64,
}

impl Derivative {
    pub fn zeros(n: usize) -> Self {
        Derivative {
            du: vec![0.0; n],
            dv: vec![0.0; n],
            dw: vec![0.0; n],
            domega: Complex64::new(0.0, 0.0),
        }
    }
}

/// Time derivative of the plain coupled system.
pub fn rhs(state: &EnsembleState, omega_in: f64, params: &CavityParams, grid: &DetuningGrid) -> Result<Derivative> {
    state.check_len(grid.len())?;
    let mut out = Derivative::zeros(grid.len());
    Dynamics::new(*params, grid).eval(state, omega_in, &mut out);
    Ok(out)
}

#[inline(always)]
fn bloch(delta: f64, u: f64, v: f64, w: f64, or: f64, oi: f64) -> (f64, f64, f64) {
    (-delta * v - oi * w, delta * u + or * w, -or * v + oi * u)
}

/// Classical four-stage Runge–Kutta stepper with reusable buffers.
///
/// Each class only couples to the others through Ω, so every stage is a
/// single pass over the ensemble: derive, accumulate into the increment and
/// form the next stage point.
#[derive(Debug)]
pub struct Rk4 {
    acc: [Vec<f64>; 3],
    tmp: EnsembleState,
}

impl Rk4 {
    pub fn new(n: usize) -> Self {
        Rk4 {
            acc: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            tmp: EnsembleState::ground(n),
        }
    }

    // −i·αL·(ΣU + i·ΣV)·dΔ = αL·dΔ·(ΣV − i·ΣU)
    fn field_derivative(dynamics: &Dynamics<'_>, omega: Complex64, omega_in: f64, sum_u: f64, sum_v: f64) -> Complex64 {
        let p = &dynamics.params;
        match dynamics.field {
            FieldUpdate::Clamped => Complex64::new(0.0, 0.0),
            FieldUpdate::Cavity => {
                let source = Complex64::new(sum_v, -sum_u) * (p.alpha_l * dynamics.grid.spacing());
                (omega * (-0.5 * p.kappa) + p.kappa.sqrt() * omega_in + source) * dynamics.field_rate
            }
        }
    }

    /// Advances `state` from `t` to `t + dt`. `input` gives Ω_in at `t`,
    /// `t + dt/2` and `t + dt`.
    pub fn step(&mut self, dynamics: &Dynamics<'_>, state: &mut EnsembleState, t: f64, dt: f64, input: impl Fn(f64) -> f64) {
        let half = 0.5 * dt;
        let (c_outer, c_inner) = (dt / 6.0, dt / 3.0);
        let points = dynamics.grid.points();
        let n = points.len();
        let [acc_u, acc_v, acc_w] = &mut self.acc;
        let (acc_u, acc_v, acc_w) = (&mut acc_u[..n], &mut acc_v[..n], &mut acc_w[..n]);
        let tmp = &mut self.tmp;
        let (tu, tv, tw) = (&mut tmp.u[..n], &mut tmp.v[..n], &mut tmp.w[..n]);
        let (su, sv, sw) = (&mut state.u[..n], &mut state.v[..n], &mut state.w[..n]);

        // Stage 1, from the current state.
        let omega = state.omega;
        let (or, oi) = (omega.re, omega.im);
        let (sum_u, sum_v) = sums(su, sv);
        for k in 0..n {
            let (du, dv, dw) = bloch(points[k], su[k], sv[k], sw[k], or, oi);
            acc_u[k] = c_outer * du;
            acc_v[k] = c_outer * dv;
            acc_w[k] = c_outer * dw;
            tu[k] = su[k] + half * du;
            tv[k] = sv[k] + half * dv;
            tw[k] = sw[k] + half * dw;
        }
        let d1 = Self::field_derivative(dynamics, omega, input(t), sum_u, sum_v);
        let mut acc_omega = d1 * c_outer;
        let mut stage_omega = omega + d1 * half;

        // Stages 2 and 3 overwrite the stage point in place.
        let in_mid = input(t + half);
        for h in [half, dt] {
            let (or, oi) = (stage_omega.re, stage_omega.im);
            let (sum_u, sum_v) = sums(tu, tv);
            for k in 0..n {
                let (du, dv, dw) = bloch(points[k], tu[k], tv[k], tw[k], or, oi);
                acc_u[k] += c_inner * du;
                acc_v[k] += c_inner * dv;
                acc_w[k] += c_inner * dw;
                tu[k] = su[k] + h * du;
                tv[k] = sv[k] + h * dv;
                tw[k] = sw[k] + h * dw;
            }
            let d = Self::field_derivative(dynamics, stage_omega, in_mid, sum_u, sum_v);
            acc_omega += d * c_inner;
            stage_omega = omega + d * h;
        }

        // Stage 4 and the update.
        let (or, oi) = (stage_omega.re, stage_omega.im);
        let (sum_u, sum_v) = sums(tu, tv);
        for k in 0..n {
            let (du, dv, dw) = bloch(points[k], tu[k], tv[k], tw[k], or, oi);
            su[k] += acc_u[k] + c_outer * du;
            sv[k] += acc_v[k] + c_outer * dv;
            sw[k] += acc_w[k] + c_outer * dw;
        }
        let d4 = Self::field_derivative(dynamics, stage_omega, input(t + dt), sum_u, sum_v);
        state.omega = omega + acc_omega + d4 * c_outer;
    }
}

/// `(ΣU, ΣV)` with four partial sums per component.
fn sums(u: &[f64], v: &[f64]) -> (f64, f64) {
    let mut a = [0.0f64; 4];
    let mut b = [0.0f64; 4];
    let (uc, vc) = (u.chunks_exact(4), v.chunks_exact(4));
    let (ur, vr) = (uc.remainder(), vc.remainder());
    for (x, y) in uc.zip(vc) {
        for i in 0..4 {
            a[i] += x[i];
            b[i] += y[i];
        }
    }
    let tail_u: f64 = ur.iter().sum();
    let tail_v: f64 = vr.iter().sum();
    ((a[0] + a[1]) + (a[2] + a[3]) + tail_u, (b[0] + b[1]) + (b[2] + b[3]) + tail_v)
}

/// One RK4 step of the plain system with Ω_in linearly interpolated from `input`.
pub fn step_rk4(
    state: &EnsembleState,
    t: f64,
    dt: f64,
    input: &Waveform,
    params: &CavityParams,
    grid: &DetuningGrid,
) -> Result<EnsembleState> {
    state.check_len(grid.len())?;
    let mut next = state.clone();
    Rk4::new(grid.len()).step(&Dynamics::new(*params, grid), &mut next, t, dt, |s| input.at(s));
    Ok(next)
}

/// Everything needed for one time-domain run.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub params: CavityParams,
    pub grid: DetuningGrid,
    pub input: Waveform,
    pub dt: f64,
    /// `(t_start, t_end)` in s.
    pub window: (f64, f64),
    /// Keep an ensemble snapshot every this many steps; 0 disables them.
    pub snapshot_stride: usize,
    /// See [`Dynamics::with_band_tail_correction`].
    pub band_tail_correction: bool,
}

impl SimulationConfig {
    /// Default matched cavity and grid driven by a 2 µs Gaussian of the
    /// given input area.
    pub fn default_with_area(theta_in: f64) -> Result<Self> {
        let spec = GaussianPulseSpec {
            sigma_t: DEFAULT_SIGMA_T,
            area: theta_in,
            center: DEFAULT_CENTER,
        };
        Self::gaussian(CavityParams::default(), DetuningGrid::default(), &spec, DEFAULT_DT, (0.0, DEFAULT_WINDOW))
    }

    /// Gaussian input sampled on the integration grid.
    pub fn gaussian(
        params: CavityParams,
        grid: DetuningGrid,
        spec: &GaussianPulseSpec,
        dt: f64,
        window: (f64, f64),
    ) -> Result<Self> {
        let n_steps = steps_in(window, dt)?;
        let input = pulse::make_gaussian(spec, window.0, dt, n_steps + 1)?;
        Ok(SimulationConfig {
            params,
            grid,
            input,
            dt,
            window,
            snapshot_stride: 0,
            band_tail_correction: true,
        })
    }

    /// Same physical setup with a different step; the input is resampled.
    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let n_steps = steps_in(self.window, dt)?;
        let samples = (0..=n_steps).map(|j| self.input.at(self.window.0 + j as f64 * dt)).collect();
        Ok(SimulationConfig {
            input: Waveform::new(self.window.0, dt, samples)?,
            dt,
            ..self.clone()
        })
    }

    pub fn dynamics(&self) -> Dynamics<'_> {
        let d = Dynamics::new(self.params, &self.grid);
        if self.band_tail_correction {
            d.with_band_tail_correction()
        } else {
            d
        }
    }

    /// Largest step the configuration admits.
    pub fn max_dt(&self) -> f64 {
        let p = &self.params;
        let mut limit = (STEP_FRACTION / (p.kappa * p.fsr)).min(STEP_FRACTION / self.grid.max_detuning().max(f64::MIN_POSITIVE));
        if let Ok(w) = pulse::rms_width(&self.input) {
            limit = limit.min(w.sigma / STEPS_PER_SIGMA);
        }
        limit
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        let (t0, t1) = self.window;
        if !(t1 > t0) {
            return Err(Error::Config(format!("window [{t0:e}, {t1:e}] is empty")));
        }
        steps_in(self.window, self.dt)?;
        let max_dt = self.max_dt();
        if self.dt > max_dt * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "dt = {:e} s exceeds the resolvable step {:e} s",
                self.dt, max_dt
            )));
        }
        let recurrence = self.grid.recurrence_time();
        if t1 - t0 >= recurrence {
            return Err(Error::Config(format!(
                "window length {:e} s reaches the comb recurrence time 2π/dΔ = {:e} s",
                t1 - t0,
                recurrence
            )));
        }
        if !self.input.vanishes_at_ends(QUIESCENT_INPUT) {
            return Err(Error::Config("input envelope does not vanish at the record ends".into()));
        }
        if let Ok(w) = pulse::rms_width(&self.input) {
            let need = SPAN_PER_BANDWIDTH / w.sigma;
            if self.grid.half_span() < need {
                return Err(Error::Config(format!(
                    "grid half-span {:e} rad/s is below {SPAN_PER_BANDWIDTH}× the pulse bandwidth ({need:e} rad/s)",
                    self.grid.half_span()
                )));
            }
        }
        Ok(())
    }
}

fn steps_in(window: (f64, f64), dt: f64) -> Result<usize> {
    let x = (window.1 - window.0) / dt;
    let n = x.round();
    if !(n >= 1.0) || (x - n).abs() > 1e-6 * n.max(1.0) {
        return Err(Error::Config(format!(
            "window length {:e} s is not a whole number of steps of {dt:e} s",
            window.1 - window.0
        )));
    }
    Ok(n as usize)
}

/// Integrates from the ground state over the configured window.
pub fn simulate(config: &SimulationConfig) -> Result<SimulationRecord> {
    config.validate()?;
    let dynamics = config.dynamics();
    let n = config.grid.len();
    let n_steps = steps_in(config.window, config.dt)?;
    let (t_start, dt) = (config.window.0, config.dt);
    let sk = config.params.sqrt_kappa();

    let mut state = EnsembleState::ground(n);
    let mut rk4 = Rk4::new(n);
    let mut omega_in = Vec::with_capacity(n_steps + 1);
    let mut omega_cav = Vec::with_capacity(n_steps + 1);
    let mut omega_out = Vec::with_capacity(n_steps + 1);
    let mut snapshots = Vec::new();
    let mut max_norm_error = 0.0f64;
    let mut max_imag = 0.0f64;

    let input = |t: f64| config.input.at(t);
    let mut record = |state: &EnsembleState, t: f64| {
        let i = input(t);
        omega_in.push(i);
        omega_cav.push(state.omega);
        omega_out.push(state.omega * sk - i);
    };

    for step in 0..=n_steps {
        let t = t_start + step as f64 * dt;
        record(&state, t);
        max_norm_error = max_norm_error.max(state.max_norm_error());
        max_imag = max_imag.max(state.omega.im.abs());
        if config.snapshot_stride > 0 && step % config.snapshot_stride == 0 {
            snapshots.push((t, state.clone()));
        }
        if step == n_steps {
            break;
        }
        rk4.step(&dynamics, &mut state, t, dt, input);
        let finite = state.omega.re.is_finite() && state.omega.im.is_finite();
        if !finite || (step % 1024 == 0 && !state.is_finite()) {
            return Err(Error::NonFinite { t: t + dt, step: step + 1 });
        }
    }
    if !state.is_finite() {
        return Err(Error::NonFinite { t: config.window.1, step: n_steps });
    }

    Ok(SimulationRecord {
        omega_in: Waveform::new(t_start, dt, omega_in)?,
        omega_cav: Waveform::new(t_start, dt, omega_cav)?,
        omega_out: Waveform::new(t_start, dt, omega_out)?,
        final_state: state,
        snapshots,
        max_norm_error,
        max_imag_omega: max_imag,
    })
}

/// `Σ_k (W_k + 1)·dΔ`, the excitation summed over the ensemble.
pub fn excitation(state: &EnsembleState, grid: &DetuningGrid) -> f64 {
    state.w.iter().map(|w| w + 1.0).sum::<f64>() * grid.spacing()
}

/// Energy held by the atoms in field units, `(αL/2π)·Σ (W_k+1)/2·dΔ`.
pub fn stored_energy(state: &EnsembleState, params: &CavityParams, grid: &DetuningGrid) -> f64 {
    params.alpha_l / (2.0 * PI) * 0.5 * excitation(state, grid)
}
