//! Parameter and state containers shared by the rest of the crate.
//!
//! Units: every rate, detuning and Rabi frequency is an angular frequency in
//! rad/s. The free spectral range is the one exception: it is stored as an
//! ordinary frequency in s⁻¹, so that the cavity linewidth is `2κD`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance on `αL·2π/κ − 1` below which a cavity counts as matched.
pub const MATCH_TOLERANCE: f64 = 1e-9;

/// Ring cavity described by its entrance mirror, round-trip time and the
/// round-trip absorption of the ensemble it contains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    /// Intensity transmission of the entrance mirror, in (0, 1).
    pub kappa: f64,
    /// Free spectral range `c/L` in s⁻¹.
    pub fsr: f64,
    /// Round-trip absorption `αL`.
    pub alpha_l: f64,
}

impl CavityParams {
    pub fn new(kappa: f64, fsr: f64, alpha_l: f64) -> Result<Self> {
        let p = CavityParams { kappa, fsr, alpha_l };
        p.validate()?;
        Ok(p)
    }

    /// Impedance-matched cavity: `αL = κ/2π`.
    pub fn matched_with(kappa: f64, fsr: f64) -> Result<Self> {
        Self::new(kappa, fsr, kappa / (2.0 * PI))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa < 1.0) {
            return Err(Error::param("kappa", format!("{} is not in (0, 1)", self.kappa)));
        }
        if !(self.fsr > 0.0 && self.fsr.is_finite()) {
            return Err(Error::param("fsr", format!("{} must be positive", self.fsr)));
        }
        if !(self.alpha_l >= 0.0 && self.alpha_l.is_finite()) {
            return Err(Error::param("alpha_l", format!("{} must be non-negative", self.alpha_l)));
        }
        Ok(())
    }

    /// Finesse `2π/κ`.
    pub fn finesse(&self) -> f64 {
        2.0 * PI / self.kappa
    }

    /// Relative departure from impedance matching, `αL·2π/κ − 1`.
    pub fn mismatch(&self) -> f64 {
        self.alpha_l * 2.0 * PI / self.kappa - 1.0
    }

    /// Returns whether the cavity is matched together with its mismatch.
    pub fn matched(&self) -> (bool, f64) {
        let m = self.mismatch();
        (m.abs() <= MATCH_TOLERANCE, m)
    }

    pub fn is_matched(&self) -> bool {
        self.matched().0
    }

    /// `παL > κ/2`: the area relation is no longer monotone.
    pub fn is_overmatched(&self) -> bool {
        self.mismatch() > MATCH_TOLERANCE
    }

    /// FWHM of the matched reflection dip, `2κD` in rad/s.
    pub fn cavity_linewidth(&self) -> f64 {
        2.0 * self.kappa * self.fsr
    }

    /// Amplitude transmission `√κ` of the entrance mirror.
    pub fn sqrt_kappa(&self) -> f64 {
        self.kappa.sqrt()
    }
}

impl Default for CavityParams {
    /// Finesse 500, 3 GHz free spectral range, matched.
    fn default() -> Self {
        let kappa = 2.0 * PI / 500.0;
        CavityParams {
            kappa,
            fsr: 3.0e9,
            alpha_l: kappa / (2.0 * PI),
        }
    }
}

/// Evenly spaced detuning classes placed symmetrically around zero.
///
/// Class `k` sits at `Δ_k = (k − (n−1)/2)·dΔ`. Odd `n` puts a class exactly on
/// resonance; even `n` straddles it.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningGrid {
    spacing: f64,
    points: Vec<f64>,
}

impl DetuningGrid {
    pub fn new(n: usize, spacing: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::param("n", "grid needs at least one detuning class"));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::param("spacing", format!("{spacing} must be positive")));
        }
        let center = (n as f64 - 1.0) / 2.0;
        let points = (0..n).map(|k| (k as f64 - center) * spacing).collect();
        Ok(DetuningGrid { spacing, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Largest |Δ| carried by the grid.
    pub fn max_detuning(&self) -> f64 {
        self.points.last().copied().unwrap_or(0.0).abs()
    }

    /// Half-width `n·dΔ/2` of the band the grid represents as a midpoint rule.
    pub fn half_span(&self) -> f64 {
        self.len() as f64 * self.spacing / 2.0
    }

    /// Time after which the discrete comb rephases, `2π/dΔ`.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// Index of the class at Δ = 0, if the grid has one.
    pub fn resonant_index(&self) -> Option<usize> {
        (self.len() % 2 == 1).then_some(self.len() / 2)
    }
}

impl Default for DetuningGrid {
    fn default() -> Self {
        DetuningGrid::new(1281, 1.0e4).expect("default grid is valid")
    }
}

/// Bloch vectors of every detuning class plus the intracavity field.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    /// Intracavity Rabi frequency. Kept complex; real inputs keep it real.
    pub omega: Complex64,
}

impl EnsembleState {
    /// All atoms in the ground state `(0, 0, −1)`, empty cavity.
    pub fn ground(n: usize) -> Self {
        EnsembleState {
            u: vec![0.0; n],
            v: vec![0.0; n],
            w: vec![-1.0; n],
            omega: Complex64::new(0.0, 0.0),
        }
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        for found in [self.u.len(), self.v.len(), self.w.len()] {
            if found != n {
                return Err(Error::DimensionMismatch { expected: n, found });
            }
        }
        Ok(())
    }

    /// max_k |U² + V² + W² − 1|
    pub fn max_norm_error(&self) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .zip(&self.w)
            .map(|((u, v), w)| (u * u + v * v + w * w - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.omega.re.is_finite()
            && self.omega.im.is_finite()
            && self.u.iter().chain(&self.v).chain(&self.w).all(|x| x.is_finite())
    }
}

/// A sample type a [`Waveform`] can carry.
pub trait Sample: Copy + Send + Sync {
    fn re(self) -> f64;
    fn norm_sqr(self) -> f64;
    fn abs(self) -> f64 {
        self.norm_sqr().sqrt()
    }
}

impl Sample for f64 {
    fn re(self) -> f64 {
        self
    }
    fn norm_sqr(self) -> f64 {
        self * self
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Sample for Complex64 {
    fn re(self) -> f64 {
        self.re
    }
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }
}

/// Uniformly sampled envelope, in rad/s, starting at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform<T = f64> {
    pub t0: f64,
    pub dt: f64,
    pub samples: Vec<T>,
}

impl<T: Sample> Waveform<T> {
    pub fn new(t0: f64, dt: f64, samples: Vec<T>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        if !t0.is_finite() {
            return Err(Error::param("t0", "must be finite"));
        }
        Ok(Waveform { t0, dt, samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|j| self.time(j))
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len().saturating_sub(1))
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    /// Whether both end samples are at most `rel` times the peak.
    pub fn vanishes_at_ends(&self, rel: f64) -> bool {
        let peak = self.peak();
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => a.abs() <= rel * peak && b.abs() <= rel * peak,
            _ => true,
        }
    }

    pub fn real_part(&self) -> Waveform<f64> {
        Waveform {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(|s| s.re()).collect(),
        }
    }
}

impl Waveform<f64> {
    /// Linear interpolation; zero outside the record.
    pub fn at(&self, t: f64) -> f64 {
        let x = (t - self.t0) / self.dt;
        if !(x >= 0.0) || self.samples.is_empty() {
            return 0.0;
        }
        let j = x.floor() as usize;
        let last = self.samples.len() - 1;
        if j >= last {
            return if j == last && x - j as f64 == 0.0 {
                self.samples[last]
            } else {
                0.0
            };
        }
        let f = x - j as f64;
        self.samples[j] * (1.0 - f) + self.samples[j + 1] * f
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Waveform {
            t0: self.t0,
            dt: self.dt,
            samples: self.samples.iter().map(|s| s * factor).collect(),
        }
    }

    /// Same envelope moved later by `shift` seconds.
    pub fn shifted(&self, shift: f64) -> Self {
        Waveform {
            t0: self.t0 + shift,
            ..self.clone()
        }
    }
}

/// Full output of one time-domain run.
#[derive(Debug, Clone)]
pub struct SimulationRecord {
    pub omega_in: Waveform<f64>,
    pub omega_cav: Waveform<Complex64>,
    /// `√κ·Ω − Ω_in`, evaluated on the recorded samples.
    pub omega_out: Waveform<Complex64>,
    pub final_state: EnsembleState,
    /// `(t, state)` pairs taken every `snapshot_stride` steps.
    pub snapshots: Vec<(f64, EnsembleState)>,
    /// Largest Bloch-norm deviation seen over the run.
    pub max_norm_error: f64,
    /// Largest |Im Ω| seen over the run.
    pub max_imag_omega: f64,
}

impl SimulationRecord {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        self.omega_in.times()
    }

    pub fn len(&self) -> usize {
        self.omega_in.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega_in.is_empty()
    }

    /// Largest |√κ·Ω − Ω_in − Ω_out| over the record.
    pub fn io_relation_residual(&self, params: &CavityParams) -> f64 {
        let sk = params.sqrt_kappa();
        self.omega_in
            .samples
            .iter()
            .zip(&self.omega_cav.samples)
            .zip(&self.omega_out.samples)
            .map(|((&i, &c), &o)| (c * sk - i - o).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_omega(&self) -> f64 {
        self.omega_cav.peak()
    }
}
