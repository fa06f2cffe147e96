//! Pulse envelopes and the scalar functionals computed from them: area,
//! energy and rms width. All integrals use the trapezoidal rule on the
//! waveform's own uniform grid.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::{Sample, Waveform};

/// Half-width, in units of `sigma_t`, a Gaussian record must cover.
pub const GAUSSIAN_SUPPORT: f64 = 6.0;

/// An rms width is undefined when `|Θ|` is below this fraction of `∫|Ω| dt`.
pub const ZERO_AREA_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPulseSpec {
    /// rms duration in s.
    pub sigma_t: f64,
    /// Target area in rad.
    pub area: f64,
    /// Center time in s.
    pub center: f64,
}

impl GaussianPulseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_t > 0.0 && self.sigma_t.is_finite()) {
            return Err(Error::param("sigma_t", format!("{} must be positive", self.sigma_t)));
        }
        if !self.area.is_finite() {
            return Err(Error::param("area", "must be finite"));
        }
        if !self.center.is_finite() {
            return Err(Error::param("center", "must be finite"));
        }
        Ok(())
    }

    /// Peak Rabi frequency `Θ/(σ_t√2π)`.
    pub fn peak(&self) -> f64 {
        self.area / (self.sigma_t * (2.0 * PI).sqrt())
    }

    /// rms width of the amplitude spectrum, `1/σ_t` in rad/s.
    pub fn spectral_width(&self) -> f64 {
        1.0 / self.sigma_t
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.sigma_t;
        self.peak() * (-0.5 * x * x).exp()
    }
}

/// Samples `A·exp(−(t−t_c)²/2σ_t²)` on `n_samples` points starting at `t0`.
///
/// Fails if the record does not cover `t_c ± 6σ_t`.
pub fn make_gaussian(spec: &GaussianPulseSpec, t0: f64, dt: f64, n_samples: usize) -> Result<Waveform> {
    spec.validate()?;
    let end = t0 + n_samples.saturating_sub(1) as f64 * dt;
    let need_start = spec.center - GAUSSIAN_SUPPORT * spec.sigma_t;
    let need_end = spec.center + GAUSSIAN_SUPPORT * spec.sigma_t;
    if n_samples < 2 || t0 > need_start || end < need_end {
        return Err(Error::WindowTooShort {
            start: t0,
            end,
            need_start,
            need_end,
        });
    }
    let samples = (0..n_samples)
        .map(|j| spec.value_at(t0 + j as f64 * dt))
        .collect();
    Waveform::new(t0, dt, samples)
}

/// Flat-top pulse of the given height on `[start, start + duration]`.
pub fn make_rectangular(height: f64, start: f64, duration: f64, t0: f64, dt: f64, n_samples: usize) -> Result<Waveform> {
    if !(duration > 0.0) {
        return Err(Error::param("duration", "must be positive"));
    }
    let eps = 1e-9 * dt;
    let samples = (0..n_samples)
        .map(|j| {
            let t = t0 + j as f64 * dt;
            if t >= start - eps && t <= start + duration + eps {
                height
            } else {
                0.0
            }
        })
        .collect();
    Waveform::new(t0, dt, samples)
}

fn trapezoid(dt: f64, values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut first = None;
    let mut last = 0.0;
    for y in values {
        if first.is_none() {
            first = Some(y);
        }
        sum += y;
        last = y;
    }
    match first {
        Some(f) => dt * (sum - 0.5 * (f + last)),
        None => 0.0,
    }
}

/// Signed pulse area `∫Re Ω dt` in rad.
pub fn area<T: Sample>(w: &Waveform<T>) -> f64 {
    trapezoid(w.dt, w.samples.iter().map(|s| s.re()))
}

/// Pulse energy `∫|Ω|² dt` in rad²/s.
pub fn energy<T: Sample>(w: &Waveform<T>) -> f64 {
    trapezoid(w.dt, w.samples.iter().map(|s| s.norm_sqr()))
}

/// Cumulative area `∫_{t0}^{t} Re Ω dt'` at every sample.
pub fn cumulative_area<T: Sample>(w: &Waveform<T>) -> Vec<f64> {
    let mut acc = 0.0;
    let mut prev: Option<f64> = None;
    w.samples
        .iter()
        .map(|s| {
            let y = s.re();
            if let Some(p) = prev {
                acc += 0.5 * w.dt * (p + y);
            }
            prev = Some(y);
            acc
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsWidth {
    /// Mean time μ in s.
    pub mean: f64,
    /// Standard deviation σ in s.
    pub sigma: f64,
}

/// Mean and rms width of the signed distribution `p(t) = Ω(t)/Θ`.
///
/// The envelope is used with its sign, so a pulse with lobes of opposite
/// sign can make the variance meaningless; a warning is logged then.
pub fn rms_width<T: Sample>(w: &Waveform<T>) -> Result<RmsWidth> {
    let theta = area(w);
    let mass = trapezoid(w.dt, w.samples.iter().map(|s| s.re().abs()));
    if !(theta.abs() > ZERO_AREA_FRACTION * mass) || theta == 0.0 {
        return Err(Error::ZeroArea { area: theta, mass });
    }
    if (theta.abs() - mass).abs() > 1e-6 * mass {
        log::warn!(
            "envelope changes sign (|Θ| = {:.3e}, ∫|Ω| = {:.3e}); rms width may be ill-conditioned",
            theta.abs(),
            mass
        );
    }
    // Times relative to the record start keep the moments well conditioned.
    let rel = |j: usize| j as f64 * w.dt;
    let m1 = trapezoid(
        w.dt,
        w.samples.iter().enumerate().map(|(j, s)| rel(j) * s.re()),
    ) / theta;
    let var = trapezoid(
        w.dt,
        w.samples.iter().enumerate().map(|(j, s)| {
            let d = rel(j) - m1;
            d * d * s.re()
        }),
    ) / theta;
    if var < 0.0 {
        return Err(Error::NegativeVariance { variance: var });
    }
    Ok(RmsWidth {
        mean: w.t0 + m1,
        sigma: var.sqrt(),
    })
}
