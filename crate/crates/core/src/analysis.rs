//! Diagnostics computed from simulation records: areas, energies, widths,
//! the quanta balance, delays and transfer functions, plus the incoming-area
//! sweep that compares simulated areas with the area relation.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::area_theorem::{self, AreaSolution};
use crate::error::{Error, Result};
use crate::pulse;
use crate::simulator::{self, SimulationConfig};
use crate::types::{CavityParams, DetuningGrid, Sample, SimulationRecord, Waveform};

#[derive(Debug, Clone, PartialEq)]
pub struct RunDiagnostics {
    pub theta_in: f64,
    pub theta_cav: f64,
    pub theta_out: f64,
    /// Analytic intracavity and outgoing areas for `theta_in`.
    pub theta_cav_theory: f64,
    pub theta_out_theory: f64,
    /// Residual of the area relation at the simulated areas, in rad.
    pub area_theorem_residual: f64,
    pub u_in: f64,
    pub u_out: f64,
    /// Atomic energy `(αL/2π)·Σ(W+1)/2·dΔ` at the end of the run.
    pub u_w_final: f64,
    /// `(αL·Σ(W+1)·dΔ − ½(U_in − U_out)) / U_in`; zero for an empty input.
    pub quanta_residual: f64,
    pub sigma_in: Option<f64>,
    pub sigma_out: Option<f64>,
    pub mu_out: Option<f64>,
    /// `sigma_out / sigma_in`.
    pub elongation: Option<f64>,
    pub max_norm_error: f64,
    /// `max|Im Ω| / max|Re Ω|`.
    pub imag_ratio: f64,
}

/// Analytic areas for either sign of incoming area, using the odd symmetry of
/// the relation.
fn theory(theta_in: f64, params: &CavityParams) -> Result<AreaSolution> {
    if theta_in >= 0.0 {
        area_theorem::intracavity_area(theta_in, params)
    } else {
        let s = area_theorem::intracavity_area(-theta_in, params)?;
        Ok(AreaSolution {
            theta_in,
            theta_cav: -s.theta_cav,
            theta_out: -s.theta_out,
            ..s
        })
    }
}

pub fn diagnose(record: &SimulationRecord, params: &CavityParams, grid: &DetuningGrid) -> Result<RunDiagnostics> {
    let theta_in = pulse::area(&record.omega_in);
    let theta_cav = pulse::area(&record.omega_cav);
    let theta_out = pulse::area(&record.omega_out);
    let th = theory(theta_in, params)?;
    let u_in = pulse::energy(&record.omega_in);
    let u_out = pulse::energy(&record.omega_out);
    let balance = params.alpha_l * simulator::excitation(&record.final_state, grid) - 0.5 * (u_in - u_out);
    let quanta_residual = if u_in > 0.0 { balance / u_in } else { balance };

    let sigma_in = pulse::rms_width(&record.omega_in).ok().map(|w| w.sigma);
    let out_width = pulse::rms_width(&record.omega_out).ok();
    let elongation = match (sigma_in, out_width) {
        (Some(a), Some(b)) => Some(b.sigma / a),
        _ => None,
    };
    let max_re = record
        .omega_cav
        .samples
        .iter()
        .map(|c| c.re.abs())
        .fold(0.0, f64::max);

    Ok(RunDiagnostics {
        theta_in,
        theta_cav,
        theta_out,
        theta_cav_theory: th.theta_cav,
        theta_out_theory: th.theta_out,
        area_theorem_residual: area_theorem::residual(theta_cav, theta_in, params),
        u_in,
        u_out,
        u_w_final: simulator::stored_energy(&record.final_state, params, grid),
        quanta_residual,
        sigma_in,
        sigma_out: out_width.map(|w| w.sigma),
        mu_out: out_width.map(|w| w.mean),
        elongation,
        max_norm_error: record.max_norm_error,
        imag_ratio: if max_re > 0.0 { record.max_imag_omega / max_re } else { 0.0 },
    })
}

/// Peak of a normalized cross-correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correlation {
    /// `max_τ Σ a(t)·b(t−τ) / (‖a‖·‖b‖)`.
    pub peak: f64,
    /// Lag τ in s at the peak, refined by a parabola through the three
    /// samples around it. Positive when `a` lags `b`.
    pub delay: f64,
}

/// Normalized cross-correlation of the real parts of two records sharing
/// the same sample step.
pub fn cross_correlation<A: Sample, B: Sample>(a: &Waveform<A>, b: &Waveform<B>) -> Result<Correlation> {
    if (a.dt - b.dt).abs() > 1e-12 * a.dt {
        return Err(Error::param("dt", "records must share a sample step"));
    }
    let xa: Vec<f64> = a.samples.iter().map(|s| s.re()).collect();
    let xb: Vec<f64> = b.samples.iter().map(|s| s.re()).collect();
    let norm = (xa.iter().map(|x| x * x).sum::<f64>() * xb.iter().map(|x| x * x).sum::<f64>()).sqrt();
    if !(norm > 0.0) {
        return Err(Error::param("waveform", "cannot correlate an all-zero record"));
    }
    let len = (xa.len() + xb.len()).next_power_of_two();
    let mut fa: Vec<Complex64> = xa.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    let mut fb: Vec<Complex64> = xb.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fa.resize(len, Complex64::new(0.0, 0.0));
    fb.resize(len, Complex64::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut fa);
    planner.plan_fft_forward(len).process(&mut fb);
    let mut prod: Vec<Complex64> = fa.iter().zip(&fb).map(|(x, y)| x * y.conj()).collect();
    planner.plan_fft_inverse(len).process(&mut prod);
    // prod[m] = len · Σ_j a[j]·b[j − m], negative lags wrapped to the end.
    let corr: Vec<f64> = prod.iter().map(|c| c.re / (len as f64 * norm)).collect();
    let (best, &peak) = corr
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .expect("non-empty correlation");
    let at = |i: isize| corr[i.rem_euclid(len as isize) as usize];
    let (l, c, r) = (at(best as isize - 1), peak, at(best as isize + 1));
    let curvature = l - 2.0 * c + r;
    let frac = if curvature < 0.0 { 0.5 * (l - r) / curvature } else { 0.0 };
    let lag = if best > len / 2 { best as f64 - len as f64 } else { best as f64 };
    let refined_peak = c - 0.25 * (l - r) * frac;
    Ok(Correlation {
        peak: refined_peak.max(peak),
        delay: (lag + frac) * a.dt + (a.t0 - b.t0),
    })
}

/// `∫ x(t)·e^{iωt} dt` by the trapezoidal rule.
pub fn spectrum_at<T: Sample + Into<Complex64>>(w: &Waveform<T>, omega: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, omega * w.dt);
    let mut phase = Complex64::from_polar(1.0, omega * w.t0);
    let mut sum = Complex64::new(0.0, 0.0);
    let last = w.len().saturating_sub(1);
    for (j, s) in w.samples.iter().enumerate() {
        let x: Complex64 = (*s).into();
        let weight = if j == 0 || j == last { 0.5 } else { 1.0 };
        sum += x * phase * weight;
        // Re-anchor periodically so the running phase does not drift.
        phase = if j % 4096 == 4095 {
            Complex64::from_polar(1.0, omega * w.time(j + 1))
        } else {
            phase * rot
        };
    }
    sum * w.dt
}

/// Measured transfer function `Ω̃_out(ω)/Ω̃_in(ω)` at each frequency.
pub fn transfer_function(record: &SimulationRecord, omegas: &[f64]) -> Vec<Complex64> {
    omegas
        .iter()
        .map(|&om| spectrum_at(&record.omega_out, om) / spectrum_at(&record.omega_in, om))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub diagnostics: RunDiagnostics,
    pub theory: AreaSolution,
}

impl SweepRow {
    pub fn theta_cav_deviation(&self) -> f64 {
        (self.diagnostics.theta_cav - self.theory.theta_cav).abs()
    }

    pub fn theta_out_deviation(&self) -> f64 {
        (self.diagnostics.theta_out - self.theory.theta_out).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Largest |simulated − analytic| over both Θ and Θ_out.
    pub max_deviation: f64,
}

impl SweepTable {
    /// Row with the largest defined elongation.
    pub fn elongation_argmax(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.diagnostics.elongation.is_some())
            .max_by(|a, b| a.diagnostics.elongation.unwrap().total_cmp(&b.diagnostics.elongation.unwrap()))
    }
}

/// Copy of `base` with its input rescaled to area `theta_in`.
pub fn with_input_area(base: &SimulationConfig, theta_in: f64) -> Result<SimulationConfig> {
    let current = pulse::area(&base.input);
    if current == 0.0 {
        return Err(Error::param("input", "base input has zero area and cannot be rescaled"));
    }
    let mut cfg = base.clone();
    cfg.input = base.input.scaled(theta_in / current);
    Ok(cfg)
}

/// Simulates every incoming area (in parallel, rows kept in input order) and
/// compares the measured areas with the analytic relation.
pub fn figure2_sweep(areas: &[f64], base: &SimulationConfig) -> Result<SweepTable> {
    base.validate()?;
    let rows: Vec<SweepRow> = areas
        .par_iter()
        .map(|&theta_in| sweep_point(theta_in, base))
        .collect::<Result<_>>()?;
    let max_deviation = rows
        .iter()
        .map(|r| r.theta_cav_deviation().max(r.theta_out_deviation()))
        .fold(0.0, f64::max);
    Ok(SweepTable { rows, max_deviation })
}

fn sweep_point(theta_in: f64, base: &SimulationConfig) -> Result<SweepRow> {
    let wrap = |e: Error| Error::SweepPoint {
        theta_in,
        source: Box::new(e),
    };
    let cfg = with_input_area(base, theta_in).map_err(wrap)?;
    let record = simulator::simulate(&cfg).map_err(wrap)?;
    let diagnostics = diagnose(&record, &cfg.params, &cfg.grid).map_err(wrap)?;
    let theory = theory(theta_in, &cfg.params).map_err(wrap)?;
    Ok(SweepRow { diagnostics, theory })
}

/// `n` incoming areas evenly spaced over `[0, max]`, both ends included.
pub fn linspace(max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulse::GaussianPulseSpec;

    fn gaussian(center: f64, dt: f64, n: usize) -> Waveform {
        let spec = GaussianPulseSpec { sigma_t: 2e-6, area: 1.0, center };
        pulse::make_gaussian(&spec, 0.0, dt, n).unwrap()
    }

    #[test]
    fn correlation_recovers_subsample_delay() {
        let dt = 1e-8;
        let a = gaussian(20.37e-6, dt, 4000);
        let b = gaussian(15e-6, dt, 4000);
        let c = cross_correlation(&a, &b).unwrap();
        assert!((c.delay - 5.37e-6).abs() < 1e-3 * dt, "{}", c.delay);
        assert!(c.peak > 0.999_999);
        let back = cross_correlation(&b, &a).unwrap();
        assert!((back.delay + 5.37e-6).abs() < 1e-3 * dt);
    }

    #[test]
    fn correlation_of_distorted_pulse_is_below_one() {
        let dt = 1e-8;
        let a = gaussian(15e-6, dt, 4000);
        let mut wide = a.clone();
        let spec = GaussianPulseSpec { sigma_t: 4e-6, area: 1.0, center: 15e-6 };
        wide.samples = (0..4000).map(|j| spec.value_at(j as f64 * dt)).collect();
        let c = cross_correlation(&wide, &a).unwrap();
        // Two centered Gaussians of widths σ and 2σ: √(2·σ·2σ/(σ² + 4σ²)).
        assert!((c.peak - (4.0f64 / 5.0).sqrt()).abs() < 1e-6);
        assert!(c.delay.abs() < 1e-3 * dt);
    }

    #[test]
    fn spectrum_of_gaussian() {
        let w = gaussian(15e-6, 1e-8, 4000);
        for om in [0.0, 3e5, 1e6] {
            let s = spectrum_at(&w, om);
            let expect = Complex64::from_polar((-0.5 * (om * 2e-6f64).powi(2)).exp(), om * 15e-6);
            assert!((s - expect).norm() < 1e-9, "{om}: {s} vs {expect}");
        }
    }

    #[test]
    fn linspace_ends() {
        let x = linspace(2.0, 5);
        assert_eq!(x, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(linspace(1.0, 1), vec![0.0]);
    }
}
