//! Weak-signal response of the loaded cavity.
//!
//! Spectra use the convention `Ω(t) = ∫ Ω̃(ω)·e^{−iωt} dω/2π`, so that the
//! reflection below is exactly the transfer function `Ω̃_out/Ω̃_in` of the
//! time-domain model and a delay `τ` shows up as `r ≈ 1 + iωτ`.
//!
//! With the populations frozen at a uniform inversion `W` the absorption is
//! rescaled by `−W`, giving
//!
//! ```text
//! r_W(ω) = (κ/2 + παL·W + iω/D) / (κ/2 − παL·W − iω/D)
//! ```
//!
//! `W = −1` is the unexcited medium. Expanding `r_W(ω) = r_W(0) + iω·T_g`
//! gives `T_g = κ/(D·(κ/2 − παL·W)²)`, i.e. `8/(Δω_cav·(1 − W)²)` for a
//! matched cavity. Note that the often-quoted `4/(Δω_cav·(1 − W)²)` is half of
//! what this reflection coefficient implies.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::types::CavityParams;

/// Step used by [`group_delay_fd`], relative to the cavity linewidth.
const FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    /// Detuning from the common cavity/atomic resonance, rad/s.
    pub omega: f64,
    pub r: Complex64,
}

/// Reflection `Ω̃_out/Ω̃_in` with the ensemble in its ground state.
pub fn reflection(omega: f64, params: &CavityParams) -> Complex64 {
    reflection_generalized(omega, -1.0, params)
}

/// Reflection with the populations frozen at inversion `w`.
///
/// `|r| > 1` is allowed when `w > 0` (gain).
pub fn reflection_generalized(omega: f64, w: f64, params: &CavityParams) -> Complex64 {
    let half_k = 0.5 * params.kappa;
    let absorb = PI * params.alpha_l * w;
    let x = omega / params.fsr;
    Complex64::new(half_k + absorb, x) / Complex64::new(half_k - absorb, -x)
}

pub fn response_point(omega: f64, w: f64, params: &CavityParams) -> ResponsePoint {
    ResponsePoint {
        omega,
        r: reflection_generalized(omega, w, params),
    }
}

fn check_inversion(w: f64, params: &CavityParams) -> Result<f64> {
    if !(w < 1.0) {
        return Err(Error::param("w", format!("inversion {w} must be below 1")));
    }
    let denom = 0.5 * params.kappa - PI * params.alpha_l * w;
    if denom.abs() <= f64::EPSILON * params.kappa {
        return Err(Error::Singular(format!("r_W(0) diverges at W = {w}")));
    }
    Ok(denom)
}

/// `T_g` in `r_W(ω) = r_W(0) + iω·T_g`, from the closed form.
pub fn group_delay(w: f64, params: &CavityParams) -> Result<f64> {
    let denom = check_inversion(w, params)?;
    Ok(params.kappa / (params.fsr * denom * denom))
}

/// Central finite difference of `r_W` at ω = 0, `(r(h) − r(−h))/(2ih)`.
pub fn group_delay_fd(w: f64, params: &CavityParams) -> Result<f64> {
    check_inversion(w, params)?;
    let h = FD_STEP * params.cavity_linewidth();
    let d = (reflection_generalized(h, w, params) - reflection_generalized(-h, w, params)) / Complex64::new(0.0, 2.0 * h);
    Ok(d.re)
}

/// Full width at half maximum of the absorption dip `1 − |r(ω)|²`.
///
/// Scans `n_scan` points over `[0, omega_max]` and bisects the half-maximum
/// crossing. Returns `None` if the dip does not fall below half its depth
/// inside the scan.
pub fn dip_fwhm(params: &CavityParams, omega_max: f64, n_scan: usize) -> Option<f64> {
    let depth = |om: f64| 1.0 - reflection(om, params).norm_sqr();
    let d0 = depth(0.0);
    if !(d0 > 0.0) || n_scan < 2 {
        return None;
    }
    let half = 0.5 * d0;
    let step = omega_max / (n_scan - 1) as f64;
    let mut prev = 0.0;
    for i in 1..n_scan {
        let om = i as f64 * step;
        if depth(om) <= half {
            let (mut lo, mut hi) = (prev, om);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if depth(mid) > half {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Some(lo + hi);
        }
        prev = om;
    }
    None
}
