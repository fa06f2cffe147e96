//! Input/output relations for pulse areas in the cavity.
//!
//! The intracavity area Θ and the incoming area Θ_in are tied by
//!
//! ```text
//! (κ/2)·Θ + π·αL·sin Θ = √κ·Θ_in,     Θ_out = √κ·Θ − Θ_in
//! ```
//!
//! whatever the temporal shape of the pulse. Reading the relation right to
//! left gives Θ_in as an explicit function of Θ; the solvers below invert it.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::types::CavityParams;

#[derive(Debug, Clone, PartialEq)]
pub struct AreaSolution {
    pub theta_in: f64,
    pub theta_cav: f64,
    pub theta_out: f64,
    /// Number of folds the continuation from Θ = 0 had to jump over. Always 0
    /// unless the cavity is over-matched.
    pub branch: usize,
    /// Incoming areas at which those folds sit.
    pub folds: Vec<f64>,
}

/// Incoming area that produces intracavity area `theta`.
pub fn incoming_area(theta: f64, params: &CavityParams) -> f64 {
    (0.5 * params.kappa * theta + PI * params.alpha_l * theta.sin()) / params.sqrt_kappa()
}

/// Residual of the area relation expressed in intracavity radians,
/// `Θ + (2παL/κ)·sin Θ − (2/√κ)·Θ_in`.
pub fn residual(theta: f64, theta_in: f64, params: &CavityParams) -> f64 {
    let k = params.kappa;
    theta + 2.0 * PI * params.alpha_l / k * theta.sin() - 2.0 / k.sqrt() * theta_in
}

fn solution(theta_in: f64, theta_cav: f64, params: &CavityParams, folds: Vec<f64>) -> AreaSolution {
    AreaSolution {
        theta_in,
        theta_cav,
        theta_out: params.sqrt_kappa() * theta_cav - theta_in,
        branch: folds.len(),
        folds,
    }
}

/// Bisection for `g(Θ) = target` on `[lo, hi]` where `g − target` changes
/// sign from non-positive to non-negative. Runs to floating-point resolution.
fn bisect(g: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick whichever end has the smaller residual.
    if (g(lo) - target).abs() <= (g(hi) - target).abs() {
        lo
    } else {
        hi
    }
}

/// Critical points of Θ_in(Θ) in `[a, b]`, in increasing order. Empty unless
/// the cavity is over-matched.
fn critical_points(params: &CavityParams, a: f64, b: f64) -> Vec<f64> {
    let c = -params.kappa / (2.0 * PI * params.alpha_l);
    if !params.is_overmatched() || !(-1.0..=1.0).contains(&c) {
        return Vec::new();
    }
    let base = c.acos();
    let m0 = ((a - base) / (2.0 * PI)).floor() as i64 - 1;
    let mut out = Vec::new();
    let mut m = m0;
    loop {
        let p = 2.0 * PI * m as f64;
        if p - base > b {
            break;
        }
        for x in [p - base, p + base] {
            if x >= a && x <= b {
                out.push(x);
            }
        }
        m += 1;
    }
    out.sort_by(f64::total_cmp);
    out
}

/// Intracavity area for an incoming area `theta_in ≥ 0`.
///
/// For a matched or under-matched cavity the relation is monotone and its
/// single root is found by bisection. For an over-matched cavity the root
/// returned is the one reached by growing Θ_in from zero: the first Θ ≥ 0
/// where Θ_in(Θ) reaches `theta_in`. Every fold jumped on the way is logged
/// and listed in the solution.
pub fn intracavity_area(theta_in: f64, params: &CavityParams) -> Result<AreaSolution> {
    params.validate()?;
    if !(theta_in >= 0.0 && theta_in.is_finite()) {
        return Err(Error::param("theta_in", format!("{theta_in} must be finite and non-negative")));
    }
    if theta_in == 0.0 {
        return Ok(solution(0.0, 0.0, params, Vec::new()));
    }
    let g = |t: f64| incoming_area(t, params);

    if !params.is_overmatched() {
        let mut hi = 2.0 * theta_in / params.sqrt_kappa() + 1.0;
        while g(hi) < theta_in {
            hi *= 2.0;
        }
        let theta = bisect(g, theta_in, 0.0, hi);
        return Ok(solution(theta_in, theta, params, Vec::new()));
    }

    // Upper bound beyond which Θ_in(Θ) > theta_in for sure.
    let bound = (params.sqrt_kappa() * theta_in + PI * params.alpha_l) / (0.5 * params.kappa) + 1.0;
    let mut edges = vec![0.0];
    edges.extend(critical_points(params, 0.0, bound));
    edges.push(bound);
    let mut folds = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ga, gb) = (g(a), g(b));
        if gb > ga && ga <= theta_in && theta_in <= gb {
            if !folds.is_empty() {
                log::warn!(
                    "area continuation crossed {} fold(s) before reaching Θ_in = {theta_in}",
                    folds.len()
                );
            }
            return Ok(solution(theta_in, bisect(g, theta_in, a, b), params, folds));
        }
        if gb < ga {
            // Θ_in(Θ) turns back at `a`: a fold.
            folds.push(ga);
        }
    }
    Err(Error::Singular(format!("no intracavity area found for Θ_in = {theta_in}")))
}

/// Every intracavity area Θ (of either sign) compatible with `theta_in`.
pub fn all_roots(theta_in: f64, params: &CavityParams) -> Result<Vec<f64>> {
    params.validate()?;
    if !theta_in.is_finite() {
        return Err(Error::param("theta_in", "must be finite"));
    }
    let g = |t: f64| incoming_area(t, params);
    let bound = (params.sqrt_kappa() * theta_in.abs() + PI * params.alpha_l) / (0.5 * params.kappa) + 1.0;
    let mut edges = vec![-bound];
    edges.extend(critical_points(params, -bound, bound));
    edges.push(bound);
    let mut roots: Vec<f64> = Vec::new();
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (ga, gb) = (g(a), g(b));
        let root = if ga <= theta_in && theta_in <= gb {
            Some(bisect(g, theta_in, a, b))
        } else if gb <= theta_in && theta_in <= ga {
            Some(bisect(|t| -g(t), -theta_in, a, b))
        } else {
            None
        };
        if let Some(r) = root {
            if roots.last().map_or(true, |&l| (r - l).abs() > 1e-12) {
                roots.push(r);
            }
        }
    }
    Ok(roots)
}

/// Solutions at `n_points` evenly spaced incoming areas over `[0, theta_in_max]`.
pub fn area_curve(theta_in_max: f64, n_points: usize, params: &CavityParams) -> Result<Vec<AreaSolution>> {
    if params.is_overmatched() {
        return Err(Error::param(
            "alpha_l",
            "area curves are tabulated for matched or under-matched cavities only",
        ));
    }
    if !(theta_in_max >= 0.0) {
        return Err(Error::param("theta_in_max", "must be non-negative"));
    }
    let step = if n_points > 1 {
        theta_in_max / (n_points - 1) as f64
    } else {
        0.0
    };
    (0..n_points)
        .map(|i| intracavity_area(i as f64 * step, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn matched() -> CavityParams {
        CavityParams::default()
    }

    #[test]
    fn zero_input() {
        let s = intracavity_area(0.0, &matched()).unwrap();
        assert_eq!((s.theta_cav, s.theta_out), (0.0, 0.0));
    }

    #[test]
    fn matched_pi_and_two_pi() {
        let p = matched();
        let sk = p.sqrt_kappa();
        let pi = intracavity_area(sk / 2.0 * PI, &p).unwrap();
        assert!((pi.theta_cav - PI).abs() < 1e-4, "{}", pi.theta_cav);
        assert!(residual(pi.theta_cav, pi.theta_in, &p).abs() <= 1e-12);
        assert!((pi.theta_out - sk / 2.0 * PI).abs() < 1e-4 * sk);

        let two = intracavity_area(sk * PI, &p).unwrap();
        assert!((two.theta_cav - 2.0 * PI).abs() < 1e-12);
        assert!((two.theta_out - sk * PI).abs() < 1e-12);
    }

    #[test]
    fn empty_cavity_reflects_area() {
        let p = CavityParams::new(0.05, 3e9, 0.0).unwrap();
        let curve = area_curve(1.0, 11, &p).unwrap();
        for s in curve {
            assert!((s.theta_cav - 2.0 / p.sqrt_kappa() * s.theta_in).abs() < 1e-12);
            assert!((s.theta_out - s.theta_in).abs() < 1e-12);
        }
    }

    #[test]
    fn slope_diverges_at_pi() {
        // Finite-difference slope around Θ_in = (√κ/2)π grows as the step shrinks.
        let p = matched();
        let x0 = p.sqrt_kappa() / 2.0 * PI;
        let slope = |h: f64| {
            let a = intracavity_area(x0 - h, &p).unwrap().theta_cav;
            let b = intracavity_area(x0 + h, &p).unwrap().theta_cav;
            (b - a) / (2.0 * h)
        };
        let mut prev = 0.0;
        for h in [1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            let s = slope(h);
            assert!(s > 2.0 * prev, "slope {s} at h = {h}");
            prev = s;
        }
        // Away from the singularity the slope is finite and step independent.
        let far = |h: f64| {
            let a = intracavity_area(0.3 * x0 - h, &p).unwrap().theta_cav;
            let b = intracavity_area(0.3 * x0 + h, &p).unwrap().theta_cav;
            (b - a) / (2.0 * h)
        };
        assert!((far(1e-4) / far(1e-6) - 1.0).abs() < 1e-4);
    }

    #[test]
    fn overmatched_continuation_reports_folds() {
        let p = CavityParams::new(0.1, 3e9, 0.1 / PI).unwrap();
        // Small input stays on the branch through zero.
        let s = intracavity_area(0.01, &p).unwrap();
        assert_eq!(s.branch, 0);
        assert!(residual(s.theta_cav, 0.01, &p).abs() < 1e-12);

        // First local maximum of Θ_in(Θ).
        let c = (-p.kappa / (2.0 * PI * p.alpha_l)).acos();
        let fold = incoming_area(c, &p);
        let before = intracavity_area(fold * (1.0 - 1e-6), &p).unwrap();
        assert_eq!(before.branch, 0);
        assert!(before.theta_cav < c + 1e-6);
        let after = intracavity_area(fold * (1.0 + 1e-6), &p).unwrap();
        assert_eq!(after.branch, 1);
        assert!((after.folds[0] - fold).abs() < 1e-12);
        assert!(after.theta_cav > 2.0 * PI - c);

        // Several roots coexist just below the fold.
        let roots = all_roots(fold * 0.99, &p).unwrap();
        assert!(roots.len() >= 3, "{roots:?}");
        for r in &roots {
            assert!(residual(*r, fold * 0.99, &p).abs() < 1e-11);
        }
        assert!(area_curve(1.0, 3, &p).is_err());
    }

    #[test]
    fn negative_input_rejected() {
        assert!(intracavity_area(-0.1, &matched()).is_err());
        assert!(intracavity_area(f64::NAN, &matched()).is_err());
    }

    #[test]
    fn curve_endpoints() {
        let p = matched();
        let c = area_curve(p.sqrt_kappa() * PI, 21, &p).unwrap();
        assert_eq!(c.len(), 21);
        assert_eq!(c[0].theta_cav, 0.0);
        assert!((c[20].theta_cav - 2.0 * PI).abs() < 1e-12);
        // Weak inputs are absorbed: Θ_out stays near zero.
        assert!(c[1].theta_out.abs() < 0.01 * c[1].theta_in);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn residual_and_monotonicity(x in 0.0f64..1.0, dx in 1e-6f64..0.1, ratio in 0.0f64..1.0) {
            let kappa = 2.0 * PI / 500.0;
            let p = CavityParams::new(kappa, 3e9, ratio * kappa / (2.0 * PI)).unwrap();
            let a = intracavity_area(x, &p).unwrap();
            let b = intracavity_area(x + dx, &p).unwrap();
            prop_assert!(residual(a.theta_cav, x, &p).abs() <= 1e-12);
            prop_assert!(residual(b.theta_cav, x + dx, &p).abs() <= 1e-12);
            prop_assert!(b.theta_cav >= a.theta_cav);
            prop_assert_eq!(a.theta_out, p.sqrt_kappa() * a.theta_cav - a.theta_in);
        }

        #[test]
        fn matched_multiples_of_pi(m in 1u32..=4) {
            let p = matched();
            let s = intracavity_area(m as f64 * p.sqrt_kappa() / 2.0 * PI, &p).unwrap();
            // Odd multiples sit on an inflection with zero slope, so the root
            // is only determined to about the cube root of machine precision.
            let tol = if m % 2 == 1 { 1e-4 } else { 1e-12 };
            prop_assert!((s.theta_cav - m as f64 * PI).abs() < tol);
        }
    }
}
