//! Flat `section.key = value` scenario files.
//!
//! Blank lines and anything after a `#` are ignored. Every key has a
//! default, so an empty file is a valid scenario.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use cavarea::pulse::GaussianPulseSpec;
use cavarea::simulator::{self, SimulationConfig};
use cavarea::{CavityParams, DetuningGrid};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub finesse: f64,
    pub fsr: f64,
    /// `None` means impedance matched.
    pub alpha_l: Option<f64>,
    pub grid_points: usize,
    pub grid_spacing: f64,
    pub sigma_t: f64,
    pub center: f64,
    /// Incoming area in units of `(√κ/2)·π`.
    pub area_factor: f64,
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub band_tail_correction: bool,
    /// Keep every n-th sample in the time-series output.
    pub output_stride: usize,
    pub sweep_points: usize,
    /// Upper end of the sweep, in units of `(√κ/2)·π`.
    pub sweep_max_factor: f64,
    pub response_omega_max: f64,
    pub response_points: usize,
    pub response_inversions: Vec<f64>,
    pub area_points: usize,
    pub area_max_factor: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = CavityParams::default();
        let g = DetuningGrid::default();
        ScenarioConfig {
            finesse: p.finesse().round(),
            fsr: p.fsr,
            alpha_l: None,
            grid_points: g.len(),
            grid_spacing: g.spacing(),
            sigma_t: simulator::DEFAULT_SIGMA_T,
            center: simulator::DEFAULT_CENTER,
            area_factor: 1.0,
            dt: simulator::DEFAULT_DT,
            t_start: 0.0,
            t_end: simulator::DEFAULT_WINDOW,
            band_tail_correction: true,
            output_stride: 100,
            sweep_points: 20,
            sweep_max_factor: 2.0,
            response_omega_max: 10.0 * p.cavity_linewidth(),
            response_points: 2001,
            response_inversions: vec![-1.0, 0.0, 0.5],
            area_points: 401,
            area_max_factor: 2.0,
        }
    }
}

fn field(key: &str, reason: impl Into<String>) -> CliError {
    CliError::Field {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v.parse().map_err(|_| field(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(field(key, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, v: &str) -> Result<usize, CliError> {
    v.parse().map_err(|_| field(key, format!("`{v}` is not a non-negative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(field(key, format!("`{v}` is not true/false"))),
    }
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
    v.split(',').map(|s| parse_f64(key, s.trim())).collect()
}

fn fmt_list(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Syntax {
                line: i + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            let (k, v) = (k.trim(), v.trim());
            if seen.insert(k.to_string(), v.to_string()).is_some() {
                return Err(CliError::Syntax {
                    line: i + 1,
                    reason: format!("duplicate key `{k}`"),
                });
            }
        }
        let mut c = ScenarioConfig::default();
        for (k, v) in &seen {
            let k = k.as_str();
            match k {
                "cavity.finesse" => c.finesse = parse_f64(k, v)?,
                "cavity.fsr" => c.fsr = parse_f64(k, v)?,
                "cavity.alpha_l" => c.alpha_l = if v == "matched" { None } else { Some(parse_f64(k, v)?) },
                "grid.points" => c.grid_points = parse_usize(k, v)?,
                "grid.spacing" => c.grid_spacing = parse_f64(k, v)?,
                "pulse.sigma_t" => c.sigma_t = parse_f64(k, v)?,
                "pulse.center" => c.center = parse_f64(k, v)?,
                "pulse.area_factor" => c.area_factor = parse_f64(k, v)?,
                "integrator.dt" => c.dt = parse_f64(k, v)?,
                "integrator.t_start" => c.t_start = parse_f64(k, v)?,
                "integrator.t_end" => c.t_end = parse_f64(k, v)?,
                "integrator.band_tail_correction" => c.band_tail_correction = parse_bool(k, v)?,
                "output.stride" => c.output_stride = parse_usize(k, v)?,
                "sweep.points" => c.sweep_points = parse_usize(k, v)?,
                "sweep.max_factor" => c.sweep_max_factor = parse_f64(k, v)?,
                "response.omega_max" => c.response_omega_max = parse_f64(k, v)?,
                "response.points" => c.response_points = parse_usize(k, v)?,
                "response.inversions" => c.response_inversions = parse_list(k, v)?,
                "area_theorem.points" => c.area_points = parse_usize(k, v)?,
                "area_theorem.max_factor" => c.area_max_factor = parse_f64(k, v)?,
                _ => return Err(field(k, "unknown key")),
            }
        }
        c.validate()?;
        Ok(c)
    }

    /// Checks everything that does not need a simulation to be built.
    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.finesse > 2.0 * PI) {
            return Err(field("cavity.finesse", "must exceed 2π so that κ < 1"));
        }
        self.params()?;
        if self.output_stride == 0 {
            return Err(field("output.stride", "must be at least 1"));
        }
        if self.sweep_points == 0 {
            return Err(field("sweep.points", "must be at least 1"));
        }
        if !(self.sweep_max_factor >= 0.0) {
            return Err(field("sweep.max_factor", "must be non-negative"));
        }
        if !(self.response_omega_max > 0.0) {
            return Err(field("response.omega_max", "must be positive"));
        }
        if self.response_points < 2 {
            return Err(field("response.points", "must be at least 2"));
        }
        if let Some(w) = self.response_inversions.iter().find(|w| !(**w >= -1.0 && **w < 1.0)) {
            return Err(field("response.inversions", format!("{w} is not in [−1, 1)")));
        }
        if self.area_points == 0 {
            return Err(field("area_theorem.points", "must be at least 1"));
        }
        if !(self.area_max_factor >= 0.0) {
            return Err(field("area_theorem.max_factor", "must be non-negative"));
        }
        Ok(())
    }

    pub fn params(&self) -> Result<CavityParams, CliError> {
        let kappa = 2.0 * PI / self.finesse;
        let alpha_l = self.alpha_l.unwrap_or(kappa / (2.0 * PI));
        CavityParams::new(kappa, self.fsr, alpha_l).map_err(|e| field(key_of(&e), e.to_string()))
    }

    /// `(√κ/2)·π`, the unit of every area factor.
    pub fn area_unit(&self) -> Result<f64, CliError> {
        Ok(0.5 * self.params()?.sqrt_kappa() * PI)
    }

    /// Validated simulation for an incoming area of `factor·(√κ/2)·π`.
    pub fn simulation(&self, factor: f64) -> Result<SimulationConfig, CliError> {
        let params = self.params()?;
        let grid = DetuningGrid::new(self.grid_points, self.grid_spacing).map_err(|e| field("grid", e.to_string()))?;
        let spec = GaussianPulseSpec {
            sigma_t: self.sigma_t,
            area: factor * self.area_unit()?,
            center: self.center,
        };
        let mut cfg = SimulationConfig::gaussian(params, grid, &spec, self.dt, (self.t_start, self.t_end))
            .map_err(|e| field("pulse", e.to_string()))?;
        cfg.band_tail_correction = self.band_tail_correction;
        cfg.validate().map_err(|e| field("integrator", e.to_string()))?;
        Ok(cfg)
    }

    /// The resolved configuration in the same syntax it is read from.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let alpha = match self.alpha_l {
            Some(a) => a.to_string(),
            None => "matched".to_string(),
        };
        let rows: [(&str, String); 20] = [
            ("cavity.finesse", self.finesse.to_string()),
            ("cavity.fsr", self.fsr.to_string()),
            ("cavity.alpha_l", alpha),
            ("grid.points", self.grid_points.to_string()),
            ("grid.spacing", self.grid_spacing.to_string()),
            ("pulse.sigma_t", self.sigma_t.to_string()),
            ("pulse.center", self.center.to_string()),
            ("pulse.area_factor", self.area_factor.to_string()),
            ("integrator.dt", self.dt.to_string()),
            ("integrator.t_start", self.t_start.to_string()),
            ("integrator.t_end", self.t_end.to_string()),
            ("integrator.band_tail_correction", self.band_tail_correction.to_string()),
            ("output.stride", self.output_stride.to_string()),
            ("sweep.points", self.sweep_points.to_string()),
            ("sweep.max_factor", self.sweep_max_factor.to_string()),
            ("response.omega_max", self.response_omega_max.to_string()),
            ("response.points", self.response_points.to_string()),
            ("response.inversions", fmt_list(&self.response_inversions)),
            ("area_theorem.points", self.area_points.to_string()),
            ("area_theorem.max_factor", self.area_max_factor.to_string()),
        ];
        for (k, v) in rows {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

fn key_of(e: &cavarea::Error) -> &'static str {
    match e {
        cavarea::Error::InvalidParameter { name: "kappa", .. } => "cavity.finesse",
        cavarea::Error::InvalidParameter { name: "fsr", .. } => "cavity.fsr",
        cavarea::Error::InvalidParameter { name: "alpha_l", .. } => "cavity.alpha_l",
        _ => "cavity",
    }
}
