//! Scenario runner behind the `cavarea` binary: reads a scenario file, runs
//! one of the commands and writes self-describing CSV tables.

pub mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use cavarea::analysis;
use cavarea::area_theorem;
use cavarea::linear_response as lr;
use cavarea::simulator;
use thiserror::Error;

pub use config::ScenarioConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("config field `{key}`: {reason}")]
    Field { key: String, reason: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] cavarea::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    SweepArea,
    Response,
    AreaTheorem,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::SweepArea => "sweep-area",
            Command::Response => "response",
            Command::AreaTheorem => "area-theorem",
        }
    }
}

/// One output table, built fully in memory before anything touches disk.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub body: String,
}

pub fn load_config(path: Option<&Path>) -> Result<ScenarioConfig, CliError> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::Io {
                path: p.to_path_buf(),
                source,
            })?;
            ScenarioConfig::parse(&text)
        }
    }
}

/// Runs `cmd` and returns its tables. `timestamp` adds a
/// `# generated_unix_s` line, the only non-deterministic content.
pub fn execute(cmd: Command, cfg: &ScenarioConfig, timestamp: bool) -> Result<Vec<OutputFile>, CliError> {
    let header = |columns: &[(&str, &str)], extra: &[(&str, String)]| header(cmd, cfg, timestamp, columns, extra);
    match cmd {
        Command::Simulate => simulate(cfg, header),
        Command::SweepArea => sweep_area(cfg, header),
        Command::Response => response(cfg, header),
        Command::AreaTheorem => area_curve(cfg, header),
    }
}

/// Writes every table into `dir`, each through a temporary file and a
/// rename. On failure the temporaries are removed.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<Vec<PathBuf>, CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut staged = Vec::new();
    for f in files {
        let tmp = dir.join(format!(".{}.partial", f.name));
        if let Err(e) = fs::write(&tmp, &f.body).map_err(io(&tmp)) {
            let _ = fs::remove_file(&tmp);
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e);
        }
        staged.push((tmp, dir.join(&f.name)));
    }
    let mut done = Vec::new();
    for (tmp, fin) in staged {
        fs::rename(&tmp, &fin).map_err(io(&fin))?;
        done.push(fin);
    }
    Ok(done)
}

fn header(
    cmd: Command,
    cfg: &ScenarioConfig,
    timestamp: bool,
    columns: &[(&str, &str)],
    extra: &[(&str, String)],
) -> String {
    let mut s = format!("# cavarea {} {}\n", cmd.name(), env!("CARGO_PKG_VERSION"));
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let _ = writeln!(s, "# generated_unix_s = {secs}");
    }
    s.push_str("# config:\n");
    for line in cfg.render().lines() {
        let _ = writeln!(s, "#   {line}");
    }
    for (k, v) in extra {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let described: Vec<String> = columns.iter().map(|(c, u)| format!("{c} [{u}]")).collect();
    let _ = writeln!(s, "# columns: {}", described.join(", "));
    let names: Vec<&str> = columns.iter().map(|(c, _)| *c).collect();
    s.push_str(&names.join(","));
    s.push('\n');
    s
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "nan".into())
}

fn row(s: &mut String, cells: &[String]) {
    s.push_str(&cells.join(","));
    s.push('\n');
}

type Header<'a> = dyn Fn(&[(&str, &str)], &[(&str, String)]) -> String + 'a;

fn simulate(cfg: &ScenarioConfig, header: impl Fn(&[(&str, &str)], &[(&str, String)]) -> String) -> Result<Vec<OutputFile>, CliError> {
    let header: &Header = &header;
    let sim = cfg.simulation(cfg.area_factor)?;
    let record = simulator::simulate(&sim)?;
    let d = analysis::diagnose(&record, &sim.params, &sim.grid)?;

    let mut series = header(
        &[
            ("t_s", "s"),
            ("omega_in", "rad/s"),
            ("omega_cav_re", "rad/s"),
            ("omega_cav_im", "rad/s"),
            ("omega_out", "rad/s"),
        ],
        &[("output_stride", cfg.output_stride.to_string())],
    );
    for j in (0..record.len()).step_by(cfg.output_stride) {
        let c = record.omega_cav.samples[j];
        row(
            &mut series,
            &[
                num(record.omega_in.time(j)),
                num(record.omega_in.samples[j]),
                num(c.re),
                num(c.im),
                num(record.omega_out.samples[j].re),
            ],
        );
    }

    let mut diag = header(&[("quantity", "-"), ("value", "-"), ("unit", "-")], &[]);
    let entries: [(&str, String, &str); 17] = [
        ("theta_in", num(d.theta_in), "rad"),
        ("theta_cav", num(d.theta_cav), "rad"),
        ("theta_out", num(d.theta_out), "rad"),
        ("theta_cav_theory", num(d.theta_cav_theory), "rad"),
        ("theta_out_theory", num(d.theta_out_theory), "rad"),
        ("area_theorem_residual", num(d.area_theorem_residual), "rad"),
        ("u_in", num(d.u_in), "rad^2/s"),
        ("u_out", num(d.u_out), "rad^2/s"),
        ("u_w_final", num(d.u_w_final), "rad^2/s"),
        ("quanta_residual", num(d.quanta_residual), "relative"),
        ("sigma_in", opt(d.sigma_in), "s"),
        ("sigma_out", opt(d.sigma_out), "s"),
        ("mu_out", opt(d.mu_out), "s"),
        ("elongation", opt(d.elongation), "-"),
        ("max_norm_error", num(d.max_norm_error), "-"),
        ("imag_ratio", num(d.imag_ratio), "-"),
        ("io_relation_residual", num(record.io_relation_residual(&sim.params)), "rad/s"),
    ];
    for (q, v, u) in entries {
        row(&mut diag, &[q.to_string(), v, u.to_string()]);
    }
    Ok(vec![
        OutputFile {
            name: "timeseries.csv".into(),
            body: series,
        },
        OutputFile {
            name: "diagnostics.csv".into(),
            body: diag,
        },
    ])
}

fn sweep_area(cfg: &ScenarioConfig, header: impl Fn(&[(&str, &str)], &[(&str, String)]) -> String) -> Result<Vec<OutputFile>, CliError> {
    let base = cfg.simulation(1.0)?;
    let areas = analysis::linspace(cfg.sweep_max_factor * cfg.area_unit()?, cfg.sweep_points);
    let table = analysis::figure2_sweep(&areas, &base)?;
    let mut s = header(
        &[
            ("theta_in", "rad"),
            ("theta_cav_sim", "rad"),
            ("theta_cav_theory", "rad"),
            ("theta_out_sim", "rad"),
            ("theta_out_theory", "rad"),
            ("sigma_out_s", "s"),
            ("elongation", "-"),
            ("quanta_residual", "relative"),
        ],
        &[("max_deviation_rad", num(table.max_deviation))],
    );
    for r in &table.rows {
        let d = &r.diagnostics;
        row(
            &mut s,
            &[
                num(r.theory.theta_in),
                num(d.theta_cav),
                num(r.theory.theta_cav),
                num(d.theta_out),
                num(r.theory.theta_out),
                opt(d.sigma_out),
                opt(d.elongation),
                num(d.quanta_residual),
            ],
        );
    }
    Ok(vec![OutputFile {
        name: "sweep_area.csv".into(),
        body: s,
    }])
}

fn response(cfg: &ScenarioConfig, header: impl Fn(&[(&str, &str)], &[(&str, String)]) -> String) -> Result<Vec<OutputFile>, CliError> {
    let p = cfg.params()?;
    let fwhm = lr::dip_fwhm(&p, cfg.response_omega_max, cfg.response_points);
    let mut s = header(
        &[
            ("omega", "rad/s"),
            ("w", "-"),
            ("r_re", "-"),
            ("r_im", "-"),
            ("r_abs2", "-"),
            ("r_w_re", "-"),
            ("r_w_im", "-"),
            ("r_w_abs2", "-"),
            ("group_delay_s", "s"),
            ("group_delay_fd_s", "s"),
            ("dip_fwhm", "rad/s"),
        ],
        &[("cavity_linewidth_rad_s", num(p.cavity_linewidth()))],
    );
    let n = cfg.response_points;
    for &w in &cfg.response_inversions {
        let tg = lr::group_delay(w, &p)?;
        let tg_fd = lr::group_delay_fd(w, &p)?;
        for i in 0..n {
            let om = cfg.response_omega_max * (2.0 * i as f64 / (n - 1) as f64 - 1.0);
            let r = lr::reflection(om, &p);
            let rw = lr::reflection_generalized(om, w, &p);
            row(
                &mut s,
                &[
                    num(om),
                    num(w),
                    num(r.re),
                    num(r.im),
                    num(r.norm_sqr()),
                    num(rw.re),
                    num(rw.im),
                    num(rw.norm_sqr()),
                    num(tg),
                    num(tg_fd),
                    opt(fwhm),
                ],
            );
        }
    }
    Ok(vec![OutputFile {
        name: "response.csv".into(),
        body: s,
    }])
}

fn area_curve(cfg: &ScenarioConfig, header: impl Fn(&[(&str, &str)], &[(&str, String)]) -> String) -> Result<Vec<OutputFile>, CliError> {
    let p = cfg.params()?;
    let unit = cfg.area_unit()?;
    let mut s = header(
        &[
            ("theta_in", "rad"),
            ("theta_in_factor", "(sqrt(kappa)/2)pi"),
            ("theta_cav", "rad"),
            ("theta_out", "rad"),
            ("branch", "folds crossed"),
        ],
        &[],
    );
    for theta_in in analysis::linspace(cfg.area_max_factor * unit, cfg.area_points) {
        let sol = area_theorem::intracavity_area(theta_in, &p)?;
        row(
            &mut s,
            &[
                num(theta_in),
                num(theta_in / unit),
                num(sol.theta_cav),
                num(sol.theta_out),
                sol.branch.to_string(),
            ],
        );
    }
    Ok(vec![OutputFile {
        name: "area_theorem.csv".into(),
        body: s,
    }])
}
