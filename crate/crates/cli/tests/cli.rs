use std::fs;
use std::path::Path;
use std::process::{Command, Output};

// Short record and coarse grid so a full run takes well under a second.
const FAST: &str = "\
grid.points = 257
grid.spacing = 5e4
integrator.t_end = 60e-6
output.stride = 40
";

fn cavarea(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavarea"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.cfg");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn diagnostic(dir: &Path, name: &str) -> f64 {
    let text = fs::read_to_string(dir.join("diagnostics.csv")).unwrap();
    let line = text.lines().find(|l| l.starts_with(&format!("{name},"))).unwrap();
    line.split(',').nth(1).unwrap().parse().unwrap()
}

#[test]
fn corrupt_config_fails_without_output() {
    let tmp = tempfile::tempdir().unwrap();
    for text in ["grid.points = lots\n", "cavity.finesse = 500\nintegrator.dt = 1e-7\n", "garbage\n"] {
        let cfg = write_config(tmp.path(), text);
        let out = tmp.path().join("out");
        let o = cavarea(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path());
        assert!(!o.status.success(), "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"));
        assert!(!out.exists(), "{text}: output directory created");
    }
    let o = cavarea(&["simulate", "--config", "/no/such/file"], tmp.path());
    assert!(!o.status.success());
}

#[test]
fn empty_cavity_reflects_all_energy() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{FAST}cavity.alpha_l = 0\n"));
    let out = tmp.path().join("out");
    let o = cavarea(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap(), "--no-timestamp"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (u_in, u_out) = (diagnostic(&out, "u_in"), diagnostic(&out, "u_out"));
    assert!((u_out / u_in - 1.0).abs() <= 1e-4, "{u_in} {u_out}");
}

#[test]
fn simulate_writes_traces() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), FAST);
    let out = tmp.path().join("out");
    let o = cavarea(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("timeseries.csv")).unwrap();
    assert!(text.contains("# generated_unix_s = "));
    assert!(text.contains("#   grid.points = 257\n"));
    let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(data[0], "t_s,omega_in,omega_cav_re,omega_cav_im,omega_out");
    // 60 µs at 1.25 ns is 48000 steps, one row in 40 kept.
    assert_eq!(data.len(), 1 + 1201);
    let peak_in = data[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!(peak_in > 0.0);
    assert!(diagnostic(&out, "quanta_residual").abs() < 1e-4);
}

#[test]
fn identical_config_gives_identical_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{FAST}sweep.points = 3\n"));
    let mut bodies = Vec::new();
    for (dir, threads) in [("a", "1"), ("b", "2")] {
        let out = tmp.path().join(dir);
        let o = cavarea(
            &["sweep-area", "--config", &cfg, "--out", out.to_str().unwrap(), "--no-timestamp", "--threads", threads],
            tmp.path(),
        );
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        bodies.push(fs::read(out.join("sweep_area.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    let text = String::from_utf8(bodies.pop().unwrap()).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 3);
    let theta: Vec<f64> = rows.iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(theta.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn zero_area_sweep_row() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), &format!("{FAST}sweep.points = 1\n"));
    let out = tmp.path().join("out");
    let o = cavarea(&["sweep-area", "--config", &cfg, "--out", out.to_str().unwrap(), "--no-timestamp"], tmp.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(out.join("sweep_area.csv")).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows, vec!["0e0,0e0,0e0,0e0,0e0,nan,nan,0e0"]);
}

#[test]
fn response_and_area_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    for cmd in ["response", "area-theorem"] {
        let o = cavarea(&[cmd, "--out", out.to_str().unwrap(), "--no-timestamp"], tmp.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(out.join("response.csv")).unwrap();
    let fwhm: f64 = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .nth(1)
        .unwrap()
        .rsplit(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((fwhm / (2.0 * std::f64::consts::PI * 12e6) - 1.0).abs() < 1e-6);
    assert!(out.join("area_theorem.csv").exists());
}
