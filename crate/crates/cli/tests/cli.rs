use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SINGLE: &str = r#"
[junction]
n_sites = 1
site_energies_ev = 0.3
gamma_left_ev = 0.005
gamma_right_ev = 0.005
temperature_kelvin = 300
bias_ev = 1.0

[vibration]
omega_b_ev = 0.2
lambda = 0.3
nu_ev = 0.005
cutoff_ev = 0.5
"#;

fn junction(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_junction"))
        .args(args)
        .env_remove("JUNCTION_TOLERANCE")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn run_json(config: &Path) -> serde_json::Value {
    let out = junction(&["run", "--config", s(config), "--json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn run_reports_current_as_json() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "single.toml", SINGLE);
    let v = run_json(&config);
    let jl = v["j_left_ev"].as_f64().unwrap();
    let jr = v["j_right_ev"].as_f64().unwrap();
    assert!(jl > 0.0 && (jl + jr).abs() < 1e-12 * jl);
    assert!((v["j_left_a"].as_f64().unwrap() / jl - 2.434_134_8e-4).abs() < 1e-12);
    assert_eq!(v["converged"], serde_json::Value::Bool(true));
    assert!(v["diagnostics"]["energy_points"].as_u64().unwrap() > 0);
}

#[test]
fn zero_bias_gives_no_current() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "zero.toml", &SINGLE.replace("bias_ev = 1.0", "bias_ev = 0.0"));
    let v = run_json(&config);
    assert!(v["j_left_ev"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn run_dumps_correlation() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "single.toml", SINGLE);
    let dump = dir.path().join("corr.csv");
    let out = junction(&["run", "--config", s(&config), "--dump-correlation", s(&dump)]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("J_L"));
    let (header, rows) = read_csv(&dump);
    assert_eq!(header, ["tau", "re", "im"]);
    assert_eq!(rows[0], ["0.0", "1.0", "0.0"]);
    assert!(rows.len() > 100);
}

#[test]
fn config_failures_exit_with_code_two() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("absent.toml");
    let out = junction(&["run", "--config", s(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]"));

    let bad = write_config(&dir, "bad.toml", &SINGLE.replace("gamma_left_ev = 0.005", "gamma_left_ev = -1.0"));
    let out = junction(&["run", "--config", s(&bad), "--json"]);
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["category"], "config");

    let good = write_config(&dir, "single.toml", SINGLE);
    let csv = dir.path().join("out.csv");
    for axis in ["phi:0:1:3", "V:0:1:1", "gamma:0:1:3:log"] {
        let out = junction(&["sweep", "--config", s(&good), "--axis", axis, "--out", s(&csv)]);
        assert_eq!(out.status.code(), Some(2), "{axis}");
    }
}

#[test]
fn numerical_failures_exit_with_code_three() {
    // Five sites at hopping g with Γ/2 = 2g per lead is an exceptional point.
    let text = SINGLE
        .replace("n_sites = 1", "n_sites = 5\nhoppings_ev = 0.05")
        .replace("site_energies_ev = 0.3", "site_energies_ev = 0.4")
        .replace("0.005\ngamma_right_ev = 0.005", "0.1\ngamma_right_ev = 0.1")
        .replace("lambda = 0.3", "lambda = 0.0");
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "ep.toml", &text);
    let out = junction(&["run", "--config", s(&config)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[eigensolver]"));
}

#[test]
fn tolerance_variable_sets_default_only() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "single.toml", SINGLE);
    let run = |tol: &str, path: &Path| {
        Command::new(env!("CARGO_BIN_EXE_junction"))
            .args(["run", "--config", s(path), "--json"])
            .env("JUNCTION_TOLERANCE", tol)
            .output()
            .unwrap()
    };
    let out = run("1e-3", &config);
    assert!(out.status.success());
    let loose: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let tight = run_json(&config);
    assert!(
        loose["diagnostics"]["time_horizon"].as_f64().unwrap() < tight["diagnostics"]["time_horizon"].as_f64().unwrap()
    );

    let pinned = write_config(&dir, "pinned.toml", &format!("{SINGLE}\n[numerics]\ntolerance = 1e-6\n"));
    let out = run("1e-3", &pinned);
    let explicit: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(explicit["j_left_ev"], tight["j_left_ev"]);

    assert_eq!(run("abc", &config).status.code(), Some(2));
    assert_eq!(run("2", &config).status.code(), Some(2));
}

fn sweep(config: &Path, axes: &[&str], out: &Path, extra: &[&str]) -> Vec<u8> {
    let mut args = vec!["sweep", "--config", s(config), "--out", s(out)];
    for a in axes {
        args.extend(["--axis", a]);
    }
    args.extend(extra);
    let status = junction(&args);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read(out).unwrap()
}

#[test]
fn sweep_output_is_independent_of_thread_count() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "single.toml", SINGLE);
    let axes = ["lambda:0:0.6:2", "V:0:1.2:4"];
    let one = sweep(&config, &axes, &dir.path().join("one.csv"), &["--jobs", "1"]);
    let four = sweep(&config, &axes, &dir.path().join("four.csv"), &["--jobs", "4"]);
    assert_eq!(one, four);

    let (header, rows) = read_csv(&dir.path().join("one.csv"));
    assert_eq!(
        header,
        ["lambda", "V", "j_left_ev", "j_right_ev", "occupation", "residual", "converged", "error"]
    );
    assert_eq!(rows.len(), 8);
    assert_eq!(rows[1][0], "0.0");
    assert!((rows[1][1].parse::<f64>().unwrap() - 0.4).abs() < 1e-15);
    assert_eq!(rows[4][0], "0.6");
    assert!(rows.iter().all(|r| r[6] == "true" && r[7].is_empty()));
}

#[test]
fn cache_does_not_change_results() {
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "single.toml", SINGLE);
    let axes = ["V:0.2:1.4:4"];
    sweep(&config, &axes, &dir.path().join("cached.csv"), &["--jobs", "2"]);
    sweep(&config, &axes, &dir.path().join("fresh.csv"), &["--jobs", "2", "--no-cache"]);
    let (_, cached) = read_csv(&dir.path().join("cached.csv"));
    let (_, fresh) = read_csv(&dir.path().join("fresh.csv"));
    for (a, b) in cached.iter().zip(&fresh) {
        for col in 1..5 {
            let (x, y): (f64, f64) = (a[col].parse().unwrap(), b[col].parse().unwrap());
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }
}

#[test]
fn sweep_records_failed_points_and_continues() {
    let text = SINGLE
        .replace("n_sites = 1", "n_sites = 4\nhoppings_ev = 0.05")
        .replace("site_energies_ev = 0.3", "site_energies_ev = 0.4")
        .replace("0.005\ngamma_right_ev = 0.005", "0.1\ngamma_right_ev = 0.1")
        .replace("lambda = 0.3", "lambda = 0.0")
        .replace("bias_ev = 1.0", "bias_ev = 0.1");
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "chain.toml", &text);
    let out = dir.path().join("chain.csv");
    sweep(&config, &["n_sites:4:6:3"], &out, &["--amperes"]);
    let (header, rows) = read_csv(&out);
    assert_eq!(header[5..], ["j_left_a", "j_right_a", "converged", "error"]);
    assert!(rows[0][8].is_empty() && rows[2][8].is_empty());
    assert!(rows[1][8].starts_with("eigensolver"), "{:?}", rows[1]);
    assert_eq!(rows[1][7], "false");
}

#[test]
fn sweep_axes_come_from_config() {
    let text = format!(
        "{SINGLE}\n[cavity]\nresonant = true\nrabi_ratio = 0.2\nkappa_ev = 0.005\n\n[sweep]\naxes = [\"rabi_ratio:0:0.4:3\"]\noutputs = [\"j_left\"]\n"
    );
    let dir = TempDir::new().unwrap();
    let config = write_config(&dir, "cavity.toml", &text);
    let out = dir.path().join("cavity.csv");
    sweep(&config, &[], &out, &[]);
    let (header, rows) = read_csv(&out);
    assert_eq!(header, ["rabi_ratio", "j_left_ev", "converged", "error"]);
    let j: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(j[2] < j[0], "{j:?}");
}
