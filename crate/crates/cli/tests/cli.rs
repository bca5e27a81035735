use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_led-fano");

const MINIMAL: &str = "mode.1.kappa0 = 1e12\nmode.1.tau_r = 1e-9\nP0 = 1e9\n";

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("LED_FANO_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_cfg(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.display().to_string()
}

/// Non-comment lines split on commas.
fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.is_empty());
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn operating_point_prints_equal_efficiencies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "min.cfg", MINIMAL);
    let o = run(&["operating-point", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("eta = eta_d = 1.000000"), "{}", stdout(&o));
}

#[test]
fn missing_pump_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "nop.cfg", "mode.1.kappa0 = 1e12\nmode.1.tau_r = 1e-9\n");
    let o = run(&["operating-point", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`P0`"), "{}", stderr(&o));
}

#[test]
fn parse_errors_name_file_line_and_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_cfg(dir.path(), "bad.cfg", "P0 = 1e9\n\nmode.1.kappa = 1e12\n");
    let o = run(&["operating-point", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(&format!("{cfg}:3: key `mode.1.kappa`")), "{}", stderr(&o));
    let o = run(&["operating-point", "--config", &cfg.replace("bad", "absent")]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_carries_the_same_fields() {
    let o = run(&["operating-point", "--config", fixture("fig4d.cfg").to_str().unwrap(), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let cases = v.as_array().unwrap();
    assert_eq!(cases.len(), 2);
    assert_eq!(cases[0]["case"], "solid");
    let op = &cases[0]["operating_point"];
    assert_eq!(op["eta"], 0.5);
    assert!((op["eta_d"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert_eq!(cases[0]["sub_poissonian"], true);
}

#[test]
fn operating_point_writes_csv_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run(&[
        "operating-point",
        "--config",
        fixture("fig4a.cfg").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    for case in ["solid", "dashed"] {
        let text = std::fs::read_to_string(out.join(format!("operating_point_{case}.csv"))).unwrap();
        let first = text.lines().next().unwrap();
        assert!(first.starts_with("# led-fano 0.1.0 config_sha256="), "{first}");
        assert!(first.ends_with(&format!("seed=- case={case}")), "{first}");
        assert_eq!(text.lines().nth(1), Some("quantity,value"));
    }
}

#[test]
fn fig4d_solid_below_dashed_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep");
    let o = run(&[
        "fano-sweep",
        "--config",
        fixture("fig4d.cfg").to_str().unwrap(),
        "--formulas",
        "master",
        "--n-points",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let read = |c: &str| {
        let text = std::fs::read_to_string(out.join(format!("fano_sweep_{c}.csv"))).unwrap();
        let (header, rows) = csv_rows(&text);
        assert_eq!(header, ["omega", "W_ph_master"]);
        rows.iter().map(|r| r[1].parse::<f64>().unwrap()).collect::<Vec<_>>()
    };
    let (solid, dashed) = (read("solid"), read("dashed"));
    assert_eq!(solid.len(), 200);
    assert!(solid.iter().zip(&dashed).all(|(s, d)| s < d));
}

#[test]
fn sweep_grid_endpoints_are_exact() {
    let o = run(&[
        "fano-sweep",
        "--config",
        fixture("fig4b.cfg").to_str().unwrap(),
        "--case",
        "solid",
        "--omega-min",
        "3.3e7",
        "--omega-max",
        "7.7e10",
        "--n-points",
        "17",
    ]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header.len(), 6);
    assert_eq!(rows.len(), 17);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 3.3e7);
    assert_eq!(rows[16][0].parse::<f64>().unwrap(), 7.7e10);
}

#[test]
fn formulas_flag_selects_columns() {
    let cfg = fixture("fig4c.cfg");
    let args = ["fano-sweep", "--config", cfg.to_str().unwrap(), "--case", "dashed"];
    let o = run(&[&args[..], &["--formulas", "master,alternative"]].concat());
    assert!(o.status.success());
    let (header, _) = csv_rows(&stdout(&o));
    assert_eq!(header, ["omega", "W_ph_master", "W_ph_alternative"]);
    let o = run(&[&args[..], &["--formulas", "master,lorentz"]].concat());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lorentz"));
}

#[test]
fn flags_override_config_and_cases() {
    // fig4b dashed has W = 1 everywhere; --set W_e=0 makes it sub-Poissonian
    let cfg = fixture("fig4b.cfg");
    let base = ["fano-sweep", "--config", cfg.to_str().unwrap(), "--case", "dashed", "--formulas", "master"];
    let o = run(&[&base[..], &["--set", "W_e=0"]].concat());
    let (_, rows) = csv_rows(&stdout(&o));
    assert!(rows.iter().all(|r| r[1].parse::<f64>().unwrap() < 1.0));
    let o = run(&[&base[..], &["--set", "tau_nr0=1e-9"]].concat());
    let (_, rows) = csv_rows(&stdout(&o));
    assert!(rows[0][1].parse::<f64>().unwrap() > 1.5, "case keys must not beat flags");
    let o = run(&[&base[..], &["--set", "Pzero=1"]].concat());
    assert_eq!(o.status.code(), Some(2));
}

fn quick_simulate(out: &Path, extra: &[&str]) -> Output {
    let cfg = fixture("default.cfg");
    let args = [
        "simulate",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "sim.duration=1.3e-5",
        "--out",
        out.to_str().unwrap(),
    ];
    run(&[&args[..], extra].concat())
}

#[test]
fn simulate_is_reproducible_and_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    let oa = quick_simulate(&a, &["--seed", "42", "--n-traj", "2"]);
    assert!(matches!(oa.status.code(), Some(0) | Some(3)), "{}", stderr(&oa));
    quick_simulate(&b, &["--seed", "42", "--n-traj", "2"]);
    quick_simulate(&c, &["--seed", "43", "--n-traj", "2"]);
    let read = |d: &Path| std::fs::read_to_string(d.join("simulate.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert!(read(&a).lines().next().unwrap().contains("seed=42"));

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "simulate");
    assert_eq!(manifest["seed"], 42);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.iter().any(|p| p.ends_with("simulate.csv")));
    assert!(outputs.iter().any(|p| p.ends_with("manifest.json")));

    // the recorded configuration alone reproduces the CSV
    let snapshot = manifest["runs"][0]["config"].as_str().unwrap();
    let cfg = write_cfg(dir.path(), "snapshot.cfg", snapshot);
    let d = dir.path().join("d");
    run(&["simulate", "--config", &cfg, "--out", d.to_str().unwrap()]);
    assert_eq!(read(&a), read(&d));
}

#[test]
fn single_trajectory_leaves_stderr_empty() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("one");
    let o = quick_simulate(&out, &["--n-traj", "1"]);
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    let (header, rows) = csv_rows(&std::fs::read_to_string(out.join("simulate.csv")).unwrap());
    assert_eq!(header, ["omega", "W_ph_mc", "stderr", "W_ph_analytic"]);
    assert!(rows.iter().all(|r| r[2].is_empty()));
}

#[test]
fn simulate_self_test_fails_with_exit_3() {
    // a run far too short to resolve the spectrum
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("short");
    let o = run(&[
        "simulate",
        "--config",
        fixture("default.cfg").to_str().unwrap(),
        "--set",
        "grid.omega_min=1e9",
        "--set",
        "sim.n_traj=1",
        "--set",
        "sim.duration=1e-6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("disagree"));
    assert!(out.join("simulate.csv").exists());
}

#[test]
fn oversized_step_is_a_config_error() {
    let o = run(&[
        "simulate",
        "--config",
        fixture("default.cfg").to_str().unwrap(),
        "--set",
        "sim.dt=1e-10",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sim.dt"), "{}", stderr(&o));
}

#[test]
fn bad_thread_setting_is_rejected() {
    let o = Command::new(BIN).arg("table1").env("LED_FANO_THREADS", "zero").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table1_rows() {
    let o = run(&["table1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("0.067  0.090  0.90    0.89       0.93   ok"), "{text}");
    assert!(text.contains("0.104  0.125  0.84    0.86       0.90   ok"));
    assert!(text.contains("0.150  0.175  0.81    0.81       0.85   ok"));
}

#[test]
fn qw_serate_orders_temperatures() {
    let o = run(&["qw-serate", "--T", "3,15,80", "--m-eff", "0.1", "--n-points", "9"]);
    assert!(o.status.success());
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["n_s", "T", "f_e", "R_rel", "K_r"]);
    assert_eq!(rows.len(), 27);
    for chunk in rows.chunks(3) {
        let r: Vec<f64> = chunk.iter().map(|row| row[3].parse().unwrap()).collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{chunk:?}");
    }
}

#[test]
fn linear_model_has_constant_slopes() {
    let o = run(&["il-curve", "--config", fixture("il_linear.cfg").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = csv_rows(&stdout(&o));
    assert_eq!(header, ["P", "n_c", "V", "N", "eta_num", "eta_d_num"]);
    for row in &rows {
        let (eta, eta_d): (f64, f64) = (row[4].parse().unwrap(), row[5].parse().unwrap());
        assert!((eta - 0.15).abs() < 1e-12 && (eta_d - 0.15).abs() < 1e-9, "{row:?}");
    }
    assert!(stderr(&o).contains("consistent"));
}

#[test]
fn quantum_well_curve_bends_beyond_degeneracy() {
    let o = run(&["il-curve", "--config", fixture("il_qw.cfg").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (_, rows) = csv_rows(&stdout(&o));
    // n0 = 1.08e14 m^-2 on a 1e-10 m^2 well is about 1.08e4 carriers
    let n0_carriers = 1.08e4;
    for row in &rows {
        let v: Vec<f64> = row.iter().map(|x| x.parse().unwrap()).collect();
        if v[1] > n0_carriers {
            assert!(v[5] < 0.8 * v[4], "{row:?}");
        }
        assert!(v[5] < v[4]);
    }
    assert!(rows.iter().any(|r| r[1].parse::<f64>().unwrap() > n0_carriers));
}
