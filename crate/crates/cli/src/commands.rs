use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use led_fano::analytic::{fano_sweep as sweep, log_grid, ratio_r, spl_condition, Formula};
use led_fano::config::Config;
use led_fano::langevin::{default_allowance, run_experiment};
use led_fano::params::{check_low_injection, derive_operating_point};
use led_fano::qw::qw_sweep;
use led_fano::steady_state::{consistency_check, il_curve as il, CONSISTENCY_TOLERANCE, DEFAULT_SLOPE_STEP};
use led_fano::{Experiment, OperatingPoint};
use serde::Serialize;

use crate::output::{file_name, print_json, provenance, Failure, ManifestRun, RunManifest, Sink};
use crate::{Common, GridArgs};

/// One configuration per case, with `--set`, `--seed` and command flags applied last.
struct Run {
    case: Option<String>,
    cfg: Config,
}

fn load_base(common: &Common) -> Result<Config, Failure> {
    Ok(match &common.config {
        Some(path) => Config::load(path)?,
        None => Config::parse("", "<no config>")?,
    })
}

fn runs(common: &Common, flags: &[(&str, Option<String>)]) -> Result<Vec<Run>, Failure> {
    let base = load_base(common)?;
    let selected = match &common.case {
        Some(name) => vec![(Some(name.clone()), base.resolve_case(name)?)],
        None => base.cases()?,
    };
    selected
        .into_iter()
        .map(|(case, mut cfg)| {
            for item in &common.set {
                let (k, v) = item.split_once('=').ok_or_else(|| {
                    Failure::Config(format!("--set expects KEY=VALUE, got `{item}`"))
                })?;
                cfg.set_checked(k.trim(), v.trim())?;
            }
            if let Some(seed) = common.seed {
                cfg.set("sim.seed", seed);
            }
            for (key, value) in flags {
                if let Some(v) = value {
                    cfg.set(key, v);
                }
            }
            Ok(Run { case, cfg })
        })
        .collect()
}

fn grid_flags(grid: &GridArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("grid.omega_min", grid.omega_min.map(|v| v.to_string())),
        ("grid.omega_max", grid.omega_max.map(|v| v.to_string())),
        ("grid.n_points", grid.n_points.map(|v| v.to_string())),
    ]
}

/// Fills absent grid keys with `[lo, hi] / τ''` and `n` points.
fn default_grid(cfg: &mut Config, op: &OperatingPoint, lo: f64, hi: f64, n: usize) {
    if !cfg.contains("grid.omega_min") {
        cfg.set("grid.omega_min", lo / op.tau_dd);
    }
    if !cfg.contains("grid.omega_max") {
        cfg.set("grid.omega_max", hi / op.tau_dd);
    }
    if !cfg.contains("grid.n_points") {
        cfg.set("grid.n_points", n);
    }
}

fn case_label(case: Option<&str>) -> String {
    case.map_or_else(String::new, |c| format!("[{c}] "))
}

#[derive(Serialize)]
struct OperatingPointReport {
    case: Option<String>,
    operating_point: OperatingPoint,
    sub_poissonian: bool,
    fano_zero_frequency: f64,
    regime: Option<led_fano::RegimeReport>,
}

pub fn operating_point(common: &Common) -> Result<(), Failure> {
    let mut sink = Sink::new(common.out.as_deref(), true)?;
    let mut reports = Vec::new();
    for Run { case, cfg } in runs(common, &[])? {
        let device = cfg.device()?;
        let pump = cfg.pump()?;
        let op = derive_operating_point(&device, &pump)?;
        let spl = spl_condition(&op);
        let w0 = Formula::Master.zero_freq(&op, pump.w_e)?;
        let regime = cfg.regime()?.map(|inputs| check_low_injection(&op, &inputs));
        let header = provenance(Some(&cfg), None, case.as_deref());
        sink.emit(&file_name("operating_point", case.as_deref()), &header, &op.to_csv())?;
        if let Some(r) = &regime {
            sink.emit(&file_name("regime", case.as_deref()), &header, &r.to_csv())?;
        }
        if !common.json {
            print!("{}", op_table(case.as_deref(), &op, pump.w_e, w0, spl.sub_poissonian, regime.as_ref()));
        }
        reports.push(OperatingPointReport {
            case,
            operating_point: op,
            sub_poissonian: spl.sub_poissonian,
            fano_zero_frequency: w0,
            regime,
        });
    }
    if common.json {
        print_json(&reports)?;
    }
    Ok(())
}

fn op_table(
    case: Option<&str>,
    op: &OperatingPoint,
    w_e: f64,
    w0: f64,
    spl: bool,
    regime: Option<&led_fano::RegimeReport>,
) -> String {
    let mut s = String::new();
    if let Some(c) = case {
        let _ = writeln!(s, "case {c}");
    }
    let _ = writeln!(s, "  P0         {:>12.5e} 1/s", op.p0);
    let _ = writeln!(s, "  n_c0       {:>12.5e}", op.n_c0);
    let _ = writeln!(s, "  tau_r0     {:>12.5e} s", op.tau_r0);
    let _ = writeln!(s, "  tau_nr0    {:>12.5e} s", op.tau_nr0);
    let _ = writeln!(s, "  eps0       {:>12.6}", op.eps0);
    let _ = writeln!(s, "  K_r, K_nr  {:>12.6} {:.6}", op.k_r, op.k_nr);
    let _ = writeln!(s, "  tau''      {:>12.5e} s (cutoff {:.5e} rad/s)", op.tau_dd, op.tau_dd.recip());
    let _ = writeln!(s, "  beta0      {:>12.6}", op.beta0);
    if (op.eta - op.eta_d).abs() <= 1e-12 * op.eta.abs() {
        let _ = writeln!(s, "  eta = eta_d = {:.6}", op.eta);
    } else {
        let _ = writeln!(s, "  eta = {:.6}, eta_d = {:.6}", op.eta, op.eta_d);
    }
    let _ = writeln!(s, "  zeta1, zeta2 {:>10.6} {:.6}", op.zeta1, op.zeta2);
    let _ = writeln!(s, "  N0         {:>12.5e} 1/s", op.n0);
    let _ = writeln!(s, "  W_ph(0)    {:>12.6} (W_e = {w_e})", w0);
    let _ = writeln!(
        s,
        "  Poissonian pump gives {} light",
        if spl { "sub-Poissonian" } else { "Poissonian or super-Poissonian" }
    );
    if let Some(r) = regime {
        let worst = r.mode_ratios.iter().copied().fold(0.0, f64::max);
        let _ = writeln!(
            s,
            "  low injection: {} (R_abs/kappa {:.3e}, max photons/mode {:.3e}, threshold {})",
            if r.pass { "PASS" } else { "FAIL" },
            r.abs_ratio,
            worst,
            r.threshold
        );
    }
    s
}

#[derive(Serialize)]
struct SweepReport {
    case: Option<String>,
    formulas: Vec<Formula>,
    omega: Vec<f64>,
    w_ph: Vec<Vec<f64>>,
}

pub fn fano_sweep(common: &Common, grid: &GridArgs, formulas: Option<&str>) -> Result<(), Failure> {
    let mut flags = grid_flags(grid);
    flags.push(("grid.formulas", formulas.map(String::from)));
    let mut sink = Sink::new(common.out.as_deref(), common.json)?;
    let mut reports = Vec::new();
    for Run { case, mut cfg } in runs(common, &flags)? {
        let device = cfg.device()?;
        let pump = cfg.pump()?;
        let op = derive_operating_point(&device, &pump)?;
        default_grid(&mut cfg, &op, 1e-2, 1e2, 61);
        let omegas = cfg.omega_grid()?;
        let formulas = cfg.formulas()?;
        let rows = sweep(&op, pump.w_e, &omegas, &formulas)?;
        let mut body = String::from("omega");
        for f in &formulas {
            let _ = write!(body, ",W_ph_{}", f.name());
        }
        body.push('\n');
        for (w, vals) in &rows {
            let _ = write!(body, "{w:e}");
            for v in vals {
                let _ = write!(body, ",{v:e}");
            }
            body.push('\n');
        }
        let header = provenance(Some(&cfg), None, case.as_deref());
        sink.emit(&file_name("fano_sweep", case.as_deref()), &header, &body)?;
        reports.push(SweepReport {
            case,
            formulas,
            omega: omegas,
            w_ph: rows.into_iter().map(|(_, v)| v).collect(),
        });
    }
    if common.json {
        print_json(&reports)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateReport {
    case: Option<String>,
    agrees: bool,
    experiment: Experiment,
}

pub fn simulate(common: &Common, grid: &GridArgs, n_traj: Option<usize>) -> Result<(), Failure> {
    let started = Instant::now();
    let mut flags = grid_flags(grid);
    flags.push(("sim.n_traj", n_traj.map(|n| n.to_string())));
    let mut sink = Sink::new(common.out.as_deref(), common.json)?;
    let mut manifest_runs = Vec::new();
    let mut reports = Vec::new();
    let mut failures = Vec::new();
    let mut seed = None;
    for Run { case, mut cfg } in runs(common, &flags)? {
        let device = cfg.device()?;
        let pump = cfg.pump()?;
        let op = derive_operating_point(&device, &pump)?;
        default_grid(&mut cfg, &op, 0.05, 20.0, 12);
        let sim = cfg.sim(&op)?;
        if !cfg.contains("sim.seed") {
            cfg.set("sim.seed", sim.seed);
        }
        seed = Some(sim.seed);
        let label = case_label(case.as_deref());
        eprintln!(
            "{label}{} trajectories x {} steps (dt {:.3e} s, segment {})",
            sim.n_traj,
            sim.n_steps(),
            sim.dt,
            sim.segment_length
        );
        let exp = run_experiment(&device, &pump, &sim)?;
        let ok = exp.agreement(default_allowance::<f64>);
        let agrees = ok.iter().all(|&b| b);
        let worst = exp
            .estimate
            .w_ph
            .iter()
            .zip(&exp.analytic)
            .map(|(m, a)| (m - a).abs())
            .fold(0.0, f64::max);
        eprintln!(
            "{label}max |MC - analytic| = {worst:.4}; {}",
            if agrees { "agrees" } else { "DISAGREES" }
        );
        if !agrees {
            let bad: Vec<String> = exp
                .estimate
                .omega_grid
                .iter()
                .zip(&ok)
                .filter(|(_, &b)| !b)
                .map(|(w, _)| format!("{w:.3e}"))
                .collect();
            failures.push(format!("{label}omega {}", bad.join(", ")));
        }
        let name = file_name("simulate", case.as_deref());
        let header = provenance(Some(&cfg), Some(sim.seed), case.as_deref());
        sink.emit(&name, &header, &exp.to_csv())?;
        let path = common.out.as_ref().map(|d| d.join(&name));
        manifest_runs.push(ManifestRun::new(case.as_deref(), &cfg, path.as_deref()));
        reports.push(SimulateReport {
            case,
            agrees,
            experiment: exp,
        });
    }
    if sink.has_dir() {
        let outputs: Vec<PathBuf> = sink.written.clone();
        let mut listed = outputs.clone();
        let manifest_path = common.out.as_deref().map(|d: &Path| d.join("manifest.json"));
        listed.extend(manifest_path.clone());
        let manifest = RunManifest::new("simulate", seed, manifest_runs, &listed, started);
        sink.write_json("manifest.json", &manifest)?;
    }
    if common.json {
        print_json(&reports)?;
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::SelfTest(format!(
            "Monte Carlo and closed form disagree at {}",
            failures.join("; ")
        )))
    }
}

/// `(η, η_d, r measured, r from the closed form, 1 - η)` as tabulated from experiment.
const TABLE_ONE: [(f64, f64, f64, f64, f64); 3] = [
    (0.067, 0.090, 0.90, 0.89, 0.93),
    (0.104, 0.125, 0.84, 0.86, 0.90),
    (0.150, 0.175, 0.81, 0.81, 0.85),
];

const TABLE_ONE_TOLERANCE: f64 = 0.005;

#[derive(Serialize)]
struct TableRow {
    eta: f64,
    eta_d: f64,
    r_exp: f64,
    r_theory: f64,
    r_one_minus_eta: f64,
    r_theory_reference: f64,
    r_one_minus_eta_reference: f64,
    pass: bool,
}

pub fn table1(common: &Common) -> Result<(), Failure> {
    let mut rows = Vec::new();
    for (eta, eta_d, r_exp, r_ref, one_ref) in TABLE_ONE {
        let r = ratio_r(eta, eta_d)?;
        let one = 1.0 - eta;
        rows.push(TableRow {
            eta,
            eta_d,
            r_exp,
            r_theory: r,
            r_one_minus_eta: one,
            r_theory_reference: r_ref,
            r_one_minus_eta_reference: one_ref,
            pass: (r - r_ref).abs() <= TABLE_ONE_TOLERANCE && (one - one_ref).abs() <= TABLE_ONE_TOLERANCE,
        });
    }
    let mut body = String::from("eta,eta_d,r_exp,r_theory,r_one_minus_eta\n");
    for r in &rows {
        let _ = writeln!(
            body,
            "{},{},{},{:.6},{:.6}",
            r.eta, r.eta_d, r.r_exp, r.r_theory, r.r_one_minus_eta
        );
    }
    if common.json {
        print_json(&rows)?;
    } else {
        println!("  eta    eta_d  r(exp)  r(theory)  r=1-eta");
        for r in &rows {
            println!(
                "  {:.3}  {:.3}  {:.2}    {:.2}       {:.2}   {}",
                r.eta,
                r.eta_d,
                r.r_exp,
                r.r_theory,
                r.r_one_minus_eta,
                if r.pass { "ok" } else { "MISMATCH" }
            );
        }
    }
    let mut sink = Sink::new(common.out.as_deref(), true)?;
    sink.emit("table1.csv", &provenance(None, None, None), &body)?;
    if rows.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::SelfTest(format!(
            "ratio r deviates from the tabulated values by more than {TABLE_ONE_TOLERANCE}"
        )))
    }
}

pub fn il_curve(
    common: &Common,
    p_min: Option<f64>,
    p_max: Option<f64>,
    n_points: Option<usize>,
) -> Result<(), Failure> {
    let flags = [
        ("il.p_min", p_min.map(|v| v.to_string())),
        ("il.p_max", p_max.map(|v| v.to_string())),
        ("il.n_points", n_points.map(|v| v.to_string())),
    ];
    let mut sink = Sink::new(common.out.as_deref(), common.json)?;
    let mut curves = Vec::new();
    for Run { case, cfg } in runs(common, &flags)? {
        let model = cfg.lifetime_model()?;
        let beta0 = cfg.f64_or("model.beta0", 1.0)?;
        let lo = cfg.require_f64("il.p_min")?;
        let hi = cfg.require_f64("il.p_max")?;
        let n = cfg.usize("il.n_points")?.unwrap_or(50);
        let step = cfg.f64_or("il.step", DEFAULT_SLOPE_STEP)?;
        let curve = il(lo, hi, n, &model, beta0, step)?;
        if let Some(p0) = cfg.f64("model.P0")? {
            let c = consistency_check(&model, p0, beta0, CONSISTENCY_TOLERANCE)?;
            eprintln!(
                "{}at P0 = {p0:e}: K_r = {:.6}, K_nr = {:.6}, eta_d numeric {:.8} vs small-signal {:.8} (rel. error {:.2e}, {})",
                case_label(case.as_deref()),
                c.k_r,
                c.k_nr,
                c.eta_d_num,
                c.eta_d_small_signal,
                c.rel_error,
                if c.pass { "consistent" } else { "INCONSISTENT" }
            );
        }
        let header = provenance(Some(&cfg), None, case.as_deref());
        sink.emit(&file_name("il_curve", case.as_deref()), &header, &curve.to_csv())?;
        curves.push((case, curve));
    }
    if common.json {
        print_json(&curves)?;
    }
    Ok(())
}

pub fn qw_serate(
    common: &Common,
    temperatures: &[f64],
    m_eff: Option<f64>,
    n_s_min: Option<f64>,
    n_s_max: Option<f64>,
    n_points: Option<usize>,
) -> Result<(), Failure> {
    let flags = [
        ("qw.m_eff", m_eff.map(|v| v.to_string())),
        ("qw.n_s_min", n_s_min.map(|v| v.to_string())),
        ("qw.n_s_max", n_s_max.map(|v| v.to_string())),
        ("qw.n_points", n_points.map(|v| v.to_string())),
    ];
    let mut sink = Sink::new(common.out.as_deref(), common.json)?;
    let mut all = Vec::new();
    for Run { case, mut cfg } in runs(common, &flags)? {
        if !temperatures.is_empty() {
            let list: Vec<String> = temperatures.iter().map(f64::to_string).collect();
            cfg.set("qw.T", list.join(", "));
        }
        let temps = cfg.f64_list("qw.T")?.unwrap_or_else(|| vec![3.0, 15.0, 80.0]);
        let m = cfg.f64_or("qw.m_eff", 0.1)?;
        let lo = cfg.f64_or("qw.n_s_min", 1e12)?;
        let hi = cfg.f64_or("qw.n_s_max", 1e16)?;
        let n = cfg.usize("qw.n_points")?.unwrap_or(41);
        let densities = log_grid(lo, hi, n)?;
        let rows = qw_sweep(m, &temps, &densities)?;
        let mut body = String::from("n_s,T,f_e,R_rel,K_r\n");
        for r in &rows {
            let _ = writeln!(body, "{:e},{},{:e},{:e},{:e}", r.n_s, r.temperature, r.f_e, r.r_rel, r.k_r);
        }
        let header = provenance(Some(&cfg), None, case.as_deref());
        sink.emit(&file_name("qw_serate", case.as_deref()), &header, &body)?;
        all.push((case, rows));
    }
    if common.json {
        print_json(&all)?;
    }
    Ok(())
}
