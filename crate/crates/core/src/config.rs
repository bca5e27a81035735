//! Flat `key = value` configuration files.
//!
//! ```text
//! # single-mode device
//! mode.1.kappa0 = 1e12
//! mode.1.tau_r  = 1e-9
//! mode.1.K_r    = -0.5
//! tau_nr0 = 1e-9        # `inf` for no non-radiative channel
//! K_nr    = -0.5
//! P0  = 1e9
//! W_e = 1
//!
//! # optional variants, each overriding base keys
//! cases = solid, dashed
//! case.dashed.tau_nr0 = inf
//! ```
//!
//! Blank lines and `#` comments are ignored. Every value is checked when the
//! section that uses it is built, and errors carry file, line and key.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::analytic::{log_grid, Formula};
use crate::error::{Error, Result};
use crate::langevin::{SimConfig, DEFAULT_BURN_IN, MAX_DT_FRACTION};
use crate::params::{DeviceParams, ModeParams, OperatingPoint, PumpSpec, RegimeInputs, SineModulation};
use crate::steady_state::{LifetimeModel, NonRadiativeLaw, PowerLaw, QwEmitter, RadiativeLaw};

/// Keys accepted outside `mode.N.*` and `case.NAME.*`.
const KNOWN_KEYS: &[&str] = &[
    "cases",
    "tau_nr0",
    "K_nr",
    "nbar_thermal",
    "P0",
    "W_e",
    "mod.amplitude",
    "mod.omega",
    "grid.omega_min",
    "grid.omega_max",
    "grid.n_points",
    "grid.formulas",
    "sim.dt",
    "sim.duration",
    "sim.n_traj",
    "sim.seed",
    "sim.segment_length",
    "sim.burn_in",
    "regime.cavity_volume",
    "regime.active_volume",
    "regime.r_abs_per_length",
    "regime.transit_time",
    "regime.q",
    "regime.threshold",
    "model.radiative",
    "model.p_r",
    "model.tau_r_ref",
    "model.n_ref",
    "model.p_nr",
    "model.tau_nr_ref",
    "model.m_eff",
    "model.T",
    "model.area",
    "model.rate_scale",
    "model.beta0",
    "model.P0",
    "il.p_min",
    "il.p_max",
    "il.n_points",
    "il.step",
    "qw.m_eff",
    "qw.T",
    "qw.n_s_min",
    "qw.n_s_max",
    "qw.n_points",
];

const MODE_FIELDS: &[&str] = &["kappa0", "tau_r", "K_r", "xi"];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    /// 1-based source line; 0 for values set programmatically (flag overrides).
    pub line: usize,
}

/// A parsed configuration, optionally narrowed to one case.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub file: String,
    entries: BTreeMap<String, Entry>,
}

impl Config {
    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::Config {
                    file: file.to_string(),
                    line,
                    key: content.to_string(),
                    message: "expected `key = value`".into(),
                });
            };
            let (key, value) = (key.trim(), value.trim());
            let err = |message: &str| Error::Config {
                file: file.to_string(),
                line,
                key: key.to_string(),
                message: message.to_string(),
            };
            if key.is_empty() {
                return Err(err("empty key"));
            }
            if !is_known(key) {
                return Err(err("unknown key"));
            }
            if let Some(prev) = entries.get(key) {
                let Entry { line: first, .. } = prev;
                return Err(err(&format!("duplicate key (first set on line {first})")));
            }
            entries.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line,
                },
            );
        }
        Ok(Self {
            file: file.to_string(),
            entries,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config {
            file: file.clone(),
            line: 0,
            key: String::new(),
            message: format!("cannot read: {e}"),
        })?;
        Self::parse(&text, &file)
    }

    /// Sets or replaces a value; used for command-line overrides.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line: 0,
            },
        );
    }

    /// Like [`Config::set`] but rejects keys the file format does not know.
    pub fn set_checked(&mut self, key: &str, value: impl ToString) -> Result<()> {
        if !is_known(key) {
            return Err(Error::Config {
                file: "<command line>".into(),
                line: 0,
                key: key.to_string(),
                message: "unknown key".into(),
            });
        }
        self.set(key, value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    /// Case names listed under `cases`, in file order.
    pub fn case_names(&self) -> Vec<String> {
        self.get("cases")
            .map(|e| {
                e.value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Base keys overlaid with `case.<name>.*`; all case keys are dropped from the result.
    pub fn resolve_case(&self, name: &str) -> Result<Self> {
        if !self.case_names().iter().any(|c| c == name) {
            return Err(Error::Config {
                file: self.file.clone(),
                line: self.get("cases").map_or(0, |e| e.line),
                key: "cases".into(),
                message: format!("no case named `{name}`"),
            });
        }
        let prefix = format!("case.{name}.");
        let mut entries: BTreeMap<String, Entry> = self
            .entries
            .iter()
            .filter(|(k, _)| !k.starts_with("case.") && k.as_str() != "cases")
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for (k, v) in &self.entries {
            if let Some(rest) = k.strip_prefix(&prefix) {
                entries.insert(rest.to_string(), v.clone());
            }
        }
        Ok(Self {
            file: self.file.clone(),
            entries,
        })
    }

    /// `(name, config)` for every case, or one unnamed entry when no cases are listed.
    pub fn cases(&self) -> Result<Vec<(Option<String>, Self)>> {
        let names = self.case_names();
        if names.is_empty() {
            return Ok(vec![(None, self.clone())]);
        }
        names
            .into_iter()
            .map(|n| Ok((Some(n.clone()), self.resolve_case(&n)?)))
            .collect()
    }

    /// Sorted `key = value` lines; identical for configurations that resolve identically.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        for (k, e) in &self.entries {
            let _ = writeln!(out, "{k} = {}", e.value);
        }
        out
    }

    fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            file: self.file.clone(),
            line: self.get(key).map_or(0, |e| e.line),
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn missing(&self, key: &str) -> Error {
        Error::MissingKey {
            file: self.file.clone(),
            key: key.to_string(),
        }
    }

    /// Parses a value with `FromStr`.
    pub fn parsed<V: FromStr>(&self, key: &str) -> Result<Option<V>>
    where
        V::Err: std::fmt::Display,
    {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e
                .value
                .parse::<V>()
                .map(Some)
                .map_err(|err| self.error(key, format!("cannot parse `{}`: {err}", e.value))),
        }
    }

    /// A real number; `inf` is accepted.
    pub fn f64(&self, key: &str) -> Result<Option<f64>> {
        let v = self.parsed::<f64>(key)?;
        if v.is_some_and(f64::is_nan) {
            return Err(self.error(key, "NaN is not a valid value"));
        }
        Ok(v)
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.f64(key)?.ok_or_else(|| self.missing(key))
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        Ok(self.f64(key)?.unwrap_or(default))
    }

    pub fn usize(&self, key: &str) -> Result<Option<usize>> {
        self.parsed::<usize>(key)
    }

    /// A comma-separated list of reals.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.get(key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|err| self.error(key, format!("cannot parse `{}`: {err}", s.trim())))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Mode indices present, in ascending order.
    fn mode_indices(&self) -> Result<Vec<usize>> {
        let mut idx = Vec::new();
        for k in self.entries.keys() {
            if let Some(rest) = k.strip_prefix("mode.") {
                let n = rest.split('.').next().unwrap_or("");
                let n: usize = n
                    .parse()
                    .map_err(|_| self.error(k, "mode index must be a positive integer"))?;
                if !idx.contains(&n) {
                    idx.push(n);
                }
            }
        }
        idx.sort_unstable();
        if idx.is_empty() {
            return Err(self.missing("mode.1.kappa0"));
        }
        for (pos, &n) in idx.iter().enumerate() {
            if n != pos + 1 {
                return Err(self.error(
                    &format!("mode.{n}.kappa0"),
                    format!("modes must be numbered 1..N without gaps (missing mode.{})", pos + 1),
                ));
            }
        }
        Ok(idx)
    }

    /// `mode.N.{kappa0,tau_r,K_r,xi}`, `tau_nr0`, `K_nr`, `nbar_thermal`.
    /// Defaults: `K_r = 0`, `xi = 1`, `tau_nr0 = inf`, `K_nr = 0`, `nbar_thermal = 0`.
    pub fn device(&self) -> Result<DeviceParams<f64>> {
        let modes = self
            .mode_indices()?
            .into_iter()
            .map(|n| {
                let key = |f: &str| format!("mode.{n}.{f}");
                Ok(ModeParams::new(
                    self.require_f64(&key("kappa0"))?,
                    self.require_f64(&key("tau_r"))?,
                    self.f64_or(&key("K_r"), 0.0)?,
                    self.f64_or(&key("xi"), 1.0)?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut dev = DeviceParams::new(
            modes,
            self.f64_or("tau_nr0", f64::INFINITY)?,
            self.f64_or("K_nr", 0.0)?,
        );
        dev.nbar_thermal = self.f64_or("nbar_thermal", 0.0)?;
        dev.validate()?;
        Ok(dev)
    }

    /// `P0` (required), `W_e` (default 1), optional `mod.amplitude` with `mod.omega`.
    pub fn pump(&self) -> Result<PumpSpec<f64>> {
        let mut pump = PumpSpec::new(self.require_f64("P0")?, self.f64_or("W_e", 1.0)?);
        match (self.f64("mod.amplitude")?, self.f64("mod.omega")?) {
            (None, None) => {}
            (Some(amplitude), Some(omega)) => {
                pump.modulation = Some(SineModulation { amplitude, omega })
            }
            (Some(_), None) => return Err(self.missing("mod.omega")),
            (None, Some(_)) => return Err(self.missing("mod.amplitude")),
        }
        pump.validate()?;
        Ok(pump)
    }

    /// Log-spaced grid from `grid.omega_min`, `grid.omega_max`, `grid.n_points`.
    pub fn omega_grid(&self) -> Result<Vec<f64>> {
        let lo = self.require_f64("grid.omega_min")?;
        let hi = self.require_f64("grid.omega_max")?;
        let n = self.usize("grid.n_points")?.ok_or_else(|| self.missing("grid.n_points"))?;
        log_grid(lo, hi, n).map_err(|e| self.error("grid.n_points", e.to_string()))
    }

    /// `grid.formulas`, defaulting to every formula.
    pub fn formulas(&self) -> Result<Vec<Formula>> {
        let Some(e) = self.get("grid.formulas") else {
            return Ok(Formula::ALL.to_vec());
        };
        e.value
            .split(',')
            .map(|s| s.trim().parse::<Formula>().map_err(|err| self.error("grid.formulas", err.to_string())))
            .collect()
    }

    /// `sim.*` keys over [`SimConfig::auto`] defaults. When `sim.duration` is absent
    /// the trajectory holds the minimum 20 segments.
    pub fn sim(&self, op: &OperatingPoint<f64>) -> Result<SimConfig<f64>> {
        let grid = self.omega_grid()?;
        let mut cfg = SimConfig::auto(op, grid)?;
        if let Some(dt) = self.f64("sim.dt")? {
            cfg.dt = dt;
        }
        if !(cfg.dt > 0.0) {
            return Err(self.error("sim.dt", "must be positive"));
        }
        match self.usize("sim.segment_length")? {
            Some(len) => cfg.segment_length = len,
            None if self.contains("sim.dt") => {
                let omega_min = cfg.omega_grid.iter().copied().fold(f64::INFINITY, f64::min);
                let len = (2.0 * std::f64::consts::PI / (omega_min * cfg.dt)).ceil() as usize;
                cfg.segment_length = len.max(4) + len % 2;
            }
            None => {}
        }
        cfg.duration = match self.f64("sim.duration")? {
            Some(d) => d,
            None => (crate::langevin::MIN_SEGMENTS * cfg.segment_length) as f64 * cfg.dt,
        };
        if let Some(n) = self.usize("sim.n_traj")? {
            cfg.n_traj = n;
        }
        if let Some(seed) = self.parsed::<u64>("sim.seed")? {
            cfg.seed = seed;
        }
        cfg.burn_in = self.f64_or("sim.burn_in", DEFAULT_BURN_IN * op.tau_dd)?;
        cfg.validate(op).map_err(|e| match e {
            Error::InvalidSimConfig(msg) if msg.contains("tau''") => self.error(
                "sim.dt",
                format!("{msg} (at most {:e} s)", MAX_DT_FRACTION * op.tau_dd),
            ),
            other => other,
        })?;
        Ok(cfg)
    }

    /// `regime.*`, present only when `regime.cavity_volume` is given.
    pub fn regime(&self) -> Result<Option<RegimeInputs<f64>>> {
        if !self.contains("regime.cavity_volume") {
            return Ok(None);
        }
        let mut inputs = RegimeInputs::new(
            self.require_f64("regime.cavity_volume")?,
            self.require_f64("regime.active_volume")?,
            self.require_f64("regime.r_abs_per_length")?,
            self.require_f64("regime.transit_time")?,
            self.require_f64("regime.q")?,
        );
        inputs.threshold = self.f64_or("regime.threshold", RegimeInputs::<f64>::DEFAULT_THRESHOLD)?;
        Ok(Some(inputs))
    }

    /// `model.radiative = power` (`model.p_r`, `model.tau_r_ref`, `model.n_ref`) or
    /// `model.radiative = qw` (`model.m_eff`, `model.T`, `model.area`, `model.rate_scale`);
    /// optional non-radiative power law `model.p_nr`, `model.tau_nr_ref` (with `model.n_ref`).
    pub fn lifetime_model(&self) -> Result<LifetimeModel<f64>> {
        let kind = self.get("model.radiative").map_or("power", |e| e.value.as_str());
        let radiative = match kind {
            "power" => RadiativeLaw::PowerLaw(PowerLaw::new(
                self.require_f64("model.p_r")?,
                self.require_f64("model.tau_r_ref")?,
                self.require_f64("model.n_ref")?,
            )),
            "qw" => RadiativeLaw::QuantumWell(QwEmitter {
                m_eff: self.require_f64("model.m_eff")?,
                temperature: self.require_f64("model.T")?,
                area: self.require_f64("model.area")?,
                rate_scale: self.require_f64("model.rate_scale")?,
            }),
            other => {
                return Err(self.error(
                    "model.radiative",
                    format!("unknown law `{other}` (expected `power` or `qw`)"),
                ))
            }
        };
        let nonradiative = match self.f64("model.p_nr")? {
            None => NonRadiativeLaw::None,
            Some(p) => NonRadiativeLaw::PowerLaw(PowerLaw::new(
                p,
                self.require_f64("model.tau_nr_ref")?,
                self.require_f64("model.n_ref")?,
            )),
        };
        let model = LifetimeModel {
            radiative,
            nonradiative,
        };
        model.validate()?;
        Ok(model)
    }
}

fn is_known(key: &str) -> bool {
    if KNOWN_KEYS.contains(&key) {
        return true;
    }
    if let Some(rest) = key.strip_prefix("mode.") {
        return rest
            .split_once('.')
            .is_some_and(|(n, f)| !n.is_empty() && MODE_FIELDS.contains(&f));
    }
    if let Some(rest) = key.strip_prefix("case.") {
        return rest
            .split_once('.')
            .is_some_and(|(name, k)| !name.is_empty() && !k.starts_with("case.") && k != "cases" && is_known(k));
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::derive_operating_point;

    const MINIMAL: &str = "\
# one mode
mode.1.kappa0 = 1e12
mode.1.tau_r = 1e-9   # radiative lifetime
P0 = 1e9
";

    #[test]
    fn minimal_single_mode() {
        let cfg = Config::parse(MINIMAL, "min.cfg").unwrap();
        let dev = cfg.device().unwrap();
        assert_eq!(dev.modes.len(), 1);
        assert_eq!(dev.modes[0].xi, 1.0);
        assert!(dev.tau_nr0.is_infinite());
        let pump = cfg.pump().unwrap();
        assert_eq!((pump.p0, pump.w_e), (1e9, 1.0));
        let op = derive_operating_point(&dev, &pump).unwrap();
        assert_eq!(op.eta, op.eta_d);
    }

    #[test]
    fn missing_pump_names_key() {
        let cfg = Config::parse("mode.1.kappa0 = 1e12\nmode.1.tau_r = 1e-9\n", "a.cfg").unwrap();
        let err = cfg.pump().unwrap_err();
        assert_eq!(
            err,
            Error::MissingKey {
                file: "a.cfg".into(),
                key: "P0".into()
            }
        );
    }

    #[test]
    fn errors_carry_file_line_key() {
        let err = Config::parse("P0 = 1e9\nmode.1.kappa = 3\n", "b.cfg").unwrap_err();
        assert_eq!(err.to_string(), "b.cfg:2: key `mode.1.kappa`: unknown key");
        let cfg = Config::parse("P0 = fast\n", "c.cfg").unwrap();
        let msg = cfg.pump().unwrap_err().to_string();
        assert!(msg.starts_with("c.cfg:1: key `P0`"), "{msg}");
        let err = Config::parse("P0 = 1\nP0 = 2\n", "d.cfg").unwrap_err();
        assert!(err.to_string().contains("line 1"));
        assert!(Config::parse("just words\n", "e.cfg").is_err());
    }

    #[test]
    fn mode_numbering_must_be_contiguous() {
        let text = "mode.1.kappa0 = 1e12\nmode.1.tau_r = 1e-9\nmode.3.kappa0 = 1e12\nmode.3.tau_r = 1e-9\nP0 = 1\n";
        let err = Config::parse(text, "m.cfg").unwrap().device().unwrap_err();
        assert!(err.to_string().contains("missing mode.2"), "{err}");
    }

    #[test]
    fn cases_override_base_keys() {
        let text = format!("{MINIMAL}tau_nr0 = 1e-9\nK_nr = -0.5\ncases = solid, dashed\ncase.dashed.tau_nr0 = inf\n");
        let cfg = Config::parse(&text, "f.cfg").unwrap();
        let cases = cfg.cases().unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].0.as_deref(), Some("solid"));
        assert_eq!(cases[0].1.device().unwrap().tau_nr0, 1e-9);
        assert!(cases[1].1.device().unwrap().tau_nr0.is_infinite());
        assert!(!cases[1].1.canonical().contains("case."));
        assert!(cfg.resolve_case("dotted").is_err());
        assert!(Config::parse("case.x.bogus = 1\n", "g.cfg").is_err());
    }

    #[test]
    fn overrides_win() {
        let mut cfg = Config::parse(MINIMAL, "min.cfg").unwrap();
        cfg.set("P0", 2e9);
        assert_eq!(cfg.pump().unwrap().p0, 2e9);
        assert!(cfg.canonical().contains("P0 = 2000000000"));
        assert!(cfg.set_checked("W_e", 0).is_ok());
        assert!(cfg.set_checked("We", 0).is_err());
    }

    #[test]
    fn sim_defaults_and_guards() {
        let text = format!("{MINIMAL}grid.omega_min = 5e7\ngrid.omega_max = 2e10\ngrid.n_points = 12\nsim.seed = 42\n");
        let cfg = Config::parse(&text, "s.cfg").unwrap();
        let op = derive_operating_point(&cfg.device().unwrap(), &cfg.pump().unwrap()).unwrap();
        let sim = cfg.sim(&op).unwrap();
        assert_eq!(sim.seed, 42);
        assert_eq!(sim.omega_grid.len(), 12);
        assert!((sim.dt - op.tau_dd / 50.0).abs() < 1e-24);
        let mut bad = cfg.clone();
        bad.set("sim.dt", op.tau_dd / 10.0);
        let msg = bad.sim(&op).unwrap_err().to_string();
        assert!(msg.contains("sim.dt"), "{msg}");
    }

    #[test]
    fn formulas_list() {
        let mut cfg = Config::parse(MINIMAL, "x.cfg").unwrap();
        assert_eq!(cfg.formulas().unwrap().len(), 5);
        cfg.set("grid.formulas", "master, alternative");
        assert_eq!(cfg.formulas().unwrap(), vec![Formula::Master, Formula::Alternative]);
        cfg.set("grid.formulas", "master,bogus");
        assert!(cfg.formulas().is_err());
    }

    #[test]
    fn lifetime_models() {
        let cfg = Config::parse(
            "model.p_r = 2\nmodel.tau_r_ref = 1e-9\nmodel.n_ref = 1e3\nmodel.p_nr = 1\nmodel.tau_nr_ref = 2e-9\n",
            "l.cfg",
        )
        .unwrap();
        let model = cfg.lifetime_model().unwrap();
        let (k_r, k_nr) = model.extract_k(500.0).unwrap();
        assert!((k_r - 1.0).abs() < 1e-12 && k_nr.abs() < 1e-12);
        let qw = Config::parse(
            "model.radiative = qw\nmodel.m_eff = 0.1\nmodel.T = 3\nmodel.area = 1e-10\nmodel.rate_scale = 1e12\n",
            "q.cfg",
        )
        .unwrap();
        assert!(matches!(qw.lifetime_model().unwrap().radiative, RadiativeLaw::QuantumWell(_)));
        let bad = Config::parse("model.radiative = laser\n", "r.cfg").unwrap();
        assert!(bad.lifetime_model().unwrap_err().to_string().contains("model.radiative"));
    }
}
