//! Exit codes, provenance headers, output files and the run manifest.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use led_fano::config::Config;
use led_fano::Error;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum Failure {
    /// Unreadable or invalid configuration, exit 2.
    Config(String),
    /// A built-in self-test did not hold, exit 3.
    SelfTest(String),
    /// Numerical or I/O failure, exit 4.
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::SelfTest(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::SelfTest(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let msg = e.to_string();
        match e {
            Error::Config { .. }
            | Error::MissingKey { .. }
            | Error::InvalidParameter { .. }
            | Error::UnphysicalSensitivity { .. }
            | Error::UnphysicalDifferentialEfficiency { .. }
            | Error::InvalidModeIndex { .. }
            | Error::InvalidSimConfig(_)
            | Error::TooFewSegments { .. } => Failure::Config(msg),
            Error::ZeroQuantumEfficiency
            | Error::ZeroDenominator { .. }
            | Error::NoSteadyState { .. }
            | Error::NonFiniteDerivative { .. }
            | Error::Instability { .. } => Failure::Numerical(msg),
        }
    }
}

pub fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Numerical(format!("{}: {e}", path.display()))
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `# led-fano <version> config_sha256=<hex> seed=<seed|->[ case=<name>]`
pub fn provenance(config: Option<&Config>, seed: Option<u64>, case: Option<&str>) -> String {
    let hash = config.map_or_else(|| sha256_hex(""), |c| sha256_hex(&c.canonical()));
    let seed = seed.map_or_else(|| "-".to_string(), |s| s.to_string());
    let mut line = format!("# led-fano {VERSION} config_sha256={hash} seed={seed}");
    if let Some(case) = case {
        line.push_str(&format!(" case={case}"));
    }
    line.push('\n');
    line
}

/// `stem.csv` or `stem_case.csv`.
pub fn file_name(stem: &str, case: Option<&str>) -> String {
    match case {
        Some(c) => format!("{stem}_{c}.csv"),
        None => format!("{stem}.csv"),
    }
}

/// Sends each CSV either to a file under `--out` or to stdout.
pub struct Sink {
    dir: Option<PathBuf>,
    quiet_stdout: bool,
    pub written: Vec<PathBuf>,
}

impl Sink {
    /// `quiet_stdout` suppresses CSV on stdout (used with `--json`).
    pub fn new(dir: Option<&Path>, quiet_stdout: bool) -> Result<Self, Failure> {
        if let Some(d) = dir {
            std::fs::create_dir_all(d).map_err(|e| io_failure(d, e))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            quiet_stdout,
            written: Vec::new(),
        })
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }

    pub fn emit(&mut self, name: &str, header: &str, body: &str) -> Result<(), Failure> {
        match &self.dir {
            Some(d) => {
                let path = d.join(name);
                std::fs::write(&path, format!("{header}{body}")).map_err(|e| io_failure(&path, e))?;
                self.written.push(path);
            }
            None if !self.quiet_stdout => {
                let mut out = std::io::stdout().lock();
                write!(out, "{header}{body}").map_err(|e| Failure::Numerical(format!("stdout: {e}")))?;
            }
            None => {}
        }
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf, Failure> {
        let dir = self.dir.as_ref().expect("json files need an output directory");
        let path = dir.join(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
        std::fs::write(&path, text + "\n").map_err(|e| io_failure(&path, e))?;
        Ok(path)
    }
}

pub fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct ManifestRun {
    pub case: Option<String>,
    /// Canonical `key = value` lines after case resolution and flag overrides;
    /// passing a file with these lines as `--config` reproduces the output byte for byte.
    pub config: String,
    pub config_sha256: String,
    pub output: Option<String>,
}

impl ManifestRun {
    pub fn new(case: Option<&str>, config: &Config, output: Option<&Path>) -> Self {
        let canonical = config.canonical();
        Self {
            case: case.map(String::from),
            config_sha256: sha256_hex(&canonical),
            config: canonical,
            output: output.map(|p| p.display().to_string()),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub runs: Vec<ManifestRun>,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, runs: Vec<ManifestRun>, outputs: &[PathBuf], started: Instant) -> Self {
        Self {
            command: command.to_string(),
            version: VERSION.to_string(),
            seed,
            runs,
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        }
    }
}
