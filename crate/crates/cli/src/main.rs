//! `led-fano`: operating points, Fano-factor sweeps and Monte Carlo checks for
//! multimode LEDs.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::output::Failure;

#[derive(Parser)]
#[command(name = "led-fano", version, about, long_about = None)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
pub struct Common {
    /// Configuration file (`key = value` lines)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write CSV files (and the run manifest) into this directory instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed for Monte Carlo runs; overrides `sim.seed`
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Machine-readable JSON on stdout
    #[arg(long, global = true)]
    json: bool,
    /// Run only this case from the `cases` list
    #[arg(long, global = true)]
    case: Option<String>,
    /// Override any configuration key, e.g. `--set W_e=0`; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct GridArgs {
    /// Lowest angular frequency [rad/s]
    #[arg(long)]
    omega_min: Option<f64>,
    /// Highest angular frequency [rad/s]
    #[arg(long)]
    omega_max: Option<f64>,
    /// Number of log-spaced frequencies
    #[arg(long)]
    n_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Steady state, efficiencies, cutoff and low-injection check
    OperatingPoint,
    /// Closed-form W_ph on a log frequency grid
    FanoSweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Comma-separated formulas: master, homogeneous, classic, inhomogeneous, alternative
        #[arg(long)]
        formulas: Option<String>,
    },
    /// Monte Carlo spectrum against the closed form; exits 3 if they disagree
    Simulate {
        #[command(flatten)]
        grid: GridArgs,
        /// Number of independent trajectories
        #[arg(long)]
        n_traj: Option<usize>,
    },
    /// Ratio r for the three built-in efficiency pairs
    Table1,
    /// Steady-state injection-light curve for a lifetime model
    IlCurve {
        /// Lowest pump rate [1/s]; overrides `il.p_min`
        #[arg(long)]
        p_min: Option<f64>,
        /// Highest pump rate [1/s]; overrides `il.p_max`
        #[arg(long)]
        p_max: Option<f64>,
        /// Number of evenly spaced pump rates
        #[arg(long)]
        n_points: Option<usize>,
    },
    /// Quantum-well spontaneous-emission rate and K_r versus sheet density
    QwSerate {
        /// Comma-separated temperatures [K]
        #[arg(long = "T", value_delimiter = ',')]
        temperatures: Vec<f64>,
        /// Effective mass in units of the free electron mass
        #[arg(long)]
        m_eff: Option<f64>,
        /// Lowest sheet density [m^-2]
        #[arg(long)]
        n_s_min: Option<f64>,
        /// Highest sheet density [m^-2]
        #[arg(long)]
        n_s_max: Option<f64>,
        /// Number of log-spaced densities
        #[arg(long)]
        n_points: Option<usize>,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("LED_FANO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Config(format!("LED_FANO_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Numerical(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    let c = &cli.common;
    match cli.command {
        Command::OperatingPoint => commands::operating_point(c),
        Command::FanoSweep { grid, formulas } => commands::fano_sweep(c, &grid, formulas.as_deref()),
        Command::Simulate { grid, n_traj } => commands::simulate(c, &grid, n_traj),
        Command::Table1 => commands::table1(c),
        Command::IlCurve {
            p_min,
            p_max,
            n_points,
        } => commands::il_curve(c, p_min, p_max, n_points),
        Command::QwSerate {
            temperatures,
            m_eff,
            n_s_min,
            n_s_max,
            n_points,
        } => commands::qw_serate(c, &temperatures, m_eff, n_s_min, n_s_max, n_points),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
