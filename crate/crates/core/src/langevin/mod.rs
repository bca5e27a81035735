//! Monte Carlo integration of the linearized Langevin equations and spectral
//! estimation of the detected photon-flux Fano factor.
//!
//! Trajectories are independent. Trajectory `i` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `i`, and results are combined in
//! index order, so an estimate depends only on the configuration and not on the
//! number of worker threads.

pub mod integrate;
pub mod noise;
pub mod spectrum;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use integrate::{detect, integrate, Drive, Simulator, Trajectory};
pub use noise::{synthesize_noise, NoiseState, NoiseSynth};
pub use spectrum::{
    estimate_fano, estimate_spectrum, fit_lorentzian, usable_frequencies, SpectrumEstimate, Welch,
    MIN_SEGMENTS,
};

use crate::analytic::{fano_master, FanoQuery};
use crate::error::{Error, Result};
use crate::params::{derive_operating_point, DeviceParams, OperatingPoint, PumpSpec};
use crate::scalar::Real;

/// Largest allowed `dt` in units of `τ''`.
pub const MAX_DT_FRACTION: f64 = 1.0 / 50.0;

/// Default burn-in, in units of `τ''`, discarded before spectral accumulation.
pub const DEFAULT_BURN_IN: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    /// Time step [s].
    pub dt: T,
    /// Recorded length of each trajectory [s].
    pub duration: T,
    pub n_traj: usize,
    pub seed: u64,
    /// Samples per spectral segment (even).
    pub segment_length: usize,
    /// Evaluation frequencies [rad/s].
    pub omega_grid: Vec<T>,
    /// Discarded lead-in before recording [s].
    pub burn_in: T,
}

impl<T: Real> SimConfig<T> {
    /// Defaults sized for `omega_grid`: `dt = τ''/50`, one bin at the lowest
    /// frequency, the minimum 20 segments per trajectory, 8 trajectories.
    pub fn auto(op: &OperatingPoint<T>, omega_grid: Vec<T>) -> Result<Self> {
        let omega_min = omega_grid
            .iter()
            .copied()
            .fold(T::infinity(), T::min);
        if !(omega_min > T::zero() && omega_min.is_finite()) {
            return Err(Error::InvalidSimConfig(
                "omega grid must be non-empty and positive".into(),
            ));
        }
        let dt = op.tau_dd * T::lit(MAX_DT_FRACTION);
        let segment_length = even_ceil((T::lit(2.0) * T::PI() / (omega_min * dt)).to_f64_lossy());
        Ok(Self {
            dt,
            duration: T::from_usize_lossy(MIN_SEGMENTS * segment_length) * dt,
            n_traj: 8,
            seed: 0,
            segment_length,
            omega_grid,
            burn_in: op.tau_dd * T::lit(DEFAULT_BURN_IN),
        })
    }

    /// Recorded steps per trajectory.
    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round().to_f64_lossy() as usize
    }

    pub fn burn_in_steps(&self) -> usize {
        (self.burn_in / self.dt).ceil().to_f64_lossy() as usize
    }

    /// Checks that only concern stepping: `0 < dt <= τ''/50`, `duration > 0`.
    pub fn validate_step(&self, op: &OperatingPoint<T>) -> Result<()> {
        if !(self.dt > T::zero() && self.dt.is_finite()) {
            return Err(Error::InvalidSimConfig(format!("dt must be positive, got {}", self.dt)));
        }
        let max_dt = op.tau_dd * T::lit(MAX_DT_FRACTION);
        if self.dt > max_dt * T::lit(1.0 + 1e-9) {
            return Err(Error::InvalidSimConfig(format!(
                "dt = {:e} s exceeds tau''/50 = {:e} s",
                self.dt, max_dt
            )));
        }
        if !(self.duration > T::zero() && self.duration.is_finite()) {
            return Err(Error::InvalidSimConfig("duration must be positive".into()));
        }
        if !(self.burn_in >= T::zero() && self.burn_in.is_finite()) {
            return Err(Error::InvalidSimConfig("burn_in must be >= 0".into()));
        }
        Ok(())
    }

    pub fn validate(&self, op: &OperatingPoint<T>) -> Result<()> {
        self.validate_step(op)?;
        if self.n_traj < 1 {
            return Err(Error::InvalidSimConfig("n_traj must be >= 1".into()));
        }
        if self.segment_length < 4 || self.segment_length % 2 != 0 {
            return Err(Error::InvalidSimConfig(format!(
                "segment_length must be even and >= 4, got {}",
                self.segment_length
            )));
        }
        let need = MIN_SEGMENTS * self.segment_length;
        if self.n_steps() < need {
            return Err(Error::TooFewSegments {
                have: self.n_steps() / self.segment_length,
                need: MIN_SEGMENTS,
                required_duration: need as f64 * self.dt.to_f64_lossy(),
            });
        }
        if self.omega_grid.iter().any(|w| !(*w > T::zero() && w.is_finite())) {
            return Err(Error::InvalidSimConfig("omega grid entries must be positive".into()));
        }
        if usable_frequencies(&self.omega_grid, self.segment_length, self.dt).is_empty() {
            return Err(Error::InvalidSimConfig(
                "no grid frequency lies between the lowest resolvable bin and Nyquist".into(),
            ));
        }
        Ok(())
    }
}

fn even_ceil(x: f64) -> usize {
    let n = x.ceil().max(4.0) as usize;
    n + n % 2
}

/// Monte Carlo estimate alongside the closed-form master curve on the same grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment<T> {
    pub op: OperatingPoint<T>,
    pub w_e: T,
    pub estimate: SpectrumEstimate<T>,
    pub analytic: Vec<T>,
}

impl<T: Real> Experiment<T> {
    /// Per-point agreement `|mc - analytic| < max(3 SE, allowance(analytic))`.
    pub fn agreement(&self, allowance: impl Fn(T) -> T) -> Vec<bool> {
        let three = T::lit(3.0);
        self.estimate
            .w_ph
            .iter()
            .zip(&self.analytic)
            .enumerate()
            .map(|(i, (&mc, &an))| {
                let se = self
                    .estimate
                    .stderr
                    .as_ref()
                    .map_or(T::zero(), |s| s[i]);
                (mc - an).abs() < (three * se).max(allowance(an))
            })
            .collect()
    }

    /// The default self-test allowance `0.05 |W - 1| + 0.01`.
    pub fn agrees(&self) -> bool {
        self.agreement(default_allowance).into_iter().all(|ok| ok)
    }

    /// Header `omega,W_ph_mc,stderr,W_ph_analytic`; `stderr` is empty when absent.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,W_ph_mc,stderr,W_ph_analytic\n");
        for (i, (&w, &mc)) in self
            .estimate
            .omega_grid
            .iter()
            .zip(&self.estimate.w_ph)
            .enumerate()
        {
            let se = self
                .estimate
                .stderr
                .as_ref()
                .map_or(String::new(), |s| format!("{:.10e}", s[i]));
            out.push_str(&format!(
                "{:.10e},{:.10e},{},{:.10e}\n",
                w, mc, se, self.analytic[i]
            ));
        }
        out
    }
}

pub fn default_allowance<T: Real>(analytic: T) -> T {
    T::lit(0.05) * (analytic - T::one()).abs() + T::lit(0.01)
}

struct TrajectoryStats<T> {
    sum: Vec<T>,
    n_segments: usize,
}

fn run_trajectory<T: Real>(
    op: &OperatingPoint<T>,
    w_e: T,
    cfg: &SimConfig<T>,
    grid: &[T],
    drive: Drive<T>,
    index: usize,
) -> Result<TrajectoryStats<T>>
where
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let mut sim = Simulator::new(op, w_e, cfg.dt, drive);
    for _ in 0..cfg.burn_in_steps() {
        sim.advance(Some(&mut rng))?;
    }
    let mut welch = Welch::new(grid, cfg.segment_length, cfg.dt)?;
    for _ in 0..cfg.n_steps() {
        sim.advance(Some(&mut rng))?;
        welch.push(sim.detected());
    }
    Ok(TrajectoryStats {
        sum: welch.periodogram_sum().to_vec(),
        n_segments: welch.n_segments(),
    })
}

/// Derive, simulate `n_traj` trajectories, detect, estimate, and overlay the
/// closed form. Standard errors come from the scatter between trajectories and
/// are absent for a single trajectory.
pub fn run_experiment<T: Real>(
    device: &DeviceParams<T>,
    pump: &PumpSpec<T>,
    cfg: &SimConfig<T>,
) -> Result<Experiment<T>>
where
    StandardNormal: Distribution<T>,
{
    let op = derive_operating_point(device, pump)?;
    cfg.validate(&op)?;
    let grid = usable_frequencies(&cfg.omega_grid, cfg.segment_length, cfg.dt);
    let drive = match pump.modulation {
        Some(m) => Drive::Sine {
            amplitude: m.amplitude,
            omega: m.omega,
        },
        None => Drive::None,
    };
    let stats = (0..cfg.n_traj)
        .into_par_iter()
        .map(|i| run_trajectory(&op, pump.w_e, cfg, &grid, drive, i))
        .collect::<Result<Vec<_>>>()?;

    let k = grid.len();
    let means: Vec<Vec<T>> = stats
        .iter()
        .map(|s| {
            let n = T::from_usize_lossy(s.n_segments) * op.n0;
            s.sum.iter().map(|&x| x / n).collect()
        })
        .collect();
    let n_traj = T::from_usize_lossy(cfg.n_traj);
    let w_ph: Vec<T> = (0..k)
        .map(|i| means.iter().fold(T::zero(), |a, m| a + m[i]) / n_traj)
        .collect();
    let stderr = (cfg.n_traj > 1).then(|| {
        (0..k)
            .map(|i| {
                let ss = means
                    .iter()
                    .fold(T::zero(), |a, m| a + (m[i] - w_ph[i]).powi(2));
                (ss / (n_traj - T::one()) / n_traj).sqrt()
            })
            .collect()
    });
    let analytic = grid
        .iter()
        .map(|&w| fano_master(&FanoQuery::new(&op, pump.w_e, w)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Experiment {
        w_e: pump.w_e,
        estimate: SpectrumEstimate {
            omega_grid: grid,
            w_ph,
            stderr,
            n_segments: stats.iter().map(|s| s.n_segments).sum(),
            n_traj: cfg.n_traj,
        },
        analytic,
        op,
    })
}
