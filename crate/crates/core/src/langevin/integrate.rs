//! Stochastic trapezoidal (θ = 1/2) stepping of the linearized carrier/photon equations
//!
//! ```text
//! dΔn_c/dt = ΔP - Δn_c/τ'' + Γ_P + Γ_r + Γ_nr
//! dΔn_l/dt = -κ_l Δn_l + Δn_c/τ'_{r,l} + F_{κ,l} + F_{r,l}
//! ΔV_l     = κ_l Δn_l - F_{κ,l}
//! ```
//!
//! Noise and drive are held constant over a step. Decay terms are averaged between
//! the start and end of the step, which keeps the scheme stable for `κ_l dt ≫ 1`
//! and makes every transfer function an exact Lorentzian at the warped frequency
//! `(2/dt) tan(Ω dt/2)`. Each mode is driven by the step-averaged carrier number.
//! Photon number and flux are reported as step averages, and the flux subtracts the
//! same `F_{κ,l}` draw that fed the photon number, so escape noise cancels at low
//! frequency exactly as in the continuous system.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::noise::{NoiseState, NoiseSynth};
use super::SimConfig;
use crate::error::{Error, Result};
use crate::params::OperatingPoint;
use crate::scalar::{rate_of, Real};

/// Deterministic pump perturbation `ΔP(t)` [1/s].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Drive<T> {
    None,
    /// `ΔP = amplitude` for `t >= start`.
    Step { amplitude: T, start: T },
    /// `ΔP = amplitude * sin(omega t)`.
    Sine { amplitude: T, omega: T },
}

impl<T: Real> Drive<T> {
    pub fn at(&self, t: T) -> T {
        match *self {
            Drive::None => T::zero(),
            Drive::Step { amplitude, start } => {
                if t >= start {
                    amplitude
                } else {
                    T::zero()
                }
            }
            Drive::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
        }
    }

    fn scale(&self) -> T {
        match *self {
            Drive::None => T::zero(),
            Drive::Step { amplitude, .. } | Drive::Sine { amplitude, .. } => amplitude.abs(),
        }
    }
}

#[derive(Debug, Clone)]
struct ModeStep<T> {
    kappa: T,
    inv_tau_r_eff: T,
    xi: T,
    /// `(1 - κ dt/2) / (1 + κ dt/2)`
    decay: T,
    /// `dt / (1 + κ dt/2)`
    gain: T,
}

/// State and coefficients of one realization.
#[derive(Debug, Clone)]
pub struct Simulator<T> {
    dt: T,
    carrier_decay: T,
    carrier_gain: T,
    modes: Vec<ModeStep<T>>,
    drive: Drive<T>,
    synth: NoiseSynth<T>,
    noise: NoiseState<T>,
    limit: T,
    stationary_std: T,
    tau_dd: T,
    step: usize,
    n_c: T,
    /// End-of-step photon numbers.
    n_l: Vec<T>,
    photons: Vec<T>,
    flux: Vec<T>,
}

impl<T: Real> Simulator<T> {
    pub fn new(op: &OperatingPoint<T>, w_e: T, dt: T, drive: Drive<T>) -> Self {
        let half = T::lit(0.5) * dt;
        let modes = op
            .modes
            .iter()
            .map(|m| {
                let den = T::one() + m.kappa0 * half;
                ModeStep {
                    kappa: m.kappa0,
                    inv_tau_r_eff: m.inv_tau_r_eff(),
                    xi: m.xi,
                    decay: (T::one() - m.kappa0 * half) / den,
                    gain: dt / den,
                }
            })
            .collect::<Vec<_>>();
        let den = T::one() + half / op.tau_dd;
        let n = modes.len();
        let diffusion = w_e * op.p0 + op.v0 + op.n_c0 * rate_of(op.tau_nr0);
        let stationary_std = (diffusion * op.tau_dd / T::lit(2.0)).sqrt();
        let scale = stationary_std.max(drive.scale() * op.tau_dd);
        Self {
            dt,
            carrier_decay: (T::one() - half / op.tau_dd) / den,
            carrier_gain: dt / den,
            modes,
            drive,
            synth: NoiseSynth::new(op, w_e, dt),
            noise: NoiseState::zeros(n),
            limit: T::lit(1e6) * scale,
            stationary_std,
            tau_dd: op.tau_dd,
            step: 0,
            n_c: T::zero(),
            n_l: vec![T::zero(); n],
            photons: vec![T::zero(); n],
            flux: vec![T::zero(); n],
        }
    }

    /// Advances one step; `rng = None` switches every noise source off.
    pub fn advance<R: Rng + ?Sized>(&mut self, rng: Option<&mut R>) -> Result<()>
    where
        StandardNormal: Distribution<T>,
    {
        match rng {
            Some(rng) => self.synth.fill(&mut self.noise, rng),
            None => self.noise.clear(),
        }
        self.step_with_current_noise()
    }

    /// Advances one step with externally supplied noise rates.
    pub fn advance_with(&mut self, noise: &NoiseState<T>) -> Result<()> {
        self.noise.clone_from(noise);
        self.step_with_current_noise()
    }

    /// The per-step noise standard deviations this simulator draws with.
    pub fn noise_synth(&self) -> &NoiseSynth<T> {
        &self.synth
    }

    fn step_with_current_noise(&mut self) -> Result<()> {
        let h = self.dt;
        let t_mid = (T::from_usize_lossy(self.step) + T::lit(0.5)) * h;
        let dp = self.drive.at(t_mid);
        let x0 = self.n_c;
        let x1 = x0 * self.carrier_decay + self.carrier_gain * (dp + self.noise.carrier_drive());
        let x_mid = (x0 + x1) * T::lit(0.5);
        for (l, m) in self.modes.iter().enumerate() {
            let escape = self.noise.escape[l];
            let n0 = self.n_l[l];
            let n1 = n0 * m.decay
                + m.gain * (x_mid * m.inv_tau_r_eff + escape + self.noise.radiative[l]);
            let n_mid = (n0 + n1) * T::lit(0.5);
            self.n_l[l] = n1;
            self.photons[l] = n_mid;
            self.flux[l] = m.kappa * n_mid - escape;
        }
        self.n_c = x1;
        self.step += 1;
        if !(x1.abs() <= self.limit) {
            return Err(Error::Instability {
                step: self.step,
                value: x1.abs().to_f64_lossy(),
                limit: self.limit.to_f64_lossy(),
                stationary_std: self.stationary_std.to_f64_lossy(),
                dt: h.to_f64_lossy(),
                tau_dd: self.tau_dd.to_f64_lossy(),
            });
        }
        Ok(())
    }

    pub fn carrier(&self) -> T {
        self.n_c
    }

    /// `Δn_l` averaged over the last step.
    pub fn photons(&self) -> &[T] {
        &self.photons
    }

    /// `ΔV_l` averaged over the last step.
    pub fn flux(&self) -> &[T] {
        &self.flux
    }

    /// `Σ ξ_l ΔV_l` plus the partition draws of the last step.
    pub fn detected(&self) -> T {
        self.modes
            .iter()
            .zip(&self.flux)
            .zip(&self.noise.partition)
            .fold(T::zero(), |acc, ((m, &v), &p)| acc + m.xi * v + p)
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }
}

/// Recorded time series. Carrier sample `k` is the state after step `k + 1`;
/// photon and flux samples are averages over step `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub dt: T,
    pub carrier: Vec<T>,
    /// `Δn_l`, one series per mode.
    pub photons: Vec<Vec<T>>,
    /// `ΔV_l`, one series per mode.
    pub flux: Vec<Vec<T>>,
}

/// Integrates `round(duration/dt)` steps from rest (all deviations zero).
pub fn integrate<T: Real, R: Rng + ?Sized>(
    op: &OperatingPoint<T>,
    w_e: T,
    cfg: &SimConfig<T>,
    drive: Drive<T>,
    mut rng: Option<&mut R>,
) -> Result<Trajectory<T>>
where
    StandardNormal: Distribution<T>,
{
    cfg.validate_step(op)?;
    let n_steps = cfg.n_steps();
    let n_modes = op.n_modes();
    let mut sim = Simulator::new(op, w_e, cfg.dt, drive);
    let mut traj = Trajectory {
        dt: cfg.dt,
        carrier: Vec::with_capacity(n_steps),
        photons: vec![Vec::with_capacity(n_steps); n_modes],
        flux: vec![Vec::with_capacity(n_steps); n_modes],
    };
    for _ in 0..n_steps {
        sim.advance(rng.as_deref_mut())?;
        traj.carrier.push(sim.carrier());
        for l in 0..n_modes {
            traj.photons[l].push(sim.photons()[l]);
            traj.flux[l].push(sim.flux()[l]);
        }
    }
    Ok(traj)
}

/// Beam-splitter detection: `ΔN = Σ ξ_l ΔV_l + Σ partition_l`, with independent
/// partition noise of diffusion `ξ_l (1-ξ_l) V_{l0}`; `rng = None` omits it.
pub fn detect<T: Real, R: Rng + ?Sized>(
    flux: &[Vec<T>],
    op: &OperatingPoint<T>,
    dt: T,
    rng: Option<&mut R>,
) -> Vec<T>
where
    StandardNormal: Distribution<T>,
{
    let len = flux.first().map_or(0, Vec::len);
    let mut out = vec![T::zero(); len];
    for (series, m) in flux.iter().zip(&op.modes) {
        for (o, &v) in out.iter_mut().zip(series) {
            *o += m.xi * v;
        }
    }
    if let Some(rng) = rng {
        for m in &op.modes {
            let sd = (m.xi * (T::one() - m.xi) * m.flux / dt).sqrt();
            if sd == T::zero() {
                continue;
            }
            for o in out.iter_mut() {
                let z: T = StandardNormal.sample(rng);
                *o += sd * z;
            }
        }
    }
    out
}
