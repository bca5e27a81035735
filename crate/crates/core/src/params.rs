//! Device and pump parameters, and the small-signal running point derived from them.
//!
//! All lifetimes are in seconds, rates and fluxes in 1/s, carrier and photon
//! numbers are dimensionless totals. An infinite non-radiative lifetime is a
//! valid input meaning "no non-radiative channel"; every formula then uses a
//! zero non-radiative rate.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{rate_of, Real};

/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Per-photon-mode constants at the running point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams<T> {
    /// Photon escape rate of the mode [1/s].
    pub kappa0: T,
    /// Radiative lifetime of carriers into this mode [s].
    pub tau_r: T,
    /// Lifetime sensitivity `K_{r,l}`.
    pub k_r: T,
    /// Probability that a photon of this mode reaches the detector and is counted.
    pub xi: T,
}

impl<T: Real> ModeParams<T> {
    pub fn new(kappa0: T, tau_r: T, k_r: T, xi: T) -> Self {
        Self {
            kappa0,
            tau_r,
            k_r,
            xi,
        }
    }

    fn validate(&self, index: usize) -> Result<()> {
        let name = |field: &str| format!("mode.{index}.{field}");
        if !(self.kappa0 > T::zero() && self.kappa0.is_finite()) {
            return Err(invalid(name("kappa0"), "must be positive and finite"));
        }
        if !(self.tau_r > T::zero() && self.tau_r.is_finite()) {
            return Err(invalid(name("tau_r"), "must be positive and finite"));
        }
        if !self.k_r.is_finite() {
            return Err(invalid(name("K_r"), "must be finite"));
        }
        if !(self.xi >= T::zero() && self.xi <= T::one()) {
            return Err(invalid(name("xi"), "must lie in [0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams<T> {
    pub modes: Vec<ModeParams<T>>,
    /// Non-radiative lifetime at the running point [s]; `+inf` disables the channel.
    pub tau_nr0: T,
    /// Non-radiative lifetime sensitivity `K_nr`.
    pub k_nr: T,
    /// Thermal photons per mode. Only zero is supported.
    pub nbar_thermal: T,
}

impl<T: Real> DeviceParams<T> {
    pub fn new(modes: Vec<ModeParams<T>>, tau_nr0: T, k_nr: T) -> Self {
        Self {
            modes,
            tau_nr0,
            k_nr,
            nbar_thermal: T::zero(),
        }
    }

    /// One mode with the given radiative lifetime and transmission.
    pub fn single_mode(kappa0: T, tau_r: T, k_r: T, xi: T, tau_nr0: T, k_nr: T) -> Self {
        Self::new(vec![ModeParams::new(kappa0, tau_r, k_r, xi)], tau_nr0, k_nr)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(invalid("modes", "at least one mode is required"));
        }
        for (i, mode) in self.modes.iter().enumerate() {
            mode.validate(i + 1)?;
        }
        if !(self.tau_nr0 > T::zero()) || self.tau_nr0.is_nan() {
            return Err(invalid("tau_nr0", "must be positive (or inf)"));
        }
        if !self.k_nr.is_finite() {
            return Err(invalid("K_nr", "must be finite"));
        }
        if self.nbar_thermal != T::zero() {
            return Err(invalid(
                "nbar_thermal",
                "thermal photon background is not modeled; must be 0",
            ));
        }
        Ok(())
    }

    /// Total radiative lifetime, `1/tau_r0 = sum_l 1/tau_{r,l}`.
    pub fn tau_r0(&self) -> T {
        self.modes
            .iter()
            .fold(T::zero(), |acc, m| acc + m.tau_r.recip())
            .recip()
    }

    /// `eps0 = tau_r0 / tau_nr0`.
    pub fn eps0(&self) -> T {
        self.tau_r0() * rate_of(self.tau_nr0)
    }
}

/// Sinusoidal pump modulation `dP(t) = amplitude * sin(omega t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SineModulation<T> {
    /// [1/s]
    pub amplitude: T,
    /// [rad/s]
    pub omega: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec<T> {
    /// Mean pump rate [1/s].
    pub p0: T,
    /// Pump Fano factor (1 = Poissonian, 0 = noiseless).
    pub w_e: T,
    pub modulation: Option<SineModulation<T>>,
}

impl<T: Real> PumpSpec<T> {
    pub fn new(p0: T, w_e: T) -> Self {
        Self {
            p0,
            w_e,
            modulation: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p0 > T::zero() && self.p0.is_finite()) {
            return Err(invalid("P0", "must be positive and finite"));
        }
        if !(self.w_e >= T::zero() && self.w_e.is_finite()) {
            return Err(invalid("W_e", "must be finite and >= 0"));
        }
        if let Some(m) = self.modulation {
            if !(m.omega >= T::zero() && m.amplitude.is_finite()) {
                return Err(invalid("modulation", "needs finite amplitude and omega >= 0"));
            }
        }
        Ok(())
    }
}

/// Running-point quantities of one cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePoint<T> {
    pub kappa0: T,
    pub xi: T,
    pub k_r: T,
    /// `(tau_{r,l})_0` [s]
    pub tau_r0: T,
    /// `tau'_{r,l} = (tau_{r,l})_0 / (1 + K_{r,l})` [s]; may be negative or infinite.
    pub tau_r_eff: T,
    /// Steady output flux `V_{l0} = n_c0 / (tau_{r,l})_0` [1/s].
    pub flux: T,
    /// Steady photon number `(n_l)_0 = V_{l0} / kappa_l` (low-injection: << 1).
    pub photons: T,
}

impl<T: Real> ModePoint<T> {
    /// `1/tau'_{r,l}`, finite even when `K_{r,l} = -1`.
    pub fn inv_tau_r_eff(&self) -> T {
        (T::one() + self.k_r) / self.tau_r0
    }
}

/// Every small-signal quantity at the running point `P = P0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint<T> {
    pub p0: T,
    /// Mean carrier number `n_c0`.
    pub n_c0: T,
    /// Total radiative lifetime [s].
    pub tau_r0: T,
    /// Non-radiative lifetime [s] (`inf` when absent).
    pub tau_nr0: T,
    pub eps0: T,
    pub k_r: T,
    pub k_nr: T,
    /// `tau'_r = tau_r0 / (1 + K_r)` [s]
    pub tau_r_eff: T,
    /// `tau'_nr = tau_nr0 / (1 - K_nr)` [s]; `inf` when absent or `K_nr = 1`.
    pub tau_nr_eff: T,
    /// `1/tau'' = 1/tau'_r + 1/tau'_nr`; the modulation and noise cutoff [s].
    pub tau_dd: T,
    pub eps_prime: T,
    pub beta0: T,
    pub eta: T,
    pub eta_d: T,
    pub zeta1: T,
    pub zeta2: T,
    /// Total cavity output flux `V0` [1/s].
    pub v0: T,
    /// Detected flux `N0 = beta0 V0` [1/s].
    pub n0: T,
    pub modes: Vec<ModePoint<T>>,
}

/// `eta = beta0/(1+eps0)` and `eta_d = beta0/(1+eps')` with `eps' = eps0 (1-K_nr)/(1+K_r)`.
pub fn efficiencies_from_k<T: Real>(eps0: T, beta0: T, k_r: T, k_nr: T) -> Result<(T, T)> {
    if !(eps0 >= T::zero()) {
        return Err(invalid("eps0", "must be >= 0"));
    }
    if !(beta0 >= T::zero() && beta0 <= T::one()) {
        return Err(invalid("beta0", "must lie in [0, 1]"));
    }
    let eps_prime = eps_prime(eps0, k_r, k_nr)?;
    Ok((beta0 / (T::one() + eps0), beta0 / (T::one() + eps_prime)))
}

fn eps_prime<T: Real>(eps0: T, k_r: T, k_nr: T) -> Result<T> {
    if !(k_r > -T::one()) || !k_r.is_finite() {
        return Err(Error::UnphysicalSensitivity {
            param: "K_r",
            value: k_r.to_f64_lossy(),
            requirement: "K_r > -1",
        });
    }
    if !k_nr.is_finite() {
        return Err(Error::UnphysicalSensitivity {
            param: "K_nr",
            value: k_nr.to_f64_lossy(),
            requirement: "finite K_nr",
        });
    }
    let eps_prime = if eps0 == T::zero() {
        T::zero()
    } else {
        eps0 * (T::one() - k_nr) / (T::one() + k_r)
    };
    if !(eps_prime > -T::one()) {
        return Err(Error::UnphysicalDifferentialEfficiency {
            eps_prime: eps_prime.to_f64_lossy(),
        });
    }
    Ok(eps_prime)
}

/// Derives the full running point from raw device and pump parameters.
pub fn derive_operating_point<T: Real>(
    device: &DeviceParams<T>,
    pump: &PumpSpec<T>,
) -> Result<OperatingPoint<T>> {
    device.validate()?;
    pump.validate()?;

    let inv_tau_r0 = device
        .modes
        .iter()
        .fold(T::zero(), |acc, m| acc + m.tau_r.recip());
    let tau_r0 = inv_tau_r0.recip();
    let inv_tau_nr0 = rate_of(device.tau_nr0);
    let eps0 = tau_r0 * inv_tau_nr0;

    // K_r is the flux-weighted mean of the per-mode sensitivities.
    let k_r = device
        .modes
        .iter()
        .fold(T::zero(), |acc, m| acc + (tau_r0 / m.tau_r) * m.k_r);
    let k_nr = device.k_nr;
    let eps_prime = eps_prime(eps0, k_r, k_nr)?;

    let n_c0 = pump.p0 / (inv_tau_r0 + inv_tau_nr0);
    let v0 = n_c0 * inv_tau_r0;

    let modes: Vec<ModePoint<T>> = device
        .modes
        .iter()
        .map(|m| {
            let flux = n_c0 / m.tau_r;
            ModePoint {
                kappa0: m.kappa0,
                xi: m.xi,
                k_r: m.k_r,
                tau_r0: m.tau_r,
                tau_r_eff: m.tau_r / (T::one() + m.k_r),
                flux,
                photons: flux / m.kappa0,
            }
        })
        .collect();

    let detected = modes.iter().fold(T::zero(), |acc, m| acc + m.xi * m.flux);
    let beta0 = (detected / v0).min(T::one());

    let inv_tau_r_eff = (T::one() + k_r) * inv_tau_r0;
    let inv_tau_nr_eff = (T::one() - k_nr) * inv_tau_nr0;
    let inv_tau_dd = inv_tau_r_eff + inv_tau_nr_eff;

    let (zeta1, zeta2) = if beta0 > T::zero() {
        // emission-weighted and flux-weighted transmission averages
        let emission = modes.iter().fold(T::zero(), |acc, m| {
            acc + (m.inv_tau_r_eff() / inv_tau_r_eff) * (m.xi / beta0)
        });
        let flux = modes
            .iter()
            .fold(T::zero(), |acc, m| acc + (tau_r0 / m.tau_r0) * (m.xi / beta0));
        (emission * flux, emission * emission)
    } else {
        // nothing reaches the detector; the Fano formulas reject eta = 0 anyway
        (T::one(), T::one())
    };

    Ok(OperatingPoint {
        p0: pump.p0,
        n_c0,
        tau_r0,
        tau_nr0: device.tau_nr0,
        eps0,
        k_r,
        k_nr,
        tau_r_eff: inv_tau_r_eff.recip(),
        tau_nr_eff: if inv_tau_nr_eff == T::zero() {
            T::infinity()
        } else {
            inv_tau_nr_eff.recip()
        },
        tau_dd: inv_tau_dd.recip(),
        eps_prime,
        beta0,
        eta: beta0 / (T::one() + eps0),
        eta_d: beta0 / (T::one() + eps_prime),
        zeta1,
        zeta2,
        v0,
        n0: beta0 * v0,
        modes,
    })
}

impl<T: Real> OperatingPoint<T> {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Non-radiative carrier loss rate `n_c0 / tau_nr0` [1/s].
    pub fn nonradiative_flux(&self) -> T {
        self.n_c0 * rate_of(self.tau_nr0)
    }

    /// `quantity,value` rows; per-mode rows are prefixed `mode.<N>.`, numbered from 1 as in the config.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        let mut row = |k: &str, v: T| {
            let _ = writeln!(out, "{k},{}", v.to_f64_lossy());
        };
        row("P0", self.p0);
        row("n_c0", self.n_c0);
        row("tau_r0", self.tau_r0);
        row("tau_nr0", self.tau_nr0);
        row("eps0", self.eps0);
        row("K_r", self.k_r);
        row("K_nr", self.k_nr);
        row("tau_r_eff", self.tau_r_eff);
        row("tau_nr_eff", self.tau_nr_eff);
        row("tau_dd", self.tau_dd);
        row("eps_prime", self.eps_prime);
        row("beta0", self.beta0);
        row("eta", self.eta);
        row("eta_d", self.eta_d);
        row("zeta1", self.zeta1);
        row("zeta2", self.zeta2);
        row("V0", self.v0);
        row("N0", self.n0);
        for (i, m) in self.modes.iter().enumerate() {
            row(&format!("mode.{}.tau_r_eff", i + 1), m.tau_r_eff);
            row(&format!("mode.{}.flux", i + 1), m.flux);
            row(&format!("mode.{}.photons", i + 1), m.photons);
        }
        out
    }
}

/// Geometry and material inputs for the low-injection validity estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeInputs<T> {
    /// Effective "cavity" volume [m^3] (a cube reaching the detector for an LED).
    pub cavity_volume: T,
    /// Active-layer volume [m^3].
    pub active_volume: T,
    /// Absorption rate divided by c when the mode fills the active layer [1/m].
    pub r_abs_per_length: T,
    /// Photon transit time through the device [s].
    pub device_transit_time: T,
    /// Quality factor of the device boundaries.
    pub q: T,
    /// Every ratio must fall below this for a PASS.
    pub threshold: T,
}

impl<T: Real> RegimeInputs<T> {
    pub const DEFAULT_THRESHOLD: f64 = 0.01;

    pub fn new(
        cavity_volume: T,
        active_volume: T,
        r_abs_per_length: T,
        device_transit_time: T,
        q: T,
    ) -> Self {
        Self {
            cavity_volume,
            active_volume,
            r_abs_per_length,
            device_transit_time,
            q,
            threshold: T::lit(Self::DEFAULT_THRESHOLD),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport<T> {
    /// `kappa ~ 1 / (V_cavity^{1/3}/c + Q t_device)` [1/s]
    pub kappa_estimate: T,
    /// `R_abs ~ c * r_abs_per_length * V_active / V_cavity` [1/s]
    pub r_abs_estimate: T,
    pub abs_ratio: T,
    /// `R_sp,l / kappa_l = (n_l)_0` for every mode.
    pub mode_ratios: Vec<T>,
    pub threshold: T,
    pub pass: bool,
}

/// Order-of-magnitude check that every mode is far below one photon and absorption
/// is far below escape.
pub fn check_low_injection<T: Real>(
    op: &OperatingPoint<T>,
    inputs: &RegimeInputs<T>,
) -> RegimeReport<T> {
    let c = T::lit(SPEED_OF_LIGHT);
    let kappa_estimate =
        (inputs.cavity_volume.cbrt() / c + inputs.q * inputs.device_transit_time).recip();
    let r_abs_estimate =
        c * inputs.r_abs_per_length * (inputs.active_volume / inputs.cavity_volume);
    let abs_ratio = r_abs_estimate / kappa_estimate;
    let mode_ratios: Vec<T> = op.modes.iter().map(|m| m.photons).collect();
    let pass = abs_ratio < inputs.threshold && mode_ratios.iter().all(|&r| r < inputs.threshold);
    RegimeReport {
        kappa_estimate,
        r_abs_estimate,
        abs_ratio,
        mode_ratios,
        threshold: inputs.threshold,
        pass,
    }
}

impl<T: Real> RegimeReport<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("quantity,value\n");
        let _ = writeln!(out, "kappa_estimate,{}", self.kappa_estimate.to_f64_lossy());
        let _ = writeln!(out, "r_abs_estimate,{}", self.r_abs_estimate.to_f64_lossy());
        let _ = writeln!(out, "abs_ratio,{}", self.abs_ratio.to_f64_lossy());
        for (i, r) in self.mode_ratios.iter().enumerate() {
            let _ = writeln!(out, "mode.{}.photons,{}", i + 1, r.to_f64_lossy());
        }
        let _ = writeln!(out, "threshold,{}", self.threshold.to_f64_lossy());
        let _ = writeln!(out, "pass,{}", u8::from(self.pass));
        out
    }
}
