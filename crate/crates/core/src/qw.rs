//! Band-edge spontaneous emission of a heavily p-doped parabolic quantum well
//! whose cavity only allows emission at the band edge.
//!
//! The hole occupation at the band edge is taken as one, so the emission rate
//! follows the electron occupation there, `f_e = 1 - exp(-n_s/n0)` for a 2D
//! parabolic band with density-of-states scale `n0 = m k_B T / (π ħ²)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::scalar::Real;

/// Physical constants (CODATA 2018).
pub mod constants {
    /// Electron rest mass [kg].
    pub const ELECTRON_MASS: f64 = 9.109_383_701_5e-31;
    /// Boltzmann constant [J/K] (exact).
    pub const BOLTZMANN: f64 = 1.380_649e-23;
    /// Reduced Planck constant [J s].
    pub const HBAR: f64 = 1.054_571_817e-34;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QwParams<T> {
    /// Electron effective mass in units of the free-electron mass.
    pub m_eff: T,
    /// Lattice temperature [K].
    pub temperature: T,
    /// Sheet carrier density [1/m^2].
    pub n_s: T,
}

impl<T: Real> QwParams<T> {
    pub fn new(m_eff: T, temperature: T, n_s: T) -> Self {
        Self {
            m_eff,
            temperature,
            n_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m_eff > T::zero() && self.m_eff.is_finite()) {
            return Err(invalid("m_eff", "must be positive"));
        }
        if !(self.temperature > T::zero() && self.temperature.is_finite()) {
            return Err(invalid("T", "must be positive"));
        }
        if !(self.n_s >= T::zero()) {
            return Err(invalid("n_s", "must be >= 0"));
        }
        Ok(())
    }

    /// Reduced density `x = n_s / n0`.
    pub fn reduced_density(&self) -> T {
        self.n_s / degenerate_density_scale(self.m_eff, self.temperature)
    }
}

/// 2D effective density of states times `k_B T`: `n0 = m_eff m_e k_B T / (π ħ²)` [1/m^2].
pub fn degenerate_density_scale<T: Real>(m_eff: T, temperature: T) -> T {
    use constants::*;
    let per_kelvin = ELECTRON_MASS * BOLTZMANN / (std::f64::consts::PI * HBAR * HBAR);
    m_eff * temperature * T::lit(per_kelvin)
}

/// Electron occupation of the band edge, `1 - exp(-n_s/n0)`.
pub fn band_edge_occupation<T: Real>(qw: &QwParams<T>) -> T {
    -(-qw.reduced_density()).exp_m1()
}

/// Relative spontaneous-emission rate, normalized so that `R(n0) = 1 - 1/e`.
pub fn se_rate<T: Real>(qw: &QwParams<T>) -> T {
    band_edge_occupation(qw)
}

/// `K_r = d ln R / d ln n_s - 1 = x/(e^x - 1) - 1`, with the limit `0` at `n_s = 0`.
pub fn k_r_of_density<T: Real>(qw: &QwParams<T>) -> T {
    let x = qw.reduced_density();
    if x == T::zero() {
        return T::zero();
    }
    x / x.exp_m1() - T::one()
}

/// Central difference of `ln R` in `ln n_s`, relative step `h`.
pub fn k_r_numeric<T: Real>(qw: &QwParams<T>, h: T) -> T {
    let at = |scale: T| se_rate(&QwParams::new(qw.m_eff, qw.temperature, qw.n_s * scale)).ln();
    let (up, down) = (h.exp(), (-h).exp());
    (at(up) - at(down)) / (T::lit(2.0) * h) - T::one()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QwSample<T> {
    pub n_s: T,
    pub temperature: T,
    pub f_e: T,
    pub r_rel: T,
    pub k_r: T,
}

/// One row per `(n_s, T)`, grouped by density in the order the temperatures were given.
pub fn qw_sweep<T: Real>(m_eff: T, temperatures: &[T], densities: &[T]) -> Result<Vec<QwSample<T>>> {
    let mut rows = Vec::with_capacity(temperatures.len() * densities.len());
    for &n_s in densities {
        for &temperature in temperatures {
            let qw = QwParams::new(m_eff, temperature, n_s);
            qw.validate()?;
            rows.push(QwSample {
                n_s,
                temperature,
                f_e: band_edge_occupation(&qw),
                r_rel: se_rate(&qw),
                k_r: k_r_of_density(&qw),
            });
        }
    }
    Ok(rows)
}
