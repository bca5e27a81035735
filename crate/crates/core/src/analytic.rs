//! Closed-form photon Fano factor, its limits, the modulation response and the
//! mode-resolved output spectra of the linearized LED.
//!
//! Spectral densities follow the Fourier-integral convention
//! `S(Ω) = <|X̃(Ω)|²>/T`, so shot noise of mean flux `F` has density `F` and
//! Fano factors are densities divided by the mean flux.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::OperatingPoint;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct FanoQuery<'a, T> {
    pub op: &'a OperatingPoint<T>,
    /// Pump Fano factor at `omega`.
    pub w_e: T,
    /// Angular frequency [rad/s].
    pub omega: T,
}

impl<'a, T: Real> FanoQuery<'a, T> {
    pub fn new(op: &'a OperatingPoint<T>, w_e: T, omega: T) -> Self {
        Self { op, w_e, omega }
    }
}

/// `1 / (1 + (Ω τ'')²)`.
pub fn lorentzian<T: Real>(op: &OperatingPoint<T>, omega: T) -> T {
    let x = omega * op.tau_dd;
    (T::one() + x * x).recip()
}

fn check_eta<T: Real>(eta: T) -> Result<()> {
    if eta == T::zero() || !eta.is_finite() {
        Err(Error::ZeroQuantumEfficiency)
    } else {
        Ok(())
    }
}

fn check_query<T: Real>(w_e: T, omega: T) -> Result<()> {
    if !(w_e >= T::zero()) {
        return Err(invalid("W_e", "must be >= 0"));
    }
    if !(omega >= T::zero()) {
        return Err(invalid("omega", "must be >= 0"));
    }
    Ok(())
}

/// Photon Fano factor of the detected flux at frequency Ω.
pub fn fano_master<T: Real>(q: &FanoQuery<'_, T>) -> Result<T> {
    check_query(q.w_e, q.omega)?;
    let op = q.op;
    check_eta(op.eta)?;
    let l = lorentzian(op, q.omega);
    let two = T::lit(2.0);
    Ok(T::one() - two * op.eta_d * op.zeta1 * l
        + (op.eta_d * op.eta_d / op.eta) * (T::one() + q.w_e) * op.zeta2 * l)
}

pub fn fano_zero_freq<T: Real>(op: &OperatingPoint<T>, w_e: T) -> Result<T> {
    fano_master(&FanoQuery::new(op, w_e, T::zero()))
}

/// Low-frequency Fano factor when every mode is emitted and detected alike.
pub fn fano_homogeneous<T: Real>(eta: T, eta_d: T, w_e: T) -> Result<T> {
    check_eta(eta)?;
    Ok(T::one() - T::lit(2.0) * eta_d + (eta_d * eta_d / eta) * (T::one() + w_e))
}

/// The textbook `1 - η + η W_e`, valid for a straight I-L curve.
pub fn fano_classic<T: Real>(eta: T, w_e: T) -> T {
    T::one() - eta + eta * w_e
}

/// Low-frequency Fano factor with a single multimode factor `zeta`.
pub fn fano_inhomogeneous<T: Real>(eta: T, eta_d: T, zeta: T, w_e: T) -> Result<T> {
    check_eta(eta)?;
    if !(zeta > T::zero() && zeta <= T::one()) {
        return Err(invalid("zeta", "must lie in (0, 1]"));
    }
    Ok(T::one() - T::lit(2.0) * eta_d * zeta
        + (eta_d * eta_d * zeta / eta) * (T::one() + w_e))
}

/// `[Σ_l (τ_r0/(τ_{r,l})_0)(ξ_l/β_0)]²`, the multimode factor when all `K_{r,l}` vanish.
pub fn inhomogeneous_zeta<T: Real>(op: &OperatingPoint<T>) -> Result<T> {
    if op.beta0 == T::zero() {
        return Err(Error::ZeroQuantumEfficiency);
    }
    let s = op
        .modes
        .iter()
        .fold(T::zero(), |acc, m| acc + (op.tau_r0 / m.tau_r0) * (m.xi / op.beta0));
    Ok(s * s)
}

/// Competing low-frequency estimate `1 - η + (η_d²/η) W_e`.
pub fn fano_alternative<T: Real>(eta: T, eta_d: T, w_e: T) -> Result<T> {
    check_eta(eta)?;
    Ok(T::one() - eta + (eta_d * eta_d / eta) * w_e)
}

/// `|ΔÑ/ΔP̃| = η_d / sqrt(1 + Ω²τ''²)`.
pub fn modulation_response<T: Real>(op: &OperatingPoint<T>, omega: T) -> T {
    op.eta_d * lorentzian(op, omega).sqrt()
}

/// Spectral density of the carrier-number fluctuation, `(1+W_e) P0 τ''² / (1+(Ωτ'')²)`.
pub fn carrier_spectrum<T: Real>(op: &OperatingPoint<T>, w_e: T, omega: T) -> T {
    (T::one() + w_e) * op.p0 * op.tau_dd * op.tau_dd * lorentzian(op, omega)
}

/// Output-flux cross-spectral density `<ΔṼ_l* ΔṼ_m>/T` between cavity modes `l` and `m`.
///
/// Valid for Ω much below every escape rate. The noise strengths are
/// `<|ΔP̃_tot|²>/T = W_e P0`, `<|Γ̃_r|²>/T = V0`, `<|Γ̃_nr|²>/T = ε0 V0`,
/// `<Γ̃_r* F̃_{r,m}>/T = -V_{m0}` and `<F̃_{r,l}* F̃_{r,m}>/T = δ_lm V_{l0}`.
pub fn mode_cross_spectrum<T: Real>(
    op: &OperatingPoint<T>,
    l: usize,
    m: usize,
    omega: T,
    w_e: T,
) -> Result<Complex<T>> {
    check_query(w_e, omega)?;
    let n = op.n_modes();
    for index in [l, m] {
        if index >= n {
            return Err(Error::InvalidModeIndex { index, n_modes: n });
        }
    }
    let (ml, mm) = (&op.modes[l], &op.modes[m]);
    let a_l = op.tau_dd * ml.inv_tau_r_eff();
    let a_m = op.tau_dd * mm.inv_tau_r_eff();
    let x = omega * op.tau_dd;

    let carrier_drive = w_e * op.p0 + op.v0 + op.eps0 * op.v0;
    let common = Complex::new(a_l * a_m * carrier_drive / (T::one() + x * x), T::zero());
    let gamma_f_m = -mm.flux;
    let gamma_f_l = -ml.flux;
    let cross_m = Complex::new(a_l * gamma_f_m, T::zero()) / Complex::new(T::one(), -x);
    let cross_l = Complex::new(a_m * gamma_f_l, T::zero()) / Complex::new(T::one(), x);
    let diag = if l == m { ml.flux } else { T::zero() };
    Ok(common + cross_m + cross_l + Complex::new(diag, T::zero()))
}

/// Detected-flux spectral density assembled from mode cross-spectra plus
/// beam-splitter partition noise.
pub fn detected_spectrum<T: Real>(op: &OperatingPoint<T>, omega: T, w_e: T) -> Result<T> {
    let mut total = T::zero();
    for (l, ml) in op.modes.iter().enumerate() {
        total += ml.xi * (T::one() - ml.xi) * ml.flux;
        for (m, mm) in op.modes.iter().enumerate() {
            total += ml.xi * mm.xi * mode_cross_spectrum(op, l, m, omega, w_e)?.re;
        }
    }
    Ok(total)
}

/// `r = W_ph(W_e=0) / W_ph(W_e=1)` in the homogeneous low-frequency limit.
pub fn ratio_r<T: Real>(eta: T, eta_d: T) -> Result<T> {
    check_eta(eta)?;
    let two = T::lit(2.0);
    let base = T::one() - two * eta_d;
    let q = eta_d * eta_d / eta;
    let den = base + two * q;
    if den == T::zero() {
        return Err(Error::ZeroDenominator { what: "ratio r" });
    }
    Ok((base + q) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplReport<T> {
    /// `0 < η_d < η`: a Poissonian pump yields sub-Poissonian light.
    pub sub_poissonian: bool,
    /// `η - η_d`
    pub margin: T,
    pub k_sum: T,
    /// Whether `K_r + K_nr < 0` gives the same verdict. Always true without a
    /// non-radiative channel, where the sensitivities do not enter.
    pub criteria_agree: bool,
}

pub fn spl_condition<T: Real>(op: &OperatingPoint<T>) -> SplReport<T> {
    let sub_poissonian = op.eta_d > T::zero() && op.eta_d < op.eta;
    let k_sum = op.k_r + op.k_nr;
    let criteria_agree = if op.eps0 > T::zero() {
        sub_poissonian == (k_sum < T::zero())
    } else {
        !sub_poissonian
    };
    SplReport {
        sub_poissonian,
        margin: op.eta - op.eta_d,
        k_sum,
        criteria_agree,
    }
}

/// Named Fano formulas available to frequency sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formula {
    Master,
    Homogeneous,
    Classic,
    Inhomogeneous,
    Alternative,
}

impl Formula {
    pub const ALL: [Formula; 5] = [
        Formula::Master,
        Formula::Homogeneous,
        Formula::Classic,
        Formula::Inhomogeneous,
        Formula::Alternative,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Formula::Master => "master",
            Formula::Homogeneous => "homogeneous",
            Formula::Classic => "classic",
            Formula::Inhomogeneous => "inhomogeneous",
            Formula::Alternative => "alternative",
        }
    }

    /// Zero-frequency value for this running point.
    pub fn zero_freq<T: Real>(self, op: &OperatingPoint<T>, w_e: T) -> Result<T> {
        match self {
            Formula::Master => fano_zero_freq(op, w_e),
            Formula::Homogeneous => fano_homogeneous(op.eta, op.eta_d, w_e),
            Formula::Classic => {
                check_eta(op.eta)?;
                Ok(fano_classic(op.eta, w_e))
            }
            Formula::Inhomogeneous => {
                fano_inhomogeneous(op.eta, op.eta_d, inhomogeneous_zeta(op)?, w_e)
            }
            Formula::Alternative => fano_alternative(op.eta, op.eta_d, w_e),
        }
    }

    /// Value at Ω: the zero-frequency excess over shot noise rolled off by the
    /// cutoff Lorentzian, which is exact for every formula but `Alternative`.
    pub fn evaluate<T: Real>(self, op: &OperatingPoint<T>, w_e: T, omega: T) -> Result<T> {
        if self == Formula::Master {
            return fano_master(&FanoQuery::new(op, w_e, omega));
        }
        check_query(w_e, omega)?;
        let w0 = self.zero_freq(op, w_e)?;
        Ok(T::one() + (w0 - T::one()) * lorentzian(op, omega))
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Formula {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Formula::ALL
            .into_iter()
            .find(|f| f.name() == s.trim())
            .ok_or_else(|| {
                invalid(
                    "formula",
                    format!(
                        "unknown formula `{s}` (expected one of master, homogeneous, classic, inhomogeneous, alternative)"
                    ),
                )
            })
    }
}

/// `n` logarithmically spaced points from `min` to `max`, endpoints exact.
pub fn log_grid<T: Real>(min: T, max: T, n: usize) -> Result<Vec<T>> {
    if !(min > T::zero() && max >= min && max.is_finite()) {
        return Err(invalid("omega range", "need 0 < min <= max < inf"));
    }
    match n {
        0 => Err(invalid("n_points", "must be >= 1")),
        1 => Ok(vec![min]),
        _ => {
            let (lo, hi) = (min.ln(), max.ln());
            let last = T::from_usize_lossy(n - 1);
            Ok((0..n)
                .map(|i| match i {
                    0 => min,
                    _ if i == n - 1 => max,
                    _ => (lo + (hi - lo) * T::from_usize_lossy(i) / last).exp(),
                })
                .collect())
        }
    }
}

/// Rows of `(Ω, [W_ph per formula])`.
pub fn fano_sweep<T: Real>(
    op: &OperatingPoint<T>,
    w_e: T,
    omegas: &[T],
    formulas: &[Formula],
) -> Result<Vec<(T, Vec<T>)>> {
    omegas
        .iter()
        .map(|&w| {
            let vals = formulas
                .iter()
                .map(|f| f.evaluate(op, w_e, w))
                .collect::<Result<Vec<_>>>()?;
            Ok((w, vals))
        })
        .collect()
}
