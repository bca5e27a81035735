//! Nonlinear carrier balance `P = n_c/τ_r[n_c] + n_c/τ_nr[n_c]` with
//! carrier-dependent lifetimes, I-L curves, and lifetime sensitivities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::DeviceParams;
use crate::qw::QwParams;
use crate::scalar::Real;

/// Recombination flux `R(n) = (n_ref/τ_ref) (n/n_ref)^p`, i.e. `τ(n) = τ_ref (n/n_ref)^{1-p}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLaw<T> {
    pub exponent: T,
    /// Lifetime at `n_ref` [s].
    pub tau_ref: T,
    pub n_ref: T,
}

impl<T: Real> PowerLaw<T> {
    pub fn new(exponent: T, tau_ref: T, n_ref: T) -> Self {
        Self {
            exponent,
            tau_ref,
            n_ref,
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        if !(self.tau_ref > T::zero() && self.tau_ref.is_finite()) {
            return Err(invalid(format!("{what}.tau_ref"), "must be positive"));
        }
        if !(self.n_ref > T::zero() && self.n_ref.is_finite()) {
            return Err(invalid(format!("{what}.n_ref"), "must be positive"));
        }
        if !(self.exponent > T::zero() && self.exponent.is_finite()) {
            return Err(invalid(format!("{what}.exponent"), "must be positive"));
        }
        Ok(())
    }

    pub fn rate(&self, n: T) -> T {
        (self.n_ref / self.tau_ref) * (n / self.n_ref).powf(self.exponent)
    }
}

/// Quantum-well band-edge emitter: `R(n_c) = rate_scale * f_e(n_c / area)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QwEmitter<T> {
    pub m_eff: T,
    /// [K]
    pub temperature: T,
    /// Well area converting carrier number to sheet density [m^2].
    pub area: T,
    /// Saturated emission rate [1/s].
    pub rate_scale: T,
}

impl<T: Real> QwEmitter<T> {
    pub fn qw_at(&self, n: T) -> QwParams<T> {
        QwParams::new(self.m_eff, self.temperature, n / self.area)
    }

    fn validate(&self) -> Result<()> {
        QwParams::new(self.m_eff, self.temperature, T::zero()).validate()?;
        if !(self.area > T::zero() && self.area.is_finite()) {
            return Err(invalid("qw.area", "must be positive"));
        }
        if !(self.rate_scale > T::zero() && self.rate_scale.is_finite()) {
            return Err(invalid("qw.rate_scale", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RadiativeLaw<T> {
    PowerLaw(PowerLaw<T>),
    QuantumWell(QwEmitter<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NonRadiativeLaw<T> {
    /// Infinite non-radiative lifetime.
    None,
    PowerLaw(PowerLaw<T>),
}

/// Carrier-number dependence of both recombination channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeModel<T> {
    pub radiative: RadiativeLaw<T>,
    pub nonradiative: NonRadiativeLaw<T>,
}

impl<T: Real> LifetimeModel<T> {
    pub fn power_law(p_r: T, tau_r_ref: T, n_ref: T) -> Self {
        Self {
            radiative: RadiativeLaw::PowerLaw(PowerLaw::new(p_r, tau_r_ref, n_ref)),
            nonradiative: NonRadiativeLaw::None,
        }
    }

    pub fn with_nonradiative(mut self, p_nr: T, tau_nr_ref: T, n_ref: T) -> Self {
        self.nonradiative = NonRadiativeLaw::PowerLaw(PowerLaw::new(p_nr, tau_nr_ref, n_ref));
        self
    }

    pub fn validate(&self) -> Result<()> {
        match &self.radiative {
            RadiativeLaw::PowerLaw(p) => p.validate("radiative")?,
            RadiativeLaw::QuantumWell(q) => q.validate()?,
        }
        if let NonRadiativeLaw::PowerLaw(p) = &self.nonradiative {
            p.validate("nonradiative")?;
        }
        Ok(())
    }

    /// Radiative flux `n_c/τ_r[n_c]` [1/s].
    pub fn radiative_rate(&self, n: T) -> T {
        match &self.radiative {
            RadiativeLaw::PowerLaw(p) => p.rate(n),
            RadiativeLaw::QuantumWell(q) => q.rate_scale * crate::qw::se_rate(&q.qw_at(n)),
        }
    }

    /// Non-radiative flux `n_c/τ_nr[n_c]` [1/s].
    pub fn nonradiative_rate(&self, n: T) -> T {
        match &self.nonradiative {
            NonRadiativeLaw::None => T::zero(),
            NonRadiativeLaw::PowerLaw(p) => p.rate(n),
        }
    }

    pub fn total_rate(&self, n: T) -> T {
        self.radiative_rate(n) + self.nonradiative_rate(n)
    }

    fn reference_number(&self) -> T {
        match (&self.radiative, &self.nonradiative) {
            (RadiativeLaw::PowerLaw(p), _) => p.n_ref,
            (RadiativeLaw::QuantumWell(_), NonRadiativeLaw::PowerLaw(p)) => p.n_ref,
            (RadiativeLaw::QuantumWell(q), NonRadiativeLaw::None) => {
                q.area * crate::qw::degenerate_density_scale(q.m_eff, q.temperature)
            }
        }
    }

    /// Analytic `(K_r, K_nr)` at `n`: `K_r = p_r - 1`, `K_nr = 1 - p_nr`, where `p`
    /// is the local log-slope of each recombination flux.
    pub fn extract_k(&self, n: T) -> Result<(T, T)> {
        if !(n > T::zero()) {
            return Err(invalid("n_c0", "must be positive"));
        }
        let slope_r = match &self.radiative {
            RadiativeLaw::PowerLaw(p) => p.exponent,
            RadiativeLaw::QuantumWell(q) => crate::qw::k_r_of_density(&q.qw_at(n)) + T::one(),
        };
        let k_nr = match &self.nonradiative {
            NonRadiativeLaw::None => T::zero(),
            NonRadiativeLaw::PowerLaw(p) => T::one() - p.exponent,
        };
        let k_r = slope_r - T::one();
        if !(k_r.is_finite() && k_nr.is_finite()) {
            return Err(Error::NonFiniteDerivative {
                what: "lifetime",
                n_c: n.to_f64_lossy(),
            });
        }
        Ok((k_r, k_nr))
    }

    /// `(K_r, K_nr)` from central differences of `ln τ` in `ln n_c` with relative step `h`.
    pub fn extract_k_numeric(&self, n: T, h: T) -> Result<(T, T)> {
        if !(n > T::zero()) {
            return Err(invalid("n_c0", "must be positive"));
        }
        let (up, down) = (n * h.exp(), n * (-h).exp());
        let two_h = T::lit(2.0) * h;
        let ln_tau = |rate: T, n: T| (n / rate).ln();
        let k_r = -(ln_tau(self.radiative_rate(up), up) - ln_tau(self.radiative_rate(down), down))
            / two_h;
        let k_nr = match self.nonradiative {
            NonRadiativeLaw::None => T::zero(),
            _ => {
                (ln_tau(self.nonradiative_rate(up), up)
                    - ln_tau(self.nonradiative_rate(down), down))
                    / two_h
            }
        };
        if !(k_r.is_finite() && k_nr.is_finite()) {
            return Err(Error::NonFiniteDerivative {
                what: "lifetime",
                n_c: n.to_f64_lossy(),
            });
        }
        Ok((k_r, k_nr))
    }

    /// Single-mode device with the lifetimes and sensitivities of this model at `n`.
    pub fn device_at(&self, n: T, beta0: T, kappa0: T) -> Result<DeviceParams<T>> {
        let (k_r, k_nr) = self.extract_k(n)?;
        let nr = self.nonradiative_rate(n);
        let tau_nr0 = if nr == T::zero() {
            T::infinity()
        } else {
            n / nr
        };
        Ok(DeviceParams::single_mode(
            kappa0,
            n / self.radiative_rate(n),
            k_r,
            beta0,
            tau_nr0,
            k_nr,
        ))
    }
}

/// Geometric bracket expansion limit, in decades either side of the reference number.
pub const MAX_BRACKET_DECADES: i32 = 60;

/// Carrier number balancing the pump, found by Brent's method in `ln n_c`.
pub fn solve_carrier_number<T: Real>(p0: T, model: &LifetimeModel<T>) -> Result<T> {
    if !(p0 > T::zero() && p0.is_finite()) {
        return Err(invalid("P0", "must be positive and finite"));
    }
    model.validate()?;
    let residual = |u: T| model.total_rate(u.exp()) / p0 - T::one();
    let ten = T::lit(10.0).ln();
    let start = model.reference_number().ln();

    let (mut lo, mut hi) = (start, start);
    let mut decades = 0;
    while residual(lo) > T::zero() {
        lo -= ten;
        decades += 1;
        if decades > MAX_BRACKET_DECADES {
            return Err(no_root(p0, lo, hi));
        }
    }
    decades = 0;
    while residual(hi) < T::zero() {
        hi += ten;
        decades += 1;
        if decades > MAX_BRACKET_DECADES || !residual(hi).is_finite() {
            return Err(no_root(p0, lo, hi));
        }
    }
    let u = brent(residual, lo, hi).ok_or_else(|| no_root(p0, lo, hi))?;
    Ok(u.exp())
}

fn no_root<T: Real>(p0: T, lo: T, hi: T) -> Error {
    Error::NoSteadyState {
        pump: p0.to_f64_lossy(),
        lo: lo.exp().to_f64_lossy(),
        hi: hi.exp().to_f64_lossy(),
    }
}

/// Brent's bracketing root finder; bisection whenever interpolation misbehaves.
fn brent<T: Real, F: Fn(T) -> T>(f: F, lo: T, hi: T) -> Option<T> {
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == T::zero() {
        return Some(a);
    }
    if fb == T::zero() {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    let (mut c, mut fc) = (b, fb);
    let (mut d, mut e) = (b - a, b - a);
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = two * T::epsilon() * b.abs().max(T::one());
        let m = half * (c - b);
        if m.abs() <= tol || fb == T::zero() {
            return Some(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = two * m * s;
                q = T::one() - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (two * m * qa * (qa - r) - (b - a) * (r - T::one()));
                q = (qa - T::one()) * (r - T::one()) * (s - T::one());
            }
            if p > T::zero() {
                q = -q;
            } else {
                p = -p;
            }
            if two * p < (T::lit(3.0) * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
    }
    Some(b)
}

/// Default relative pump step for tangent slopes.
pub const DEFAULT_SLOPE_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlSample<T> {
    /// Pump [1/s]
    pub p: T,
    pub n_c: T,
    /// Cavity output flux [1/s]
    pub v: T,
    /// Detected flux [1/s]
    pub n: T,
    /// Secant slope `N/P`.
    pub eta_num: T,
    /// Tangent slope `dN/dP`.
    pub eta_d_num: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlCurve<T> {
    pub samples: Vec<IlSample<T>>,
}

impl<T: Real> IlCurve<T> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("P,n_c,V,N,eta_num,eta_d_num\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                s.p.to_f64_lossy(),
                s.n_c.to_f64_lossy(),
                s.v.to_f64_lossy(),
                s.n.to_f64_lossy(),
                s.eta_num.to_f64_lossy(),
                s.eta_d_num.to_f64_lossy()
            ));
        }
        out
    }
}

/// Samples the I-L curve at one pump level with a central-difference tangent.
pub fn il_sample<T: Real>(p: T, model: &LifetimeModel<T>, beta0: T, step: T) -> Result<IlSample<T>> {
    let detected = |p: T| -> Result<(T, T, T)> {
        let n_c = solve_carrier_number(p, model)?;
        let v = model.radiative_rate(n_c);
        Ok((n_c, v, beta0 * v))
    };
    let (n_c, v, n) = detected(p)?;
    let dp = step * p;
    let (_, _, n_up) = detected(p + dp)?;
    let (_, _, n_down) = detected(p - dp)?;
    Ok(IlSample {
        p,
        n_c,
        v,
        n,
        eta_num: n / p,
        eta_d_num: (n_up - n_down) / (T::lit(2.0) * dp),
    })
}

/// I-L curve on `n_points` evenly spaced pumps in `[p_min, p_max]`.
pub fn il_curve<T: Real>(
    p_min: T,
    p_max: T,
    n_points: usize,
    model: &LifetimeModel<T>,
    beta0: T,
    step: T,
) -> Result<IlCurve<T>> {
    if !(p_min > T::zero() && p_max > p_min && p_max.is_finite()) {
        return Err(invalid("P range", "need 0 < P_min < P_max"));
    }
    if n_points < 2 {
        return Err(invalid("n_points", "must be >= 2"));
    }
    if !(beta0 >= T::zero() && beta0 <= T::one()) {
        return Err(invalid("beta0", "must lie in [0, 1]"));
    }
    if !(step > T::zero() && step < T::one()) {
        return Err(invalid("slope step", "must lie in (0, 1)"));
    }
    model.validate()?;
    let last = T::from_usize_lossy(n_points - 1);
    let samples = (0..n_points)
        .into_par_iter()
        .map(|i| {
            let p = p_min + (p_max - p_min) * T::from_usize_lossy(i) / last;
            il_sample(p, model, beta0, step)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IlCurve { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport<T> {
    pub n_c0: T,
    pub k_r: T,
    pub k_nr: T,
    pub eps0: T,
    pub eps_prime: T,
    /// Secant slope of the numeric curve.
    pub eta_num: T,
    /// Tangent slope of the numeric curve.
    pub eta_d_num: T,
    /// `β0/(1+ε')` from the extracted sensitivities.
    pub eta_d_small_signal: T,
    pub rel_error: T,
    pub tolerance: T,
    pub pass: bool,
}

/// Default relative tolerance between the numeric tangent and the small-signal `η_d`.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-4;

/// Compares the numeric I-L tangent with the small-signal differential efficiency.
pub fn consistency_check<T: Real>(
    model: &LifetimeModel<T>,
    p0: T,
    beta0: T,
    tolerance: T,
) -> Result<ConsistencyReport<T>> {
    let sample = il_sample(p0, model, beta0, T::lit(DEFAULT_SLOPE_STEP))?;
    let n = sample.n_c;
    let (k_r, k_nr) = model.extract_k(n)?;
    let eps0 = model.nonradiative_rate(n) / model.radiative_rate(n);
    let (_, eta_d) = crate::params::efficiencies_from_k(eps0, beta0, k_r, k_nr)?;
    let eps_prime = eps0 * (T::one() - k_nr) / (T::one() + k_r);
    let rel_error = (sample.eta_d_num - eta_d).abs() / eta_d.abs();
    Ok(ConsistencyReport {
        n_c0: n,
        k_r,
        k_nr,
        eps0,
        eps_prime,
        eta_num: sample.eta_num,
        eta_d_num: sample.eta_d_num,
        eta_d_small_signal: eta_d,
        rel_error,
        tolerance,
        pass: rel_error <= tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_operating_point, PumpSpec};
    use crate::qw::degenerate_density_scale;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const TAU: f64 = 1e-9;
    const NREF: f64 = 1e3;

    fn bimolecular_with_linear_loss() -> LifetimeModel<f64> {
        // equal radiative and non-radiative flux at n_ref
        LifetimeModel::power_law(2.0, TAU, NREF).with_nonradiative(1.0, TAU, NREF)
    }

    fn qw_model() -> LifetimeModel<f64> {
        LifetimeModel {
            radiative: RadiativeLaw::QuantumWell(QwEmitter {
                m_eff: 0.1,
                temperature: 3.0,
                area: 1e-8,
                rate_scale: 1e13,
            }),
            nonradiative: NonRadiativeLaw::PowerLaw(PowerLaw::new(1.0, 1e-7, 1e6)),
        }
    }

    #[test]
    fn linear_recombination_is_linear_in_pump() {
        let m = LifetimeModel::power_law(1.0, TAU, NREF);
        for p in [1e3, 1e9, 1e15] {
            let n = solve_carrier_number(p, &m).unwrap();
            assert_relative_eq!(n, p * TAU, max_relative = 1e-12);
        }
    }

    #[test]
    fn bimolecular_goes_as_square_root() {
        let m = LifetimeModel::power_law(2.0, TAU, NREF);
        let n1 = solve_carrier_number(1e12, &m).unwrap();
        let n4 = solve_carrier_number(4e12, &m).unwrap();
        assert_relative_eq!(n4 / n1, 2.0, max_relative = 1e-12);
        // (n_ref/tau)(n/n_ref)^2 = P  =>  n = sqrt(P tau n_ref)
        assert_relative_eq!(n1, (1e12 * TAU * NREF).sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn quadratic_closed_form() {
        // P = (n_ref/tau)[(n/n_ref)^2 + n/n_ref]  =>  y^2 + y - P tau/n_ref = 0
        let m = bimolecular_with_linear_loss();
        for p in [1e10, 1e12, 1e14] {
            let c = p * TAU / NREF;
            let y = 2.0 * c / (1.0 + (1.0 + 4.0 * c).sqrt());
            let n = solve_carrier_number(p, &m).unwrap();
            assert_relative_eq!(n, NREF * y, max_relative = 1e-12);
            assert!((m.total_rate(n) / p - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn saturating_emitter_has_no_root_above_saturation() {
        let m = LifetimeModel {
            radiative: RadiativeLaw::QuantumWell(QwEmitter {
                m_eff: 0.1,
                temperature: 3.0,
                area: 1e-8,
                rate_scale: 1e13,
            }),
            nonradiative: NonRadiativeLaw::None,
        };
        assert!(solve_carrier_number(5e12, &m).is_ok());
        let err = solve_carrier_number(2e13, &m).unwrap_err();
        assert!(matches!(err, Error::NoSteadyState { .. }), "{err}");
    }

    #[test]
    fn power_law_sensitivities() {
        let (k_r, k_nr) = LifetimeModel::power_law(2.0, TAU, NREF).extract_k(50.0).unwrap();
        assert_eq!((k_r, k_nr), (1.0, 0.0));
        let (k_r, _) = LifetimeModel::power_law(1.0, TAU, NREF).extract_k(50.0).unwrap();
        assert_eq!(k_r, 0.0);
        let m = LifetimeModel::power_law(1.7, TAU, NREF).with_nonradiative(0.4, TAU, NREF);
        let (k_r, k_nr) = m.extract_k(3e4).unwrap();
        assert_relative_eq!(k_r, 0.7, max_relative = 1e-15);
        assert_relative_eq!(k_nr, 0.6, max_relative = 1e-15);
        let (fk_r, fk_nr) = m.extract_k_numeric(3e4, 1e-4).unwrap();
        assert_relative_eq!(fk_r, k_r, max_relative = 1e-6);
        assert_relative_eq!(fk_nr, k_nr, max_relative = 1e-6);
        assert!(m.extract_k(0.0).is_err());
    }

    #[test]
    fn qw_sensitivities_dual_path() {
        let m = qw_model();
        for n_s in [1e12, 1e13, 1e14, 1e15] {
            let n = n_s * 1e-8;
            let (k_r, _) = m.extract_k(n).unwrap();
            let (fk_r, _) = m.extract_k_numeric(n, 1e-4).unwrap();
            assert!((k_r - fk_r).abs() < 1e-6 * k_r.abs().max(1e-3), "{k_r} {fk_r}");
        }
    }

    #[test]
    fn linear_curve_has_constant_slopes() {
        let m = LifetimeModel::power_law(1.0, TAU, NREF).with_nonradiative(1.0, 3.0 * TAU, NREF);
        let curve = il_curve(1e9, 1e11, 9, &m, 0.8, DEFAULT_SLOPE_STEP).unwrap();
        let expected = 0.8 / (1.0 + 1.0 / 3.0);
        for s in &curve.samples {
            assert_relative_eq!(s.eta_num, expected, max_relative = 1e-10);
            assert_relative_eq!(s.eta_d_num, expected, max_relative = 1e-7);
        }
    }

    #[test]
    fn superlinear_curve_tangent_above_secant() {
        let m = bimolecular_with_linear_loss();
        let curve = il_curve(1e10, 1e14, 21, &m, 1.0, DEFAULT_SLOPE_STEP).unwrap();
        for s in &curve.samples {
            assert!(s.eta_d_num > s.eta_num, "{s:?}");
            // closed form: N = beta0 (n_ref/tau) y^2 with y(P) from the quadratic
            let c = s.p * TAU / NREF;
            let y = 2.0 * c / (1.0 + (1.0 + 4.0 * c).sqrt());
            let dy_dp = (TAU / NREF) / (1.0 + 2.0 * y);
            let slope = (NREF / TAU) * 2.0 * y * dy_dp;
            assert_relative_eq!(s.eta_d_num, slope, max_relative = 1e-7);
        }
        assert!(curve.samples.windows(2).all(|w| w[1].p > w[0].p));
    }

    #[test]
    fn saturating_qw_curve_tangent_below_secant() {
        let m = qw_model();
        let n0 = 1e-8 * degenerate_density_scale(0.1, 3.0);
        let p_at = |n: f64| m.total_rate(n);
        let curve = il_curve(p_at(n0), p_at(10.0 * n0), 12, &m, 1.0, DEFAULT_SLOPE_STEP).unwrap();
        for s in &curve.samples {
            assert!(s.eta_d_num < s.eta_num, "{s:?}");
        }
    }

    #[test]
    fn consistency_examples() {
        let lin = LifetimeModel::power_law(1.0, TAU, NREF).with_nonradiative(1.0, TAU, NREF);
        let rep = consistency_check(&lin, 1e12, 1.0, CONSISTENCY_TOLERANCE).unwrap();
        assert!(rep.rel_error < 1e-9 && rep.pass);

        // p_r = 2, p_nr = 1, eps0 = 1 at n_ref: eta_d/eta = (1+eps0)/(1+eps') = 4/3
        let m = bimolecular_with_linear_loss();
        let p0 = m.total_rate(NREF);
        let rep = consistency_check(&m, p0, 1.0, CONSISTENCY_TOLERANCE).unwrap();
        assert_relative_eq!(rep.eps0, 1.0, max_relative = 1e-10);
        assert_relative_eq!(rep.eps_prime, 0.5, max_relative = 1e-10);
        assert_relative_eq!(rep.eta_d_num / rep.eta_num, 4.0 / 3.0, max_relative = 1e-6);
        assert!(rep.pass, "{rep:?}");

        let qw = qw_model();
        let p0 = qw.total_rate(1e14 * 1e-8);
        let rep = consistency_check(&qw, p0, 1.0, 1e-3).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.k_r < 0.0);
    }

    #[test]
    fn device_at_matches_numeric_efficiencies() {
        let m = LifetimeModel::power_law(1.5, TAU, NREF).with_nonradiative(0.7, 2.0 * TAU, NREF);
        let n = 2.0 * NREF;
        let p0 = m.total_rate(n);
        let dev = m.device_at(n, 0.6, 1e12).unwrap();
        let op = derive_operating_point(&dev, &PumpSpec::new(p0, 1.0)).unwrap();
        let s = il_sample(p0, &m, 0.6, DEFAULT_SLOPE_STEP).unwrap();
        assert_relative_eq!(op.n_c0, n, max_relative = 1e-10);
        assert_relative_eq!(op.eta, s.eta_num, max_relative = 1e-10);
        assert_relative_eq!(op.eta_d, s.eta_d_num, max_relative = 1e-6);
    }

    proptest! {
        #[test]
        fn residual_small_at_every_root(
            p_r in 0.5f64..3.0, p_nr in 0.5f64..3.0, ratio in 0.01f64..100.0, lp in 3.0f64..18.0
        ) {
            let m = LifetimeModel::power_law(p_r, TAU, NREF).with_nonradiative(p_nr, TAU * ratio, NREF);
            let p = 10f64.powf(lp);
            let n = solve_carrier_number(p, &m).unwrap();
            prop_assert!((m.total_rate(n) / p - 1.0).abs() < 1e-10);
        }

        // eta_d < eta at a point exactly when K_r + K_nr < 0 there
        #[test]
        fn tangent_below_secant_iff_negative_k_sum(
            p_r in 0.5f64..2.5, p_nr in 0.5f64..2.5, ratio in 0.1f64..10.0
        ) {
            let m = LifetimeModel::power_law(p_r, TAU, NREF).with_nonradiative(p_nr, TAU * ratio, NREF);
            let (k_r, k_nr) = m.extract_k(NREF).unwrap();
            prop_assume!((k_r + k_nr).abs() > 1e-3);
            let s = il_sample(m.total_rate(NREF), &m, 1.0, DEFAULT_SLOPE_STEP).unwrap();
            prop_assert_eq!(s.eta_d_num < s.eta_num, k_r + k_nr < 0.0);
        }
    }
}
