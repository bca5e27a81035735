//! Gaussian white-noise draws with the diffusion coefficients of the linearized
//! carrier/photon system.
//!
//! Each draw is the mean rate over one step of length `dt`, so a source with
//! diffusion coefficient `D` has per-step variance `D/dt`. The radiative carrier
//! noise is not drawn: `Γ_r = -Σ_l F_{r,l}`, which reproduces `<Γ_r Γ_r> = n_c0/τ_r0`
//! and `<Γ_r F_{r,l}> = -n_c0/τ_{r,l}` exactly.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::params::OperatingPoint;
use crate::scalar::{rate_of, Real};

/// One step's worth of noise rates [1/s].
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseState<T> {
    /// Total pump noise `ΔP_tot` (intrinsic and external merged), variance `W_e P0 / dt`.
    pub pump: T,
    /// `Γ_nr`, variance `n_c0/τ_nr0 / dt`.
    pub nonradiative: T,
    /// `F_{r,l}`, variance `V_{l0} / dt`.
    pub radiative: Vec<T>,
    /// `F_{κ,l}`, variance `κ_l (n_l)_0 / dt`.
    pub escape: Vec<T>,
    /// Detector partition noise per mode, variance `ξ_l(1-ξ_l) V_{l0} / dt`.
    pub partition: Vec<T>,
}

impl<T: Real> NoiseState<T> {
    pub fn zeros(n_modes: usize) -> Self {
        Self {
            pump: T::zero(),
            nonradiative: T::zero(),
            radiative: vec![T::zero(); n_modes],
            escape: vec![T::zero(); n_modes],
            partition: vec![T::zero(); n_modes],
        }
    }

    pub fn clear(&mut self) {
        self.pump = T::zero();
        self.nonradiative = T::zero();
        for v in [&mut self.radiative, &mut self.escape, &mut self.partition] {
            v.iter_mut().for_each(|x| *x = T::zero());
        }
    }

    /// `Γ_r = -Σ_l F_{r,l}`.
    pub fn radiative_carrier(&self) -> T {
        -self.radiative.iter().fold(T::zero(), |acc, &f| acc + f)
    }

    /// Everything driving the carrier number: `ΔP_tot + Γ_r + Γ_nr`.
    pub fn carrier_drive(&self) -> T {
        self.pump + self.nonradiative + self.radiative_carrier()
    }
}

/// Precomputed per-step standard deviations for one operating point.
#[derive(Debug, Clone)]
pub struct NoiseSynth<T> {
    pump: T,
    nonradiative: T,
    radiative: Vec<T>,
    escape: Vec<T>,
    partition: Vec<T>,
}

impl<T: Real> NoiseSynth<T> {
    pub fn new(op: &OperatingPoint<T>, w_e: T, dt: T) -> Self {
        let sd = |diffusion: T| (diffusion / dt).sqrt();
        Self {
            pump: sd(w_e * op.p0),
            nonradiative: sd(op.n_c0 * rate_of(op.tau_nr0)),
            radiative: op.modes.iter().map(|m| sd(m.flux)).collect(),
            escape: op.modes.iter().map(|m| sd(m.kappa0 * m.photons)).collect(),
            partition: op
                .modes
                .iter()
                .map(|m| sd(m.xi * (T::one() - m.xi) * m.flux))
                .collect(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.radiative.len()
    }

    /// Overwrites `state` with fresh draws; zero-variance sources stay exactly zero
    /// and consume no randomness.
    pub fn fill<R: Rng + ?Sized>(&self, state: &mut NoiseState<T>, rng: &mut R)
    where
        StandardNormal: Distribution<T>,
    {
        let mut draw = |sd: T| {
            if sd == T::zero() {
                T::zero()
            } else {
                sd * StandardNormal.sample(rng)
            }
        };
        state.pump = draw(self.pump);
        state.nonradiative = draw(self.nonradiative);
        for (s, &sd) in state.radiative.iter_mut().zip(&self.radiative) {
            *s = draw(sd);
        }
        for (s, &sd) in state.escape.iter_mut().zip(&self.escape) {
            *s = draw(sd);
        }
        for (s, &sd) in state.partition.iter_mut().zip(&self.partition) {
            *s = draw(sd);
        }
    }
}

/// Draws one step of noise for `op`.
pub fn synthesize_noise<T: Real, R: Rng + ?Sized>(
    op: &OperatingPoint<T>,
    w_e: T,
    dt: T,
    rng: &mut R,
) -> NoiseState<T>
where
    StandardNormal: Distribution<T>,
{
    let synth = NoiseSynth::new(op, w_e, dt);
    let mut state = NoiseState::zeros(synth.n_modes());
    synth.fill(&mut state, rng);
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive_operating_point, DeviceParams, ModeParams, PumpSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_mode() -> OperatingPoint<f64> {
        let dev = DeviceParams::new(
            vec![
                ModeParams::new(1e12, 1.5e-9, 0.3, 0.7),
                ModeParams::new(1e12, 3e-9, -0.2, 0.4),
            ],
            2e-9,
            0.1,
        );
        derive_operating_point(&dev, &PumpSpec::new(1e9, 1.0)).unwrap()
    }

    #[test]
    fn radiative_cross_correlation_matches_ladder() {
        let op = two_mode();
        let dt = 1e-11;
        let synth = NoiseSynth::new(&op, 1.0, dt);
        let mut state = NoiseState::zeros(2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (mut s_gf, mut s_gf2, mut s_gg, mut s_ff) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            synth.fill(&mut state, &mut rng);
            let g = state.radiative_carrier();
            let f = state.radiative[0];
            s_gf += g * f;
            s_gf2 += (g * f) * (g * f);
            s_gg += g * g;
            s_ff += f * f;
        }
        let nf = n as f64;
        let cov = s_gf / nf * dt;
        let se = ((s_gf2 / nf - (s_gf / nf).powi(2)) / nf).sqrt() * dt;
        let expected = -op.modes[0].flux;
        assert!((cov - expected).abs() < 3.0 * se, "{cov} vs {expected} (se {se})");
        assert!((s_gg / nf * dt / op.v0 - 1.0).abs() < 0.01);
        assert!((s_ff / nf * dt / op.modes[0].flux - 1.0).abs() < 0.01);
    }

    #[test]
    fn noiseless_pump_draws_zero() {
        let op = two_mode();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = synthesize_noise(&op, 0.0, 1e-11, &mut rng);
            assert_eq!(s.pump, 0.0);
            assert!(s.nonradiative != 0.0);
        }
    }

    #[test]
    fn full_transmission_has_no_partition_noise() {
        let dev = DeviceParams::single_mode(1e12, 1e-9, 0.0, 1.0, f64::INFINITY, 0.0);
        let op = derive_operating_point(&dev, &PumpSpec::new(1e9, 1.0)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = synthesize_noise(&op, 1.0, 1e-11, &mut rng);
        assert_eq!(s.partition, vec![0.0]);
        assert_eq!(s.nonradiative, 0.0);
    }

    #[test]
    fn carrier_drive_covariance_is_positive_semidefinite() {
        // Γ_r is derived from the F_{r,l}, so the joint covariance is a Gram matrix.
        let op = two_mode();
        let dt = 1e-11;
        let synth = NoiseSynth::new(&op, 1.0, dt);
        let mut state = NoiseState::zeros(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut cov = [[0.0f64; 3]; 3];
        for _ in 0..n {
            synth.fill(&mut state, &mut rng);
            let v = [state.radiative_carrier(), state.radiative[0], state.radiative[1]];
            for i in 0..3 {
                for j in 0..3 {
                    cov[i][j] += v[i] * v[j] * dt / n as f64;
                }
            }
        }
        // exact covariance: [[V0, -V1, -V2], [-V1, V1, 0], [-V2, 0, V2]], singular but PSD
        let (v1, v2) = (op.modes[0].flux, op.modes[1].flux);
        let exact = [[op.v0, -v1, -v2], [-v1, v1, 0.0], [-v2, 0.0, v2]];
        let det = exact[0][0] * (exact[1][1] * exact[2][2])
            - exact[0][1] * (exact[1][0] * exact[2][2])
            + exact[0][2] * (-exact[1][1] * exact[2][0]);
        assert!(det.abs() < 1e-6 * op.v0.powi(3));
        for i in 0..3 {
            for j in 0..3 {
                assert!((cov[i][j] - exact[i][j]).abs() < 0.02 * op.v0, "{i}{j}");
            }
        }
    }
}
