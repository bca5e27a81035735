//! Photon-number Fano factor of multimode light-emitting diodes at low injection.
//!
//! The crate is generic over the scalar type ([`Real`], implemented for `f32` and
//! `f64`). The aliases at the crate root fix it to `f64`.

pub mod analytic;
pub mod config;
pub mod error;
pub mod langevin;
pub mod params;
pub mod qw;
pub mod scalar;
pub mod steady_state;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModeParams = params::ModeParams<f64>;
pub type DeviceParams = params::DeviceParams<f64>;
pub type PumpSpec = params::PumpSpec<f64>;
pub type SineModulation = params::SineModulation<f64>;
pub type OperatingPoint = params::OperatingPoint<f64>;
pub type ModePoint = params::ModePoint<f64>;
pub type RegimeInputs = params::RegimeInputs<f64>;
pub type RegimeReport = params::RegimeReport<f64>;
pub type FanoQuery<'a> = analytic::FanoQuery<'a, f64>;
pub type SplReport = analytic::SplReport<f64>;
pub type QwParams = qw::QwParams<f64>;
pub type QwSample = qw::QwSample<f64>;
pub type LifetimeModel = steady_state::LifetimeModel<f64>;
pub type IlCurve = steady_state::IlCurve<f64>;
pub type ConsistencyReport = steady_state::ConsistencyReport<f64>;
pub type SimConfig = langevin::SimConfig<f64>;
pub type SpectrumEstimate = langevin::SpectrumEstimate<f64>;
pub type Experiment = langevin::Experiment<f64>;
