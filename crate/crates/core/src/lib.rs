//! Linearized dynamics of a driven optical cavity with a vibrating end mirror
//! and an intracavity BEC Bogoliubov mode.
//!
//! The pipeline is: [`model`] parameters → [`steadystate`] operating point →
//! [`dynamics`] drift and diffusion matrices → [`spectra`] noise spectra →
//! [`thermo`] variances and effective temperatures. [`validate`] holds the
//! independent oracles (Lyapunov covariance, time-domain SDE integration,
//! Routh–Hurwitz).

// `!(a < b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod quadrature;
pub mod spectra;
pub mod steadystate;
pub mod thermo;
pub mod validate;

pub use dynamics::{
    build_diffusion_matrix, build_drift_matrix, driven_stability, stability, BathModel,
    DiffusionMatrix, DriftMatrix, Stability, StabilityReport,
};
pub use error::{Error, Result};
pub use model::{derive_couplings, DerivedCouplings, PhysicalParams};
pub use num_complex::Complex64;
pub use spectra::{
    find_peaks, spectrum_series, transfer_at, MomentumMode, NoiseModel, Observable, Peak,
    SpectrumEngine, SpectrumSeries, SpectrumUnits, TransferSet,
};
pub use steadystate::{
    operating_point_at_detuning, radiation_pressure_constant, solve_self_consistent, BranchSet,
    OperatingPoint,
};
pub use thermo::{
    effective_temperature, temperature_sweep, variance, Integration, SweepSpec, SweepVariable,
    TemperatureCurve, TemperaturePoint, VarianceEstimate,
};
