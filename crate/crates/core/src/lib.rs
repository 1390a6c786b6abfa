//! Simulation and analysis of Hong-Ou-Mandel interference for photons
//! emitted by a biexciton-exciton cascade.
//!
//! The crate is organised bottom-up:
//!
//! * [`dynamics`]: dense Lindblad engine, fixed-step propagation and
//!   two-time correlations through the quantum regression theorem.
//! * [`cascade`]: lifetimes, coherence times and rate conversions for the
//!   three-level emitter, the analytic two-photon wavefunction and purity.
//! * [`sensor`]: the sensor-method pipeline yielding photon numbers, field
//!   correlations and the time-resolved HOM coincidence function.
//! * [`trajectory`]: Monte Carlo wavefunction unraveling and temporal
//!   postselection on the biexciton emission time.
//! * [`analysis`]: peak-area analysis of measured or synthetic coincidence
//!   histograms, conditioned HOM and lifetime fitting.
//! * [`config`] and [`commands`]: the JSON run configuration and the
//!   command layer used by the `hom-cascade` binary.
//!
//! Units are fixed throughout: time in ps, rates in ps⁻¹, angular
//! frequencies in rad/ps, ħ = 1.

pub mod analysis;
pub mod cascade;
pub mod commands;
pub mod config;
pub mod dynamics;
mod error;
pub mod output;
pub mod plot;
pub mod sensor;
pub mod trajectory;

pub use error::{Error, Result};

/// Complex scalar used for every operator entry and amplitude.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix: operators, density matrices and superoperators.
pub type CMatrix = nalgebra::DMatrix<C64>;

/// Dense complex column vector (state vectors, vectorised density matrices).
pub type CVector = nalgebra::DVector<C64>;

pub use cascade::{CascadeParams, DerivedRates};
pub use dynamics::{ChannelLabel, CollapseChannel, QuantumSystem, TimeGrid};
pub use sensor::{EmissionFunctions, HomResult, SensorParams, Transition};
pub use trajectory::{PostselectionResult, TrajectoryRecord};
