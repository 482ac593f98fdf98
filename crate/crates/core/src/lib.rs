//! Adaptive photon-counting phase estimation of coherent states.
//!
//! Each single shot splits a coherent state into `L` weak probes, displaces
//! each one, counts photons with a PNR(m) detector and updates a grid
//! posterior over the phase. The next displacement maximizes an expected
//! cost (posterior sharpness or mutual information) with its magnitude
//! tied to its phase by the Fisher-optimal rule.
//!
//! Modules:
//! - [`model`]: probe parameters, displacement designs, outcome statistics
//! - [`posterior`]: circular grid posterior, MAP, moments, Holevo variance
//! - [`design`]: Fisher information and the per-step design search
//! - [`strategy`]: single-shot protocol and Monte Carlo ensembles
//! - [`baselines`]: QCRB, heterodyne, Mark-II and canonical benchmarks
//! - [`analysis`]: convergence and asymptote fits, backward elimination
//! - [`io`]: CSV and JSON persistence formats

pub mod analysis;
pub mod angle;
pub mod baselines;
pub mod design;
pub mod error;
mod fastmath;
pub mod io;
pub mod model;
pub mod posterior;
pub mod rng;
pub mod strategy;

pub use design::{CostFunction, DesignPolicy};
pub use error::{Error, Result};
pub use model::{DisplacementDesign, Outcome, ProbeSpec};
pub use posterior::{CircularMoment, PhasePosterior};
pub use strategy::{EnsembleOptions, EnsembleResult, PhaseMode, TrialRecord};
