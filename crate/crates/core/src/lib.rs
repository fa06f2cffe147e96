//! Strong-pulse excitation of an inhomogeneously broadened two-level ensemble
//! in an impedance-matched ring cavity.
//!
//! [`simulator`] integrates the coupled Bloch / cavity equations in time.
//! [`area_theorem`] and [`linear_response`] give the analytic relations the
//! simulation is checked against, and [`analysis`] turns records into the
//! diagnostics (areas, energies, widths, delays) used for that comparison.

pub mod analysis;
pub mod area_theorem;
pub mod error;
pub mod linear_response;
pub mod pulse;
pub mod simulator;
pub mod types;

pub use error::{Error, Result};
pub use types::{CavityParams, DetuningGrid, EnsembleState, Sample, SimulationRecord, Waveform};
