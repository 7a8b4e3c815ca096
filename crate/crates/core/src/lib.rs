//! Photon-pair source from spontaneous Raman emission in a crystal whose
//! inhomogeneous line has been shaped into an atomic frequency comb.
//!
//! * [`comb`] — spectral density, its Fourier transform, derived depths.
//! * [`analytic`] — closed-form photon numbers, efficiencies, noise and SNR.
//! * [`dynamics`] — discretized ensemble oracle producing flux traces.
//! * [`optimize`] — finesse maximizing the readout efficiency.
//! * [`link`] — heralded entanglement between two remote crystals.
//!
//! Frequencies cross the public API in Hz; angular units stay internal.

pub mod analytic;
pub mod cli;
pub mod comb;
pub mod dynamics;
pub mod error;
pub mod link;
pub mod optimize;

pub use analytic::{full_report, Direction, EfficiencyReport, ProtocolParams};
pub use comb::{Comb, CombParams};
pub use dynamics::{build_grid, FieldTrace, GridSpec};
pub use error::{Error, Result};
pub use link::{LinkParams, LinkReport};
pub use optimize::{optimize_finesse, Objective, OptimizationResult};
