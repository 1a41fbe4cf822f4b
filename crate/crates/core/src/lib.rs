//! Simulation and analysis engine for axial Gouy-phase interference of
//! radial Laguerre-Gaussian modes: paraxial mode geometry, angular-spectrum
//! propagation, fiber-coupling overlaps, classical and N-photon N00N
//! coincidence curves, Fisher-information figures for longitudinal
//! displacement sensing, and a 4-parameter focal-scan fitting pipeline.

pub mod analysis;
pub mod beamgeom;
pub mod coupling;
pub mod error;
pub mod interference;
pub mod metrology;
pub mod numerics;
pub mod propagation;

pub use error::{Error, Result};
