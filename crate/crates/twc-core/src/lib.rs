//! Photodetection statistics of the TWC single-photon homodyne
//! interferometer, together with the explicit local-hidden-variable model
//! that reproduces them below the critical oscillator strength.
//!
//! A single photon is split on a balanced beamsplitter and each arm is
//! mixed with a weak coherent local oscillator; all four output detectors
//! count photons. The [`quantum`] module computes the exact event
//! statistics (with an independent brute-force amplitude oracle), [`lhv`]
//! builds and samples the hidden-variable mixture that reproduces them
//! exactly for alpha^2 below roughly 0.876, and [`analysis`] carries the
//! CHSH machinery, the normalisation audit and the validity threshold.
//!
//! The `twc` binary exposes all of it on the command line with CSV/JSON
//! output; see the repository README.

pub mod analysis;
pub mod cli;
pub mod io;
pub mod lhv;
pub mod numerics;
pub mod quantum;
pub mod types;

pub use types::{Event, OscillatorStrength, Settings};
