//! Detection of foraging buzz events from tri-axial accelerometer and
//! depth telemetry.
//!
//! The crate covers the full desk-scale pipeline: a seeded synthetic-data
//! generator, dive detection and phase segmentation, 1 s window feature
//! extraction, three detectors (logistic regression, balanced-subsample
//! random forest and a 1D U-Net trained with Dice loss on a hand-rolled
//! differentiable kernel), jerk threshold sweeps, and interval-level
//! evaluation of the predictions.

pub mod data;
pub mod dive;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod jerk;
pub mod models;
pub mod nn;
pub mod synth;

pub use data::{positive_rate, BuzzInput, RawChannels, WhaleRecord};
pub use dive::{detect_dives, Dive, DivePhase};
pub use error::{Error, Result};
pub use synth::{synth_generate, SynthConfig};
