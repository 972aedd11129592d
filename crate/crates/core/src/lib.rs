//! Anti-occlusion single-target tracking at desk scale.
//!
//! The crate pairs a template-correlation appearance model with an occlusion
//! detector built on response-map peak geometry. When the detector fires, an
//! adversarially trained trajectory predictor takes over the target position
//! until the appearance model reacquires it.
//!
//! - [`heatmap`]: response maps and peak extraction.
//! - [`occlusion`]: fusing peak distances and the classification score into a verdict.
//! - [`predictor`]: LSTM generator/discriminator, training and ADE evaluation.
//! - [`losses`]: classification/regression losses with occlusion supervision.
//! - [`frame`], [`appearance`]: grayscale frames and the pyramid NCC appearance model.
//! - [`pipeline`]: the tracking/predicting state machine.
//! - [`harness`]: scenario simulator, metrics, threshold sweeps and file formats.

pub mod appearance;
pub mod error;
pub mod frame;
pub mod harness;
pub mod heatmap;
pub mod losses;
pub mod occlusion;
pub mod pipeline;
pub mod predictor;

pub use error::{Error, Result};
