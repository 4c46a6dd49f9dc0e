//! Explainable age-group classification of gait ground reaction forces.
//!
//! The pipeline: load or synthesize stance-phase GRF curves, min-max
//! normalize and concatenate them per trial, classify with a small 1D CNN
//! under subject-stratified k-fold cross-validation, and explain predictions
//! with layer-wise relevance propagation (LRP), exporting per-class relevance
//! profiles and SVG figures.
//!
//! See the `examples/` directory for runnable entry points covering each
//! capability, or the `gaitlrp` binary for the command-line interface.

pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod lrp;
pub mod nn;
pub mod plot;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;
