//! Time-frequency Kolmogorov-Arnold networks for long-term time-series forecasting.
//!
//! The crate is organised bottom-up:
//!
//! - [`array`] and [`autodiff`]: dense `f64` arrays and a tape-based reverse-mode engine.
//! - [`kan`]: B-spline bases, KAN layers and stacks, and the ReLU MLP baseline.
//! - [`spectral`]: differentiable one-sided real DFT and its inverse.
//! - [`model`]: the dual-branch forecaster, its ablation variants and checkpoints.
//! - [`training`]: loss, metrics, Adam, min-max scaling and the early-stopping loop.
//! - [`data`]: CSV ingestion, chronological splits, windows and synthetic series.
//! - [`cli`]: the `tfkan` command line.

pub mod array;
pub mod autodiff;
pub mod cli;
pub mod data;
pub mod error;
pub mod gradcheck;
pub mod kan;
pub mod model;
pub mod param;
pub mod spectral;
pub mod training;

pub use array::Array;
pub use autodiff::{Gradients, Graph, Var};
pub use error::{Error, Result};
pub use model::{ModelConfig, TfkanModel, Variant};
pub use param::{Module, Param};
