//! Forecasting weekly influenza-like-illness (ILI) rates with a learned,
//! fully dynamic graph over timepoints.
//!
//! Each week becomes a virtual node embedded from its recent observation
//! window. Edge weights are learned similarities between those embeddings,
//! and two graph layers let every node borrow from historically similar
//! weeks before a linear head predicts the next `q` weeks.
//!
//! Modules:
//! - [`data`]: ingestion, windowing, splits, standardization, season stats
//! - [`numerics`]: dense matrices, activations, Adam, RNG, gradient checks
//! - [`model`]: forward pass, loss and gradients
//! - [`training`]: training loop, evaluation, experiment grids, checkpoints
//! - [`baselines`]: AR, k-NN, persistence and the fixed-graph ablation mask
//! - [`interpret`]: nearest "similar situations" and plot-data export

pub mod baselines;
pub mod data;
mod error;
pub mod interpret;
pub mod model;
pub mod numerics;
pub mod training;

pub use error::{Error, Result};
