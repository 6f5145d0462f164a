//! Feature extraction for interval-valued time series.
//!
//! An interval series is split into center and range components, windows of
//! each component are turned into images (recurrence plot, Gramian angular
//! summation/difference fields, Markov transition field), a small residual
//! CNN is trained to tell the four encodings apart, and its penultimate
//! activations are used as regression features for one-step forecasting.

pub mod dataset;
pub mod dgp;
pub mod error;
pub mod fen;
pub mod imaging;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod regress;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
