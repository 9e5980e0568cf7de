//! Spatial interpolation and spatial uncertainty quantification.
//!
//! The crate implements ordinary kriging (global and localized, with robust
//! variogram estimation, model selection, and adaptive regularization) and
//! geographically weighted split conformal prediction, together with the
//! evaluation metrics and the frozen preset configurations the CLI exposes.
//!
//! Determinism is a design requirement: every stochastic operation takes an
//! explicit seed and runs on `ChaCha8Rng`, so results reproduce bit-for-bit
//! across platforms and thread counts.

pub mod data;
pub mod error;
pub mod geocp;
pub mod kriging;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod spatial;
pub mod variogram;

mod optimize;
mod stats;

pub use error::{Error, Result};
pub use spatial::{pairwise_distances, KnnIndex, Point2, PointSet};
