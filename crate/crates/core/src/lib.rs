//! Faint streak detection on star-camera frames.
//!
//! The pipeline has two stages:
//!
//! 1. **Crude classification** ([`detector`]): every pixel far enough from the
//!    border is described by a 26-dimensional local-contrast vector taken from a
//!    25×25 template split into 5×5 tiles ([`features`]). A linear support
//!    vector classifier ([`classifier`]) labels the template centre, the binary
//!    map is split into 8-connected components and small components are dropped.
//! 2. **Oriented growth** ([`growth`]): each surviving component gets a fitted
//!    direction from a five-layer Gaussian model, and the three central layers
//!    are extended forward and backward while a target hypothesis is more
//!    likely than the background hypothesis.
//!
//! Supporting modules render synthetic trails and labelled training data
//! ([`sim`], [`dataset`]), read and write PGM files ([`pgm`]), measure
//! accuracy and reproduce the template-capability analysis ([`eval`]), and
//! provide a directional matched-filter detector used as a comparison point
//! ([`baseline`]). The [`cli`] module backs the `streaklite` binary.

pub mod baseline;
pub mod classifier;
pub mod cli;
pub mod dataset;
pub mod detector;
pub mod error;
pub mod eval;
pub mod features;
pub mod growth;
pub mod image;
pub mod pgm;
pub mod rng;
pub mod sim;

pub use classifier::{LinearModel, TrainConfig};
pub use detector::Component;
pub use error::{Error, Result};
pub use features::FeatureVector;
pub use growth::{DetectionResult, GrowthConfig};
pub use image::{BackgroundStats, Frame, Mask, NoiseParams};
pub use sim::StreakParams;
