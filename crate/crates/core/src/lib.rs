//! Inference of AS business relationships from BGP paths.
//!
//! Pipeline: preprocess paths, label links by the valley-free principle,
//! count the valley-free completions of whatever stays open, and turn the
//! resulting share vectors into class probabilities.

pub mod counting;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod format;
pub mod ingest;
pub mod interdep;
pub mod model;
pub mod paths;
pub mod pipeline;
pub mod principle;
pub mod scalar;
pub mod synth;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Features = model::FeatureVector<f64>;
pub type Estimate = model::ProbabilityEstimate<f64>;
pub type Model = model::TrainedModel<f64>;
