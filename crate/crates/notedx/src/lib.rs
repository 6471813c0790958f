//! notedx: diagnosis prediction from admission notes.
//!
//! A from-scratch text-classification toolkit: clinical-note preprocessing
//! with disease-alias resolution, skip-gram embedding pretraining with
//! subword vectors, a convolutional classifier trained by hand-written
//! backpropagation, tf-idf/PCA baselines, one-vs-rest evaluation with
//! multi-seed aggregation and Welch's t-test, and convolution-filter
//! inspection. A synthetic-corpus generator stands in for restricted
//! clinical data so every experiment runs at desk scale.
//!
//! The `parallel` feature (default) runs corpus maps, minibatch gradients,
//! and embedding training data-parallel via rayon; `--deterministic` (or
//! building without the feature) falls back to bit-reproducible sequential
//! execution.

pub mod baselines;
pub mod binio;
pub mod cnn;
pub mod config;
pub mod embed;
pub mod error;
pub mod interpret;
pub mod metrics;
pub mod textprep;
pub mod vocab;
pub mod nn;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};

/// On-disk format version shared by checkpoints and embedding stores.
pub const FORMAT_VERSION: u32 = 1;
