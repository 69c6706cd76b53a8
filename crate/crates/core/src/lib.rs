//! Latent resolution prediction for upscaled images and videos.
//!
//! The crate is organised bottom-up:
//!
//! - [`numkernel`]: a small differentiable tensor kernel (valid convolution,
//!   max-pooling, batch normalization, ReLU, losses, SGD and Adam).
//! - [`imaging`]: luma planes, resampling, the down/up degradation and Harris
//!   corners with non-maximal suppression.
//! - [`synth`]: labeled dataset synthesis, manifests and patch shards.
//! - [`models`]: the fixed five-layer CNN applied to patches or as a fully
//!   convolutional network, plus corner-mask propagation.
//! - [`aggregate`]: nearest-rank percentile aggregation per image and video.
//! - [`baselines`]: sorted output-map features and four classical classifiers.
//! - [`traineval`]: training schedules, metrics, ablations and sweeps.
//! - [`config`]: the key-value run configuration stamped into every artifact.

pub mod aggregate;
pub mod baselines;
pub mod config;
pub mod error;
pub mod imaging;
pub mod models;
pub mod numkernel;
pub mod synth;
pub mod traineval;

pub use error::{Error, Result};
