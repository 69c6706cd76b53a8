//! Minimal differentiable tensor kernel.
//!
//! Every layer is a pair of explicit forward/backward functions over NCHW
//! tensors. There is no autodiff graph; [`network::Network`] chains the layers
//! of a fixed stack and replays them in reverse.

mod batchnorm;
mod checkpoint;
mod conv;
mod loss;
mod network;
mod optim;
mod parallel;
mod pool;
mod real;
mod relu;
mod tensor;

pub use batchnorm::{batchnorm, batchnorm_backward, BatchNormCache, BatchNormParams};
pub use checkpoint::{read_checkpoint, write_checkpoint, Record, RecordData};
pub use conv::{conv2d, conv2d_backward, ConvGrads};
pub use loss::{mse_loss, softmax, softmax_xent};
pub use network::{seeded_rng, LayerGrads, LayerParams, Mode, Network, Step};
pub use optim::{OptimizerKind, OptimizerState};
pub use parallel::{deterministic, parallel_map, set_deterministic};
pub use pool::{maxpool2, maxpool2_backward, PoolIndices};
pub use real::Real;
pub use relu::{relu, relu_backward};
pub use tensor::{Shape4, Tensor};
