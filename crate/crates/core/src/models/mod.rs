//! The five-layer latent-resolution CNN, applied either to 64×64 patches
//! or fully convolutionally to whole images, and the propagation of corner
//! masks through its crops and pools.

mod arch;
mod mask;
mod model;

pub use arch::{shape_fn, Architecture, LayerDesc, ModelKind, PATCH, STRIDE};
pub use mask::{mask_locations, propagate_mask};
pub use model::{argmax_class, Model, OutputMap};
