//! Luma planes, resampling, the down/up degradation pipeline and Harris
//! corner detection.

mod corners;
mod plane;
mod resample;

pub use corners::{detect_corners, harris, nms, Corner, CornerConfig, CornerSet, Mask, ResponseMap};
pub use plane::{load_image, save_png, LoadedImage, Plane};
pub use resample::{degrade, resample, ResampleMethod, DEGRADE_MIN_DIM};
