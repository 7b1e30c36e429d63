//! Pixel buffers, masks, image I/O and the transform primitives that the
//! forgery generators are assembled from.
//!
//! Samples are `f64` in `[0, 1]` everywhere; quantization happens only when
//! reading or writing files. All resampling is bilinear with edge clamp.

mod buffer;
pub mod filter;
pub mod io;
mod sample;
mod transform;

pub use buffer::{ImageBuf, Raster, SoftMask};
pub use filter::{gaussian_blur, morphology, motion_blur, sharpen, MorphKind};
pub use io::{load_image, save_image};
pub use sample::resize;
pub(crate) use sample::remap;
pub use transform::{
    affine_warp, cutout, degrade, elastic_warp, masked_blend, photometric, to_gray, AffineParams, Codec,
    Degradation, ElasticParams, PhotometricParams, PixelBox, TransformSpec,
};
