//! Image preprocessing, augmentation, edge detection and HOG features.

mod canny;
mod filter;
mod hog;
mod pnm;
mod transform;

pub use canny::{canny, CannyParams, EdgeMap};
pub use filter::{gaussian_blur, gaussian_kernel, sobel_gradients, sobel_raw, Gradients};
pub use hog::{hog, hog_with_trace, HogConfig};
pub use pnm::{decode_pnm, encode_pgm, read_pnm, write_pgm};
pub use transform::{augment, resize_bilinear, Augmentation};

use crate::data::GrayImage;
use crate::scalar::Scalar;

/// Maps 8-bit intensities in `[0, 255]` to `[0, 1]`.
pub fn normalize_image<T: Scalar>(img: &GrayImage<T>) -> GrayImage<T> {
    let scale = T::of(255.0);
    img.map(|p| p / scale)
}
