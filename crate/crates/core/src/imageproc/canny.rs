use std::collections::VecDeque;

use super::filter::{gaussian_blur, orientation, sobel_raw};
use crate::data::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary edge mask with the dimensions of its source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl EdgeMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x] == 1
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p == 1).count()
    }

    /// The mask as a `{0, 1}` image.
    pub fn to_image<T: Scalar>(&self) -> GrayImage<T> {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            if self.is_edge(x, y) {
                T::one()
            } else {
                T::zero()
            }
        })
    }
}

/// Canny thresholds, expressed on gradient magnitudes of a `[0, 1]` image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CannyParams {
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        CannyParams {
            sigma: 1.4,
            low: 0.05,
            high: 0.15,
        }
    }
}

impl CannyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) {
            return Err(Error::param(format!(
                "canny sigma {} must be positive",
                self.sigma
            )));
        }
        if !(self.low > 0.0 && self.low < self.high) {
            return Err(Error::param(format!(
                "canny thresholds need 0 < low < high, got low={} high={}",
                self.low, self.high
            )));
        }
        Ok(())
    }
}

/// Blur, Sobel, non-maximum suppression along four quantized directions,
/// double threshold and 8-connected hysteresis.
pub fn canny<T: Scalar>(img: &GrayImage<T>, params: CannyParams) -> Result<EdgeMap> {
    params.validate()?;
    let blurred = gaussian_blur(img, params.sigma)?;
    let grads = sobel_raw(&blurred)?;
    let mag = grads.magnitude();
    let (w, h) = (img.width(), img.height());

    let mut thin = vec![T::zero(); w * h];
    for y in 0..h {
        for x in 0..w {
            let m = mag.get(x, y);
            if m == T::zero() {
                continue;
            }
            let angle = orientation(grads.gx.get(x, y), grads.gy.get(x, y), false).to_f64_lossy();
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let behind = mag.get_clamped(x as isize - dx, y as isize - dy);
            let ahead = mag.get_clamped(x as isize + dx, y as isize + dy);
            // Asymmetric comparison keeps exactly one pixel of a flat two-pixel ridge.
            if m >= behind && m > ahead {
                thin[y * w + x] = m;
            }
        }
    }

    let (low, high) = (T::of(params.low), T::of(params.high));
    let mut pixels = vec![0u8; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in thin.iter().enumerate() {
        if m >= high {
            pixels[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if pixels[j] == 0 && thin[j] >= low {
                    pixels[j] = 1;
                    queue.push_back(j);
                }
            }
        }
    }
    Ok(EdgeMap {
        width: w,
        height: h,
        pixels,
    })
}
