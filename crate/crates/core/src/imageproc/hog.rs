use super::filter::sobel_raw;
use crate::data::{FeatureVector, GrayImage};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const L2HYS_CLIP: f64 = 0.2;
const L2HYS_EPS: f64 = 1e-6;

/// HOG layout: square cells, square blocks of cells with a one-cell stride.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HogConfig {
    pub cell_size: usize,
    pub block_size: usize,
    pub bins: usize,
    /// Orientations over `[0, 360)` instead of `[0, 180)`.
    pub signed: bool,
}

impl Default for HogConfig {
    fn default() -> Self {
        HogConfig {
            cell_size: 8,
            block_size: 2,
            bins: 9,
            signed: false,
        }
    }
}

impl HogConfig {
    pub fn validate(&self) -> Result<()> {
        if self.cell_size < 2 {
            return Err(Error::param(format!(
                "HOG cell size {} must be at least 2",
                self.cell_size
            )));
        }
        if self.bins < 2 {
            return Err(Error::param(format!(
                "HOG bin count {} must be at least 2",
                self.bins
            )));
        }
        if self.block_size < 1 {
            return Err(Error::param("HOG block size must be at least 1"));
        }
        Ok(())
    }

    /// Descriptor length for a `width x height` image.
    pub fn descriptor_len(&self, width: usize, height: usize) -> Result<usize> {
        let (cells_x, cells_y) = self.cell_grid(width, height)?;
        let bx = cells_x + 1 - self.block_size;
        let by = cells_y + 1 - self.block_size;
        Ok(bx * by * self.block_size * self.block_size * self.bins)
    }

    fn cell_grid(&self, width: usize, height: usize) -> Result<(usize, usize)> {
        self.validate()?;
        if !width.is_multiple_of(self.cell_size) || !height.is_multiple_of(self.cell_size) {
            return Err(Error::input(format!(
                "image {width}x{height} is not divisible into {}-pixel cells",
                self.cell_size
            )));
        }
        let (cx, cy) = (width / self.cell_size, height / self.cell_size);
        if cx < self.block_size || cy < self.block_size {
            return Err(Error::input(format!(
                "image {width}x{height} has fewer cells than one {}x{} block",
                self.block_size, self.block_size
            )));
        }
        Ok((cx, cy))
    }
}

/// Histogram of oriented gradients with L2-Hys block normalization.
pub fn hog<T: Scalar>(img: &GrayImage<T>, cfg: HogConfig) -> Result<FeatureVector<T>> {
    hog_impl(img, cfg, None)
}

/// As [`hog`], also returning every block after the clip step and before
/// the final renormalization.
pub fn hog_with_trace<T: Scalar>(
    img: &GrayImage<T>,
    cfg: HogConfig,
) -> Result<(FeatureVector<T>, Vec<Vec<T>>)> {
    let mut trace = Vec::new();
    let v = hog_impl(img, cfg, Some(&mut trace))?;
    Ok((v, trace))
}

fn hog_impl<T: Scalar>(
    img: &GrayImage<T>,
    cfg: HogConfig,
    mut trace: Option<&mut Vec<Vec<T>>>,
) -> Result<FeatureVector<T>> {
    let (cells_x, cells_y) = cfg.cell_grid(img.width(), img.height())?;
    let grads = sobel_raw(img)?;
    let mag = grads.magnitude();
    let angle = grads.angle(cfg.signed);
    let bins = cfg.bins;
    let bin_width = T::of(if cfg.signed { 360.0 } else { 180.0 } / bins as f64);

    // Bins are centred on multiples of the bin width and wrap around.
    let mut cells = vec![T::zero(); cells_x * cells_y * bins];
    for y in 0..cells_y * cfg.cell_size {
        for x in 0..cells_x * cfg.cell_size {
            let m = mag.get(x, y);
            if m == T::zero() {
                continue;
            }
            let pos = angle.get(x, y) / bin_width;
            let lower = pos.floor();
            let frac = pos - lower;
            let lo = lower.to_usize().unwrap_or(0) % bins;
            let hi = (lo + 1) % bins;
            let base = ((y / cfg.cell_size) * cells_x + x / cfg.cell_size) * bins;
            cells[base + lo] += m * (T::one() - frac);
            cells[base + hi] += m * frac;
        }
    }

    let bs = cfg.block_size;
    let blocks_x = cells_x + 1 - bs;
    let blocks_y = cells_y + 1 - bs;
    let mut out = Vec::with_capacity(blocks_x * blocks_y * bs * bs * bins);
    let mut block = Vec::with_capacity(bs * bs * bins);
    for by in 0..blocks_y {
        for bx in 0..blocks_x {
            block.clear();
            for cy in by..by + bs {
                for cx in bx..bx + bs {
                    let base = (cy * cells_x + cx) * bins;
                    block.extend_from_slice(&cells[base..base + bins]);
                }
            }
            l2_normalize(&mut block);
            let clip = T::of(L2HYS_CLIP);
            for v in block.iter_mut() {
                *v = v.min(clip);
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(block.clone());
            }
            l2_normalize(&mut block);
            out.extend_from_slice(&block);
        }
    }
    FeatureVector::new(out)
}

fn l2_normalize<T: Scalar>(v: &mut [T]) {
    let eps = T::of(L2HYS_EPS);
    let norm = (v.iter().map(|&x| x * x).sum::<T>() + eps * eps).sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
}
