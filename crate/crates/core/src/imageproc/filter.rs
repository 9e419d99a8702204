use crate::data::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Normalized 1-D Gaussian kernel of radius `ceil(3 sigma)`.
pub fn gaussian_kernel<T: Scalar>(sigma: f64) -> Result<Vec<T>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param(format!(
            "gaussian sigma {sigma} must be positive"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let weights: Vec<f64> = (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| T::of(w / total)).collect())
}

/// Separable Gaussian blur with replicated borders.
pub fn gaussian_blur<T: Scalar>(img: &GrayImage<T>, sigma: f64) -> Result<GrayImage<T>> {
    let kernel = gaussian_kernel::<T>(sigma)?;
    let radius = (kernel.len() / 2) as isize;
    let horizontal = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, &w)| w * img.get_clamped(x as isize + i as isize - radius, y as isize))
            .sum()
    });
    Ok(GrayImage::from_fn(img.width(), img.height(), |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(i, &w)| w * horizontal.get_clamped(x as isize, y as isize + i as isize - radius))
            .sum()
    }))
}

/// Raw Sobel responses. `gy` is positive when intensity grows downwards.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    pub gx: GrayImage<T>,
    pub gy: GrayImage<T>,
}

impl<T: Scalar> Gradients<T> {
    pub fn magnitude(&self) -> GrayImage<T> {
        GrayImage::from_fn(self.gx.width(), self.gx.height(), |x, y| {
            self.gx.get(x, y).hypot(self.gy.get(x, y))
        })
    }

    /// Orientation in degrees: `[0, 180)` when `signed` is false, else `[0, 360)`.
    pub fn angle(&self, signed: bool) -> GrayImage<T> {
        GrayImage::from_fn(self.gx.width(), self.gx.height(), |x, y| {
            orientation(self.gx.get(x, y), self.gy.get(x, y), signed)
        })
    }
}

pub(crate) fn orientation<T: Scalar>(gx: T, gy: T, signed: bool) -> T {
    let period = T::of(if signed { 360.0 } else { 180.0 });
    let mut deg = gy.atan2(gx).to_degrees();
    while deg < T::zero() {
        deg += period;
    }
    while deg >= period {
        deg -= period;
    }
    deg
}

pub fn sobel_raw<T: Scalar>(img: &GrayImage<T>) -> Result<Gradients<T>> {
    if img.width() < 3 || img.height() < 3 {
        return Err(Error::input(format!(
            "sobel needs at least a 3x3 image, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let two = T::of(2.0);
    let at = |x: usize, y: usize, dx: isize, dy: isize| {
        img.get_clamped(x as isize + dx, y as isize + dy)
    };
    let gx = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        (at(x, y, 1, -1) + two * at(x, y, 1, 0) + at(x, y, 1, 1))
            - (at(x, y, -1, -1) + two * at(x, y, -1, 0) + at(x, y, -1, 1))
    });
    let gy = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        (at(x, y, -1, 1) + two * at(x, y, 0, 1) + at(x, y, 1, 1))
            - (at(x, y, -1, -1) + two * at(x, y, 0, -1) + at(x, y, 1, -1))
    });
    Ok(Gradients { gx, gy })
}

/// Sobel magnitude and unsigned orientation in `[0, 180)` degrees.
pub fn sobel_gradients<T: Scalar>(img: &GrayImage<T>) -> Result<(GrayImage<T>, GrayImage<T>)> {
    let g = sobel_raw(img)?;
    Ok((g.magnitude(), g.angle(false)))
}
