use crate::data::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Bilinear resize using the half-pixel-centre convention with clamped borders.
pub fn resize_bilinear<T: Scalar>(
    img: &GrayImage<T>,
    out_w: usize,
    out_h: usize,
) -> Result<GrayImage<T>> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::param(format!(
            "resize target {out_w}x{out_h} has a zero dimension"
        )));
    }
    if out_w == img.width() && out_h == img.height() {
        return Ok(img.clone());
    }
    let sx = T::of_usize(img.width()) / T::of_usize(out_w);
    let sy = T::of_usize(img.height()) / T::of_usize(out_h);
    let half = T::of(0.5);
    Ok(GrayImage::from_fn(out_w, out_h, |x, y| {
        let src_x = (T::of_usize(x) + half) * sx - half;
        let src_y = (T::of_usize(y) + half) * sy - half;
        sample_clamped(img, src_x, src_y)
    }))
}

/// Bilinear sample with coordinates clamped into the image.
fn sample_clamped<T: Scalar>(img: &GrayImage<T>, x: T, y: T) -> T {
    let max_x = T::of_usize(img.width() - 1);
    let max_y = T::of_usize(img.height() - 1);
    bilinear(
        img,
        x.max(T::zero()).min(max_x),
        y.max(T::zero()).min(max_y),
    )
}

/// Bilinear blend of the four neighbours of an in-bounds coordinate.
fn bilinear<T: Scalar>(img: &GrayImage<T>, x: T, y: T) -> T {
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0.to_usize().unwrap_or(0);
    let y0 = y0.to_usize().unwrap_or(0);
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let one = T::one();
    let top = img.get(x0, y0) * (one - fx) + img.get(x1, y0) * fx;
    let bottom = img.get(x0, y1) * (one - fx) + img.get(x1, y1) * fx;
    top * (one - fy) + bottom * fy
}

/// A single deterministic augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Augmentation {
    FlipHorizontal,
    FlipVertical,
    /// Counter-clockwise rotation about the image centre, in degrees.
    Rotate(f64),
    /// Multiply intensities, then clip to `[0, 1]`.
    Brightness(f64),
    /// Centre crop of `1/factor` of each side, resized back. Requires `factor >= 1`.
    Zoom(f64),
}

impl std::str::FromStr for Augmentation {
    type Err = Error;

    /// Parses `flip_h`, `flip_v`, `rotate:DEG`, `brightness:F` or `zoom:F`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let value = || -> Result<f64> {
            arg.ok_or_else(|| Error::param(format!("augmentation `{name}` needs a value")))?
                .parse::<f64>()
                .map_err(|e| Error::param(format!("augmentation `{s}`: {e}")))
        };
        match name {
            "flip_h" => Ok(Augmentation::FlipHorizontal),
            "flip_v" => Ok(Augmentation::FlipVertical),
            "rotate" => Ok(Augmentation::Rotate(value()?)),
            "brightness" => Ok(Augmentation::Brightness(value()?)),
            "zoom" => Ok(Augmentation::Zoom(value()?)),
            other => Err(Error::param(format!("unknown augmentation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Augmentation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Augmentation::FlipHorizontal => f.write_str("flip_h"),
            Augmentation::FlipVertical => f.write_str("flip_v"),
            Augmentation::Rotate(d) => write!(f, "rotate:{d}"),
            Augmentation::Brightness(v) => write!(f, "brightness:{v}"),
            Augmentation::Zoom(v) => write!(f, "zoom:{v}"),
        }
    }
}

pub fn augment<T: Scalar>(img: &GrayImage<T>, aug: Augmentation) -> Result<GrayImage<T>> {
    let (w, h) = (img.width(), img.height());
    match aug {
        Augmentation::FlipHorizontal => Ok(GrayImage::from_fn(w, h, |x, y| img.get(w - 1 - x, y))),
        Augmentation::FlipVertical => Ok(GrayImage::from_fn(w, h, |x, y| img.get(x, h - 1 - y))),
        Augmentation::Rotate(degrees) => {
            if !degrees.is_finite() {
                return Err(Error::param("rotation angle must be finite"));
            }
            Ok(rotate(img, degrees))
        }
        Augmentation::Brightness(factor) => {
            if !(factor > 0.0) || !factor.is_finite() {
                return Err(Error::param(format!(
                    "brightness factor {factor} must be positive"
                )));
            }
            let f = T::of(factor);
            Ok(img.map(|p| (p * f).max(T::zero()).min(T::one())))
        }
        Augmentation::Zoom(factor) => {
            if !(factor >= 1.0) || !factor.is_finite() {
                return Err(Error::param(format!("zoom factor {factor} must be >= 1")));
            }
            Ok(zoom(img, factor))
        }
    }
}

fn rotate<T: Scalar>(img: &GrayImage<T>, degrees: f64) -> GrayImage<T> {
    let turns = degrees / 90.0;
    if turns == turns.round() {
        return match (turns as i64).rem_euclid(4) {
            0 => img.clone(),
            1 => rotate90(img),
            2 => rotate90(&rotate90(img)),
            _ => rotate90(&rotate90(&rotate90(img))),
        };
    }
    let (w, h) = (img.width(), img.height());
    let theta = degrees.to_radians();
    let (sin, cos) = (T::of(theta.sin()), T::of(theta.cos()));
    let cx = T::of((w as f64 - 1.0) / 2.0);
    let cy = T::of((h as f64 - 1.0) / 2.0);
    let max_x = T::of_usize(w - 1);
    let max_y = T::of_usize(h - 1);
    let slack = T::of(1e-9);
    GrayImage::from_fn(w, h, |x, y| {
        let dx = T::of_usize(x) - cx;
        let dy = T::of_usize(y) - cy;
        // Inverse of the counter-clockwise map (y axis pointing down).
        let sx = dx * cos - dy * sin + cx;
        let sy = dx * sin + dy * cos + cy;
        if sx < -slack || sy < -slack || sx > max_x + slack || sy > max_y + slack {
            T::zero()
        } else {
            bilinear(
                img,
                sx.max(T::zero()).min(max_x),
                sy.max(T::zero()).min(max_y),
            )
        }
    })
}

/// Exact 90-degree counter-clockwise rotation; swaps width and height.
fn rotate90<T: Scalar>(img: &GrayImage<T>) -> GrayImage<T> {
    let (w, h) = (img.width(), img.height());
    GrayImage::from_fn(h, w, |x, y| img.get(w - 1 - y, x))
}

fn zoom<T: Scalar>(img: &GrayImage<T>, factor: f64) -> GrayImage<T> {
    let (w, h) = (img.width(), img.height());
    let crop_w = w as f64 / factor;
    let crop_h = h as f64 / factor;
    let x0 = (w as f64 - crop_w) / 2.0;
    let y0 = (h as f64 - crop_h) / 2.0;
    let (sx, sy) = (crop_w / w as f64, crop_h / h as f64);
    GrayImage::from_fn(w, h, |x, y| {
        let src_x = x0 + (x as f64 + 0.5) * sx - 0.5;
        let src_y = y0 + (y as f64 + 0.5) * sy - 0.5;
        sample_clamped(img, T::of(src_x), T::of(src_y))
    })
}
