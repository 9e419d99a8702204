//! Synthetic thermal frames: a vertical vessel with an axial temperature
//! gradient, an optional Gaussian clot hotspot on the vessel centreline,
//! and pixel noise.

use crate::data::{GrayImage, Label};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::scalar::Scalar;

const BACKGROUND: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalConfig {
    pub width: usize,
    pub height: usize,
    pub vessel_width: f64,
    pub base_temp: f64,
    /// Intensity added per row along the vessel.
    pub axial_gradient: f64,
    /// Hotspot peak; negative values model a cold spot.
    pub clot_amplitude: f64,
    pub clot_sigma: f64,
    pub noise_sigma: f64,
    /// Minimum distance from the border for the vessel column and hotspot.
    pub clot_margin: usize,
}

impl Default for ThermalConfig {
    fn default() -> Self {
        ThermalConfig {
            width: 128,
            height: 128,
            vessel_width: 12.0,
            base_temp: 0.45,
            axial_gradient: 0.0008,
            clot_amplitude: 0.25,
            clot_sigma: 6.0,
            noise_sigma: 0.03,
            clot_margin: 16,
        }
    }
}

impl ThermalConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vessel_width", self.vessel_width),
            ("base_temp", self.base_temp),
            ("axial_gradient", self.axial_gradient),
            ("clot_sigma", self.clot_sigma),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(format!(
                    "thermal {name} must be positive, got {v}"
                )));
            }
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::param(format!(
                "thermal noise_sigma {} must be non-negative",
                self.noise_sigma
            )));
        }
        if self.clot_amplitude == 0.0 || !self.clot_amplitude.is_finite() {
            return Err(Error::param(
                "thermal clot_amplitude must be finite and non-zero",
            ));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("thermal image dimensions must be positive"));
        }
        if self.clot_sigma >= self.width.min(self.height) as f64 / 4.0 {
            return Err(Error::param(format!(
                "clot_sigma {} must be below a quarter of the smaller image side",
                self.clot_sigma
            )));
        }
        if 2 * self.clot_margin >= self.width.min(self.height) {
            return Err(Error::param(format!(
                "clot_margin {} leaves no room for the scene",
                self.clot_margin
            )));
        }
        Ok(())
    }
}

/// Random scene geometry, independent of the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThermalScene {
    pub vessel_column: usize,
    pub hotspot_row: usize,
}

impl ThermalScene {
    /// Draws the vessel column and the hotspot row uniformly within the margins.
    pub fn draw(cfg: &ThermalConfig, rng: &mut Rng) -> Self {
        let m = cfg.clot_margin;
        let vessel_column = m + rng.below(cfg.width - 2 * m);
        let hotspot_row = m + rng.below(cfg.height - 2 * m);
        ThermalScene {
            vessel_column,
            hotspot_row,
        }
    }

    /// Noise-free intensity at `(x, y)` before clipping.
    pub fn clean_value(&self, cfg: &ThermalConfig, label: Label, x: usize, y: usize) -> f64 {
        let dx = x as f64 - self.vessel_column as f64;
        let half = cfg.vessel_width / 2.0;
        let mut v = BACKGROUND;
        if dx.abs() <= half {
            let centre = cfg.base_temp + cfg.axial_gradient * y as f64;
            v += (centre - BACKGROUND) * (std::f64::consts::PI * dx / cfg.vessel_width).cos();
        }
        if label == 1 {
            let dy = y as f64 - self.hotspot_row as f64;
            v += cfg.clot_amplitude
                * (-(dx * dx + dy * dy) / (2.0 * cfg.clot_sigma * cfg.clot_sigma)).exp();
        }
        v
    }

    /// Renders one frame, drawing per-pixel noise from `rng` in row-major order.
    pub fn render<T: Scalar>(
        &self,
        cfg: &ThermalConfig,
        label: Label,
        rng: &mut Rng,
    ) -> GrayImage<T> {
        GrayImage::from_fn(cfg.width, cfg.height, |x, y| {
            let mut v = self.clean_value(cfg, label, x, y);
            if cfg.noise_sigma > 0.0 {
                v += cfg.noise_sigma * rng.gaussian();
            }
            T::of(v.clamp(0.0, 1.0))
        })
    }
}

fn check_label(label: Label) -> Result<()> {
    crate::data::check_label(label)
}

/// One synthetic frame in `[0, 1]`.
pub fn generate_sample<T: Scalar>(
    cfg: &ThermalConfig,
    label: Label,
    rng: &mut Rng,
) -> Result<GrayImage<T>> {
    cfg.validate()?;
    check_label(label)?;
    let scene = ThermalScene::draw(cfg, rng);
    Ok(scene.render(cfg, label, rng))
}

/// A static-camera clip: one scene, independent noise per frame.
pub fn generate_frame_sequence<T: Scalar>(
    cfg: &ThermalConfig,
    label: Label,
    n_frames: usize,
    rng: &mut Rng,
) -> Result<Vec<GrayImage<T>>> {
    cfg.validate()?;
    check_label(label)?;
    if n_frames == 0 {
        return Err(Error::param("frame sequence needs at least one frame"));
    }
    let scene = ThermalScene::draw(cfg, rng);
    Ok((0..n_frames)
        .map(|_| scene.render(cfg, label, rng))
        .collect())
}

/// Label and per-sample seed of one generated item. The image (or frame
/// sequence) is reproduced by seeding a fresh [`Rng`] with `seed`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleSpec {
    pub label: Label,
    pub seed: u64,
}

/// Exactly `round(n * positive_fraction)` positives, shuffled by `rng`,
/// each with its own seed drawn from `rng`.
pub fn plan_dataset(n: usize, positive_fraction: f64, rng: &mut Rng) -> Result<Vec<SampleSpec>> {
    if n == 0 {
        return Err(Error::param("dataset size must be positive"));
    }
    if !(0.0..=1.0).contains(&positive_fraction) {
        return Err(Error::param(format!(
            "positive fraction {positive_fraction} must lie in [0, 1]"
        )));
    }
    let positives = (n as f64 * positive_fraction).round() as usize;
    let mut labels: Vec<Label> = (0..n).map(|i| u8::from(i < positives)).collect();
    rng.shuffle(&mut labels);
    Ok(labels
        .into_iter()
        .map(|label| SampleSpec {
            label,
            seed: rng.next_u64(),
        })
        .collect())
}

pub fn generate_dataset<T: Scalar>(
    cfg: &ThermalConfig,
    n: usize,
    positive_fraction: f64,
    rng: &mut Rng,
) -> Result<Vec<(GrayImage<T>, Label)>> {
    cfg.validate()?;
    plan_dataset(n, positive_fraction, rng)?
        .into_iter()
        .map(|s| {
            Ok((
                generate_sample(cfg, s.label, &mut Rng::new(s.seed))?,
                s.label,
            ))
        })
        .collect()
}
