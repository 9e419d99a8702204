//! Carriers shared by every pipeline: images, audio, feature vectors and
//! labeled datasets.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Binary class label: 0 = negative/normal/clot-absent, 1 = positive/abnormal/clot-present.
pub type Label = u8;

pub(crate) fn check_label(label: Label) -> Result<()> {
    if label > 1 {
        return Err(Error::input(format!("label {label} is not binary")));
    }
    Ok(())
}

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage<T> {
    width: usize,
    height: usize,
    pixels: Vec<T>,
}

impl<T: Scalar> GrayImage<T> {
    pub fn new(width: usize, height: usize, pixels: Vec<T>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::input(format!(
                "image dimensions {width}x{height} must be positive"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                found: pixels.len(),
            });
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::input("image contains non-finite intensities"));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        GrayImage {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[T] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<T> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> T {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.pixels[y * self.width + x] = value;
    }

    /// Pixel lookup with border replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> T {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.get(cx, cy)
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&p| f(p)).collect(),
        }
    }

    pub fn mean(&self) -> T {
        self.pixels.iter().copied().sum::<T>() / T::of_usize(self.pixels.len())
    }

    /// Location and value of the brightest pixel; the first one in row-major
    /// order wins ties.
    pub fn argmax(&self) -> (usize, usize, T) {
        let (idx, &value) =
            self.pixels
                .iter()
                .enumerate()
                .fold((0, &self.pixels[0]), |best, cur| {
                    if *cur.1 > *best.1 {
                        cur
                    } else {
                        best
                    }
                });
        (idx % self.width, idx / self.width, value)
    }
}

/// Mono waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioSignal<T> {
    samples: Vec<T>,
    sample_rate: u32,
}

impl<T: Scalar> AudioSignal<T> {
    pub fn new(samples: Vec<T>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::input("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::input("audio contains non-finite samples"));
        }
        Ok(AudioSignal {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<T> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Flat, finite feature vector fed to the classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<T>(Vec<T>);

impl<T: Scalar> FeatureVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!("feature {i} is not finite")));
        }
        Ok(FeatureVector(values))
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    /// Concatenates two vectors, `self` first.
    pub fn concat(mut self, other: &FeatureVector<T>) -> Self {
        self.0.extend_from_slice(&other.0);
        self
    }
}

impl<T> Deref for FeatureVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// Binary-labeled samples sharing one feature length.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<T> {
    features: Vec<FeatureVector<T>>,
    labels: Vec<Label>,
}

impl<T: Scalar> LabeledDataset<T> {
    pub fn new(samples: Vec<(FeatureVector<T>, Label)>) -> Result<Self> {
        let (features, labels): (Vec<_>, Vec<_>) = samples.into_iter().unzip();
        Self::from_parts(features, labels)
    }

    pub fn from_parts(features: Vec<FeatureVector<T>>, labels: Vec<Label>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.len(),
                found: labels.len(),
            });
        }
        if let Some(first) = features.first() {
            let dim = first.len();
            if let Some(bad) = features.iter().find(|f| f.len() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.len(),
                });
            }
        }
        for &l in &labels {
            check_label(l)?;
        }
        Ok(LabeledDataset { features, labels })
    }

    /// Builds a dataset from raw rows, validating each as a feature vector.
    pub fn from_rows(rows: Vec<Vec<T>>, labels: Vec<Label>) -> Result<Self> {
        let features = rows
            .into_iter()
            .map(FeatureVector::new)
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(features, labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature length, or 0 for an empty dataset.
    pub fn dim(&self) -> usize {
        self.features.first().map_or(0, |f| f.len())
    }

    pub fn features(&self) -> &[FeatureVector<T>] {
        &self.features
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - pos, pos]
    }

    pub fn has_both_classes(&self) -> bool {
        let [neg, pos] = self.class_counts();
        neg > 0 && pos > 0
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        LabeledDataset {
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}
