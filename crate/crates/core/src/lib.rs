//! Multimodal pre-diagnostic toolkit.
//!
//! Three classical pipelines share the building blocks in this crate:
//!
//! * thermal blood-clot detection: Canny edges and HOG descriptors fed to an
//!   RBF-kernel SVM trained with SMO, with sliding-window voting over frames;
//! * cardiopulmonary audio: wavelet denoising, MFCC features and a random
//!   forest;
//! * skin images: resizing, normalization and augmentation, plus a HOG + SVM
//!   stand-in classifier.
//!
//! The numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the double-precision types used by the pipelines, model files
//! and CLI.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audioproc;
pub mod data;
pub mod error;
pub mod eval;
pub mod imageproc;
pub mod ml;
pub mod persist;
pub mod pipeline;
pub mod rng;
pub mod scalar;
pub mod synththermal;

pub use data::{AudioSignal, FeatureVector, GrayImage, Label, LabeledDataset};
pub use error::{Error, Result};
pub use rng::Rng;
pub use scalar::Scalar;

pub type Image = GrayImage<f64>;
pub type Image32 = GrayImage<f32>;
pub type Signal = AudioSignal<f64>;
pub type Signal32 = AudioSignal<f32>;
pub type Features = FeatureVector<f64>;
pub type Features32 = FeatureVector<f32>;
pub type Dataset = LabeledDataset<f64>;
pub type Dataset32 = LabeledDataset<f32>;
pub type Svm = ml::SvmModel<f64>;
pub type Forest = ml::ForestModel<f64>;
