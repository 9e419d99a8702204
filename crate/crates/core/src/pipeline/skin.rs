//! Skin image preprocessing and a HOG + SVM stand-in classifier.
//!
//! The stand-in only exercises the pipeline end to end; it is not the
//! fine-tuned CNN whose results the skin module is usually quoted for.

use rayon::prelude::*;

use super::clot::{resize_to, svm_params_for};
use super::config::PipelineConfig;
use crate::data::{FeatureVector, GrayImage, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::imageproc::{augment, hog, normalize_image, Augmentation, HogConfig};
use crate::ml::{svm_predict, train_svm_smo, SvmModel};

/// Name used for stand-in results in every report.
pub const SKIN_STANDIN_NAME: &str = "skin STAND-IN (HOG+SVM, not the CNN)";

/// Resize to the skin size, scale 8-bit intensities to `[0, 1]`, then return
/// the image followed by one augmented copy per spec.
pub fn skin_preprocess(
    img: &GrayImage<f64>,
    augmentations: &[Augmentation],
    cfg: &PipelineConfig,
) -> Result<Vec<GrayImage<f64>>> {
    let base = normalize_image(&resize_to(img, cfg.skin_size)?);
    let mut out = Vec::with_capacity(augmentations.len() + 1);
    for &a in augmentations {
        out.push(augment(&base, a)?);
    }
    out.insert(0, base);
    Ok(out)
}

pub fn skin_hog_config(cfg: &PipelineConfig) -> HogConfig {
    HogConfig {
        cell_size: cfg.skin_hog_cell,
        ..cfg.hog
    }
}

/// HOG descriptor of an already preprocessed `[0, 1]` image.
pub fn skin_features(
    preprocessed: &GrayImage<f64>,
    cfg: &PipelineConfig,
) -> Result<FeatureVector<f64>> {
    hog(preprocessed, skin_hog_config(cfg))
}

/// Trains on every image plus its `cfg.skin_augment` copies.
pub fn skin_train(
    train: &[(GrayImage<f64>, Label)],
    cfg: &PipelineConfig,
) -> Result<SvmModel<f64>> {
    if !train.iter().any(|s| s.1 == 0) || !train.iter().any(|s| s.1 == 1) {
        return Err(Error::SingleClass);
    }
    let expanded: Vec<Vec<(FeatureVector<f64>, Label)>> = train
        .par_iter()
        .map(|(img, label)| {
            skin_preprocess(img, &cfg.skin_augment, cfg)?
                .iter()
                .map(|p| Ok((skin_features(p, cfg)?, *label)))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let data = LabeledDataset::new(expanded.into_iter().flatten().collect())?;
    train_svm_smo(&data, &svm_params_for(&data, cfg))
}

/// Classifies the un-augmented preprocessed image.
pub fn skin_standin_classify(
    model: &SvmModel<f64>,
    img: &GrayImage<f64>,
    cfg: &PipelineConfig,
) -> Result<(f64, Label)> {
    let pre = skin_preprocess(img, &[], cfg)?;
    svm_predict(model, &skin_features(&pre[0], cfg)?)
}
