//! Thermal clot detection: Canny + HOG descriptors, RBF SVM, and sliding
//! majority voting over frame sequences.

use rayon::prelude::*;

use super::config::{HogView, PipelineConfig};
use crate::data::{FeatureVector, GrayImage, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::imageproc::{canny, gaussian_blur, hog, normalize_image, resize_bilinear};
use crate::ml::{
    majority_vote, scale_gamma, sliding_window_vote, svm_predict, train_svm_smo, SmoParams,
    SvmModel,
};

/// Maps a `[0, 1]` image onto the 8-bit scale exactly as writing and
/// re-reading a PGM would.
pub fn quantize_8bit(img: &GrayImage<f64>) -> GrayImage<f64> {
    img.map(|v| (v * 255.0).round().clamp(0.0, 255.0))
}

pub(crate) fn resize_to(img: &GrayImage<f64>, size: usize) -> Result<GrayImage<f64>> {
    if img.width() == size && img.height() == size {
        Ok(img.clone())
    } else {
        resize_bilinear(img, size, size)
    }
}

pub fn clot_feature_len(cfg: &PipelineConfig) -> Result<usize> {
    let one = cfg.hog.descriptor_len(cfg.clot_size, cfg.clot_size)?;
    Ok(if cfg.hog_view == HogView::Both {
        2 * one
    } else {
        one
    })
}

/// Descriptor of one frame given on the 8-bit intensity scale: resize,
/// scale to `[0, 1]`, then HOG of the Canny edge map and/or of the blurred
/// intensities (edge view first).
pub fn clot_features(img: &GrayImage<f64>, cfg: &PipelineConfig) -> Result<FeatureVector<f64>> {
    let norm = normalize_image(&resize_to(img, cfg.clot_size)?);
    let edge =
        || -> Result<FeatureVector<f64>> { hog(&canny(&norm, cfg.canny)?.to_image(), cfg.hog) };
    let intensity =
        || -> Result<FeatureVector<f64>> { hog(&gaussian_blur(&norm, cfg.canny.sigma)?, cfg.hog) };
    match cfg.hog_view {
        HogView::Edge => edge(),
        HogView::Intensity => intensity(),
        HogView::Both => Ok(edge()?.concat(&intensity()?)),
    }
}

/// Features for many frames, computed in parallel in input order.
pub fn clot_feature_matrix(
    images: &[&GrayImage<f64>],
    cfg: &PipelineConfig,
) -> Result<Vec<FeatureVector<f64>>> {
    images
        .par_iter()
        .map(|img| clot_features(img, cfg))
        .collect()
}

pub fn svm_params_for(data: &LabeledDataset<f64>, cfg: &PipelineConfig) -> SmoParams {
    SmoParams {
        c: cfg.svm.c,
        gamma: cfg.svm.gamma.unwrap_or_else(|| scale_gamma(data)),
        tol: cfg.svm.tol,
        max_passes: cfg.svm.max_passes,
        cache_rows: cfg.svm.cache_rows,
    }
}

pub fn clot_train(
    train: &[(GrayImage<f64>, Label)],
    cfg: &PipelineConfig,
) -> Result<SvmModel<f64>> {
    // Fewer than two samples cannot hold both classes.
    if !train.iter().any(|s| s.1 == 0) || !train.iter().any(|s| s.1 == 1) {
        return Err(Error::SingleClass);
    }
    let images: Vec<&GrayImage<f64>> = train.iter().map(|(img, _)| img).collect();
    let labels: Vec<Label> = train.iter().map(|(_, l)| *l).collect();
    let data = LabeledDataset::from_parts(clot_feature_matrix(&images, cfg)?, labels)?;
    train_svm_smo(&data, &svm_params_for(&data, cfg))
}

pub fn clot_predict_frame(
    model: &SvmModel<f64>,
    img: &GrayImage<f64>,
    cfg: &PipelineConfig,
) -> Result<(f64, Label)> {
    svm_predict(model, &clot_features(img, cfg)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePrediction {
    pub label: Label,
    /// Mean per-frame decision value.
    pub score: f64,
    pub frame_labels: Vec<Label>,
    /// Sliding-window outputs; empty when the sequence is shorter than the window.
    pub window_labels: Vec<Label>,
}

/// Majority over sliding-window votes; sequences shorter than the window
/// fall back to a plain majority of frame labels.
pub fn vote_sequence(frame_labels: &[Label], window: usize) -> Result<(Label, Vec<Label>)> {
    if frame_labels.is_empty() {
        return Err(Error::input("cannot classify an empty sequence"));
    }
    if frame_labels.len() < window {
        return Ok((majority_vote(frame_labels)?, Vec::new()));
    }
    let windows = sliding_window_vote(frame_labels, window)?;
    Ok((majority_vote(&windows)?, windows))
}

pub fn clot_predict_sequence(
    model: &SvmModel<f64>,
    frames: &[GrayImage<f64>],
    cfg: &PipelineConfig,
) -> Result<SequencePrediction> {
    if frames.is_empty() {
        return Err(Error::input("cannot classify an empty sequence"));
    }
    let scored: Vec<(f64, Label)> = frames
        .par_iter()
        .map(|f| clot_predict_frame(model, f, cfg))
        .collect::<Result<_>>()?;
    let frame_labels: Vec<Label> = scored.iter().map(|s| s.1).collect();
    let score = scored.iter().map(|s| s.0).sum::<f64>() / scored.len() as f64;
    let (label, window_labels) = vote_sequence(&frame_labels, cfg.window)?;
    Ok(SequencePrediction {
        label,
        score,
        frame_labels,
        window_labels,
    })
}
