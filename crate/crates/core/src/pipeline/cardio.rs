//! Heart and lung sound classification: wavelet denoising, MFCC summary
//! features and a random forest.

use rayon::prelude::*;

use super::clot::vote_sequence;
use super::config::{Aggregation, PipelineConfig};
use crate::audioproc::{aggregate_features, wavelet_denoise, MfccExtractor};
use crate::data::{AudioSignal, FeatureVector, Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::ml::{forest_predict, train_random_forest, ForestModel};

/// Mean and standard deviation of each MFCC over one recording.
pub fn cardio_features(sig: &AudioSignal<f64>, cfg: &PipelineConfig) -> Result<FeatureVector<f64>> {
    let denoised = wavelet_denoise(sig, cfg.denoise_levels)?;
    let extractor = MfccExtractor::new(cfg.mfcc, sig.sample_rate())?;
    aggregate_features(&extractor.extract(&denoised)?)
}

/// Splits a recording into consecutive `segment_seconds` pieces. A trailing
/// piece shorter than one MFCC frame is dropped; a recording shorter than
/// one segment is a single piece.
pub fn segments(sig: &AudioSignal<f64>, cfg: &PipelineConfig) -> Result<Vec<AudioSignal<f64>>> {
    let seg = ((cfg.segment_seconds * f64::from(sig.sample_rate())).round() as usize).max(1);
    let min_len = cfg.mfcc.frame_samples(sig.sample_rate());
    sig.samples()
        .chunks(seg)
        .enumerate()
        .filter(|(i, c)| *i == 0 || c.len() >= min_len)
        .map(|(_, c)| AudioSignal::new(c.to_vec(), sig.sample_rate()))
        .collect()
}

/// Feature vectors for one recording: one per recording or one per segment.
pub fn cardio_feature_rows(
    sig: &AudioSignal<f64>,
    cfg: &PipelineConfig,
) -> Result<Vec<FeatureVector<f64>>> {
    match cfg.aggregation {
        Aggregation::MeanStd => Ok(vec![cardio_features(sig, cfg)?]),
        Aggregation::SegmentVote => segments(sig, cfg)?
            .iter()
            .map(|s| cardio_features(s, cfg))
            .collect(),
    }
}

fn check_lengths(recordings: &[&AudioSignal<f64>], cfg: &PipelineConfig) -> Result<()> {
    let short: Vec<usize> = recordings
        .iter()
        .enumerate()
        .filter(|(_, r)| r.len() < cfg.mfcc.frame_samples(r.sample_rate()))
        .map(|(i, _)| i)
        .collect();
    if short.is_empty() {
        Ok(())
    } else {
        Err(Error::ShortRecordings(short))
    }
}

pub fn cardio_train(
    recordings: &[(AudioSignal<f64>, Label)],
    cfg: &PipelineConfig,
) -> Result<ForestModel<f64>> {
    let signals: Vec<&AudioSignal<f64>> = recordings.iter().map(|(s, _)| s).collect();
    check_lengths(&signals, cfg)?;
    let labels: Vec<Label> = recordings.iter().map(|(_, l)| *l).collect();
    // Fewer than two recordings cannot hold both classes.
    if !labels.contains(&0) || !labels.contains(&1) {
        return Err(Error::SingleClass);
    }
    let rows: Vec<Vec<FeatureVector<f64>>> = signals
        .par_iter()
        .map(|s| cardio_feature_rows(s, cfg))
        .collect::<Result<_>>()?;
    let mut features = Vec::new();
    let mut row_labels = Vec::new();
    for (recording_rows, label) in rows.into_iter().zip(labels) {
        row_labels.extend(std::iter::repeat_n(label, recording_rows.len()));
        features.extend(recording_rows);
    }
    train_random_forest(
        &LabeledDataset::from_parts(features, row_labels)?,
        &cfg.forest,
    )
}

/// Positive-vote fraction and label. With segment voting the probability
/// is the mean over segments and the label comes from sliding-window votes
/// over segment labels.
pub fn cardio_predict(
    model: &ForestModel<f64>,
    recording: &AudioSignal<f64>,
    cfg: &PipelineConfig,
) -> Result<(f64, Label)> {
    check_lengths(&[recording], cfg)?;
    let scored: Vec<(f64, Label)> = cardio_feature_rows(recording, cfg)?
        .iter()
        .map(|x| forest_predict(model, x))
        .collect::<Result<_>>()?;
    if let [single] = scored[..] {
        return Ok(single);
    }
    let prob = scored.iter().map(|s| s.0).sum::<f64>() / scored.len() as f64;
    let labels: Vec<Label> = scored.iter().map(|s| s.1).collect();
    Ok((prob, vote_sequence(&labels, cfg.window)?.0))
}
