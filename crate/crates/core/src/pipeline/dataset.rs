//! On-disk datasets: a directory of PGM/PPM or WAV files plus
//! `manifest.csv` with columns `filename,label,seed`.
//!
//! A manifest entry naming a directory is a frame sequence; its frames are
//! the `.pgm`/`.ppm` files inside, in file-name order. The seed column may
//! be empty for external data.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::clot::quantize_8bit;
use super::config::CardioTask;
use super::synthcardio::{quantize_pcm16, synth_cardio_sample};
use crate::audioproc::{read_wav, write_wav};
use crate::data::{check_label, AudioSignal, GrayImage, Label};
use crate::error::{Error, Result};
use crate::imageproc::{read_pnm, write_pgm};
use crate::rng::Rng;
use crate::synththermal::{generate_frame_sequence, generate_sample, plan_dataset, ThermalConfig};

pub const MANIFEST_NAME: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub filename: String,
    pub label: Label,
    pub seed: Option<u64>,
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_NAME);
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&path)
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
    if headers.iter().collect::<Vec<_>>() != ["filename", "label", "seed"] {
        return Err(Error::format(format!(
            "{}: header must be `filename,label,seed`",
            path.display()
        )));
    }
    let entries = reader
        .deserialize()
        .map(|row| {
            let entry: ManifestEntry =
                row.map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
            check_label(entry.label)
                .map_err(|e| Error::format(format!("{}: {e}", path.display())))?;
            Ok(entry)
        })
        .collect::<Result<Vec<_>>>()?;
    if entries.is_empty() {
        return Err(Error::format(format!("{}: no entries", path.display())));
    }
    Ok(entries)
}

pub fn write_manifest(dir: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let path = dir.join(MANIFEST_NAME);
    let mut writer = csv::Writer::from_path(&path).map_err(|e| Error::format(e.to_string()))?;
    for e in entries {
        writer
            .serialize(e)
            .map_err(|e| Error::format(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

/// One labelled visual input.
#[derive(Debug, Clone, PartialEq)]
pub enum ImageItem {
    Frame(GrayImage<f64>),
    Sequence(Vec<GrayImage<f64>>),
}

impl ImageItem {
    pub fn frames(&self) -> &[GrayImage<f64>] {
        match self {
            ImageItem::Frame(f) => std::slice::from_ref(f),
            ImageItem::Sequence(s) => s,
        }
    }
}

fn is_image(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("pgm" | "ppm"))
}

/// Frames of a sequence directory in file-name order.
pub fn load_frames(dir: &Path) -> Result<Vec<GrayImage<f64>>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()?;
    paths.retain(|p| is_image(p));
    paths.sort();
    if paths.is_empty() {
        return Err(Error::format(format!(
            "{}: no .pgm or .ppm frames",
            dir.display()
        )));
    }
    paths.iter().map(read_pnm).collect()
}

pub fn load_image_item(path: &Path) -> Result<ImageItem> {
    if path.is_dir() {
        Ok(ImageItem::Sequence(load_frames(path)?))
    } else {
        Ok(ImageItem::Frame(read_pnm(path)?))
    }
}

pub fn load_image_dataset(dir: &Path) -> Result<Vec<(ImageItem, Label)>> {
    read_manifest(dir)?
        .par_iter()
        .map(|e| Ok((load_image_item(&dir.join(&e.filename))?, e.label)))
        .collect()
}

pub fn load_audio_dataset(dir: &Path) -> Result<Vec<(AudioSignal<f64>, Label)>> {
    read_manifest(dir)?
        .par_iter()
        .map(|e| Ok((read_wav(dir.join(&e.filename))?, e.label)))
        .collect()
}

/// Synthetic thermal items exactly as they read back from disk (8-bit),
/// with their manifest entries. `frames` of `Some(k)` makes each item a
/// `k`-frame sequence.
pub fn synth_thermal_items(
    cfg: &ThermalConfig,
    n: usize,
    positive_fraction: f64,
    seed: u64,
    frames: Option<usize>,
) -> Result<Vec<(ImageItem, ManifestEntry)>> {
    cfg.validate()?;
    let plan = plan_dataset(n, positive_fraction, &mut Rng::new(seed))?;
    plan.par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = Rng::new(s.seed);
            let (item, filename) = match frames {
                None => (
                    ImageItem::Frame(quantize_8bit(&generate_sample(cfg, s.label, &mut rng)?)),
                    format!("thermal_{i:05}.pgm"),
                ),
                Some(k) => {
                    let seq = generate_frame_sequence::<f64>(cfg, s.label, k, &mut rng)?;
                    (
                        ImageItem::Sequence(seq.iter().map(quantize_8bit).collect()),
                        format!("sequence_{i:05}"),
                    )
                }
            };
            Ok((
                item,
                ManifestEntry {
                    filename,
                    label: s.label,
                    seed: Some(s.seed),
                },
            ))
        })
        .collect()
}

pub fn write_thermal_dataset(dir: &Path, items: &[(ImageItem, ManifestEntry)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    items
        .par_iter()
        .try_for_each(|(item, entry)| -> Result<()> {
            let path = dir.join(&entry.filename);
            match item {
                ImageItem::Frame(img) => write_pgm(path, img),
                ImageItem::Sequence(frames) => {
                    fs::create_dir_all(&path)?;
                    frames
                        .iter()
                        .enumerate()
                        .try_for_each(|(k, f)| write_pgm(path.join(format!("frame_{k:03}.pgm")), f))
                }
            }
        })?;
    let entries: Vec<ManifestEntry> = items.iter().map(|(_, e)| e.clone()).collect();
    write_manifest(dir, &entries)
}

/// Synthetic recordings, half positive, exactly as they read back from
/// disk (PCM16).
pub fn synth_cardio_items(
    task: CardioTask,
    n: usize,
    seed: u64,
    sample_rate: u32,
    duration_s: f64,
) -> Result<Vec<(AudioSignal<f64>, ManifestEntry)>> {
    let plan = plan_dataset(n, 0.5, &mut Rng::new(seed))?;
    plan.par_iter()
        .enumerate()
        .map(|(i, s)| {
            let sig = synth_cardio_sample(
                task,
                s.label,
                duration_s,
                sample_rate,
                &mut Rng::new(s.seed),
            )?;
            let filename = format!("{}_{i:05}.wav", task.as_str());
            Ok((
                quantize_pcm16(&sig)?,
                ManifestEntry {
                    filename,
                    label: s.label,
                    seed: Some(s.seed),
                },
            ))
        })
        .collect()
}

pub fn write_cardio_dataset(dir: &Path, items: &[(AudioSignal<f64>, ManifestEntry)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    items
        .par_iter()
        .try_for_each(|(sig, entry)| write_wav(dir.join(&entry.filename), sig))?;
    let entries: Vec<ManifestEntry> = items.iter().map(|(_, e)| e.clone()).collect();
    write_manifest(dir, &entries)
}
