//! Pipeline configuration and its INI representation.
//!
//! ```ini
//! [synththermal]
//! noise_sigma = 0.05
//! [ml]
//! svm_gamma = auto
//! ```
//!
//! Sections are `synththermal`, `imageproc`, `audioproc`, `ml` and
//! `pipeline`. Every key has a default; unknown sections or keys are errors.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::audioproc::MfccConfig;
use crate::error::{Error, Result};
use crate::imageproc::{Augmentation, CannyParams, HogConfig};
use crate::ml::ForestParams;
use crate::synththermal::ThermalConfig;

/// Which HOG inputs form the clot descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HogView {
    Edge,
    Intensity,
    Both,
}

/// How a recording's frames become a decision.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// One mean/std feature vector per recording.
    MeanStd,
    /// One feature vector per fixed-length segment, combined by voting.
    SegmentVote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CardioTask {
    Lung,
    Heart,
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        impl $ty {
            pub fn as_str(self) -> &'static str {
                match self { $($ty::$variant => $text),+ }
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($ty::$variant),)+
                    other => Err(Error::Config(format!(
                        "`{other}` is not one of: {}",
                        [$($text),+].join(", ")
                    ))),
                }
            }
        }

        impl Display for $ty {
            fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

keyword_enum!(HogView { Edge => "edge", Intensity => "intensity", Both => "both" });
keyword_enum!(Aggregation { MeanStd => "mean_std", SegmentVote => "segment_vote" });
keyword_enum!(CardioTask { Lung => "lung", Heart => "heart" });

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmSettings {
    pub c: f64,
    /// `None` selects the scale heuristic at training time.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
    pub cache_rows: usize,
}

impl Default for SvmSettings {
    fn default() -> Self {
        SvmSettings {
            c: 10.0,
            gamma: None,
            tol: 1e-3,
            max_passes: 10,
            cache_rows: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub thermal: ThermalConfig,
    pub canny: CannyParams,
    pub hog: HogConfig,
    /// Side length clot frames are resized to.
    pub clot_size: usize,
    pub skin_size: usize,
    pub skin_hog_cell: usize,
    pub mfcc: MfccConfig,
    pub denoise_levels: usize,
    pub svm: SvmSettings,
    pub forest: ForestParams,
    /// Sliding vote window for frame sequences and audio segments.
    pub window: usize,
    pub hog_view: HogView,
    pub aggregation: Aggregation,
    pub segment_seconds: f64,
    pub task: CardioTask,
    pub skin_augment: Vec<Augmentation>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            thermal: ThermalConfig::default(),
            canny: CannyParams::default(),
            hog: HogConfig::default(),
            clot_size: 128,
            skin_size: 224,
            skin_hog_cell: 16,
            mfcc: MfccConfig::default(),
            denoise_levels: 4,
            svm: SvmSettings::default(),
            forest: ForestParams::default(),
            window: 5,
            hog_view: HogView::Both,
            aggregation: Aggregation::MeanStd,
            segment_seconds: 2.0,
            task: CardioTask::Heart,
            skin_augment: Vec::new(),
        }
    }
}

fn parse<V: FromStr>(key: &str, value: &str) -> Result<V>
where
    V::Err: Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key} = `{value}`: {e}")))
}

fn parse_auto<V: FromStr>(key: &str, value: &str) -> Result<Option<V>>
where
    V::Err: Display,
{
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn auto_or<V: Display>(v: Option<V>) -> String {
    v.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

impl PipelineConfig {
    /// Defaults overridden by the INI file at `path`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::from_ini_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_ini_str(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = PipelineConfig::default();
        for (section, props) in ini.iter() {
            for (key, value) in props.iter() {
                let section = section.ok_or_else(|| {
                    Error::Config(format!("key `{key}` appears before any [section]"))
                })?;
                cfg.set(section, key, value.trim())?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rebuilds a configuration from [`Self::snapshot`] output.
    pub fn from_snapshot(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (full, value) in map {
            let Some((section, key)) = full.split_once('.') else {
                continue;
            };
            cfg.set(section, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        let full = format!("{section}.{key}");
        let k = full.as_str();
        match (section, key) {
            ("synththermal", "width") => self.thermal.width = parse(k, value)?,
            ("synththermal", "height") => self.thermal.height = parse(k, value)?,
            ("synththermal", "vessel_width") => self.thermal.vessel_width = parse(k, value)?,
            ("synththermal", "base_temp") => self.thermal.base_temp = parse(k, value)?,
            ("synththermal", "axial_gradient") => self.thermal.axial_gradient = parse(k, value)?,
            ("synththermal", "clot_amplitude") => self.thermal.clot_amplitude = parse(k, value)?,
            ("synththermal", "clot_sigma") => self.thermal.clot_sigma = parse(k, value)?,
            ("synththermal", "noise_sigma") => self.thermal.noise_sigma = parse(k, value)?,
            ("synththermal", "clot_margin") => self.thermal.clot_margin = parse(k, value)?,
            ("imageproc", "canny_sigma") => self.canny.sigma = parse(k, value)?,
            ("imageproc", "canny_low") => self.canny.low = parse(k, value)?,
            ("imageproc", "canny_high") => self.canny.high = parse(k, value)?,
            ("imageproc", "hog_cell_size") => self.hog.cell_size = parse(k, value)?,
            ("imageproc", "hog_block_size") => self.hog.block_size = parse(k, value)?,
            ("imageproc", "hog_bins") => self.hog.bins = parse(k, value)?,
            ("imageproc", "hog_signed") => self.hog.signed = parse(k, value)?,
            ("imageproc", "clot_size") => self.clot_size = parse(k, value)?,
            ("imageproc", "skin_size") => self.skin_size = parse(k, value)?,
            ("imageproc", "skin_hog_cell") => self.skin_hog_cell = parse(k, value)?,
            ("audioproc", "frame_len") => self.mfcc.frame_len = parse(k, value)?,
            ("audioproc", "hop") => self.mfcc.hop = parse(k, value)?,
            ("audioproc", "pre_emphasis") => self.mfcc.pre_emphasis = parse(k, value)?,
            ("audioproc", "n_filters") => self.mfcc.n_filters = parse(k, value)?,
            ("audioproc", "n_coeffs") => self.mfcc.n_coeffs = parse(k, value)?,
            ("audioproc", "log_floor") => self.mfcc.log_floor = parse(k, value)?,
            ("audioproc", "denoise_levels") => self.denoise_levels = parse(k, value)?,
            ("ml", "svm_c") => self.svm.c = parse(k, value)?,
            ("ml", "svm_gamma") => self.svm.gamma = parse_auto(k, value)?,
            ("ml", "svm_tol") => self.svm.tol = parse(k, value)?,
            ("ml", "svm_max_passes") => self.svm.max_passes = parse(k, value)?,
            ("ml", "svm_cache_rows") => self.svm.cache_rows = parse(k, value)?,
            ("ml", "forest_n_trees") => self.forest.n_trees = parse(k, value)?,
            ("ml", "forest_max_depth") => self.forest.max_depth = parse(k, value)?,
            ("ml", "forest_min_samples_leaf") => self.forest.min_samples_leaf = parse(k, value)?,
            ("ml", "forest_mtry") => self.forest.mtry = parse_auto(k, value)?,
            ("ml", "forest_seed") => self.forest.seed = parse(k, value)?,
            ("pipeline", "window") => self.window = parse(k, value)?,
            ("pipeline", "hog_view") => self.hog_view = parse(k, value)?,
            ("pipeline", "aggregation") => self.aggregation = parse(k, value)?,
            ("pipeline", "segment_seconds") => self.segment_seconds = parse(k, value)?,
            ("pipeline", "task") => self.task = parse(k, value)?,
            ("pipeline", "skin_augment") => {
                self.skin_augment = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse(k, s))
                    .collect::<Result<_>>()?
            }
            ("synththermal" | "imageproc" | "audioproc" | "ml" | "pipeline", _) => {
                return Err(Error::Config(format!("unknown key `{key}` in [{section}]")))
            }
            _ => return Err(Error::Config(format!("unknown section [{section}]"))),
        }
        Ok(())
    }

    /// Every setting as `section.key -> value`, in a form accepted by
    /// [`Self::from_snapshot`].
    pub fn snapshot(&self) -> BTreeMap<String, String> {
        let t = &self.thermal;
        let entries: Vec<(&str, String)> = vec![
            ("synththermal.width", t.width.to_string()),
            ("synththermal.height", t.height.to_string()),
            ("synththermal.vessel_width", t.vessel_width.to_string()),
            ("synththermal.base_temp", t.base_temp.to_string()),
            ("synththermal.axial_gradient", t.axial_gradient.to_string()),
            ("synththermal.clot_amplitude", t.clot_amplitude.to_string()),
            ("synththermal.clot_sigma", t.clot_sigma.to_string()),
            ("synththermal.noise_sigma", t.noise_sigma.to_string()),
            ("synththermal.clot_margin", t.clot_margin.to_string()),
            ("imageproc.canny_sigma", self.canny.sigma.to_string()),
            ("imageproc.canny_low", self.canny.low.to_string()),
            ("imageproc.canny_high", self.canny.high.to_string()),
            ("imageproc.hog_cell_size", self.hog.cell_size.to_string()),
            ("imageproc.hog_block_size", self.hog.block_size.to_string()),
            ("imageproc.hog_bins", self.hog.bins.to_string()),
            ("imageproc.hog_signed", self.hog.signed.to_string()),
            ("imageproc.clot_size", self.clot_size.to_string()),
            ("imageproc.skin_size", self.skin_size.to_string()),
            ("imageproc.skin_hog_cell", self.skin_hog_cell.to_string()),
            ("audioproc.frame_len", self.mfcc.frame_len.to_string()),
            ("audioproc.hop", self.mfcc.hop.to_string()),
            ("audioproc.pre_emphasis", self.mfcc.pre_emphasis.to_string()),
            ("audioproc.n_filters", self.mfcc.n_filters.to_string()),
            ("audioproc.n_coeffs", self.mfcc.n_coeffs.to_string()),
            ("audioproc.log_floor", self.mfcc.log_floor.to_string()),
            ("audioproc.denoise_levels", self.denoise_levels.to_string()),
            ("ml.svm_c", self.svm.c.to_string()),
            ("ml.svm_gamma", auto_or(self.svm.gamma)),
            ("ml.svm_tol", self.svm.tol.to_string()),
            ("ml.svm_max_passes", self.svm.max_passes.to_string()),
            ("ml.svm_cache_rows", self.svm.cache_rows.to_string()),
            ("ml.forest_n_trees", self.forest.n_trees.to_string()),
            ("ml.forest_max_depth", self.forest.max_depth.to_string()),
            (
                "ml.forest_min_samples_leaf",
                self.forest.min_samples_leaf.to_string(),
            ),
            ("ml.forest_mtry", auto_or(self.forest.mtry)),
            ("ml.forest_seed", self.forest.seed.to_string()),
            ("pipeline.window", self.window.to_string()),
            ("pipeline.hog_view", self.hog_view.to_string()),
            ("pipeline.aggregation", self.aggregation.to_string()),
            ("pipeline.segment_seconds", self.segment_seconds.to_string()),
            ("pipeline.task", self.task.to_string()),
            (
                "pipeline.skin_augment",
                self.skin_augment
                    .iter()
                    .map(|a| a.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            ),
        ];
        entries
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    pub fn to_ini_string(&self) -> String {
        let mut out = String::new();
        let mut current = String::new();
        for (full, value) in self.snapshot() {
            let (section, key) = full.split_once('.').expect("snapshot keys are qualified");
            if section != current {
                if !out.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{section}]\n"));
                current = section.to_string();
            }
            out.push_str(&format!("{key} = {value}\n"));
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::Config(e.to_string());
        self.thermal.validate().map_err(wrap)?;
        self.canny.validate().map_err(wrap)?;
        self.hog.validate().map_err(wrap)?;
        self.mfcc.validate().map_err(wrap)?;
        self.hog
            .descriptor_len(self.clot_size, self.clot_size)
            .map_err(wrap)?;
        HogConfig {
            cell_size: self.skin_hog_cell,
            ..self.hog
        }
        .descriptor_len(self.skin_size, self.skin_size)
        .map_err(wrap)?;
        if self.window == 0 || self.window.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "pipeline.window {} must be odd and positive",
                self.window
            )));
        }
        if !(self.segment_seconds > 0.0) {
            return Err(Error::Config(
                "pipeline.segment_seconds must be positive".into(),
            ));
        }
        if !(self.svm.c > 0.0)
            || self.svm.gamma.is_some_and(|g| !(g >= 0.0))
            || !(self.svm.tol > 0.0)
        {
            return Err(Error::Config(
                "ml.svm_c and ml.svm_tol must be positive, ml.svm_gamma non-negative".into(),
            ));
        }
        if self.svm.max_passes == 0 || self.forest.n_trees == 0 || self.forest.min_samples_leaf == 0
        {
            return Err(Error::Config(
                "ml.svm_max_passes, ml.forest_n_trees and ml.forest_min_samples_leaf must be positive".into(),
            ));
        }
        if self.forest.max_depth > crate::ml::MAX_TREE_DEPTH {
            return Err(Error::Config(format!(
                "ml.forest_max_depth exceeds {}",
                crate::ml::MAX_TREE_DEPTH
            )));
        }
        if self.forest.mtry == Some(0) {
            return Err(Error::Config("ml.forest_mtry must be positive".into()));
        }
        if self.denoise_levels == 0 || self.denoise_levels > 16 {
            return Err(Error::Config(
                "audioproc.denoise_levels must be in 1..=16".into(),
            ));
        }
        Ok(())
    }
}
