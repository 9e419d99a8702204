//! End-to-end flows built from the lower-level modules, plus synthetic
//! cardio audio and dataset directories.

mod cardio;
mod clot;
mod config;
mod dataset;
mod skin;
mod synthcardio;

pub use cardio::{cardio_feature_rows, cardio_features, cardio_predict, cardio_train, segments};
pub use clot::{
    clot_feature_len, clot_feature_matrix, clot_features, clot_predict_frame,
    clot_predict_sequence, clot_train, quantize_8bit, svm_params_for, vote_sequence,
    SequencePrediction,
};
pub use config::{Aggregation, CardioTask, HogView, PipelineConfig, SvmSettings};
pub use dataset::{
    load_audio_dataset, load_frames, load_image_dataset, load_image_item, read_manifest,
    synth_cardio_items, synth_thermal_items, write_cardio_dataset, write_manifest,
    write_thermal_dataset, ImageItem, ManifestEntry, MANIFEST_NAME,
};
pub use skin::{
    skin_features, skin_hog_config, skin_preprocess, skin_standin_classify, skin_train,
    SKIN_STANDIN_NAME,
};
pub use synthcardio::{
    quantize_pcm16, synth_cardio_components, synth_cardio_sample, CardioComponents,
};
