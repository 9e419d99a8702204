//! Audio ingestion, wavelet denoising and MFCC features.

mod dwt;
mod fft;
mod mfcc;
mod wav;

pub use dwt::{
    dwt_forward, dwt_inverse, soft_threshold, universal_threshold, wavelet_denoise, WaveletPyramid,
    DB4_LOW_PASS,
};
pub use fft::{fft, fft_in_place};
pub use mfcc::{
    aggregate_features, frames_to_csv, hz_to_mel, mel_to_hz, mfcc, pre_emphasis, FrameMatrix,
    MfccConfig, MfccExtractor,
};
pub use wav::{decode_wav, encode_wav, read_wav, write_wav};
