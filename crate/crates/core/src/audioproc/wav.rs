//! RIFF/WAVE PCM16 reading and writing.

use std::fs;
use std::path::Path;

use crate::data::AudioSignal;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const PCM: u16 = 1;

/// Decodes 16-bit PCM, scaling by 1/32768 and averaging channels to mono.
pub fn decode_wav<T: Scalar>(bytes: &[u8]) -> Result<AudioSignal<T>> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" {
        return Err(Error::format("missing RIFF magic"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(Error::format("missing WAVE magic"));
    }
    let mut pos = 12;
    let mut format: Option<(u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32::from_le_bytes(bytes[pos + 4..pos + 8].try_into().unwrap()) as usize;
        let body_start = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body_start + 16 > bytes.len() {
                    return Err(Error::format("truncated fmt chunk"));
                }
                let body = &bytes[body_start..body_start + 16];
                let code = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                let bits = u16::from_le_bytes([body[14], body[15]]);
                if code != PCM {
                    return Err(Error::format(format!("unsupported WAV format code {code}")));
                }
                if bits != 16 {
                    return Err(Error::format(format!("unsupported bit depth {bits}")));
                }
                if channels == 0 || rate == 0 {
                    return Err(Error::format(
                        "WAV declares zero channels or zero sample rate",
                    ));
                }
                format = Some((code, rate, channels));
            }
            b"data" => {
                let (_, rate, channels) =
                    format.ok_or_else(|| Error::format("data chunk precedes fmt chunk"))?;
                if body_start + size > bytes.len() {
                    return Err(Error::format(format!(
                        "truncated data chunk: declared {size} bytes, {} present",
                        bytes.len() - body_start
                    )));
                }
                let frame_bytes = 2 * channels as usize;
                if !size.is_multiple_of(frame_bytes) {
                    return Err(Error::format("data chunk is not a whole number of frames"));
                }
                let data = &bytes[body_start..body_start + size];
                let scale = 1.0 / (32768.0 * channels as f64);
                let samples = data
                    .chunks_exact(frame_bytes)
                    .map(|frame| {
                        let sum: f64 = frame
                            .chunks_exact(2)
                            .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64)
                            .sum();
                        T::of(sum * scale)
                    })
                    .collect();
                return AudioSignal::new(samples, rate);
            }
            _ => {}
        }
        // Chunks are padded to even sizes.
        pos = body_start + size + (size & 1);
    }
    Err(Error::format(if format.is_none() {
        "missing fmt chunk"
    } else {
        "missing data chunk"
    }))
}

pub fn read_wav<T: Scalar>(path: impl AsRef<Path>) -> Result<AudioSignal<T>> {
    let path = path.as_ref();
    decode_wav(&fs::read(path)?).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Mono PCM16 encoding; samples are clamped to `[-1, 1]` and rounded.
pub fn encode_wav<T: Scalar>(sig: &AudioSignal<T>) -> Vec<u8> {
    let data_len = (sig.len() * 2) as u32;
    let rate = sig.sample_rate();
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&rate.to_le_bytes());
    out.extend_from_slice(&(rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in sig.samples() {
        let v = (s.to_f64_lossy() * 32768.0)
            .round()
            .clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_wav<T: Scalar>(path: impl AsRef<Path>, sig: &AudioSignal<T>) -> Result<()> {
    fs::write(path, encode_wav(sig))?;
    Ok(())
}
