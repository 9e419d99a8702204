//! Synthetic heart and lung recordings for exercising the audio pipeline.
//!
//! Heart: S1/S2 pairs at 72 bpm with beat jitter (decaying 30-90 Hz
//! bursts) over low-passed noise; a murmur adds 150-400 Hz band-limited
//! noise between S1 and S2.
//!
//! Lung: band-passed noise under a 0.25 Hz breathing envelope; the abnormal
//! class adds a 400 Hz wheeze during each expiration and sparse crackles.
//!
//! The generator draws the same random numbers for both labels, so two
//! recordings with one seed share their normal component exactly.

use std::f64::consts::PI;

use super::config::CardioTask;
use crate::data::{check_label, AudioSignal, Label};
use crate::error::{Error, Result};
use crate::rng::Rng;

const PEAK: f64 = 0.9;
const HEART_BPM: f64 = 72.0;
const SYSTOLE_S: f64 = 0.3;
const BREATH_HZ: f64 = 0.25;
const WHEEZE_HZ: f64 = 400.0;
const CRACKLES_PER_S: f64 = 3.0;

/// Unnormalized parts of a recording: `base` is present for both labels,
/// `abnormal` only for label 1.
#[derive(Debug, Clone, PartialEq)]
pub struct CardioComponents {
    pub base: Vec<f64>,
    pub abnormal: Vec<f64>,
}

impl CardioComponents {
    /// `base + label * abnormal`, scaled to a peak magnitude of 0.9.
    pub fn mix(&self, label: Label) -> Vec<f64> {
        let raw: Vec<f64> = if label == 1 {
            self.base
                .iter()
                .zip(&self.abnormal)
                .map(|(b, a)| b + a)
                .collect()
        } else {
            self.base.clone()
        };
        let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return raw;
        }
        raw.iter().map(|v| v * (PEAK / peak)).collect()
    }
}

fn check(duration_s: f64, sample_rate: u32) -> Result<usize> {
    if !(duration_s >= 2.0) || !duration_s.is_finite() {
        return Err(Error::param(format!(
            "synthetic recordings need at least 2 s, got {duration_s}"
        )));
    }
    if sample_rate != 4000 && sample_rate != 8000 {
        return Err(Error::param(format!(
            "synthetic sample rate must be 4000 or 8000 Hz, got {sample_rate}"
        )));
    }
    Ok((duration_s * f64::from(sample_rate)).round() as usize)
}

/// One-pole low-pass filtered white noise scaled to unit variance of the
/// input, with cutoff `fc` Hz.
fn lowpass_noise(n: usize, fc: f64, rate: f64, rng: &mut Rng) -> Vec<f64> {
    let a = (-2.0 * PI * fc / rate).exp();
    let mut y = 0.0;
    (0..n)
        .map(|_| {
            y = a * y + (1.0 - a) * rng.gaussian();
            y
        })
        .collect()
}

fn add_burst(
    out: &mut [f64],
    rate: f64,
    start_s: f64,
    freq: f64,
    decay_s: f64,
    amp: f64,
    len_s: f64,
) {
    let start = (start_s * rate).round() as usize;
    let len = (len_s * rate) as usize;
    for k in 0..len {
        let Some(slot) = out.get_mut(start + k) else {
            break;
        };
        let t = k as f64 / rate;
        *slot += amp * (-t / decay_s).exp() * (2.0 * PI * freq * t).sin();
    }
}

/// Sum of random-phase tones under a Hann window over `[from, to)` samples.
fn add_band_noise(
    out: &mut [f64],
    rate: f64,
    from: usize,
    to: usize,
    tones: &[(f64, f64)],
    amp: f64,
) {
    let to = to.min(out.len());
    if to <= from + 1 {
        return;
    }
    let span = (to - from) as f64;
    let norm = (tones.len() as f64).sqrt();
    for (j, slot) in out[from..to].iter_mut().enumerate() {
        let w = 0.5 - 0.5 * (2.0 * PI * j as f64 / span).cos();
        let t = (from + j) as f64 / rate;
        let s: f64 = tones
            .iter()
            .map(|&(f, ph)| (2.0 * PI * f * t + ph).sin())
            .sum();
        *slot += amp * w * s / norm;
    }
}

fn heart(n: usize, rate: f64, rng: &mut Rng) -> CardioComponents {
    let mut base: Vec<f64> = lowpass_noise(n, 60.0, rate, rng)
        .into_iter()
        .map(|v| 0.15 * v)
        .collect();
    let mut abnormal = vec![0.0; n];
    let duration = n as f64 / rate;
    let period = 60.0 / HEART_BPM;
    let mut t = rng.uniform_range(0.0, period);
    while t < duration {
        let s1_freq = rng.uniform_range(30.0, 60.0);
        let s2_freq = rng.uniform_range(50.0, 90.0);
        let systole = SYSTOLE_S * (1.0 + 0.05 * rng.gaussian()).clamp(0.8, 1.2);
        let tones: Vec<(f64, f64)> = (0..12)
            .map(|_| {
                (
                    rng.uniform_range(150.0, 400.0),
                    rng.uniform_range(0.0, 2.0 * PI),
                )
            })
            .collect();
        let murmur_amp = rng.uniform_range(0.25, 0.4);
        add_burst(&mut base, rate, t, s1_freq, 0.025, 1.0, 0.12);
        add_burst(&mut base, rate, t + systole, s2_freq, 0.02, 0.7, 0.1);
        let from = ((t + 0.1) * rate).round() as usize;
        let to = ((t + systole - 0.02) * rate).round() as usize;
        add_band_noise(&mut abnormal, rate, from, to, &tones, murmur_amp);
        t += period * (1.0 + 0.05 * rng.gaussian()).clamp(0.85, 1.15);
    }
    CardioComponents { base, abnormal }
}

fn lung(n: usize, rate: f64, rng: &mut Rng) -> CardioComponents {
    let wide = lowpass_noise(n, 1000.0, rate, rng);
    let low = lowpass_noise(n, 100.0, rate, rng);
    let phase0 = rng.uniform_range(0.0, 1.0);
    let envelope = |i: usize| {
        let phase = (i as f64 / rate * BREATH_HZ + phase0).fract();
        (phase, 0.2 + 0.8 * (0.5 - 0.5 * (2.0 * PI * phase).cos()))
    };
    let base: Vec<f64> = (0..n)
        .map(|i| 0.5 * (wide[i] - 0.5 * low[i]) * envelope(i).1)
        .collect();

    let mut abnormal = vec![0.0; n];
    let wheeze_amp = rng.uniform_range(0.2, 0.35);
    let wheeze_phase = rng.uniform_range(0.0, 2.0 * PI);
    // Expiration is the second half of each breathing cycle.
    let mut i = 0;
    while i < n {
        if envelope(i).0 < 0.5 {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && envelope(i).0 >= 0.5 {
            i += 1;
        }
        let span = (i - start) as f64;
        for (j, slot) in abnormal[start..i].iter_mut().enumerate() {
            let w = 0.5 - 0.5 * (2.0 * PI * j as f64 / span).cos();
            let t = (start + j) as f64 / rate;
            *slot += wheeze_amp * w * (2.0 * PI * WHEEZE_HZ * t + wheeze_phase).sin();
        }
    }
    let duration = n as f64 / rate;
    let crackles = (CRACKLES_PER_S * duration).round() as usize;
    for _ in 0..crackles {
        let at = rng.uniform_range(0.0, duration);
        let freq = rng.uniform_range(200.0, 800.0);
        let amp = rng.uniform_range(0.3, 0.6) * if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
        add_burst(&mut abnormal, rate, at, freq, 0.002, amp, 0.01);
    }
    CardioComponents { base, abnormal }
}

pub fn synth_cardio_components(
    task: CardioTask,
    duration_s: f64,
    sample_rate: u32,
    rng: &mut Rng,
) -> Result<CardioComponents> {
    let n = check(duration_s, sample_rate)?;
    let rate = f64::from(sample_rate);
    Ok(match task {
        CardioTask::Heart => heart(n, rate, rng),
        CardioTask::Lung => lung(n, rate, rng),
    })
}

pub fn synth_cardio_sample(
    task: CardioTask,
    label: Label,
    duration_s: f64,
    sample_rate: u32,
    rng: &mut Rng,
) -> Result<AudioSignal<f64>> {
    check_label(label)?;
    let parts = synth_cardio_components(task, duration_s, sample_rate, rng)?;
    AudioSignal::new(parts.mix(label), sample_rate)
}

/// Maps samples onto the PCM16 grid exactly as writing and re-reading a
/// WAV file would.
pub fn quantize_pcm16(sig: &AudioSignal<f64>) -> Result<AudioSignal<f64>> {
    let samples = sig
        .samples()
        .iter()
        .map(|s| (s * 32768.0).round().clamp(-32768.0, 32767.0) / 32768.0)
        .collect();
    AudioSignal::new(samples, sig.sample_rate())
}
