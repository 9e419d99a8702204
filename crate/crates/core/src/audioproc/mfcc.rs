//! Mel-frequency cepstral coefficients.

use std::fmt::Write as _;

use num_complex::Complex;

use super::fft::fft_in_place;
use crate::data::{AudioSignal, FeatureVector};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MfccConfig {
    /// Frame length in seconds.
    pub frame_len: f64,
    /// Hop between frame starts in seconds.
    pub hop: f64,
    pub pre_emphasis: f64,
    pub n_filters: usize,
    pub n_coeffs: usize,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            frame_len: 0.025,
            hop: 0.010,
            pre_emphasis: 0.97,
            n_filters: 26,
            n_coeffs: 13,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.hop > 0.0 && self.hop <= self.frame_len) {
            return Err(Error::param(format!(
                "MFCC needs 0 < hop <= frame_len, got hop={} frame_len={}",
                self.hop, self.frame_len
            )));
        }
        if self.n_coeffs < 1 || self.n_coeffs > self.n_filters {
            return Err(Error::param(format!(
                "MFCC needs 1 <= n_coeffs <= n_filters, got {} and {}",
                self.n_coeffs, self.n_filters
            )));
        }
        if !(0.0..1.0).contains(&self.pre_emphasis) {
            return Err(Error::param(format!(
                "pre-emphasis {} must be in [0, 1)",
                self.pre_emphasis
            )));
        }
        if !(self.log_floor > 0.0) {
            return Err(Error::param("MFCC log floor must be positive"));
        }
        Ok(())
    }

    pub fn frame_samples(&self, sample_rate: u32) -> usize {
        ((self.frame_len * sample_rate as f64).round() as usize).max(1)
    }

    pub fn hop_samples(&self, sample_rate: u32) -> usize {
        ((self.hop * sample_rate as f64).round() as usize).max(1)
    }

    pub fn fft_size(&self, sample_rate: u32) -> usize {
        self.frame_samples(sample_rate).next_power_of_two()
    }
}

pub fn hz_to_mel(f_hz: f64) -> Result<f64> {
    if !(f_hz >= 0.0) {
        return Err(Error::param(format!("frequency {f_hz} Hz is negative")));
    }
    Ok(2595.0 * (1.0 + f_hz / 700.0).log10())
}

pub fn mel_to_hz(mel: f64) -> Result<f64> {
    if !(mel >= 0.0) {
        return Err(Error::param(format!("mel value {mel} is negative")));
    }
    Ok(700.0 * (10f64.powf(mel / 2595.0) - 1.0))
}

/// `y[0] = x[0]`, `y[n] = x[n] - alpha x[n-1]`.
pub fn pre_emphasis<T: Scalar>(sig: &AudioSignal<T>, alpha: f64) -> Result<AudioSignal<T>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::param(format!(
            "pre-emphasis {alpha} must be in [0, 1)"
        )));
    }
    let a = T::of(alpha);
    let x = sig.samples();
    let out = (0..x.len())
        .map(|n| if n == 0 { x[0] } else { x[n] - a * x[n - 1] })
        .collect();
    AudioSignal::new(out, sig.sample_rate())
}

/// Per-frame cepstral coefficients, one row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameMatrix<T> {
    rows: Vec<Vec<T>>,
}

impl<T: Scalar> FrameMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(Error::input("frame rows differ in length"));
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("frame matrix contains non-finite values"));
        }
        Ok(FrameMatrix { rows })
    }

    pub fn n_frames(&self) -> usize {
        self.rows.len()
    }

    pub fn n_coeffs(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.rows
    }
}

/// CSV with one frame per row and a `c0,c1,...` header; values keep 17
/// significant digits.
pub fn frames_to_csv<T: Scalar>(frames: &FrameMatrix<T>) -> String {
    let mut out = (0..frames.n_coeffs())
        .map(|i| format!("c{i}"))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    for row in frames.rows() {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", v.to_f64_lossy());
        }
        out.push('\n');
    }
    out
}

/// Precomputed window, filterbank and DCT for one sample rate.
#[derive(Debug, Clone)]
pub struct MfccExtractor<T> {
    cfg: MfccConfig,
    sample_rate: u32,
    frame: usize,
    hop: usize,
    fft_size: usize,
    window: Vec<T>,
    /// `n_filters` rows over `fft_size / 2 + 1` bins.
    filterbank: Vec<Vec<T>>,
    filter_centres_hz: Vec<f64>,
    /// `n_coeffs` rows of the orthonormal DCT-II over `n_filters` inputs.
    dct: Vec<Vec<T>>,
}

impl<T: Scalar> MfccExtractor<T> {
    pub fn new(cfg: MfccConfig, sample_rate: u32) -> Result<Self> {
        cfg.validate()?;
        if sample_rate == 0 {
            return Err(Error::param("sample rate must be positive"));
        }
        let frame = cfg.frame_samples(sample_rate);
        let hop = cfg.hop_samples(sample_rate);
        let fft_size = cfg.fft_size(sample_rate);
        let window = (0..frame)
            .map(|n| {
                let denom = (frame.max(2) - 1) as f64;
                T::of(0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / denom).cos())
            })
            .collect();

        let nyquist = sample_rate as f64 / 2.0;
        let mel_max = hz_to_mel(nyquist)?;
        let edges: Vec<f64> = (0..cfg.n_filters + 2)
            .map(|i| mel_to_hz(mel_max * i as f64 / (cfg.n_filters + 1) as f64))
            .collect::<Result<_>>()?;
        let bin_hz = sample_rate as f64 / fft_size as f64;
        let n_bins = fft_size / 2 + 1;
        let filterbank = (0..cfg.n_filters)
            .map(|m| {
                let (left, centre, right) = (edges[m], edges[m + 1], edges[m + 2]);
                (0..n_bins)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f >= left && f <= centre {
                            (f - left) / (centre - left)
                        } else if f > centre && f <= right {
                            (right - f) / (right - centre)
                        } else {
                            0.0
                        };
                        T::of(w)
                    })
                    .collect()
            })
            .collect();

        let nf = cfg.n_filters as f64;
        let dct = (0..cfg.n_coeffs)
            .map(|k| {
                let scale = if k == 0 {
                    (1.0 / nf).sqrt()
                } else {
                    (2.0 / nf).sqrt()
                };
                (0..cfg.n_filters)
                    .map(|m| {
                        T::of(
                            scale
                                * (std::f64::consts::PI * k as f64 * (2 * m + 1) as f64
                                    / (2.0 * nf))
                                    .cos(),
                        )
                    })
                    .collect()
            })
            .collect();

        Ok(MfccExtractor {
            cfg,
            sample_rate,
            frame,
            hop,
            fft_size,
            window,
            filterbank,
            filter_centres_hz: edges[1..=cfg.n_filters].to_vec(),
            dct,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    pub fn frame_samples(&self) -> usize {
        self.frame
    }

    pub fn filterbank(&self) -> &[Vec<T>] {
        &self.filterbank
    }

    pub fn filter_centres_hz(&self) -> &[f64] {
        &self.filter_centres_hz
    }

    /// Number of whole frames in a signal of `len` samples.
    pub fn frame_count(&self, len: usize) -> usize {
        if len < self.frame {
            0
        } else {
            (len - self.frame) / self.hop + 1
        }
    }

    fn check_signal(&self, sig: &AudioSignal<T>) -> Result<()> {
        if sig.sample_rate() != self.sample_rate {
            return Err(Error::input(format!(
                "signal sample rate {} differs from extractor rate {}",
                sig.sample_rate(),
                self.sample_rate
            )));
        }
        if sig.len() < self.frame {
            return Err(Error::input(format!(
                "signal has {} samples, shorter than one {}-sample frame",
                sig.len(),
                self.frame
            )));
        }
        Ok(())
    }

    /// Mel filterbank energies per frame, before the log and DCT.
    pub fn filterbank_energies(&self, sig: &AudioSignal<T>) -> Result<Vec<Vec<T>>> {
        self.check_signal(sig)?;
        let emphasized = pre_emphasis(sig, self.cfg.pre_emphasis)?;
        let x = emphasized.samples();
        let n_bins = self.fft_size / 2 + 1;
        let norm = T::of_usize(self.fft_size);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); self.fft_size];
        let mut power = vec![T::zero(); n_bins];
        (0..self.frame_count(x.len()))
            .map(|f| {
                let start = f * self.hop;
                for (i, slot) in buf.iter_mut().enumerate() {
                    let v = if i < self.frame {
                        x[start + i] * self.window[i]
                    } else {
                        T::zero()
                    };
                    *slot = Complex::new(v, T::zero());
                }
                fft_in_place(&mut buf, false)?;
                for (p, b) in power.iter_mut().zip(&buf[..n_bins]) {
                    *p = b.norm_sqr() / norm;
                }
                Ok(self
                    .filterbank
                    .iter()
                    .map(|row| row.iter().zip(&power).map(|(&w, &p)| w * p).sum())
                    .collect())
            })
            .collect()
    }

    pub fn extract(&self, sig: &AudioSignal<T>) -> Result<FrameMatrix<T>> {
        let floor = T::of(self.cfg.log_floor);
        let rows = self
            .filterbank_energies(sig)?
            .into_iter()
            .map(|energies| {
                let logs: Vec<T> = energies.into_iter().map(|e| e.max(floor).ln()).collect();
                self.dct
                    .iter()
                    .map(|row| row.iter().zip(&logs).map(|(&c, &l)| c * l).sum())
                    .collect()
            })
            .collect();
        FrameMatrix::new(rows)
    }
}

/// Pre-emphasis, Hamming-windowed framing, power spectrum, mel filterbank,
/// log and orthonormal DCT-II.
pub fn mfcc<T: Scalar>(sig: &AudioSignal<T>, cfg: MfccConfig) -> Result<FrameMatrix<T>> {
    MfccExtractor::new(cfg, sig.sample_rate())?.extract(sig)
}

/// Per-coefficient means followed by per-coefficient population standard
/// deviations.
pub fn aggregate_features<T: Scalar>(frames: &FrameMatrix<T>) -> Result<FeatureVector<T>> {
    let n = frames.n_frames();
    if n == 0 {
        return Err(Error::input("cannot aggregate an empty frame matrix"));
    }
    let d = frames.n_coeffs();
    let count = T::of_usize(n);
    let means: Vec<T> = (0..d)
        .map(|j| frames.rows().iter().map(|r| r[j]).sum::<T>() / count)
        .collect();
    let stds: Vec<T> = (0..d)
        .map(|j| {
            let var = frames
                .rows()
                .iter()
                .map(|r| (r[j] - means[j]).powi(2))
                .sum::<T>()
                / count;
            var.sqrt()
        })
        .collect();
    FeatureVector::new(means.into_iter().chain(stds).collect())
}
