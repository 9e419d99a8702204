//! Periodized Daubechies-4 (8-tap) wavelet transform and soft-threshold
//! denoising.

use crate::data::AudioSignal;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// db4 scaling (low-pass) filter, orthonormal: taps sum to sqrt(2).
pub const DB4_LOW_PASS: [f64; 8] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_7,
    0.630_880_767_929_858_9,
    -0.027_983_769_416_859_854,
    -0.187_034_811_719_093_09,
    0.030_841_381_835_560_764,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_032,
];

fn filters<T: Scalar>() -> ([T; 8], [T; 8]) {
    let h = DB4_LOW_PASS.map(T::of);
    // Quadrature mirror: g[n] = (-1)^n h[L-1-n].
    let mut g = [T::zero(); 8];
    for (n, slot) in g.iter_mut().enumerate() {
        let v = h[7 - n];
        *slot = if n % 2 == 0 { v } else { -v };
    }
    (h, g)
}

/// Multi-level decomposition: `details[0]` is the finest band.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid<T> {
    pub approximation: Vec<T>,
    pub details: Vec<Vec<T>>,
}

impl<T> WaveletPyramid<T> {
    pub fn levels(&self) -> usize {
        self.details.len()
    }
}

pub fn dwt_forward<T: Scalar>(x: &[T], levels: usize) -> Result<WaveletPyramid<T>> {
    if levels == 0 {
        return Err(Error::param(
            "wavelet decomposition needs at least one level",
        ));
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::param(format!("{levels} levels is too many")))?;
    if x.is_empty() || !x.len().is_multiple_of(block) {
        return Err(Error::input(format!(
            "signal length {} is not a positive multiple of 2^{levels}",
            x.len()
        )));
    }
    let (h, g) = filters::<T>();
    let mut approx = x.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let n = approx.len();
        let half = n / 2;
        let mut a = vec![T::zero(); half];
        let mut d = vec![T::zero(); half];
        for k in 0..half {
            for t in 0..8 {
                let v = approx[(2 * k + t) % n];
                a[k] += h[t] * v;
                d[k] += g[t] * v;
            }
        }
        details.push(d);
        approx = a;
    }
    Ok(WaveletPyramid {
        approximation: approx,
        details,
    })
}

pub fn dwt_inverse<T: Scalar>(pyramid: &WaveletPyramid<T>) -> Result<Vec<T>> {
    let (h, g) = filters::<T>();
    let mut approx = pyramid.approximation.clone();
    for d in pyramid.details.iter().rev() {
        if d.len() != approx.len() {
            return Err(Error::DimensionMismatch {
                expected: approx.len(),
                found: d.len(),
            });
        }
        let n = 2 * approx.len();
        let mut out = vec![T::zero(); n];
        for k in 0..approx.len() {
            for t in 0..8 {
                let idx = (2 * k + t) % n;
                out[idx] += h[t] * approx[k] + g[t] * d[k];
            }
        }
        approx = out;
    }
    Ok(approx)
}

/// `sign(x) * max(|x| - t, 0)`.
pub fn soft_threshold<T: Scalar>(x: T, t: T) -> T {
    let mag = x.abs() - t;
    if mag > T::zero() {
        mag.copysign(x)
    } else {
        T::zero()
    }
}

/// Donoho-Johnstone threshold `sigma sqrt(2 ln n)` with
/// `sigma = median(|finest|) / 0.6745`.
pub fn universal_threshold<T: Scalar>(finest: &[T], n: usize) -> T {
    let mut mags: Vec<T> = finest.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
    let m = mags.len();
    let median = if m == 0 {
        T::zero()
    } else if m % 2 == 1 {
        mags[m / 2]
    } else {
        (mags[m / 2 - 1] + mags[m / 2]) / T::of(2.0)
    };
    let sigma = median / T::of(0.6745);
    sigma * (T::of(2.0) * T::of_usize(n.max(1)).ln()).sqrt()
}

/// Soft-thresholds every detail band with the universal threshold; the
/// signal is zero-padded to a multiple of `2^levels` and trimmed afterwards.
pub fn wavelet_denoise<T: Scalar>(sig: &AudioSignal<T>, levels: usize) -> Result<AudioSignal<T>> {
    if sig.is_empty() {
        return Err(Error::input("cannot denoise an empty signal"));
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::param(format!("{levels} levels is too many")))?;
    let n = sig.len();
    let padded_len = n.div_ceil(block) * block;
    let mut x = sig.samples().to_vec();
    x.resize(padded_len, T::zero());
    let mut pyramid = dwt_forward(&x, levels)?;
    let t = universal_threshold(&pyramid.details[0], padded_len);
    for band in pyramid.details.iter_mut() {
        for v in band.iter_mut() {
            *v = soft_threshold(*v, t);
        }
    }
    let mut y = dwt_inverse(&pyramid)?;
    y.truncate(n);
    AudioSignal::new(y, sig.sample_rate())
}
