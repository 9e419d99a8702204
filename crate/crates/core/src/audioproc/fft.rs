//! Iterative radix-2 Cooley-Tukey FFT.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Forward transform `X[k] = sum x[n] e^{-2 pi i k n / N}`; the inverse
/// uses the conjugate twiddles and scales by `1/N`.
pub fn fft<T: Scalar>(x: &[Complex<T>], inverse: bool) -> Result<Vec<Complex<T>>> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf, inverse)?;
    Ok(buf)
}

pub fn fft_in_place<T: Scalar>(buf: &mut [Complex<T>], inverse: bool) -> Result<()> {
    let n = buf.len();
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::input(format!(
            "FFT length {n} is not a power of two"
        )));
    }
    let bits = n.trailing_zeros();
    if bits > 0 {
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        // Twiddles are evaluated directly in f64 rather than by repeated
        // multiplication, which keeps large transforms accurate.
        let twiddles: Vec<Complex<T>> = (0..half)
            .map(|k| {
                let theta = sign * 2.0 * std::f64::consts::PI * k as f64 / len as f64;
                Complex::new(T::of(theta.cos()), T::of(theta.sin()))
            })
            .collect();
        for start in (0..n).step_by(len) {
            for k in 0..half {
                let a = buf[start + k];
                let b = buf[start + k + half] * twiddles[k];
                buf[start + k] = a + b;
                buf[start + k + half] = a - b;
            }
        }
        len <<= 1;
    }
    if inverse {
        let scale = T::one() / T::of_usize(n);
        for v in buf.iter_mut() {
            *v = *v * scale;
        }
    }
    Ok(())
}
