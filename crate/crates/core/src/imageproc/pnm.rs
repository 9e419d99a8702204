//! Binary PGM (P5) and PPM (P6) images with an 8-bit maximum value.

use std::fs;
use std::path::Path;

use crate::data::GrayImage;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Decodes P5 or P6 bytes into intensities in `[0, 255]`. Colour input is
/// reduced to luminance `0.299 R + 0.587 G + 0.114 B`.
pub fn decode_pnm<T: Scalar>(bytes: &[u8]) -> Result<GrayImage<T>> {
    let mut cursor = HeaderCursor { bytes, pos: 0 };
    let magic = cursor.token()?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(Error::format(format!("unsupported PNM magic `{other}`"))),
    };
    let width = cursor.number("width")?;
    let height = cursor.number("height")?;
    let maxval = cursor.number("maximum value")?;
    if maxval != 255 {
        return Err(Error::format(format!(
            "PNM maximum value must be 255, found {maxval}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::format("PNM image has a zero dimension"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(Error::format("PNM header is not terminated by whitespace")),
    }
    let raster = &bytes[cursor.pos..];
    let needed = width * height * channels;
    if raster.len() < needed {
        return Err(Error::format(format!(
            "PNM raster truncated: need {needed} bytes, found {}",
            raster.len()
        )));
    }
    let pixels = if channels == 1 {
        raster[..needed].iter().map(|&b| T::of(b as f64)).collect()
    } else {
        raster[..needed]
            .chunks_exact(3)
            .map(|rgb| T::of(0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64))
            .collect()
    };
    GrayImage::new(width, height, pixels)
}

pub fn read_pnm<T: Scalar>(path: impl AsRef<Path>) -> Result<GrayImage<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    decode_pnm(&bytes).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Encodes intensities on the `[0, 255]` scale as P5, rounding and clamping
/// to 8 bits.
pub fn encode_pgm<T: Scalar>(img: &GrayImage<T>) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(
        img.pixels()
            .iter()
            .map(|p| p.to_f64_lossy().round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn write_pgm<T: Scalar>(path: impl AsRef<Path>, img: &GrayImage<T>) -> Result<()> {
    fs::write(path, encode_pgm(img))?;
    Ok(())
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn token(&mut self) -> Result<String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() || b == b'#' {
                break;
            }
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::format("PNM header ended unexpectedly"));
        }
        Ok(String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned())
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::format(format!("PNM {what} `{tok}` is not a number")))
    }
}
