//! Binary (P5) PGM image I/O, bit-exact.

use crate::error::{Error, Result};
use ndarray::Array2;
use std::path::Path;

/// Serializes a [0,1] grayscale raster as binary PGM with maxval 255.
pub fn pgm_bytes(img: &Array2<f32>) -> Vec<u8> {
    let (h, w) = img.dim();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.reserve(h * w);
    for &v in img.iter() {
        out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    out
}

pub fn write_pgm(path: &Path, img: &Array2<f32>) -> Result<()> {
    std::fs::write(path, pgm_bytes(img)).map_err(|e| Error::io(path, e))
}

/// Parses a binary PGM into raw 8-bit pixels: `(height, width, row-major data)`.
///
/// Kept separate from [`parse_pgm`] so callers that cache many images can hold
/// them at one byte per pixel and defer the `/255` conversion to batch time.
pub fn parse_pgm_raw(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |detail: &str| Error::Format { what: "PGM".into(), detail: detail.into() };
    // Header: magic, width, height, maxval as whitespace-separated tokens,
    // with `#` comment lines allowed, followed by a single whitespace byte.
    let mut pos = 0usize;
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos == start {
            return Err(bad("truncated header"));
        }
        tokens.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    if tokens[0] != "P5" {
        return Err(bad("not a binary (P5) PGM"));
    }
    let w: usize = tokens[1].parse().map_err(|_| bad("bad width"))?;
    let h: usize = tokens[2].parse().map_err(|_| bad("bad height"))?;
    let maxval: usize = tokens[3].parse().map_err(|_| bad("bad maxval"))?;
    if maxval != 255 {
        return Err(bad("only maxval 255 is supported"));
    }
    pos += 1; // single whitespace after maxval
    let data = &bytes[pos..];
    if data.len() != w * h {
        return Err(bad(&format!("expected {} pixels, found {}", w * h, data.len())));
    }
    Ok((h, w, data.to_vec()))
}

/// Parses a binary PGM into a [0,1] raster.
pub fn parse_pgm(bytes: &[u8]) -> Result<Array2<f32>> {
    let (h, w, data) = parse_pgm_raw(bytes)?;
    Ok(Array2::from_shape_fn((h, w), |(y, x)| data[y * w + x] as f32 / 255.0))
}

pub fn read_pgm(path: &Path) -> Result<Array2<f32>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact_on_quantized_values() {
        let img = Array2::from_shape_fn((4, 6), |(y, x)| ((y * 6 + x) as f32 * 10.0) / 255.0);
        let bytes = pgm_bytes(&img);
        assert!(bytes.starts_with(b"P5\n6 4\n255\n"));
        let back = parse_pgm(&bytes).unwrap();
        assert_eq!(back, img);
        // Serializing again is byte-identical.
        assert_eq!(pgm_bytes(&back), bytes);
    }

    #[test]
    fn rejects_malformed_input() {
        assert!(parse_pgm(b"P2\n2 2\n255\n....").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\nab").is_err());
        assert!(parse_pgm(b"P5\n2 2\n65535\n" as &[u8]).is_err());
    }
}
