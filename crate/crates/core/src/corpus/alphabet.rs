//! The "OCCD" alphabet container: glyph rasters, glyph→label map, and
//! per-label embeddings in one little-endian binary file.
//!
//! Layout:
//! - magic `OCCD`, version u32, M u32, N u32, glyph_size u32, C u32
//! - N rasters of glyph_size² bytes each, row-major (0 or 255)
//! - label map: N × u32 (glyph → label id)
//! - embeddings: M × C × f64

use super::GlyphSet;
use crate::error::{Error, Result};
use ndarray::Array2;

const MAGIC: &[u8; 4] = b"OCCD";
const VERSION: u32 = 1;

pub(super) fn to_bytes(set: &GlyphSet) -> Vec<u8> {
    let g = set.glyph_size;
    let mut out = Vec::with_capacity(24 + set.n() * (g * g + 4) + set.m() * set.c() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(set.m() as u32).to_le_bytes());
    out.extend_from_slice(&(set.n() as u32).to_le_bytes());
    out.extend_from_slice(&(g as u32).to_le_bytes());
    out.extend_from_slice(&(set.c() as u32).to_le_bytes());
    for glyph in &set.glyphs {
        for &v in glyph.iter() {
            out.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    for &label in &set.labels {
        out.extend_from_slice(&label.to_le_bytes());
    }
    for &e in set.embeddings.iter() {
        out.extend_from_slice(&e.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format {
                what: "OCCD container".into(),
                detail: format!("truncated while reading {what}"),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub(super) fn from_bytes(bytes: &[u8]) -> Result<GlyphSet> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != MAGIC {
        return Err(Error::Format {
            what: "OCCD container".into(),
            detail: "bad magic (expected OCCD)".into(),
        });
    }
    let version = cur.u32("version")?;
    if version != VERSION {
        return Err(Error::Format {
            what: "OCCD container".into(),
            detail: format!("unsupported version {version}"),
        });
    }
    let m = cur.u32("M")? as usize;
    let n = cur.u32("N")? as usize;
    let g = cur.u32("glyph_size")? as usize;
    let c = cur.u32("C")? as usize;

    let mut glyphs = Vec::with_capacity(n);
    for _ in 0..n {
        let raw = cur.take(g * g, "glyph raster")?;
        glyphs.push(Array2::from_shape_fn((g, g), |(y, x)| raw[y * g + x] as f32 / 255.0));
    }
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        labels.push(cur.u32("label map")?);
    }
    let mut embeddings = Array2::<f64>::zeros((m, c));
    for i in 0..m {
        for j in 0..c {
            embeddings[(i, j)] = cur.f64("embeddings")?;
        }
    }
    if cur.pos != bytes.len() {
        return Err(Error::Format {
            what: "OCCD container".into(),
            detail: format!("{} trailing bytes", bytes.len() - cur.pos),
        });
    }
    let set = GlyphSet { glyph_size: g, glyphs, labels, embeddings };
    set.validate()?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::super::build_alphabet;
    use super::*;
    use crate::config::CorpusConfig;

    #[test]
    fn container_roundtrips_byte_exactly() {
        let cfg = CorpusConfig { alphabet_size: 10, seed: 2, ..CorpusConfig::default() };
        let set = build_alphabet(&cfg).unwrap();
        let bytes = to_bytes(&set);
        assert_eq!(&bytes[..4], b"OCCD");
        let back = from_bytes(&bytes).unwrap();
        assert_eq!(back, set);
        assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn rejects_corrupt_containers() {
        let cfg = CorpusConfig { alphabet_size: 4, seed: 2, ..CorpusConfig::default() };
        let set = build_alphabet(&cfg).unwrap();
        let mut bytes = to_bytes(&set);
        bytes[0] = b'X';
        assert!(from_bytes(&bytes).is_err());
        let bytes = to_bytes(&set);
        assert!(from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
