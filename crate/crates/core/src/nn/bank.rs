//! The persisted prototype bank: L2-normalized visual class centers with
//! the row→label map ψ, the rejection threshold α, and a provenance hash of
//! the glyph set that produced it.
//!
//! Container layout (all integers/floats little-endian):
//! magic "OPRT" · version u32 · N u32 · D u32 · rows N×D f32 ·
//! ψ as N u32 row labels · α f64 · provenance 32 bytes.

use crate::bytesio::{Reader, Writer};
use crate::error::{Error, Result};
use ndarray::Array2;

pub struct PrototypeBank {
    /// `N × D`, every row unit L2 norm.
    pub rows: Array2<f32>,
    /// Dataset label id of each row; non-decreasing (rows grouped by label).
    pub labels: Vec<u32>,
    /// Rejection threshold (Eq. 10's α) frozen from the model.
    pub alpha: f64,
    /// Sha256 of the glyph-set container bytes.
    pub provenance: [u8; 32],
}

impl PrototypeBank {
    pub fn new(
        rows: Array2<f32>,
        labels: Vec<u32>,
        alpha: f64,
        provenance: [u8; 32],
    ) -> Result<Self> {
        let bank = PrototypeBank { rows, labels, alpha, provenance };
        bank.validate()?;
        Ok(bank)
    }

    pub fn n(&self) -> usize {
        self.rows.nrows()
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows.nrows() == 0 || self.rows.ncols() == 0 {
            return Err(Error::format("prototype bank", "empty"));
        }
        if self.labels.len() != self.rows.nrows() {
            return Err(Error::format("prototype bank", "ψ length mismatch"));
        }
        if self.labels.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::format("prototype bank", "rows must be grouped by ascending label"));
        }
        for (i, row) in self.rows.rows().into_iter().enumerate() {
            let norm = row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt();
            if !(norm - 1.0).abs().is_finite() || (norm - 1.0).abs() > 1e-6 {
                return Err(Error::Degenerate(format!(
                    "prototype row {i} has norm {norm:.9}, expected 1"
                )));
            }
        }
        Ok(())
    }

    /// Unique labels with their contiguous row spans, ascending.
    pub fn groups(&self) -> Vec<(u32, usize, usize)> {
        let mut out: Vec<(u32, usize, usize)> = Vec::new();
        for (i, &lab) in self.labels.iter().enumerate() {
            match out.last_mut() {
                Some((l, _, len)) if *l == lab => *len += 1,
                _ => out.push((lab, i, 1)),
            }
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(b"OPRT");
        w.u32(1);
        w.u32(self.rows.nrows() as u32);
        w.u32(self.rows.ncols() as u32);
        for &v in self.rows.iter() {
            w.f32(v);
        }
        for &l in &self.labels {
            w.u32(l);
        }
        w.f64(self.alpha);
        w.bytes(&self.provenance);
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes, "OPRT container");
        r.magic(b"OPRT")?;
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::format("OPRT container", format!("unsupported version {version}")));
        }
        let n = r.u32()? as usize;
        let d = r.u32()? as usize;
        let mut rows = Array2::<f32>::zeros((n, d));
        for v in rows.iter_mut() {
            *v = r.f32()?;
        }
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            labels.push(r.u32()?);
        }
        let alpha = r.f64()?;
        let provenance: [u8; 32] = r.bytes(32)?.try_into().unwrap();
        r.finish()?;
        Self::new(rows, labels, alpha, provenance)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
