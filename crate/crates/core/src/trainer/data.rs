//! In-memory split caches shared by training and evaluation.
//!
//! Rasters are held at one byte per pixel (exactly the PGM payload) and
//! expanded to the model's scalar type at batch-assembly time with the same
//! `byte/255` conversion the image loader uses, so every consumer of a sample
//! sees bit-identical pixel values.

use crate::corpus::{pgm, Dataset, ManifestRow, Split};
use crate::error::{Error, Result};
use autograd::Scalar;
use ndarray::{ArrayD, IxDyn};

/// One corpus split resident in RAM.
pub struct LoadedSplit {
    /// Manifest sample ids, in manifest order.
    pub ids: Vec<u64>,
    /// Ground-truth label sequences, in manifest order.
    pub labels: Vec<Vec<u32>>,
    pub height: usize,
    pub width: usize,
    images: Vec<Vec<u8>>,
}

impl LoadedSplit {
    /// Reads every image of `split` into memory. Errors if the split is
    /// empty or its images disagree on dimensions.
    pub fn load(ds: &Dataset, split: Split) -> Result<LoadedSplit> {
        let rows = ds.rows_for(split);
        if rows.is_empty() {
            return Err(Error::Config(format!("split `{}` has no samples", split.as_str())));
        }
        Self::from_rows(ds, &rows)
    }

    /// Reads an explicit row selection into memory.
    pub fn from_rows(ds: &Dataset, rows: &[&ManifestRow]) -> Result<LoadedSplit> {
        let mut out = LoadedSplit {
            ids: Vec::with_capacity(rows.len()),
            labels: Vec::with_capacity(rows.len()),
            height: 0,
            width: 0,
            images: Vec::with_capacity(rows.len()),
        };
        for row in rows {
            let path = ds.dir.join(&row.path);
            let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
            let (h, w, data) = pgm::parse_pgm_raw(&bytes)?;
            if out.images.is_empty() {
                out.height = h;
                out.width = w;
            } else if (h, w) != (out.height, out.width) {
                return Err(Error::Format {
                    what: "corpus image".into(),
                    detail: format!(
                        "sample {} is {}x{}, expected {}x{}",
                        row.id, w, h, out.width, out.height
                    ),
                });
            }
            out.ids.push(row.id);
            out.labels.push(row.labels.clone());
            out.images.push(data);
        }
        Ok(out)
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// Splits the last `n` samples off into their own `LoadedSplit`.
    pub fn split_tail(&mut self, n: usize) -> LoadedSplit {
        assert!(n <= self.len(), "tail larger than the split");
        let at = self.len() - n;
        LoadedSplit {
            ids: self.ids.split_off(at),
            labels: self.labels.split_off(at),
            height: self.height,
            width: self.width,
            images: self.images.split_off(at),
        }
    }

    /// Assembles samples `idx` into a `[B, 1, H, W]` batch.
    pub fn batch_images<F: Scalar>(&self, idx: &[usize]) -> ArrayD<F> {
        assert!(!idx.is_empty(), "empty batch");
        let (h, w) = (self.height, self.width);
        let mut out = ArrayD::<F>::zeros(IxDyn(&[idx.len(), 1, h, w]));
        let flat = out.as_slice_mut().expect("fresh batch tensor is contiguous");
        for (b, &i) in idx.iter().enumerate() {
            let img = &self.images[i];
            let dst = &mut flat[b * h * w..(b + 1) * h * w];
            for (d, &byte) in dst.iter_mut().zip(img.iter()) {
                // Matches the image loader: PGM byte → f32 → scalar.
                *d = F::lit((byte as f32 / 255.0) as f64);
            }
        }
        out
    }
}

/// The training view of a corpus: the train split minus a validation tail
/// held out from its end.
pub struct TrainSet {
    pub train: LoadedSplit,
    pub holdout: LoadedSplit,
}

impl TrainSet {
    pub fn build(ds: &Dataset, val_holdout: usize) -> Result<TrainSet> {
        let mut train = LoadedSplit::load(ds, Split::Train)?;
        if val_holdout >= train.len() {
            return Err(Error::Config(format!(
                "val_holdout {} leaves no training samples (train split has {})",
                val_holdout,
                train.len()
            )));
        }
        let holdout = train.split_tail(val_holdout);
        Ok(TrainSet { train, holdout })
    }
}
