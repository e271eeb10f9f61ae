//! Procedural synthetic word-image corpora.
//!
//! The generator draws a glyph alphabet (seeded random strokes, pairwise
//! distinctness enforced), splits it into seen/novel label sets with a
//! skewed bigram language model over the seen side, and synthesizes word
//! images whose style parameters (stroke thickness, contrast, background,
//! blur, jitter, noise) are a pure function of a per-sample style seed —
//! never of the label content. Styles and contents are therefore
//! independent by construction, which is the dataset-level analog of the
//! context-free-rendering assumption the oracle module checks exactly.
//!
//! On-disk layout of a generated corpus directory:
//! - `manifest.tsv` — one row per sample: id, split tag, space-separated
//!   label ids, style seed, relative image path.
//! - `images/NNNNNN.pgm` — binary 8-bit P5 rasters.
//! - `alphabet.bin` — "OCCD" container with glyph rasters, the glyph→label
//!   map, and per-label embeddings.
//! - `corpus_config.txt` — canonical echo of the generating config.

mod alphabet;
mod glyphs;
pub mod pgm;
mod render;
mod splits;
mod synth;

pub use glyphs::build_alphabet;
pub use pgm::{read_pgm, write_pgm};
pub use render::{render_word, style_params, StyleParams};
pub use splits::make_splits;
pub use synth::{generate_corpus, synthesize_dataset, Dataset, ManifestRow};

use crate::error::{Error, Result};
use ndarray::Array2;

/// Split tags a sample can carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    TestSeen,
    TestNovel,
    TestMixed,
}

impl Split {
    pub const ALL: [Split; 4] = [Split::Train, Split::TestSeen, Split::TestNovel, Split::TestMixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::TestSeen => "test-seen",
            Split::TestNovel => "test-novel",
            Split::TestMixed => "test-mixed",
        }
    }

    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test-seen" => Ok(Split::TestSeen),
            "test-novel" => Ok(Split::TestNovel),
            "test-mixed" => Ok(Split::TestMixed),
            other => Err(Error::Format {
                what: "split tag".into(),
                detail: format!("unknown split `{other}`"),
            }),
        }
    }
}

/// The glyph alphabet: N binary rasters (some labels own several "cases"),
/// the glyph→label map, and per-label embedding rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GlyphSet {
    pub glyph_size: usize,
    /// N rasters with values in {0, 1}.
    pub glyphs: Vec<Array2<f32>>,
    /// N entries mapping each glyph to its label id in 0..M.
    pub labels: Vec<u32>,
    /// M×C per-label embedding rows.
    pub embeddings: Array2<f64>,
}

impl GlyphSet {
    /// Number of glyphs N.
    pub fn n(&self) -> usize {
        self.glyphs.len()
    }

    /// Number of labels M.
    pub fn m(&self) -> usize {
        self.embeddings.nrows()
    }

    /// Embedding dimension C.
    pub fn c(&self) -> usize {
        self.embeddings.ncols()
    }

    /// Indices of the glyphs ("cases") belonging to a label.
    pub fn rows_for_label(&self, label: u32) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.labels[i] == label).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.glyphs.is_empty() || self.m() == 0 {
            return Err(Error::Invalid("empty glyph set".into()));
        }
        if self.labels.len() != self.n() {
            return Err(Error::Invalid("label map length != glyph count".into()));
        }
        let m = self.m() as u32;
        let mut seen = vec![false; m as usize];
        for (i, &lab) in self.labels.iter().enumerate() {
            if lab >= m {
                return Err(Error::Invalid(format!("glyph {i} maps to label {lab} >= M {m}")));
            }
            seen[lab as usize] = true;
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Invalid("some label has no glyph".into()));
        }
        for (i, g) in self.glyphs.iter().enumerate() {
            if g.shape() != [self.glyph_size, self.glyph_size] {
                return Err(Error::Invalid(format!("glyph {i} has wrong shape")));
            }
            if g.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
                return Err(Error::Invalid(format!("glyph {i} has values outside [0, 1]")));
            }
            if g.iter().all(|&v| v == 0.0) {
                return Err(Error::Invalid(format!("glyph {i} has no foreground")));
            }
        }
        if self.embeddings.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("non-finite embedding".into()));
        }
        Ok(())
    }

    /// Serializes to the "OCCD" container format.
    pub fn to_bytes(&self) -> Vec<u8> {
        alphabet::to_bytes(self)
    }

    /// Parses an "OCCD" container.
    pub fn from_bytes(bytes: &[u8]) -> Result<GlyphSet> {
        alphabet::from_bytes(bytes)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<GlyphSet> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        GlyphSet::from_bytes(&bytes)
    }

    /// Sha256 over the serialized container; the provenance hash recorded in
    /// prototype banks.
    pub fn content_hash(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(self.to_bytes());
        h.finalize().into()
    }
}

/// One synthesized sample.
#[derive(Debug, Clone)]
pub struct WordSample {
    pub image: Array2<f32>,
    pub labels: Vec<u32>,
    pub style_seed: u64,
    pub split: Split,
}

impl WordSample {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Seen/novel label partition plus the training bigram over seen labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Sorted seen label ids.
    pub seen: Vec<u32>,
    /// Sorted novel label ids.
    pub novel: Vec<u32>,
    pub seed: u64,
    /// Row-stochastic |seen|×|seen| bigram, indexed by position in `seen`.
    pub bigram: Array2<f64>,
}

impl SplitSpec {
    pub fn validate(&self, m: usize) -> Result<()> {
        if self.seen.is_empty() || self.novel.is_empty() {
            return Err(Error::Infeasible("seen/novel split has an empty side".into()));
        }
        let mut all: Vec<u32> = self.seen.iter().chain(&self.novel).copied().collect();
        all.sort_unstable();
        let expect: Vec<u32> = (0..m as u32).collect();
        if all != expect {
            return Err(Error::Invalid("seen/novel sets do not partition the alphabet".into()));
        }
        let s = self.seen.len();
        if self.bigram.shape() != [s, s] {
            return Err(Error::Invalid("bigram shape != |seen|^2".into()));
        }
        for row in self.bigram.rows() {
            let sum: f64 = row.sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Invalid(format!("bigram row sums to {sum}")));
            }
        }
        Ok(())
    }
}
