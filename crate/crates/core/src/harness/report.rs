//! The evaluation protocol: category breakdown, report rendering, saving.

use crate::bytesio::{sha256_bytes, sha256_hex};
use crate::corpus::{Dataset, Split};
use crate::error::{Error, Result};
use crate::harness::infer::{build_bank, decode_split, EvalMode};
use crate::harness::metrics::{char_accuracy_1ned, line_accuracy, UNK_TOKEN};
use crate::nn::Model;
use crate::trainer::LoadedSplit;
use autograd::Scalar;
use std::fmt::Write as _;
use std::path::Path;

/// Word categories relative to the model's trained label set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    SeenOnly,
    NovelOnly,
    Mixed,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::SeenOnly, Category::NovelOnly, Category::Mixed];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::SeenOnly => "seen-only",
            Category::NovelOnly => "novel-only",
            Category::Mixed => "mixed",
        }
    }

    /// Categorizes a word by membership of its labels in `seen` (ascending).
    pub fn of(labels: &[u32], seen: &[u32]) -> Category {
        let hits = labels.iter().filter(|l| seen.binary_search(l).is_ok()).count();
        if hits == labels.len() {
            Category::SeenOnly
        } else if hits == 0 {
            Category::NovelOnly
        } else {
            Category::Mixed
        }
    }
}

/// Metrics over one category of a split; accuracy fields are `None` when the
/// category is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryReport {
    pub count: usize,
    pub line_accuracy: Option<f64>,
    pub char_accuracy: Option<f64>,
    /// Fraction of predicted tokens that are UNK.
    pub unk_rate: Option<f64>,
}

/// The full evaluation report. Deliberately carries no mode tag: open-mode
/// evaluation of a context-free model must be *bit-identical* to close-mode,
/// and the report is where that contract is checked.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub split: String,
    pub samples: usize,
    pub line_accuracy: f64,
    pub char_accuracy: f64,
    pub unk_rate: f64,
    pub seen_only: CategoryReport,
    pub novel_only: CategoryReport,
    pub mixed: CategoryReport,
    pub config_hash: String,
    pub model_hash: String,
}

fn category_metrics(preds: &[Vec<u32>], gts: &[Vec<u32>], idx: &[usize]) -> CategoryReport {
    if idx.is_empty() {
        return CategoryReport {
            count: 0,
            line_accuracy: None,
            char_accuracy: None,
            unk_rate: None,
        };
    }
    let p: Vec<Vec<u32>> = idx.iter().map(|&i| preds[i].clone()).collect();
    let g: Vec<Vec<u32>> = idx.iter().map(|&i| gts[i].clone()).collect();
    CategoryReport {
        count: idx.len(),
        line_accuracy: Some(line_accuracy(&p, &g)),
        char_accuracy: Some(char_accuracy_1ned(&p, &g)),
        unk_rate: Some(unk_fraction(&p)),
    }
}

fn unk_fraction(preds: &[Vec<u32>]) -> f64 {
    let total: usize = preds.iter().map(|p| p.len()).sum();
    if total == 0 {
        return 0.0;
    }
    let unk: usize = preds.iter().flatten().filter(|&&t| t == UNK_TOKEN).count();
    unk as f64 / total as f64
}

/// Builds the category partition of a split relative to `seen` labels.
pub fn categorize(gts: &[Vec<u32>], seen: &[u32]) -> Vec<Category> {
    gts.iter().map(|g| Category::of(g, seen)).collect()
}

/// Evaluates `model` on one split of a corpus.
///
/// The prototype bank always covers the *full* alphabet — open-set operation
/// is the default posture, and close mode differs only by fusing the context
/// factor into the label scores (UNK decisions stay visual). The bank is
/// rebuilt from glyphs on every call; no training state is touched (the
/// model is taken by shared reference).
pub fn evaluate<F: Scalar>(
    model: &Model<F>,
    ds: &Dataset,
    split: Split,
    mode: EvalMode,
) -> Result<EvalReport> {
    // The alphabet the model was trained against must be the one on disk.
    let alphabet_path = ds.dir.join("alphabet.bin");
    let bytes = std::fs::read(&alphabet_path).map_err(|e| Error::io(&alphabet_path, e))?;
    if sha256_bytes(&bytes) != model.alphabet_hash {
        return Err(Error::BankMismatch(
            "model was trained against a different alphabet container".into(),
        ));
    }

    let mut all_labels: Vec<u32> = ds.glyphs.labels.clone();
    all_labels.sort_unstable();
    all_labels.dedup();
    let bank = build_bank(model, &ds.glyphs, &all_labels)?;

    let data = LoadedSplit::load(ds, split)?;
    if (data.height, data.width) != (model.cfg.model.image_height, model.cfg.model.image_width) {
        return Err(Error::Config(format!(
            "corpus images are {}x{}, model expects {}x{}",
            data.width, data.height, model.cfg.model.image_width, model.cfg.model.image_height
        )));
    }
    let preds = decode_split(model, &bank, &data, mode, 32)?;

    let cats = categorize(&data.labels, &model.labels);
    let index_of = |want: Category| -> Vec<usize> {
        cats.iter().enumerate().filter(|(_, &c)| c == want).map(|(i, _)| i).collect()
    };

    Ok(EvalReport {
        split: split.as_str().to_string(),
        samples: data.len(),
        line_accuracy: line_accuracy(&preds, &data.labels),
        char_accuracy: char_accuracy_1ned(&preds, &data.labels),
        unk_rate: unk_fraction(&preds),
        seen_only: category_metrics(&preds, &data.labels, &index_of(Category::SeenOnly)),
        novel_only: category_metrics(&preds, &data.labels, &index_of(Category::NovelOnly)),
        mixed: category_metrics(&preds, &data.labels, &index_of(Category::Mixed)),
        config_hash: sha256_hex(model.cfg.to_text().as_bytes()),
        model_hash: sha256_hex(&model.to_bytes()),
    })
}

fn opt6(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_default()
}

impl EvalReport {
    /// Canonical TSV: a key/value block followed by the category table.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "key\tvalue");
        let _ = writeln!(out, "split\t{}", self.split);
        let _ = writeln!(out, "samples\t{}", self.samples);
        let _ = writeln!(out, "line_accuracy\t{:.6}", self.line_accuracy);
        let _ = writeln!(out, "char_accuracy_1ned\t{:.6}", self.char_accuracy);
        let _ = writeln!(out, "unk_rate\t{:.6}", self.unk_rate);
        let _ = writeln!(out, "config_hash\t{}", self.config_hash);
        let _ = writeln!(out, "model_hash\t{}", self.model_hash);
        let _ = writeln!(out);
        let _ = writeln!(out, "category\tcount\tline_accuracy\tchar_accuracy_1ned\tunk_rate");
        for (name, cat) in [
            ("seen-only", &self.seen_only),
            ("novel-only", &self.novel_only),
            ("mixed", &self.mixed),
        ] {
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}",
                cat.count,
                opt6(cat.line_accuracy),
                opt6(cat.char_accuracy),
                opt6(cat.unk_rate)
            );
        }
        out
    }

    /// Human-readable summary.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "split {} ({} samples)", self.split, self.samples);
        let _ = writeln!(out, "  line accuracy          {:.4}", self.line_accuracy);
        let _ = writeln!(out, "  char accuracy (1-NED)  {:.4}", self.char_accuracy);
        let _ = writeln!(out, "  unk emission rate      {:.4}", self.unk_rate);
        for (name, cat) in [
            ("seen-only ", &self.seen_only),
            ("novel-only", &self.novel_only),
            ("mixed     ", &self.mixed),
        ] {
            match (cat.line_accuracy, cat.char_accuracy, cat.unk_rate) {
                (Some(la), Some(ca), Some(ur)) => {
                    let _ = writeln!(
                        out,
                        "  {name} n={:<5} LA {la:.4}  1-NED {ca:.4}  UNK {ur:.4}",
                        cat.count
                    );
                }
                _ => {
                    let _ = writeln!(out, "  {name} n=0");
                }
            }
        }
        let _ = writeln!(out, "  config {}", &self.config_hash[..16]);
        let _ = writeln!(out, "  model  {}", &self.model_hash[..16]);
        out
    }

    /// Writes the TSV to `path` and the text summary next to it as
    /// `<path>.txt`.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))?;
        let txt = path.with_extension(match path.extension() {
            Some(e) => format!("{}.txt", e.to_string_lossy()),
            None => "txt".to_string(),
        });
        std::fs::write(&txt, self.to_text()).map_err(|e| Error::io(&txt, e))
    }
}
