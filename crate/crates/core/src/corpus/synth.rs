//! Dataset synthesis and the manifest/directory layout.

use super::{pgm, render, GlyphSet, Split, SplitSpec};
use crate::config::CorpusConfig;
use crate::error::{Error, Result};
use crate::rng;
use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One manifest line: (id, split, label ids, style seed, image path).
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub id: u64,
    pub split: Split,
    pub labels: Vec<u32>,
    pub style_seed: u64,
    pub path: String,
}

/// A corpus directory opened for reading.
pub struct Dataset {
    pub dir: PathBuf,
    pub rows: Vec<ManifestRow>,
    pub glyphs: GlyphSet,
}

impl Dataset {
    pub fn load(dir: &Path) -> Result<Dataset> {
        let manifest_path = dir.join("manifest.tsv");
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::Format {
                    what: "manifest.tsv".into(),
                    detail: format!("line {}: expected 5 columns, got {}", lineno + 1, cols.len()),
                });
            }
            let id = cols[0].parse().map_err(|_| Error::Format {
                what: "manifest.tsv".into(),
                detail: format!("line {}: bad id", lineno + 1),
            })?;
            let split = Split::parse(cols[1])?;
            let labels = cols[2]
                .split(' ')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    s.parse().map_err(|_| Error::Format {
                        what: "manifest.tsv".into(),
                        detail: format!("line {}: bad label id {s:?}", lineno + 1),
                    })
                })
                .collect::<Result<Vec<u32>>>()?;
            if labels.is_empty() {
                return Err(Error::Format {
                    what: "manifest.tsv".into(),
                    detail: format!("line {}: empty label sequence", lineno + 1),
                });
            }
            let style_seed = cols[3].parse().map_err(|_| Error::Format {
                what: "manifest.tsv".into(),
                detail: format!("line {}: bad style seed", lineno + 1),
            })?;
            rows.push(ManifestRow { id, split, labels, style_seed, path: cols[4].to_string() });
        }
        if rows.is_empty() {
            return Err(Error::Format {
                what: "manifest.tsv".into(),
                detail: "no samples".into(),
            });
        }
        let glyphs = GlyphSet::load(&dir.join("alphabet.bin"))?;
        Ok(Dataset { dir: dir.to_path_buf(), rows, glyphs })
    }

    pub fn rows_for(&self, split: Split) -> Vec<&ManifestRow> {
        self.rows.iter().filter(|r| r.split == split).collect()
    }

    pub fn image(&self, row: &ManifestRow) -> Result<Array2<f32>> {
        pgm::read_pgm(&self.dir.join(&row.path))
    }

    /// Sorted union of all labels occurring in the train split — the label
    /// set a model trained on this corpus can claim.
    pub fn train_label_set(&self) -> Vec<u32> {
        let mut seen: Vec<u32> = Vec::new();
        for row in self.rows.iter().filter(|r| r.split == Split::Train) {
            for &l in &row.labels {
                if !seen.contains(&l) {
                    seen.push(l);
                }
            }
        }
        seen.sort_unstable();
        seen
    }
}

fn sample_length(rng: &mut ChaCha8Rng, dist: &[f64], min_len: usize) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return min_len + i;
        }
    }
    min_len + dist.len() - 1
}

fn sample_from(rng: &mut ChaCha8Rng, pool: &[u32]) -> u32 {
    pool[rng.gen_range(0..pool.len())]
}

fn sample_bigram_word(
    rng: &mut ChaCha8Rng,
    len: usize,
    spec: &SplitSpec,
) -> Vec<u32> {
    let s = spec.seen.len();
    let mut word = Vec::with_capacity(len);
    let mut idx = rng.gen_range(0..s);
    word.push(spec.seen[idx]);
    for _ in 1..len {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut next = s - 1;
        for j in 0..s {
            acc += spec.bigram[(idx, j)];
            if u < acc {
                next = j;
                break;
            }
        }
        idx = next;
        word.push(spec.seen[idx]);
    }
    word
}

/// Synthesizes all four splits into `out_dir`: renders every sample to a
/// PGM, writes `manifest.tsv`, `alphabet.bin`, and the config echo.
/// Deterministic: identical (config, seed) produce byte-identical trees.
pub fn synthesize_dataset(
    cfg: &CorpusConfig,
    set: &GlyphSet,
    spec: &SplitSpec,
    out_dir: &Path,
) -> Result<Vec<ManifestRow>> {
    cfg.validate()?;
    spec.validate(set.m())?;
    let images = out_dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;

    let dist = cfg.length_dist();
    let mut manifest = String::new();
    let mut rows: Vec<ManifestRow> = Vec::new();
    let mut id: u64 = 0;

    let plan: [(Split, usize); 4] = [
        (Split::Train, cfg.train_count),
        (Split::TestSeen, cfg.test_seen_count),
        (Split::TestNovel, cfg.test_novel_count),
        (Split::TestMixed, cfg.test_mixed_count),
    ];
    for (split, count) in plan {
        let tag = split.as_str();
        let mut len_rng = rng::stream(cfg.seed, &format!("corpus.len.{tag}"));
        let mut char_rng = rng::stream(cfg.seed, &format!("corpus.chars.{tag}"));
        let mut seed_rng = rng::stream(cfg.seed, &format!("corpus.styleseed.{tag}"));
        let all: Vec<u32> = (0..set.m() as u32).collect();
        for _ in 0..count {
            let len = sample_length(&mut len_rng, &dist, cfg.min_len);
            let labels = match split {
                // Both seen-label splits share the training language model;
                // the open-set splits use deliberately mismatched uniform
                // character statistics.
                Split::Train | Split::TestSeen => sample_bigram_word(&mut char_rng, len, spec),
                Split::TestNovel => {
                    (0..len).map(|_| sample_from(&mut char_rng, &spec.novel)).collect()
                }
                Split::TestMixed => {
                    let len = len.max(2);
                    loop {
                        let word: Vec<u32> =
                            (0..len).map(|_| sample_from(&mut char_rng, &all)).collect();
                        let has_seen = word.iter().any(|l| spec.seen.contains(l));
                        let has_novel = word.iter().any(|l| spec.novel.contains(l));
                        if has_seen && has_novel {
                            break word;
                        }
                    }
                }
            };
            let style_seed: u64 = seed_rng.gen();
            let img = render::render_word(&labels, style_seed, set, cfg)?;
            let rel = format!("images/{id:06}.pgm");
            pgm::write_pgm(&out_dir.join(&rel), &img)?;
            let label_str =
                labels.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(" ");
            let _ = writeln!(manifest, "{id}\t{tag}\t{label_str}\t{style_seed}\t{rel}");
            rows.push(ManifestRow { id, split, labels, style_seed, path: rel });
            id += 1;
        }
    }

    let manifest_path = out_dir.join("manifest.tsv");
    std::fs::write(&manifest_path, manifest).map_err(|e| Error::io(&manifest_path, e))?;
    set.save(&out_dir.join("alphabet.bin"))?;
    let echo_path = out_dir.join("corpus_config.txt");
    std::fs::write(&echo_path, cfg.to_text()).map_err(|e| Error::io(&echo_path, e))?;
    Ok(rows)
}

/// Convenience wrapper: alphabet + splits + synthesis in one call.
pub fn generate_corpus(cfg: &CorpusConfig, out_dir: &Path) -> Result<Vec<ManifestRow>> {
    let set = super::build_alphabet(cfg)?;
    let spec = super::make_splits(set.m(), cfg.seen_fraction, cfg.bigram_skew, cfg.seed)?;
    synthesize_dataset(cfg, &set, &spec, out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_alphabet, make_splits};

    fn tiny_cfg() -> CorpusConfig {
        CorpusConfig {
            seed: 13,
            alphabet_size: 12,
            max_len: 4,
            train_count: 2000,
            test_seen_count: 60,
            test_novel_count: 60,
            test_mixed_count: 60,
            seen_fraction: 0.5,
            ..CorpusConfig::default()
        }
    }

    fn synth(dir: &Path) -> (CorpusConfig, SplitSpec, Vec<ManifestRow>) {
        let cfg = tiny_cfg();
        let set = build_alphabet(&cfg).unwrap();
        let spec = make_splits(set.m(), cfg.seen_fraction, cfg.bigram_skew, cfg.seed).unwrap();
        let rows = synthesize_dataset(&cfg, &set, &spec, dir).unwrap();
        (cfg, spec, rows)
    }

    #[test]
    fn split_constraints_hold() {
        let dir = tempfile::tempdir().unwrap();
        let (cfg, spec, rows) = synth(dir.path());
        assert_eq!(rows.len(), cfg.train_count + 3 * 60);
        for row in &rows {
            assert!(row.labels.len() >= cfg.min_len && row.labels.len() <= cfg.max_len);
            match row.split {
                // No novel-label leakage into any train artifact.
                Split::Train | Split::TestSeen => {
                    assert!(row.labels.iter().all(|l| spec.seen.contains(l)));
                }
                Split::TestNovel => {
                    assert!(row.labels.iter().any(|l| spec.novel.contains(l)));
                }
                Split::TestMixed => {
                    assert!(row.labels.iter().any(|l| spec.seen.contains(l)));
                    assert!(row.labels.iter().any(|l| spec.novel.contains(l)));
                }
            }
        }
    }

    #[test]
    fn lengths_follow_the_requested_distribution() {
        // [DERIVED] χ² goodness-of-fit on the generated manifest.
        let dir = tempfile::tempdir().unwrap();
        let (cfg, _, rows) = synth(dir.path());
        let dist = cfg.length_dist();
        let train: Vec<_> = rows.iter().filter(|r| r.split == Split::Train).collect();
        let n = train.len() as f64;
        let mut observed = vec![0.0f64; dist.len()];
        for row in &train {
            observed[row.labels.len() - cfg.min_len] += 1.0;
        }
        let chi2: f64 = dist
            .iter()
            .zip(&observed)
            .map(|(&p, &o)| {
                let e = p * n;
                (o - e) * (o - e) / e
            })
            .sum();
        // Wilson–Hilferty critical value at alpha ≈ 0.001 for df = bins-1.
        let df = (dist.len() - 1) as f64;
        let z = 3.09;
        let crit = df * (1.0 - 2.0 / (9.0 * df) + z * (2.0 / (9.0 * df)).sqrt()).powi(3);
        assert!(chi2 < crit, "chi2 {chi2} >= critical {crit}");
    }

    #[test]
    fn generation_is_byte_identical_across_runs() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        synth(d1.path());
        synth(d2.path());
        for name in ["manifest.tsv", "alphabet.bin", "corpus_config.txt"] {
            let a = std::fs::read(d1.path().join(name)).unwrap();
            let b = std::fs::read(d2.path().join(name)).unwrap();
            assert_eq!(a, b, "{name} differs across identical runs");
        }
        for id in [0u64, 500, 2050] {
            let rel = format!("images/{id:06}.pgm");
            let a = std::fs::read(d1.path().join(&rel)).unwrap();
            let b = std::fs::read(d2.path().join(&rel)).unwrap();
            assert_eq!(a, b, "{rel} differs across identical runs");
        }
    }

    #[test]
    fn dataset_loader_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let (cfg, spec, rows) = synth(dir.path());
        let ds = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds.rows.len(), rows.len());
        assert_eq!(ds.rows[3].labels, rows[3].labels);
        let img = ds.image(&ds.rows[0]).unwrap();
        assert_eq!(img.dim(), (cfg.image_height, cfg.image_width));
        let trained = ds.train_label_set();
        assert!(trained.iter().all(|l| spec.seen.contains(l)));
        assert!(!trained.is_empty());
    }
}
