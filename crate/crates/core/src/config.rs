//! Flat `key = value` configuration files.
//!
//! One statement per line, `#` starts a comment, unknown or duplicate keys
//! are hard errors, and every key has a documented default (see README).
//! Each config can echo itself back as canonical text — the echo is what
//! gets hashed for provenance and embedded in model containers.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Parses flat `key = value` text into an ordered map. Duplicate keys are
/// rejected; blank lines and `#` comments are ignored.
pub fn parse_flat(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some(eq) = line.find('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got {line:?}",
                lineno + 1
            )));
        };
        let key = line[..eq].trim().to_string();
        let value = line[eq + 1..].trim().to_string();
        if key.is_empty() {
            return Err(Error::Config(format!("line {}: empty key", lineno + 1)));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

fn take<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    slot: &mut T,
) -> Result<()> {
    if let Some(v) = map.remove(key) {
        *slot = v
            .parse()
            .map_err(|_| Error::Config(format!("key `{key}`: cannot parse {v:?}")))?;
    }
    Ok(())
}

fn take_bool(map: &mut BTreeMap<String, String>, key: &str, slot: &mut bool) -> Result<()> {
    if let Some(v) = map.remove(key) {
        *slot = match v.as_str() {
            "true" | "1" | "on" => true,
            "false" | "0" | "off" => false,
            other => {
                return Err(Error::Config(format!(
                    "key `{key}`: expected true/false, got {other:?}"
                )))
            }
        };
    }
    Ok(())
}

fn take_list<T: std::str::FromStr>(
    map: &mut BTreeMap<String, String>,
    key: &str,
    slot: &mut Vec<T>,
) -> Result<()> {
    if let Some(v) = map.remove(key) {
        let mut out = Vec::new();
        for part in v.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            out.push(
                part.parse()
                    .map_err(|_| Error::Config(format!("key `{key}`: bad element {part:?}")))?,
            );
        }
        *slot = out;
    }
    Ok(())
}

fn reject_unknown(map: BTreeMap<String, String>, what: &str) -> Result<()> {
    if let Some((key, _)) = map.into_iter().next() {
        return Err(Error::Config(format!("unknown {what} key `{key}`")));
    }
    Ok(())
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

// ───────────────────────────────────────────────────────────────────────────
// Corpus generation
// ───────────────────────────────────────────────────────────────────────────

/// Configuration for `gen-corpus`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    /// Master seed; every derived stream is keyed off it.
    pub seed: u64,
    /// Number of labels M.
    pub alphabet_size: usize,
    /// Glyph "cases" per label (N = M * cases_per_label).
    pub cases_per_label: usize,
    /// Square glyph raster side in pixels.
    pub glyph_size: usize,
    /// Embedding dimension C of the per-label vectors.
    pub embed_dim: usize,
    /// Minimum mean-absolute pixel difference between glyphs of different
    /// labels, after center-of-mass alignment.
    pub distinctness: f64,
    /// Word image height.
    pub image_height: usize,
    /// Word image width.
    pub image_width: usize,
    /// Image channels; only 1 (grayscale) is supported.
    pub channels: usize,
    /// Shortest / longest word length.
    pub min_len: usize,
    pub max_len: usize,
    /// Relative weights for lengths min_len..=max_len; empty means uniform.
    pub length_weights: Vec<f64>,
    /// Fraction of labels marked seen (the rest are novel).
    pub seen_fraction: f64,
    /// Max/min bigram probability ratio within a row of the training
    /// language model.
    pub bigram_skew: f64,
    /// Word counts per split.
    pub train_count: usize,
    pub test_seen_count: usize,
    pub test_novel_count: usize,
    pub test_mixed_count: usize,
    /// Peak amplitude of the style-seeded additive pixel noise.
    pub render_noise: f64,
    /// Vertical jitter range in pixels applied per glyph slot.
    pub jitter: usize,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            seed: 0,
            alphabet_size: 60,
            cases_per_label: 1,
            glyph_size: 32,
            embed_dim: 64,
            distinctness: 0.15,
            image_height: 32,
            image_width: 128,
            channels: 1,
            min_len: 1,
            max_len: 8,
            length_weights: Vec::new(),
            seen_fraction: 2.0 / 3.0,
            bigram_skew: 10.0,
            train_count: 20_000,
            test_seen_count: 1000,
            test_novel_count: 1000,
            test_mixed_count: 1000,
            render_noise: 0.05,
            jitter: 2,
        }
    }
}

impl CorpusConfig {
    pub fn from_text(text: &str) -> Result<CorpusConfig> {
        let mut map = parse_flat(text)?;
        let mut c = CorpusConfig::default();
        take(&mut map, "seed", &mut c.seed)?;
        take(&mut map, "alphabet_size", &mut c.alphabet_size)?;
        take(&mut map, "cases_per_label", &mut c.cases_per_label)?;
        take(&mut map, "glyph_size", &mut c.glyph_size)?;
        take(&mut map, "embed_dim", &mut c.embed_dim)?;
        take(&mut map, "distinctness", &mut c.distinctness)?;
        take(&mut map, "image_height", &mut c.image_height)?;
        take(&mut map, "image_width", &mut c.image_width)?;
        take(&mut map, "channels", &mut c.channels)?;
        take(&mut map, "min_len", &mut c.min_len)?;
        take(&mut map, "max_len", &mut c.max_len)?;
        take_list(&mut map, "length_weights", &mut c.length_weights)?;
        take(&mut map, "seen_fraction", &mut c.seen_fraction)?;
        take(&mut map, "bigram_skew", &mut c.bigram_skew)?;
        take(&mut map, "train_count", &mut c.train_count)?;
        take(&mut map, "test_seen_count", &mut c.test_seen_count)?;
        take(&mut map, "test_novel_count", &mut c.test_novel_count)?;
        take(&mut map, "test_mixed_count", &mut c.test_mixed_count)?;
        take(&mut map, "render_noise", &mut c.render_noise)?;
        take(&mut map, "jitter", &mut c.jitter)?;
        reject_unknown(map, "corpus")?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<CorpusConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        CorpusConfig::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.alphabet_size < 2 {
            return Err(Error::Config("alphabet_size must be >= 2".into()));
        }
        if self.cases_per_label == 0 {
            return Err(Error::Config("cases_per_label must be >= 1".into()));
        }
        if self.glyph_size < 8 {
            return Err(Error::Config("glyph_size must be >= 8".into()));
        }
        if !(0.0..1.0).contains(&self.distinctness) || self.distinctness <= 0.0 {
            return Err(Error::Config("distinctness must lie in (0, 1)".into()));
        }
        if self.channels != 1 {
            return Err(Error::Config(
                "channels: only 1 (grayscale) is supported; images are written as single-channel PGM"
                    .into(),
            ));
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(Error::Config("need 1 <= min_len <= max_len".into()));
        }
        if !self.length_weights.is_empty() {
            let bins = self.max_len - self.min_len + 1;
            if self.length_weights.len() != bins {
                return Err(Error::Config(format!(
                    "length_weights needs {bins} entries (min_len..=max_len), got {}",
                    self.length_weights.len()
                )));
            }
            if self.length_weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
                return Err(Error::Config("length_weights must be finite and >= 0".into()));
            }
            if self.length_weights.iter().sum::<f64>() <= 0.0 {
                return Err(Error::Infeasible("length_weights carry no mass".into()));
            }
        }
        if !(self.seen_fraction > 0.0 && self.seen_fraction < 1.0) {
            return Err(Error::Config("seen_fraction must lie in (0, 1)".into()));
        }
        if self.bigram_skew < 1.0 {
            return Err(Error::Config("bigram_skew must be >= 1".into()));
        }
        if self.train_count == 0
            || self.test_seen_count == 0
            || self.test_novel_count == 0
            || self.test_mixed_count == 0
        {
            return Err(Error::Config("split counts must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.render_noise) {
            return Err(Error::Config("render_noise must lie in [0, 1]".into()));
        }
        Ok(())
    }

    /// Canonical text echo: every key, fixed order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "alphabet_size = {}", self.alphabet_size);
        let _ = writeln!(s, "cases_per_label = {}", self.cases_per_label);
        let _ = writeln!(s, "glyph_size = {}", self.glyph_size);
        let _ = writeln!(s, "embed_dim = {}", self.embed_dim);
        let _ = writeln!(s, "distinctness = {}", self.distinctness);
        let _ = writeln!(s, "image_height = {}", self.image_height);
        let _ = writeln!(s, "image_width = {}", self.image_width);
        let _ = writeln!(s, "channels = {}", self.channels);
        let _ = writeln!(s, "min_len = {}", self.min_len);
        let _ = writeln!(s, "max_len = {}", self.max_len);
        let _ = writeln!(s, "length_weights = {}", join(&self.length_weights));
        let _ = writeln!(s, "seen_fraction = {}", self.seen_fraction);
        let _ = writeln!(s, "bigram_skew = {}", self.bigram_skew);
        let _ = writeln!(s, "train_count = {}", self.train_count);
        let _ = writeln!(s, "test_seen_count = {}", self.test_seen_count);
        let _ = writeln!(s, "test_novel_count = {}", self.test_novel_count);
        let _ = writeln!(s, "test_mixed_count = {}", self.test_mixed_count);
        let _ = writeln!(s, "render_noise = {}", self.render_noise);
        let _ = writeln!(s, "jitter = {}", self.jitter);
        s
    }

    /// Normalized length distribution over min_len..=max_len.
    pub fn length_dist(&self) -> Vec<f64> {
        let bins = self.max_len - self.min_len + 1;
        let raw: Vec<f64> = if self.length_weights.is_empty() {
            vec![1.0; bins]
        } else {
            self.length_weights.clone()
        };
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|w| w / total).collect()
    }
}

// ───────────────────────────────────────────────────────────────────────────
// Model architecture + training
// ───────────────────────────────────────────────────────────────────────────

/// Ablation presets selectable via `train --ablation`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationMode {
    /// Attention/length gradients flow into the backbone; no context module.
    Base,
    /// Detached temporal attention only.
    Dta,
    /// Detached temporal attention + decoupled context anchor.
    Full,
}

impl AblationMode {
    pub fn parse(s: &str) -> Result<AblationMode> {
        match s {
            "base" => Ok(AblationMode::Base),
            "dta" => Ok(AblationMode::Dta),
            "full" => Ok(AblationMode::Full),
            other => Err(Error::Config(format!(
                "unknown ablation `{other}` (expected base|dta|full)"
            ))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AblationMode::Base => "base",
            AblationMode::Dta => "dta",
            AblationMode::Full => "full",
        }
    }
}

/// Architecture dimensions and ablation toggles (the θ layout).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Channels of the three backbone stages; the last is the prototype
    /// dimension D.
    pub channels: Vec<usize>,
    /// Cumulative strides of the three feature taps (F_l, F_m, F_h).
    pub strides: Vec<usize>,
    /// Convolutions per backbone stage.
    pub stage_convs: usize,
    /// Context embedding dimension C; must match the alphabet container.
    pub embed_dim: usize,
    /// Max decodable word length.
    pub max_len: usize,
    /// Expected word-clip size; validated against the dataset.
    pub image_height: usize,
    pub image_width: usize,
    /// Context encoder depth and head count.
    pub ctx_layers: usize,
    pub ctx_heads: usize,
    /// When true, the attention map and FPN inputs are gradient-detached
    /// from the recognition losses (the DTA contract).
    pub dta_detach: bool,
    /// When true, the context module is built and L_ctx is trained.
    pub dca: bool,
    /// Initial value of the trainable rejection threshold α.
    pub alpha_init: f64,
    /// Initial sharpness of the temporal attention slices.
    pub gamma_init: f64,
    /// Weight of the attention-concentration (entropy) regularizer; 0 turns
    /// it off. Not part of the three-term loss bundle.
    pub entropy_weight: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            channels: vec![16, 32, 64],
            strides: vec![2, 4, 8],
            stage_convs: 3,
            embed_dim: 64,
            max_len: 8,
            image_height: 32,
            image_width: 128,
            ctx_layers: 4,
            ctx_heads: 4,
            dta_detach: true,
            dca: true,
            alpha_init: 0.5,
            gamma_init: 8.0,
            entropy_weight: 0.01,
        }
    }
}

impl ModelConfig {
    /// Prototype / feature dimension D (channels of F_h).
    pub fn dim(&self) -> usize {
        *self.channels.last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.len() != 3 || self.strides.len() != 3 {
            return Err(Error::Config("channels and strides need exactly 3 entries".into()));
        }
        if self.channels.iter().any(|&c| c == 0) {
            return Err(Error::Config("channels must be positive".into()));
        }
        if !matches!(self.strides[0], 1 | 2 | 4) {
            return Err(Error::Config("strides[0] must be 1, 2 or 4".into()));
        }
        for w in self.strides.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b % a != 0 || !matches!(b / a, 1 | 2 | 4) {
                return Err(Error::Config(
                    "each stride must be a 1x/2x/4x multiple of the previous".into(),
                ));
            }
        }
        if self.stage_convs == 0 {
            return Err(Error::Config("stage_convs must be >= 1".into()));
        }
        if self.embed_dim == 0 || self.embed_dim % self.ctx_heads != 0 {
            return Err(Error::Config("embed_dim must be a positive multiple of ctx_heads".into()));
        }
        if self.max_len == 0 {
            return Err(Error::Config("max_len must be >= 1".into()));
        }
        let s = self.strides[2];
        if self.image_height == 0
            || self.image_width == 0
            || self.image_height % s != 0
            || self.image_width % s != 0
        {
            return Err(Error::Config(
                "image_height/image_width must be positive multiples of the final stride".into(),
            ));
        }
        if self.dca && (self.ctx_layers == 0 || self.ctx_heads == 0) {
            return Err(Error::Config("dca requires ctx_layers and ctx_heads >= 1".into()));
        }
        if self.gamma_init <= 0.0 {
            return Err(Error::Config("gamma_init must be positive".into()));
        }
        Ok(())
    }
}

/// Full training configuration (`train --config`): architecture plus
/// optimization schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub seed: u64,
    /// AdaDelta settings.
    pub lr: f64,
    pub rho: f64,
    pub eps: f64,
    /// Global-norm gradient clip; 0 disables clipping.
    pub clip_norm: f64,
    pub batch_size: usize,
    pub iters: usize,
    /// Iteration at which lr is multiplied by decay_factor; 0 means iters/2.
    pub decay_iter: usize,
    pub decay_factor: f64,
    /// Negative labels added to each step's prototype subset.
    pub negatives: usize,
    /// Validation cadence (iterations); 0 disables validation logging.
    pub val_every: usize,
    /// Checkpoint cadence (iterations); 0 disables intermediate checkpoints.
    pub checkpoint_every: usize,
    /// Train-split samples held out (from the tail) for validation.
    pub val_holdout: usize,
    /// Weight of L_ctx in the optimized total (report keeps the raw value).
    pub ctx_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelConfig::default(),
            seed: 0,
            lr: 1e-2,
            rho: 0.9,
            eps: 1e-6,
            clip_norm: 5.0,
            batch_size: 32,
            iters: 5000,
            decay_iter: 0,
            decay_factor: 0.1,
            negatives: 8,
            val_every: 500,
            checkpoint_every: 1000,
            val_holdout: 1000,
            ctx_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn from_text(text: &str) -> Result<TrainConfig> {
        let mut map = parse_flat(text)?;
        let mut c = TrainConfig::default();
        take_list(&mut map, "channels", &mut c.model.channels)?;
        take_list(&mut map, "strides", &mut c.model.strides)?;
        take(&mut map, "stage_convs", &mut c.model.stage_convs)?;
        take(&mut map, "embed_dim", &mut c.model.embed_dim)?;
        take(&mut map, "max_len", &mut c.model.max_len)?;
        take(&mut map, "image_height", &mut c.model.image_height)?;
        take(&mut map, "image_width", &mut c.model.image_width)?;
        take(&mut map, "ctx_layers", &mut c.model.ctx_layers)?;
        take(&mut map, "ctx_heads", &mut c.model.ctx_heads)?;
        take_bool(&mut map, "dta_detach", &mut c.model.dta_detach)?;
        take_bool(&mut map, "dca", &mut c.model.dca)?;
        take(&mut map, "alpha_init", &mut c.model.alpha_init)?;
        take(&mut map, "gamma_init", &mut c.model.gamma_init)?;
        take(&mut map, "entropy_weight", &mut c.model.entropy_weight)?;
        take(&mut map, "seed", &mut c.seed)?;
        take(&mut map, "lr", &mut c.lr)?;
        take(&mut map, "rho", &mut c.rho)?;
        take(&mut map, "eps", &mut c.eps)?;
        take(&mut map, "clip_norm", &mut c.clip_norm)?;
        take(&mut map, "batch_size", &mut c.batch_size)?;
        take(&mut map, "iters", &mut c.iters)?;
        take(&mut map, "decay_iter", &mut c.decay_iter)?;
        take(&mut map, "decay_factor", &mut c.decay_factor)?;
        take(&mut map, "negatives", &mut c.negatives)?;
        take(&mut map, "val_every", &mut c.val_every)?;
        take(&mut map, "checkpoint_every", &mut c.checkpoint_every)?;
        take(&mut map, "val_holdout", &mut c.val_holdout)?;
        take(&mut map, "ctx_weight", &mut c.ctx_weight)?;
        reject_unknown(map, "train")?;
        c.validate()?;
        Ok(c)
    }

    pub fn from_file(path: &Path) -> Result<TrainConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TrainConfig::from_text(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if self.lr <= 0.0 || self.rho <= 0.0 || self.rho >= 1.0 || self.eps <= 0.0 {
            return Err(Error::Config("need lr > 0, 0 < rho < 1, eps > 0".into()));
        }
        if self.clip_norm < 0.0 {
            return Err(Error::Config("clip_norm must be >= 0 (0 disables)".into()));
        }
        if self.batch_size == 0 || self.iters == 0 {
            return Err(Error::Config("batch_size and iters must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.decay_factor) || self.decay_factor == 0.0 {
            return Err(Error::Config("decay_factor must lie in (0, 1]".into()));
        }
        if self.ctx_weight < 0.0 {
            return Err(Error::Config("ctx_weight must be >= 0".into()));
        }
        Ok(())
    }

    /// Applies an ablation preset over the file's toggles.
    pub fn apply_ablation(&mut self, mode: AblationMode) {
        match mode {
            AblationMode::Base => {
                self.model.dta_detach = false;
                self.model.dca = false;
            }
            AblationMode::Dta => {
                self.model.dta_detach = true;
                self.model.dca = false;
            }
            AblationMode::Full => {
                self.model.dta_detach = true;
                self.model.dca = true;
            }
        }
    }

    /// Effective decay iteration (0 in the file means "halfway").
    pub fn effective_decay_iter(&self) -> usize {
        if self.decay_iter == 0 {
            self.iters / 2
        } else {
            self.decay_iter
        }
    }

    /// Canonical text echo: every key, fixed order.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut s = String::new();
        let _ = writeln!(s, "channels = {}", join(&m.channels));
        let _ = writeln!(s, "strides = {}", join(&m.strides));
        let _ = writeln!(s, "stage_convs = {}", m.stage_convs);
        let _ = writeln!(s, "embed_dim = {}", m.embed_dim);
        let _ = writeln!(s, "max_len = {}", m.max_len);
        let _ = writeln!(s, "image_height = {}", m.image_height);
        let _ = writeln!(s, "image_width = {}", m.image_width);
        let _ = writeln!(s, "ctx_layers = {}", m.ctx_layers);
        let _ = writeln!(s, "ctx_heads = {}", m.ctx_heads);
        let _ = writeln!(s, "dta_detach = {}", m.dta_detach);
        let _ = writeln!(s, "dca = {}", m.dca);
        let _ = writeln!(s, "alpha_init = {}", m.alpha_init);
        let _ = writeln!(s, "gamma_init = {}", m.gamma_init);
        let _ = writeln!(s, "entropy_weight = {}", m.entropy_weight);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "lr = {}", self.lr);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "eps = {}", self.eps);
        let _ = writeln!(s, "clip_norm = {}", self.clip_norm);
        let _ = writeln!(s, "batch_size = {}", self.batch_size);
        let _ = writeln!(s, "iters = {}", self.iters);
        let _ = writeln!(s, "decay_iter = {}", self.decay_iter);
        let _ = writeln!(s, "decay_factor = {}", self.decay_factor);
        let _ = writeln!(s, "negatives = {}", self.negatives);
        let _ = writeln!(s, "val_every = {}", self.val_every);
        let _ = writeln!(s, "checkpoint_every = {}", self.checkpoint_every);
        let _ = writeln!(s, "val_holdout = {}", self.val_holdout);
        let _ = writeln!(s, "ctx_weight = {}", self.ctx_weight);
        s
    }
}

/// Sha256 of a canonical config echo, hex-encoded.
pub fn config_hash(echo: &str) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(echo.as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_flat_handles_comments_and_rejects_duplicates() {
        let map = parse_flat("a = 1\n# full comment\nb = two # trailing\n\n").unwrap();
        assert_eq!(map["a"], "1");
        assert_eq!(map["b"], "two");
        assert!(matches!(parse_flat("a = 1\na = 2"), Err(Error::Config(_))));
        assert!(matches!(parse_flat("just words"), Err(Error::Config(_))));
    }

    #[test]
    fn corpus_config_roundtrips_and_rejects_unknown_keys() {
        let c = CorpusConfig::from_text("alphabet_size = 40\nseed = 9\n").unwrap();
        assert_eq!(c.alphabet_size, 40);
        assert_eq!(c.seed, 9);
        let echoed = CorpusConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(echoed, c);
        assert!(matches!(
            CorpusConfig::from_text("no_such_key = 1"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn train_config_roundtrips_and_applies_ablations() {
        let mut c = TrainConfig::from_text("channels = 8,16,32\niters = 100\n").unwrap();
        assert_eq!(c.model.channels, vec![8, 16, 32]);
        assert_eq!(c.model.dim(), 32);
        let echoed = TrainConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(echoed, c);
        c.apply_ablation(AblationMode::Base);
        assert!(!c.model.dta_detach && !c.model.dca);
        c.apply_ablation(AblationMode::Dta);
        assert!(c.model.dta_detach && !c.model.dca);
        c.apply_ablation(AblationMode::Full);
        assert!(c.model.dta_detach && c.model.dca);
    }

    #[test]
    fn validation_catches_bad_values() {
        assert!(CorpusConfig::from_text("seen_fraction = 1.0").is_err());
        assert!(CorpusConfig::from_text("channels = 3").is_err());
        assert!(CorpusConfig::from_text("length_weights = 1,2").is_err());
        assert!(TrainConfig::from_text("strides = 2,3,8").is_err());
        assert!(TrainConfig::from_text("embed_dim = 30\nctx_heads = 4").is_err());
    }

    #[test]
    fn config_hash_is_stable_and_distinct() {
        let a = config_hash("x = 1\n");
        let b = config_hash("x = 1\n");
        let c = config_hash("x = 2\n");
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.len(), 64);
    }

    #[test]
    fn length_dist_defaults_to_uniform() {
        let c = CorpusConfig::from_text("min_len = 2\nmax_len = 5").unwrap();
        let d = c.length_dist();
        assert_eq!(d.len(), 4);
        assert!(d.iter().all(|&p| (p - 0.25).abs() < 1e-12));
    }
}
