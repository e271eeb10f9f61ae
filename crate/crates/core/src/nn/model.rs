//! The assembled recognizer, its parameter binding, and the binary model
//! container.
//!
//! Container layout ("OMDL", all little-endian):
//! magic · version u32 · canonical config echo (u32-length string) ·
//! label count u32 + label ids u32 · alphabet hash 32 bytes ·
//! parameter count u32, then per parameter: name string · group string ·
//! trainable u8 · ndim u32 · dims u32 · data f32.
//!
//! A checkpoint ("OCKP") wraps the model bytes and appends the optimizer
//! accumulators plus the iteration counter, which is all the state needed
//! to resume bit-identically (batch sampling is keyed by iteration, not by
//! a mutable RNG).

use super::{
    attention::TemporalHead, backbone::Backbone, classifier::Classifier,
    context::ContextEncoder, protogen::ProtoGen, StatUpdate,
};
use crate::bytesio::{Reader, Writer};
use crate::config::TrainConfig;
use crate::corpus::GlyphSet;
use crate::error::{Error, Result};
use crate::rng::stream_n;
use ndarray::{Array2, ArrayD, IxDyn};
use autograd::{AdaDelta, Gradients, ParamStore, Scalar, Tape, Var};
use rand::Rng;

/// Tape handles of every store entry for one forward pass: trainable
/// entries as gradient leaves, buffers as constants.
pub struct Binding {
    vars: Vec<Var>,
}

impl Binding {
    pub fn var(&self, id: autograd::ParamId) -> Var {
        self.vars[id.0]
    }
}

pub struct Model<F: Scalar> {
    pub cfg: TrainConfig,
    pub store: ParamStore<F>,
    pub backbone: Backbone,
    pub head: TemporalHead,
    pub protogen: ProtoGen,
    pub classifier: Classifier,
    pub context: Option<ContextEncoder>,
    /// Training label ids (dataset ids), ascending; defines the context
    /// vocabulary and the order of `E_c` rows.
    pub labels: Vec<u32>,
    /// Sha256 of the alphabet container this model was trained against.
    pub alphabet_hash: [u8; 32],
}

impl<F: Scalar> Model<F> {
    /// Builds a freshly initialized model. Parameter registration order is
    /// fixed (backbone, temporal head, prototype attention, classifier,
    /// context) and each tensor draws from its own named stream, so models
    /// that share a seed share every common tensor's init regardless of
    /// which optional parts exist.
    pub fn new(cfg: &TrainConfig, labels: Vec<u32>, alphabet_hash: [u8; 32]) -> Result<Model<F>> {
        cfg.validate()?;
        if labels.is_empty() {
            return Err(Error::Invalid("model needs a non-empty label set".into()));
        }
        if labels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("model labels must be ascending and unique".into()));
        }
        let seed = cfg.seed;
        let mut store = ParamStore::new();
        let backbone = Backbone::register(&mut store, &cfg.model, seed);
        let head = TemporalHead::register(&mut store, &cfg.model, seed);
        let protogen = ProtoGen::register(&mut store, &cfg.model, seed);
        let classifier = Classifier::register(&mut store, &cfg.model);
        let context = if cfg.model.dca {
            Some(ContextEncoder::register(&mut store, &cfg.model, labels.len(), seed))
        } else {
            None
        };
        Ok(Model {
            cfg: cfg.clone(),
            store,
            backbone,
            head,
            protogen,
            classifier,
            context,
            labels,
            alphabet_hash,
        })
    }

    /// Binds every store entry onto the tape in registration order.
    pub fn bind(&self, tape: &mut Tape<F>) -> Binding {
        let mut vars = Vec::with_capacity(self.store.len());
        for (_, entry) in self.store.iter() {
            let v = entry.value.clone();
            vars.push(if entry.trainable { tape.param(v) } else { tape.constant(v) });
        }
        Binding { vars }
    }

    /// Extracts gradients in store order (the layout `AdaDelta::step` expects).
    pub fn collect_grads(&self, grads: &mut Gradients<F>, bind: &Binding) -> Vec<Option<ArrayD<F>>> {
        (0..self.store.len()).map(|i| grads.take(bind.vars[i])).collect()
    }

    /// Applies running-statistics updates produced by training forwards.
    pub fn apply_updates(&mut self, updates: Vec<StatUpdate<F>>) {
        for u in updates {
            *self.store.value_mut(u.id) = u.value;
        }
    }

    /// Position of a dataset label id in the model label set.
    pub fn label_index(&self, label: u32) -> Option<usize> {
        self.labels.binary_search(&label).ok()
    }

    /// Current rejection threshold value.
    pub fn alpha(&self) -> f64 {
        self.store.value(self.classifier.alpha_id())[[0]].to_f64()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(b"OMDL");
        w.u32(1);
        w.string(&self.cfg.to_text());
        w.u32(self.labels.len() as u32);
        for &l in &self.labels {
            w.u32(l);
        }
        w.bytes(&self.alphabet_hash);
        w.u32(self.store.len() as u32);
        for (_, entry) in self.store.iter() {
            w.string(&entry.name);
            w.string(&entry.group);
            w.u8(entry.trainable as u8);
            w.u32(entry.value.ndim() as u32);
            for &d in entry.value.shape() {
                w.u32(d as u32);
            }
            for &v in entry.value.iter() {
                w.f32(v.to_f64() as f32);
            }
        }
        w.into_bytes()
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Model<F>> {
        let mut r = Reader::new(bytes, "OMDL container");
        let model = Self::read_from(&mut r)?;
        r.finish()?;
        Ok(model)
    }

    fn read_from(r: &mut Reader) -> Result<Model<F>> {
        r.magic(b"OMDL")?;
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::format("OMDL container", format!("unsupported version {version}")));
        }
        let echo = r.string()?;
        let cfg = TrainConfig::from_text(&echo)?;
        let n_labels = r.u32()? as usize;
        let mut labels = Vec::with_capacity(n_labels);
        for _ in 0..n_labels {
            labels.push(r.u32()?);
        }
        let alphabet_hash: [u8; 32] = r.bytes(32)?.try_into().unwrap();
        let mut model = Model::<F>::new(&cfg, labels, alphabet_hash)?;
        let n_params = r.u32()? as usize;
        if n_params != model.store.len() {
            return Err(Error::format(
                "OMDL container",
                format!("parameter count {n_params} != architecture's {}", model.store.len()),
            ));
        }
        for _ in 0..n_params {
            let name = r.string()?;
            let _group = r.string()?;
            let _trainable = r.u8()?;
            let ndim = r.u32()? as usize;
            let mut dims = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                dims.push(r.u32()? as usize);
            }
            let numel: usize = dims.iter().product();
            let mut value = ArrayD::<F>::zeros(IxDyn(&dims));
            {
                let slice = value.as_slice_mut().unwrap();
                for v in slice.iter_mut().take(numel) {
                    *v = F::lit(r.f32()? as f64);
                }
            }
            let id = model
                .store
                .lookup(&name)
                .ok_or_else(|| Error::format("OMDL container", format!("unknown parameter {name}")))?;
            if model.store.value(id).shape() != value.shape() {
                return Err(Error::format(
                    "OMDL container",
                    format!("shape mismatch for parameter {name}"),
                ));
            }
            *model.store.value_mut(id) = value;
        }
        Ok(model)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &std::path::Path) -> Result<Model<F>> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Serializes a resumable checkpoint: model bytes plus optimizer
    /// accumulators and the next iteration index.
    pub fn checkpoint_bytes(&self, opt: &AdaDelta<F>, next_iter: u64) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(b"OCKP");
        w.u32(1);
        w.u64(next_iter);
        let model_bytes = self.to_bytes();
        w.u64(model_bytes.len() as u64);
        w.bytes(&model_bytes);
        let state = opt.state();
        w.u32(state.len() as u32);
        for (acc_g, acc_dx) in state {
            for &v in acc_g.iter() {
                w.f32(v.to_f64() as f32);
            }
            for &v in acc_dx.iter() {
                w.f32(v.to_f64() as f32);
            }
        }
        w.into_bytes()
    }

    /// Restores a checkpoint: returns the model, a matching optimizer with
    /// restored accumulators, and the next iteration index.
    pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<(Model<F>, AdaDelta<F>, u64)> {
        let mut r = Reader::new(bytes, "OCKP container");
        r.magic(b"OCKP")?;
        let version = r.u32()?;
        if version != 1 {
            return Err(Error::format("OCKP container", format!("unsupported version {version}")));
        }
        let next_iter = r.u64()?;
        let model_len = r.u64()? as usize;
        let model_bytes = r.bytes(model_len)?;
        let model = Model::<F>::from_bytes(model_bytes)?;
        let tc = &model.cfg;
        let clip = if tc.clip_norm > 0.0 { Some(F::lit(tc.clip_norm)) } else { None };
        let mut opt = AdaDelta::new(&model.store, F::lit(tc.rho), F::lit(tc.eps), F::lit(tc.lr), clip);
        let n_state = r.u32()? as usize;
        let trainable: Vec<ArrayD<F>> = model
            .store
            .iter()
            .filter(|(_, e)| e.trainable)
            .map(|(_, e)| e.value.clone())
            .collect();
        if n_state != trainable.len() {
            return Err(Error::format(
                "OCKP container",
                format!("optimizer state count {n_state} != trainable {}", trainable.len()),
            ));
        }
        let mut state = Vec::with_capacity(n_state);
        for template in &trainable {
            let mut acc_g = ArrayD::<F>::zeros(template.raw_dim());
            for v in acc_g.iter_mut() {
                *v = F::lit(r.f32()? as f64);
            }
            let mut acc_dx = ArrayD::<F>::zeros(template.raw_dim());
            for v in acc_dx.iter_mut() {
                *v = F::lit(r.f32()? as f64);
            }
            state.push((acc_g, acc_dx));
        }
        r.finish()?;
        opt.restore(state);
        Ok((model, opt, next_iter))
    }
}

/// The glyph rows and grouping needed to score against a subset of labels.
pub struct SubsetPlan {
    /// Model-label indices in the subset, ascending.
    pub subset: Vec<usize>,
    /// Glyph-set row indices feeding the prototype batch, grouped by label.
    pub glyph_rows: Vec<usize>,
    /// Contiguous `(start, end)` spans of `glyph_rows` per subset entry.
    pub groups: Vec<(usize, usize)>,
    /// Model-label index → position within `subset`.
    pub pos_of_model: Vec<Option<usize>>,
}

impl SubsetPlan {
    pub fn build(model_labels: &[u32], glyphs: &GlyphSet, subset: &[usize]) -> Result<SubsetPlan> {
        assert!(subset.windows(2).all(|w| w[0] < w[1]), "subset must be ascending");
        let mut glyph_rows = Vec::new();
        let mut groups = Vec::with_capacity(subset.len());
        let mut pos_of_model = vec![None; model_labels.len()];
        for (pos, &s) in subset.iter().enumerate() {
            let label = model_labels[s];
            let rows = glyphs.rows_for_label(label);
            if rows.is_empty() {
                return Err(Error::BankMismatch(format!(
                    "label {label} has no glyphs in the alphabet"
                )));
            }
            let start = glyph_rows.len();
            glyph_rows.extend(rows);
            groups.push((start, glyph_rows.len()));
            pos_of_model[s] = Some(pos);
        }
        Ok(SubsetPlan { subset: subset.to_vec(), glyph_rows, groups, pos_of_model })
    }

    /// 0/1 projection `[S, M]` scattering subset columns onto the full
    /// model-label axis (used to widen `Y` for the context encoder).
    pub fn projection<F: Scalar>(&self, tape: &mut Tape<F>, m_labels: usize) -> Var {
        let mut p = ArrayD::<F>::zeros(IxDyn(&[self.subset.len(), m_labels]));
        for (pos, &s) in self.subset.iter().enumerate() {
            p[[pos, s]] = F::one();
        }
        tape.constant(p)
    }
}

/// Samples the training label subset: every ground-truth label of the batch
/// plus `k` seeded negatives (clamped to availability). Returns the
/// ascending subset and the effective negative count.
pub fn sample_label_subset(
    gt_model_indices: &[usize],
    n_model_labels: usize,
    k: usize,
    seed: u64,
    step: u64,
) -> (Vec<usize>, usize) {
    let mut subset: Vec<usize> = gt_model_indices.to_vec();
    subset.sort_unstable();
    subset.dedup();
    assert!(subset.iter().all(|&s| s < n_model_labels), "label outside the model set");
    let mut pool: Vec<usize> = (0..n_model_labels).filter(|i| subset.binary_search(i).is_err()).collect();
    let eff_k = k.min(pool.len());
    let mut rng = stream_n(seed, "train.subset", step);
    for i in 0..eff_k {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    subset.extend_from_slice(&pool[..eff_k]);
    subset.sort_unstable();
    (subset, eff_k)
}

/// Stacks H×W images into a `[B, 1, H, W]` batch of the model's scalar type.
pub fn stack_images<F: Scalar>(images: &[Array2<f32>]) -> ArrayD<F> {
    assert!(!images.is_empty(), "empty image batch");
    let (h, w) = images[0].dim();
    let mut out = ArrayD::<F>::zeros(IxDyn(&[images.len(), 1, h, w]));
    for (b, img) in images.iter().enumerate() {
        assert_eq!(img.dim(), (h, w), "inconsistent image sizes in batch");
        for ((y, x), &v) in img.indexed_iter() {
            out[[b, 0, y, x]] = F::lit(v as f64);
        }
    }
    out
}

/// Stacks glyph rasters (by glyph-set row index) into `[G, 1, g, g]`.
pub fn glyph_batch<F: Scalar>(glyphs: &GlyphSet, rows: &[usize]) -> ArrayD<F> {
    assert!(!rows.is_empty(), "empty glyph batch");
    let g = glyphs.glyph_size;
    let mut out = ArrayD::<F>::zeros(IxDyn(&[rows.len(), 1, g, g]));
    for (b, &r) in rows.iter().enumerate() {
        for ((y, x), &v) in glyphs.glyphs[r].indexed_iter() {
            out[[b, 0, y, x]] = F::lit(v as f64);
        }
    }
    out
}
