//! Shared inference: prototype-bank construction and greedy decoding, used
//! by validation during training and by the evaluation protocols.

use crate::corpus::GlyphSet;
use crate::error::{Error, Result};
use crate::harness::metrics::UNK_TOKEN;
use crate::nn::{fuse_predictions, gather_sequence, glyph_batch, Domain, FuseMode, Model,
    PrototypeBank};
use crate::trainer::LoadedSplit;
use autograd::{Scalar, Tape};
use ndarray::{Array2, ArrayD, IxDyn};

/// Evaluation protocol: open-set (visual only, bit-identical to the raw
/// predictions) or close-set (context fusion when the model carries a
/// context module).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Open,
    Close,
}

impl EvalMode {
    pub fn parse(s: &str) -> Result<EvalMode> {
        match s {
            "open" => Ok(EvalMode::Open),
            "close" => Ok(EvalMode::Close),
            other => Err(Error::Config(format!("unknown eval mode `{other}` (expected open|close)"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EvalMode::Open => "open",
            EvalMode::Close => "close",
        }
    }
}

const BANK_CHUNK: usize = 64;

/// Runs the glyph pathway in eval mode over every glyph of `labels`
/// (ascending) and freezes the resulting prototypes into a bank.
///
/// Rows are renormalized in f64 before the f32 narrowing so the container's
/// unit-norm invariant holds independent of the model's scalar type; a row
/// whose pre-normalization magnitude collapsed (all-zero features) is
/// rejected as degenerate rather than silently renormalized.
pub fn build_bank<F: Scalar>(
    model: &Model<F>,
    glyphs: &GlyphSet,
    labels: &[u32],
) -> Result<PrototypeBank> {
    if labels.is_empty() {
        return Err(Error::BankMismatch("bank over an empty label set".into()));
    }
    if !labels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::BankMismatch("bank labels must be strictly ascending".into()));
    }
    let mut glyph_rows: Vec<usize> = Vec::new();
    let mut row_labels: Vec<u32> = Vec::new();
    for &label in labels {
        let rows = glyphs.rows_for_label(label);
        if rows.is_empty() {
            return Err(Error::BankMismatch(format!("label {label} has no glyphs in the alphabet")));
        }
        row_labels.extend(std::iter::repeat(label).take(rows.len()));
        glyph_rows.extend(rows);
    }

    let d = model.cfg.model.dim();
    let mut rows = Array2::<f32>::zeros((glyph_rows.len(), d));
    for (chunk_idx, chunk) in glyph_rows.chunks(BANK_CHUNK).enumerate() {
        let mut tape = Tape::<F>::new();
        let bind = model.bind(&mut tape);
        let rasters = tape.constant(glyph_batch::<F>(glyphs, chunk));
        let (fb, _) = model.backbone.forward(&mut tape, &bind, rasters, Domain::Glyph, false);
        let protos = model.protogen.generate(&mut tape, &bind, fb.f_h);
        let value = tape.value(protos);
        for (g, _) in chunk.iter().enumerate() {
            let row_f64: Vec<f64> = (0..d).map(|c| value[[g, c]].to_f64()).collect();
            let norm = row_f64.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm < 0.5 {
                let label = row_labels[chunk_idx * BANK_CHUNK + g];
                return Err(Error::Degenerate(format!(
                    "prototype for label {label} collapsed (|row| = {norm:.3e})"
                )));
            }
            for c in 0..d {
                rows[[chunk_idx * BANK_CHUNK + g, c]] = (row_f64[c] / norm) as f32;
            }
        }
    }
    PrototypeBank::new(rows, row_labels, model.alpha(), model.alphabet_hash)
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0usize;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

fn softmax_f64(row: &[f64]) -> Vec<f64> {
    let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = row.iter().map(|&v| (v - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.iter().map(|&e| e / z).collect()
}

/// Greedy decoding of a whole split. Returns one label-id sequence per
/// sample, with [`UNK_TOKEN`] marking rejections.
///
/// Open mode reads the visual distributions directly. Close mode multiplies
/// in the context factor (for models carrying a context module): the factor
/// of a label the model never trained on is the neutral `1/M`, so fusion
/// cannot reorder labels the context knows nothing about; the UNK decision
/// always comes from the visual side.
pub fn decode_split<F: Scalar>(
    model: &Model<F>,
    bank: &PrototypeBank,
    split: &LoadedSplit,
    mode: EvalMode,
    batch: usize,
) -> Result<Vec<Vec<u32>>> {
    assert!(batch > 0, "batch size must be positive");
    let groups = bank.groups();
    let l_count = groups.len();
    let spans: Vec<(usize, usize)> = groups.iter().map(|&(_, s, n)| (s, s + n)).collect();
    let group_labels: Vec<u32> = groups.iter().map(|&(l, _, _)| l).collect();

    // Column index (within the grouped label logits) of each model label.
    let use_context = mode == EvalMode::Close && model.context.is_some();
    let m_model = model.labels.len();
    let mut model_cols: Vec<usize> = Vec::new();
    if use_context {
        for &label in &model.labels {
            match group_labels.binary_search(&label) {
                Ok(col) => model_cols.push(col),
                Err(_) => {
                    return Err(Error::BankMismatch(format!(
                        "bank is missing model label {label}"
                    )))
                }
            }
        }
    }
    // Context factor column (position within `model.labels`) per bank label.
    let ctx_col_of_group: Vec<Option<usize>> =
        group_labels.iter().map(|l| model.labels.binary_search(l).ok()).collect();

    let d = model.cfg.model.dim();
    let mut rows_f = ArrayD::<F>::zeros(IxDyn(&[bank.rows.nrows(), d]));
    for ((r, c), &v) in bank.rows.indexed_iter() {
        rows_f[[r, c]] = F::lit(v as f64);
    }

    let mut out: Vec<Vec<u32>> = Vec::with_capacity(split.len());
    let all: Vec<usize> = (0..split.len()).collect();
    for chunk in all.chunks(batch) {
        let b = chunk.len();
        let mut tape = Tape::<F>::new();
        let bind = model.bind(&mut tape);
        let words = tape.constant(split.batch_images::<F>(chunk));
        let (fb, _) = model.backbone.forward(&mut tape, &bind, words, Domain::Word, false);
        let plan = model.head.plan(&mut tape, &bind, &fb, &model.cfg.model, None, 0.0);
        let lengths = plan.lengths.clone();
        let t_max = *lengths.iter().max().expect("nonempty chunk");

        let x = gather_sequence(&mut tape, fb.f_h, plan.attn, t_max);
        let x2 = tape.reshape(x, &[b * t_max, d]);
        let protos = tape.constant(rows_f.clone());
        let (logits_v, _) = model.classifier.score(&mut tape, &bind, x2, protos, &spans);
        let logits = tape.value(logits_v).clone();
        let row_of = |bi: usize, ti: usize| -> Vec<f64> {
            (0..l_count + 1).map(|c| logits[[bi * t_max + ti, c]].to_f64()).collect()
        };

        // Context distributions for the chunk, one forward over all steps.
        let ctx_dists: Option<Vec<Vec<f64>>> = if use_context {
            let mut y = ArrayD::<F>::zeros(IxDyn(&[b * t_max, m_model]));
            let mut valid = vec![false; b * t_max];
            for bi in 0..b {
                for ti in 0..t_max {
                    let row = bi * t_max + ti;
                    if ti < lengths[bi] {
                        valid[row] = true;
                        let full = row_of(bi, ti);
                        let picked: Vec<f64> = model_cols.iter().map(|&c| full[c]).collect();
                        for (m, p) in softmax_f64(&picked).into_iter().enumerate() {
                            y[[row, m]] = F::lit(p);
                        }
                    } else {
                        for m in 0..m_model {
                            y[[row, m]] = F::lit(1.0 / m_model as f64);
                        }
                    }
                }
            }
            let yv = tape.constant(y);
            let ctx = model.context.as_ref().expect("use_context implies a context module");
            let ctx_logits_v = ctx.forward(&mut tape, &bind, yv, b, t_max, &valid);
            let ctx_logits = tape.value(ctx_logits_v);
            let mut dists = Vec::with_capacity(b * t_max);
            for row in 0..b * t_max {
                let raw: Vec<f64> = (0..m_model).map(|m| ctx_logits[[row, m]].to_f64()).collect();
                dists.push(softmax_f64(&raw));
            }
            Some(dists)
        } else {
            None
        };

        for (bi, &len) in lengths.iter().enumerate() {
            let mut tokens = Vec::with_capacity(len);
            for ti in 0..len {
                let full = row_of(bi, ti);
                if argmax(&full) == l_count {
                    tokens.push(UNK_TOKEN);
                    continue;
                }
                let label_idx = match &ctx_dists {
                    None => argmax(&full[..l_count]),
                    Some(dists) => {
                        let p_vis = softmax_f64(&full[..l_count]);
                        let ctx_dist = &dists[bi * t_max + ti];
                        let factor: Vec<f64> = ctx_col_of_group
                            .iter()
                            .map(|col| match col {
                                Some(m) => ctx_dist[*m],
                                None => 1.0 / m_model as f64,
                            })
                            .collect();
                        argmax(&fuse_predictions(&p_vis, &factor, FuseMode::Learned))
                    }
                };
                tokens.push(group_labels[label_idx]);
            }
            out.push(tokens);
        }
    }
    Ok(out)
}
