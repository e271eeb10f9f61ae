//! One optimization step: the three-term loss graph (honoring every
//! detachment contract), the AdaDelta update, and batch-norm buffer refresh.

use crate::corpus::GlyphSet;
use crate::error::{Error, Result};
use crate::nn::{
    gather_sequence, glyph_batch, sample_label_subset, Binding, Domain, Model, StatUpdate,
    SubsetPlan,
};
use crate::rng;
use crate::trainer::TrainSet;
use autograd::{AdaDelta, Scalar, Tape, Var};
use rand::Rng;

/// The three reported loss values, raw and unweighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBundle {
    pub len: f64,
    pub vis: f64,
    pub ctx: f64,
}

impl LossBundle {
    /// Loss additivity is definitional: the total *is* the sum.
    pub fn total(&self) -> f64 {
        self.len + self.vis + self.ctx
    }
}

/// A step's loss graph, still on tape. `train_step` composes and optimizes
/// it; tests backward individual terms to check the gradient-block map.
pub struct BuiltLosses<F: Scalar> {
    pub bind: Binding,
    pub l_len: Var,
    pub l_vis: Var,
    /// Present only when the context module participates: `dca` on *and*
    /// `ctx_weight ≠ 0`. Skipping the graph entirely when the weight is zero
    /// keeps such runs bit-identical to the dta ablation (nothing enters the
    /// global clip norm that a zero-weighted backward would still perturb).
    pub l_ctx: Option<Var>,
    /// Attention-concentration regularizer; optimized but reported outside
    /// the bundle (it is a training aid, not one of the three objectives).
    pub entropy: Option<Var>,
    /// Refreshed batch-norm running buffers for both forwarded domains.
    pub updates: Vec<StatUpdate<F>>,
    /// Whether fewer negative labels than requested were available.
    pub clamped: bool,
}

/// Builds the full training graph for iteration `iter`.
///
/// `detach_y` severs the explain-away path (context loss reaches the visual
/// stack through the label distributions `Y` unless they are detached); the
/// normal trainer always passes `false` — the toggle exists so the contract
/// "L_ctx → backbone flows through Y and only through Y" stays testable.
pub fn build_losses<F: Scalar>(
    tape: &mut Tape<F>,
    model: &Model<F>,
    set: &TrainSet,
    glyphs: &GlyphSet,
    iter: u64,
    detach_y: bool,
) -> Result<BuiltLosses<F>> {
    let cfg = &model.cfg;
    let b = cfg.batch_size;
    let max_len = cfg.model.max_len;

    // Seeded batch, keyed by iteration: resuming from a checkpoint sees the
    // same sample stream without replaying history.
    let n = set.train.len();
    let mut r = rng::stream_n(cfg.seed, "train.batch", iter);
    let batch: Vec<usize> = (0..b).map(|_| r.gen_range(0..n)).collect();

    // Teacher sequences as model-label indices.
    let mut targets: Vec<Vec<usize>> = Vec::with_capacity(b);
    for &i in &batch {
        let seq = &set.train.labels[i];
        if seq.is_empty() || seq.len() > max_len {
            return Err(Error::Config(format!(
                "sample {} has length {} outside 1..={max_len}",
                set.train.ids[i],
                seq.len()
            )));
        }
        let mut idx = Vec::with_capacity(seq.len());
        for &label in seq {
            idx.push(model.label_index(label).ok_or_else(|| {
                Error::Config(format!("training label {label} outside the model alphabet"))
            })?);
        }
        targets.push(idx);
    }
    let lengths: Vec<usize> = targets.iter().map(|t| t.len()).collect();
    let t_max = *lengths.iter().max().expect("nonzero batch");

    // Step subset: every ground-truth label plus seeded negatives.
    let gt: Vec<usize> = targets.iter().flatten().copied().collect();
    let (subset, eff_k) =
        sample_label_subset(&gt, model.labels.len(), cfg.negatives, cfg.seed, iter);
    let clamped = eff_k < cfg.negatives;
    let plan = SubsetPlan::build(&model.labels, glyphs, &subset)?;

    let bind = model.bind(tape);

    // Word path (training mode refreshes the word-domain BN buffers).
    let words = tape.constant(set.train.batch_images::<F>(&batch));
    let (fb, mut updates) = model.backbone.forward(tape, &bind, words, Domain::Word, true);

    // Glyph path → prototypes for the subset.
    let rasters = tape.constant(glyph_batch::<F>(glyphs, &plan.glyph_rows));
    let (gb, glyph_updates) = model.backbone.forward(tape, &bind, rasters, Domain::Glyph, true);
    updates.extend(glyph_updates);
    let protos = model.protogen.generate(tape, &bind, gb.f_h);

    // Temporal plan, teacher-forced.
    let plan_vars =
        model.head.plan(tape, &bind, &fb, &cfg.model, Some(&lengths), cfg.model.entropy_weight);

    // Gather the observed steps and classify against the subset prototypes.
    let x = gather_sequence(tape, fb.f_h, plan_vars.attn, t_max);
    let x2 = tape.reshape(x, &[b * t_max, cfg.model.dim()]);
    let (logits, _sims) = model.classifier.score(tape, &bind, x2, protos, &plan.groups);

    // Per-(sample, step) targets; padding steps masked out of every loss.
    let mut vis_targets = vec![0usize; b * t_max];
    let mut ctx_targets = vec![0usize; b * t_max];
    let mut mask = vec![F::zero(); b * t_max];
    let mut valid = vec![false; b * t_max];
    for (bi, seq) in targets.iter().enumerate() {
        for (ti, &m_idx) in seq.iter().enumerate() {
            let pos = plan.pos_of_model[m_idx].expect("ground-truth label is always in the subset");
            vis_targets[bi * t_max + ti] = pos;
            ctx_targets[bi * t_max + ti] = m_idx;
            mask[bi * t_max + ti] = F::one();
            valid[bi * t_max + ti] = true;
        }
    }
    let inv_b = F::lit(1.0 / b as f64);
    let l_vis = tape.masked_ce(logits, &vis_targets, &mask, inv_b);

    // Length loss at l* − 1.
    let len_targets: Vec<usize> = lengths.iter().map(|&l| l - 1).collect();
    let ones = vec![F::one(); b];
    let l_len = tape.masked_ce(plan_vars.len_logits, &len_targets, &ones, inv_b);

    // Context loss: Eq. 15 distributions computed from the visual Y (UNK
    // column dropped, remainder renormalized = softmax over label logits).
    let l_ctx = match (&model.context, cfg.ctx_weight != 0.0) {
        (Some(ctx), true) => {
            let label_logits = tape.narrow(logits, 1, 0, subset.len());
            let y_src = if detach_y { tape.detach(label_logits) } else { label_logits };
            let y_sub = tape.softmax_last(y_src);
            let proj = plan.projection::<F>(tape, model.labels.len());
            let y = tape.matmul(y_sub, proj); // widen to [B·T, M]
            let ctx_logits = ctx.forward(tape, &bind, y, b, t_max, &valid);
            Some(tape.masked_ce(ctx_logits, &ctx_targets, &mask, inv_b))
        }
        _ => None,
    };

    Ok(BuiltLosses {
        bind,
        l_len,
        l_vis,
        l_ctx,
        entropy: plan_vars.entropy,
        updates,
        clamped,
    })
}

/// The optimized scalar: `L_len + L_vis + ctx_weight·L_ctx` plus the
/// attention regularizer when present.
pub fn objective<F: Scalar>(tape: &mut Tape<F>, built: &BuiltLosses<F>, ctx_weight: f64) -> Var {
    let mut total = tape.add(built.l_len, built.l_vis);
    if let Some(c) = built.l_ctx {
        let weighted = tape.scale(c, F::lit(ctx_weight));
        total = tape.add(total, weighted);
    }
    if let Some(e) = built.entropy {
        total = tape.add(total, e);
    }
    total
}

/// Runs one full optimization step. Returns the (raw) loss bundle and
/// whether the negative-label request was clamped.
pub fn train_step<F: Scalar>(
    model: &mut Model<F>,
    opt: &mut AdaDelta<F>,
    set: &TrainSet,
    glyphs: &GlyphSet,
    iter: u64,
) -> Result<(LossBundle, bool)> {
    let mut tape = Tape::new();
    let built = build_losses(&mut tape, model, set, glyphs, iter, false)?;
    let total = objective(&mut tape, &built, model.cfg.ctx_weight);

    let bundle = LossBundle {
        len: tape.scalar(built.l_len).to_f64(),
        vis: tape.scalar(built.l_vis).to_f64(),
        ctx: built.l_ctx.map(|v| tape.scalar(v).to_f64()).unwrap_or(0.0),
    };
    let optimized = tape.scalar(total).to_f64();
    if !optimized.is_finite() {
        return Err(Error::Degenerate(format!(
            "non-finite loss at iteration {iter}: L_len={} L_vis={} L_ctx={} optimized={}",
            bundle.len, bundle.vis, bundle.ctx, optimized
        )));
    }

    let mut grads = tape.backward(total);
    let mut grad_vec = model.collect_grads(&mut grads, &built.bind);
    opt.step(&mut model.store, &mut grad_vec);
    model.apply_updates(built.updates);
    Ok((bundle, built.clamped))
}
