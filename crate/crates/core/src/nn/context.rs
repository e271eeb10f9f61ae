//! Decoupled Context Anchor: a 4-layer post-norm transformer encoder over
//! the expected character embeddings `Y·E_c` with sinusoidal position
//! encoding; context scores are dot products against the same embedding
//! table. Gradients flow back through `Y` into the visual path — the
//! explain-away contract — while the fusion used at close-set evaluation is
//! a plain per-timestamp product of distributions, done in log space.

use super::{Binding, LN_EPS, NEG_INF_MASK};
use crate::config::ModelConfig;
use crate::nn::init;
use ndarray::{ArrayD, IxDyn};
use autograd::{ParamId, ParamStore, Scalar, Tape, Var};

struct CtxLayer {
    wq: ParamId,
    bq: ParamId,
    wk: ParamId,
    bk: ParamId,
    wv: ParamId,
    bv: ParamId,
    wo: ParamId,
    bo: ParamId,
    ln1_g: ParamId,
    ln1_b: ParamId,
    ff1_w: ParamId,
    ff1_b: ParamId,
    ff2_w: ParamId,
    ff2_b: ParamId,
    ln2_g: ParamId,
    ln2_b: ParamId,
}

pub struct ContextEncoder {
    e_c: ParamId,
    layers: Vec<CtxLayer>,
    heads: usize,
    width: usize,
}

impl ContextEncoder {
    /// Registers the embedding table (`m_labels × embed_dim`, learned free
    /// embeddings) and the encoder stack.
    pub fn register<F: Scalar>(
        store: &mut ParamStore<F>,
        cfg: &ModelConfig,
        m_labels: usize,
        seed: u64,
    ) -> Self {
        let c = cfg.embed_dim;
        let e_c = store.register(
            "ctx.e_c",
            "context",
            init::normal_tensor(seed, "ctx.e_c", &[m_labels, c], 1.0 / (c as f64).sqrt()),
            true,
        );
        let dense = |store: &mut ParamStore<F>, name: String, rows: usize, cols: usize| {
            let w = store.register(
                format!("{name}.w"),
                "context",
                init::normal_tensor(seed, &format!("{name}.w"), &[rows, cols], init::glorot_std(rows, cols)),
                true,
            );
            let b = store.register(format!("{name}.b"), "context", init::zeros(&[cols]), true);
            (w, b)
        };
        let mut layers = Vec::with_capacity(cfg.ctx_layers);
        for li in 0..cfg.ctx_layers {
            let p = format!("ctx.l{li}");
            let (wq, bq) = dense(store, format!("{p}.q"), c, c);
            let (wk, bk) = dense(store, format!("{p}.k"), c, c);
            let (wv, bv) = dense(store, format!("{p}.v"), c, c);
            let (wo, bo) = dense(store, format!("{p}.o"), c, c);
            let ln1_g = store.register(format!("{p}.ln1.g"), "context", init::full(&[c], 1.0), true);
            let ln1_b = store.register(format!("{p}.ln1.b"), "context", init::zeros(&[c]), true);
            let (ff1_w, ff1_b) = dense(store, format!("{p}.ff1"), c, 4 * c);
            let (ff2_w, ff2_b) = dense(store, format!("{p}.ff2"), 4 * c, c);
            let ln2_g = store.register(format!("{p}.ln2.g"), "context", init::full(&[c], 1.0), true);
            let ln2_b = store.register(format!("{p}.ln2.b"), "context", init::zeros(&[c]), true);
            layers.push(CtxLayer {
                wq, bq, wk, bk, wv, bv, wo, bo,
                ln1_g, ln1_b, ff1_w, ff1_b, ff2_w, ff2_b, ln2_g, ln2_b,
            });
        }
        ContextEncoder { e_c, layers, heads: cfg.ctx_heads, width: c }
    }

    pub fn embedding_id(&self) -> ParamId {
        self.e_c
    }

    /// `y: [B·T, M]` rows are visual label distributions (UNK excluded and
    /// renormalized); `valid[b·T + t]` marks real timestamps. Returns
    /// context logits `[B·T, M]` (softmax over labels gives Eq. 15's
    /// per-timestamp distribution).
    pub fn forward<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        bind: &Binding,
        y: Var,
        b: usize,
        t: usize,
        valid: &[bool],
    ) -> Var {
        assert_eq!(valid.len(), b * t, "validity mask length");
        assert!(t >= 1, "context encoder needs at least one timestamp");
        let c = self.width;
        let heads = self.heads;
        let hd = c / heads;
        let e_c = bind.var(self.e_c);

        let emb = tape.matmul(y, e_c); // [BT, C]
        let pe = tape.constant(sinusoidal_posenc::<F>(t, c));
        let pe_rep = tape.repeat_new_axis(pe, 0, b); // [B, T, C]
        let pe2 = tape.reshape(pe_rep, &[b * t, c]);
        let mut h = tape.add(emb, pe2);

        // Additive key mask: invalid timestamps never receive attention.
        let mask = {
            let mut v = ArrayD::<F>::zeros(IxDyn(&[b * heads, t, t]));
            for bi in 0..b {
                for key in 0..t {
                    if !valid[bi * t + key] {
                        for head in 0..heads {
                            for query in 0..t {
                                v[[bi * heads + head, query, key]] = F::lit(NEG_INF_MASK);
                            }
                        }
                    }
                }
            }
            tape.constant(v)
        };

        let split = |tape: &mut Tape<F>, x: Var| {
            let x4 = tape.reshape(x, &[b, t, heads, hd]);
            let x_p = tape.permute(x4, &[0, 2, 1, 3]);
            tape.reshape(x_p, &[b * heads, t, hd])
        };

        for layer in &self.layers {
            let q0 = tape.matmul(h, bind.var(layer.wq));
            let q1 = tape.add_bias2(q0, bind.var(layer.bq));
            let k0 = tape.matmul(h, bind.var(layer.wk));
            let k1 = tape.add_bias2(k0, bind.var(layer.bk));
            let v0 = tape.matmul(h, bind.var(layer.wv));
            let v1 = tape.add_bias2(v0, bind.var(layer.bv));
            let q3 = split(tape, q1);
            let k3 = split(tape, k1);
            let v3 = split(tape, v1);
            let k_t = tape.permute(k3, &[0, 2, 1]);
            let scores = tape.bmm(q3, k_t);
            let scaled = tape.scale(scores, F::lit(1.0 / (hd as f64).sqrt()));
            let masked = tape.add(scaled, mask);
            let attn = tape.softmax_last(masked);
            let mixed = tape.bmm(attn, v3); // [B·h, T, hd]
            let m4 = tape.reshape(mixed, &[b, heads, t, hd]);
            let m_p = tape.permute(m4, &[0, 2, 1, 3]);
            let m2 = tape.reshape(m_p, &[b * t, c]);
            let o0 = tape.matmul(m2, bind.var(layer.wo));
            let o1 = tape.add_bias2(o0, bind.var(layer.bo));
            let res1 = tape.add(h, o1);
            let n1 = tape.layer_norm_last(res1, bind.var(layer.ln1_g), bind.var(layer.ln1_b), F::lit(LN_EPS));
            let f0 = tape.matmul(n1, bind.var(layer.ff1_w));
            let f1 = tape.add_bias2(f0, bind.var(layer.ff1_b));
            let f2 = tape.relu(f1);
            let f3 = tape.matmul(f2, bind.var(layer.ff2_w));
            let f4 = tape.add_bias2(f3, bind.var(layer.ff2_b));
            let res2 = tape.add(n1, f4);
            h = tape.layer_norm_last(res2, bind.var(layer.ln2_g), bind.var(layer.ln2_b), F::lit(LN_EPS));
        }

        self.score_against_embeddings(tape, bind, h)
    }

    /// Eq. 15 logits: `ĉ·E_cᵀ` per timestamp (softmax gives the context
    /// distribution).
    pub fn score_against_embeddings<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        bind: &Binding,
        c_hat: Var,
    ) -> Var {
        let e_c = bind.var(self.e_c);
        let e_t = tape.transpose2(e_c);
        tape.matmul(c_hat, e_t)
    }
}

/// Standard sinusoidal position encoding, `[t, c]`.
pub fn sinusoidal_posenc<F: Scalar>(t: usize, c: usize) -> ArrayD<F> {
    let mut pe = ArrayD::<F>::zeros(IxDyn(&[t, c]));
    for pos in 0..t {
        for i in 0..c {
            let exponent = 2.0 * (i / 2) as f64 / c as f64;
            let angle = pos as f64 / 10000f64.powf(exponent);
            pe[[pos, i]] = F::lit(if i % 2 == 0 { angle.sin() } else { angle.cos() });
        }
    }
    pe
}

/// Close-set fusion mode: learned context factor or the uniform bypass.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FuseMode {
    Learned,
    Uniform,
}

/// Per-timestamp fusion of a visual distribution with a context factor
/// (elementwise product, renormalized), computed in log space. The uniform
/// mode returns the visual distribution unchanged. A contradiction (the
/// product underflows to zero everywhere) falls back to the visual side.
pub fn fuse_predictions(visual: &[f64], context: &[f64], mode: FuseMode) -> Vec<f64> {
    match mode {
        FuseMode::Uniform => visual.to_vec(),
        FuseMode::Learned => {
            assert_eq!(visual.len(), context.len(), "fusion over mismatched label sets");
            let logs: Vec<f64> = visual
                .iter()
                .zip(context.iter())
                .map(|(&v, &c)| v.ln() + c.ln())
                .collect();
            let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if !hi.is_finite() {
                return visual.to_vec();
            }
            let unnorm: Vec<f64> = logs.iter().map(|&l| (l - hi).exp()).collect();
            let z: f64 = unnorm.iter().sum();
            unnorm.iter().map(|&u| u / z).collect()
        }
    }
}
