//! Prototype generation: a learned 1×1 spatial attention over each glyph's
//! highest-level feature map, softmax-normalized, attention-weighted sum,
//! then L2 row normalization — one prototype row per glyph case.

use super::Binding;
use crate::config::ModelConfig;
use crate::nn::init;
use autograd::{ParamId, ParamStore, Scalar, Tape, Var};

pub struct ProtoGen {
    attn_w: ParamId,
    attn_b: ParamId,
}

impl ProtoGen {
    pub fn register<F: Scalar>(store: &mut ParamStore<F>, cfg: &ModelConfig, seed: u64) -> Self {
        let d = cfg.dim();
        let attn_w = store.register(
            "proto.attn.w",
            "proto",
            init::normal_tensor(seed, "proto.attn.w", &[1, d, 1, 1], init::he_std(d)),
            true,
        );
        let attn_b = store.register("proto.attn.b", "proto", init::zeros(&[1]), true);
        ProtoGen { attn_w, attn_b }
    }

    /// `f_g: [G, D, h, w]` glyph features → `[G, D]` unit-norm prototype rows.
    pub fn generate<F: Scalar>(&self, tape: &mut Tape<F>, bind: &Binding, f_g: Var) -> Var {
        let fs = tape.value(f_g).shape().to_vec();
        let (g, d, h, w) = (fs[0], fs[1], fs[2], fs[3]);
        let a = tape.conv2d(f_g, bind.var(self.attn_w), Some(bind.var(self.attn_b)), 1, 0);
        let a2 = tape.reshape(a, &[g, h * w]);
        let a_sm = tape.softmax_last(a2);
        let a3 = tape.reshape(a_sm, &[g, h * w, 1]);
        let f3 = tape.reshape(f_g, &[g, d, h * w]);
        let reduced = tape.bmm(f3, a3); // [G, D, 1]
        let rows = tape.reshape(reduced, &[g, d]);
        tape.l2norm_rows(rows)
    }
}
