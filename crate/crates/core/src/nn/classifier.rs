//! Open-set prototype classifier: per-timestamp label scores
//! `score(y) = |x_t|·max_{w∈ψ(y)} cos(w, x_t)` (equal to `max ⟨w, x_t⟩`
//! for unit-norm prototype rows) plus the rejection logit
//! `score(UNK) = α·|x_t|`, resolved by one joint softmax. Scaling `x_t` by
//! any k>0 scales every logit by k, so the argmax — including the UNK
//! decision — is scale-invariant.

use super::Binding;
use crate::config::ModelConfig;
use crate::nn::init;
use autograd::{ParamId, ParamStore, Scalar, Tape, Var};

pub struct Classifier {
    alpha: ParamId,
}

impl Classifier {
    pub fn register<F: Scalar>(store: &mut ParamStore<F>, cfg: &ModelConfig) -> Self {
        let alpha = store.register(
            "classifier.alpha",
            "classifier",
            init::full(&[1], cfg.alpha_init),
            true,
        );
        Classifier { alpha }
    }

    pub fn alpha_id(&self) -> ParamId {
        self.alpha
    }

    /// `x: [N, D]` gathered features, `protos: [R, D]` unit rows grouped by
    /// label per `groups` (contiguous `(start, end)` spans). Returns logits
    /// `[N, L+1]` with the UNK column last, and the raw row scores `[N, R]`.
    pub fn score<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        bind: &Binding,
        x: Var,
        protos: Var,
        groups: &[(usize, usize)],
    ) -> (Var, Var) {
        let n = tape.value(x).shape()[0];
        let w_t = tape.transpose2(protos);
        let sims = tape.matmul(x, w_t); // [N, R] = |x|·cos
        let grouped = tape.group_max(sims, groups); // [N, L]
        let mag = tape.l2_norm_mag(x); // [N]
        let unk = tape.mul_scalar_node(mag, bind.var(self.alpha));
        let unk_col = tape.reshape(unk, &[n, 1]);
        let logits = tape.concat(1, &[grouped, unk_col]);
        (logits, sims)
    }
}
