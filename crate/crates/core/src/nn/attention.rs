//! Detached Temporal Attention: an FPN over gradient-detached feature maps
//! feeding (a) a length head and (b) parametric temporal attention slices.
//!
//! The slices are built from a presence field `e` (1×1 conv on the FPN
//! trunk): per column, mass `m_w = Σ_h σ(e)`; the normalized cumulative
//! mass midpoint `M̄_w ∈ [0,1]` is a monotone reading coordinate. Slice `t`
//! of a word of reference length `l` attends where `M̄_w ≈ (t−½)/l`:
//!
//! `φ_t(h,w) = −γ·(M̄_w − q_t)² + e(h,w)`, softmax over space.
//!
//! The length head is a linear map of the pooled trunk plus a counting
//! penalty `−κ·(T/m₀ − l)²` on the total mass `T`. Because word images are
//! center-padded to a fixed width, total mass can only track the true
//! length if presence concentrates on glyph ink — the counting term is what
//! gives the attention map its supervision through the length loss, which
//! is the only loss allowed to reach this head. γ, κ, m₀ are trained in log
//! space to stay positive.

use super::{backbone::FeatureBundle, Binding};
use crate::config::ModelConfig;
use crate::nn::init;
use ndarray::{ArrayD, IxDyn};
use autograd::{ParamId, ParamStore, Scalar, Tape, Var};

pub struct TemporalHead {
    proj: [(ParamId, ParamId); 3],
    trunk_w: ParamId,
    trunk_b: ParamId,
    presence_w: ParamId,
    presence_b: ParamId,
    len_w: ParamId,
    len_b: ParamId,
    log_gamma: ParamId,
    log_kappa: ParamId,
    log_m0: ParamId,
}

/// Tape handles of one temporal plan.
pub struct PlanVars {
    /// `[B, maxL]` length logits (linear head plus counting penalty).
    pub len_logits: Var,
    /// `[B, maxL, H·W]` attention slices, each row softmax-normalized.
    pub attn: Var,
    /// Reference length per sample: the teacher length when given, else the
    /// argmax of the predicted length distribution.
    pub lengths: Vec<usize>,
    /// Attention-concentration regularizer (mean over batch of Σ_t of the
    /// negative entropy), present only when requested with nonzero weight.
    pub entropy: Option<Var>,
    /// Spatial grid of the fused map.
    pub grid: (usize, usize),
}

impl TemporalHead {
    pub fn register<F: Scalar>(store: &mut ParamStore<F>, cfg: &ModelConfig, seed: u64) -> Self {
        let d = cfg.dim();
        let mut proj = [(ParamId(0), ParamId(0)); 3];
        for (i, &cin) in cfg.channels.iter().enumerate() {
            let name = format!("fpn.proj{i}");
            let w = store.register(
                format!("{name}.w"),
                "fpn",
                init::normal_tensor(seed, &format!("{name}.w"), &[d, cin, 1, 1], init::he_std(cin)),
                true,
            );
            let b = store.register(format!("{name}.b"), "fpn", init::zeros(&[d]), true);
            proj[i] = (w, b);
        }
        let trunk_w = store.register(
            "fpn.trunk.w",
            "fpn",
            init::normal_tensor(seed, "fpn.trunk.w", &[d, d, 3, 3], init::he_std(d * 9)),
            true,
        );
        let trunk_b = store.register("fpn.trunk.b", "fpn", init::zeros(&[d]), true);
        let presence_w = store.register(
            "fpn.presence.w",
            "fpn",
            init::normal_tensor(seed, "fpn.presence.w", &[1, d, 1, 1], init::he_std(d)),
            true,
        );
        let presence_b = store.register("fpn.presence.b", "fpn", init::zeros(&[1]), true);
        let len_w = store.register(
            "fpn.len.w",
            "fpn",
            init::normal_tensor(seed, "fpn.len.w", &[d, cfg.max_len], init::glorot_std(d, cfg.max_len)),
            true,
        );
        let len_b = store.register("fpn.len.b", "fpn", init::zeros(&[cfg.max_len]), true);
        let log_gamma = store.register(
            "fpn.log_gamma",
            "fpn",
            init::full(&[1], cfg.gamma_init.ln()),
            true,
        );
        let log_kappa = store.register("fpn.log_kappa", "fpn", init::zeros(&[1]), true);
        let grid_cells = (cfg.image_height / cfg.strides[2]) * (cfg.image_width / cfg.strides[2]);
        let log_m0 = store.register(
            "fpn.log_m0",
            "fpn",
            init::full(&[1], (grid_cells as f64 / cfg.max_len as f64).ln()),
            true,
        );
        TemporalHead {
            proj,
            trunk_w,
            trunk_b,
            presence_w,
            presence_b,
            len_w,
            len_b,
            log_gamma,
            log_kappa,
            log_m0,
        }
    }

    /// Builds the plan for a word-domain bundle. With `teacher` lengths the
    /// slices are anchored to those (training); otherwise the predicted
    /// length is used (evaluation). `entropy_weight > 0` adds the
    /// concentration regularizer node.
    pub fn plan<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        bind: &Binding,
        fb: &FeatureBundle,
        cfg: &ModelConfig,
        teacher: Option<&[usize]>,
        entropy_weight: f64,
    ) -> PlanVars {
        let maps = [fb.f_l, fb.f_m, fb.f_h];
        let mut fused: Option<Var> = None;
        for (i, &m) in maps.iter().enumerate() {
            let src = if cfg.dta_detach { tape.detach(m) } else { m };
            let ratio = cfg.strides[2] / cfg.strides[i];
            let pooled = if ratio > 1 { tape.avg_pool2d(src, ratio) } else { src };
            let (w, b) = self.proj[i];
            let p = tape.conv2d(pooled, bind.var(w), Some(bind.var(b)), 1, 0);
            fused = Some(match fused {
                Some(acc) => tape.add(acc, p),
                None => p,
            });
        }
        let g0 = tape.relu(fused.unwrap());
        let gpre = tape.conv2d(g0, bind.var(self.trunk_w), Some(bind.var(self.trunk_b)), 1, 1);
        let g = tape.relu(gpre);
        let gs = tape.value(g).shape().to_vec();
        let (b_n, h, w) = (gs[0], gs[2], gs[3]);
        let max_l = cfg.max_len;

        // Length head: pooled linear logits plus the counting penalty.
        let pooled = tape.mean_hw(g);
        let len_lin0 = tape.matmul(pooled, bind.var(self.len_w));
        let len_lin = tape.add_bias2(len_lin0, bind.var(self.len_b));

        let e = tape.conv2d(g, bind.var(self.presence_w), Some(bind.var(self.presence_b)), 1, 0);
        let density = tape.sigmoid(e);
        let m_col = tape.sum_axis(density, 2); // [B,1,W]
        let total3 = tape.sum_axis(m_col, 2); // [B,1]
        let cum = tape.cumsum_last(m_col);
        let half = tape.scale(m_col, F::lit(0.5));
        let center = tape.sub(cum, half);
        let center2 = tape.reshape(center, &[b_n, w]);
        let mbar = tape.div_by_col(center2, total3); // [B,W] in (0,1)

        let neg_log_m0 = tape.neg(bind.var(self.log_m0));
        let inv_m0 = tape.exp(neg_log_m0);
        let total1 = tape.reshape(total3, &[b_n]);
        let t_norm = tape.mul_scalar_node(total1, inv_m0); // [B]
        let t_rep = tape.repeat_new_axis(t_norm, 1, max_l); // [B,maxL]
        let lgrid = {
            let mut v = ArrayD::<F>::zeros(IxDyn(&[max_l]));
            for (i, x) in v.iter_mut().enumerate() {
                *x = F::from_count(i + 1);
            }
            tape.constant(v)
        };
        let lgrid_rep = tape.repeat_new_axis(lgrid, 0, b_n);
        let ldiff = tape.sub(t_rep, lgrid_rep);
        let lsq = tape.square(ldiff);
        let kappa = tape.exp(bind.var(self.log_kappa));
        let pen = tape.mul_scalar_node(lsq, kappa);
        let len_logits = tape.sub(len_lin, pen);

        // Reference lengths: teacher-forced or argmax of the prediction.
        let lengths: Vec<usize> = match teacher {
            Some(t) => {
                assert_eq!(t.len(), b_n, "teacher length count");
                assert!(t.iter().all(|&l| l >= 1 && l <= max_l), "teacher length range");
                t.to_vec()
            }
            None => {
                let lv = tape.value(len_logits);
                (0..b_n)
                    .map(|r| {
                        let mut best = 0usize;
                        for c in 1..max_l {
                            if lv[[r, c]] > lv[[r, best]] {
                                best = c;
                            }
                        }
                        best + 1
                    })
                    .collect()
            }
        };

        // Attention slices for all maxL timestamps.
        let q = {
            let mut v = ArrayD::<F>::zeros(IxDyn(&[b_n, max_l]));
            for r in 0..b_n {
                for t in 0..max_l {
                    v[[r, t]] = F::lit((t as f64 + 0.5) / lengths[r] as f64);
                }
            }
            tape.constant(v)
        };
        let mbar_rep = tape.repeat_new_axis(mbar, 1, max_l); // [B,maxL,W]
        let q_rep = tape.repeat_new_axis(q, 2, w);
        let dq = tape.sub(mbar_rep, q_rep);
        let dq2 = tape.square(dq);
        let gamma = tape.exp(bind.var(self.log_gamma));
        let sc = tape.mul_scalar_node(dq2, gamma);
        let neg_sc = tape.neg(sc);
        let pos_term = tape.repeat_new_axis(neg_sc, 2, h); // [B,maxL,H,W]
        let e3 = tape.reshape(e, &[b_n, h, w]);
        let e_rep = tape.repeat_new_axis(e3, 1, max_l); // [B,maxL,H,W]
        let phi = tape.add(pos_term, e_rep);
        let phi2 = tape.reshape(phi, &[b_n, max_l, h * w]);
        let attn = tape.softmax_last(phi2);

        let entropy = if entropy_weight > 0.0 {
            let loga = tape.log_softmax_last(phi2);
            let plogp = tape.mul(attn, loga);
            let per_t = tape.sum_axis(plogp, 2); // [B,maxL] = −H
            let mask = {
                let mut v = ArrayD::<F>::zeros(IxDyn(&[b_n, max_l]));
                for r in 0..b_n {
                    for t in 0..lengths[r] {
                        v[[r, t]] = F::one();
                    }
                }
                tape.constant(v)
            };
            let masked = tape.mul(per_t, mask);
            let tot = tape.sum_all(masked); // Σ (−H) over valid slices
            // Minimizing −w·Σ(−H) = +w·ΣH concentrates the slices.
            Some(tape.scale(tot, F::lit(-entropy_weight / b_n as f64)))
        } else {
            None
        };

        PlanVars { len_logits, attn, lengths, entropy, grid: (h, w) }
    }
}

/// Gathers per-timestamp features: `x_t = Σ_s A_t(s)·F_h(s)` for the first
/// `t_steps` slices, with the attention weights always treated as constants
/// (gradient flows into the backbone only through the feature values).
pub fn gather_sequence<F: Scalar>(
    tape: &mut Tape<F>,
    f_h: Var,
    attn: Var,
    t_steps: usize,
) -> Var {
    let fs = tape.value(f_h).shape().to_vec();
    let (b, d, h, w) = (fs[0], fs[1], fs[2], fs[3]);
    let a_t = tape.narrow(attn, 1, 0, t_steps);
    let a_const = tape.detach(a_t);
    let f2 = tape.reshape(f_h, &[b, d, h * w]);
    let f_p = tape.permute(f2, &[0, 2, 1]); // [B, HW, D]
    tape.bmm(a_const, f_p) // [B, T, D]
}
