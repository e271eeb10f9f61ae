//! Dual-domain convolutional backbone: three stages of 3×3 convolutions,
//! each followed by domain-specific batch normalization and ReLU. Kernels
//! are single storage shared by both domains; only the normalization
//! parameters and running statistics are per-domain, so a training step via
//! either path moves the same kernel tensors (the sharing contract) while a
//! word-domain pass can never touch glyph-domain statistics.

use super::{Binding, Domain, StatUpdate, BN_EPS, BN_MOMENTUM};
use crate::config::ModelConfig;
use crate::nn::init;
use ndarray::{Array1, Ix1};
use autograd::{ParamId, ParamStore, Scalar, Tape, Var};

pub struct ConvBlock {
    w: ParamId,
    stride: usize,
    gamma: [ParamId; 2],
    beta: [ParamId; 2],
    rmean: [ParamId; 2],
    rvar: [ParamId; 2],
}

/// Three feature maps of one word or glyph batch at decreasing resolution.
pub struct FeatureBundle {
    pub f_l: Var,
    pub f_m: Var,
    pub f_h: Var,
    pub domain: Domain,
}

pub struct Backbone {
    stages: Vec<Vec<ConvBlock>>,
}

impl Backbone {
    /// Registers all backbone parameters. Kernels and affine terms go to the
    /// `backbone` group; running statistics are non-trainable `stats`.
    pub fn register<F: Scalar>(store: &mut ParamStore<F>, cfg: &ModelConfig, seed: u64) -> Self {
        let domains = [Domain::Word, Domain::Glyph];
        let mut stages = Vec::with_capacity(3);
        let mut in_ch = 1usize;
        let mut prev_stride = 1usize;
        for (si, (&out_ch, &total_stride)) in
            cfg.channels.iter().zip(cfg.strides.iter()).enumerate()
        {
            let stage_stride = total_stride / prev_stride;
            prev_stride = total_stride;
            let mut blocks = Vec::with_capacity(cfg.stage_convs);
            for ci in 0..cfg.stage_convs {
                let cin = if ci == 0 { in_ch } else { out_ch };
                let stride = if ci == 0 { stage_stride } else { 1 };
                let base = format!("backbone.s{si}.c{ci}");
                let w = store.register(
                    format!("{base}.w"),
                    "backbone",
                    init::normal_tensor(seed, &format!("{base}.w"), &[out_ch, cin, 3, 3], init::he_std(cin * 9)),
                    true,
                );
                let mut gamma = [ParamId(0); 2];
                let mut beta = [ParamId(0); 2];
                let mut rmean = [ParamId(0); 2];
                let mut rvar = [ParamId(0); 2];
                for d in domains {
                    let i = d.index();
                    let tag = d.tag();
                    gamma[i] = store.register(
                        format!("{base}.bn.{tag}.gamma"),
                        "backbone",
                        init::full(&[out_ch], 1.0),
                        true,
                    );
                    beta[i] = store.register(
                        format!("{base}.bn.{tag}.beta"),
                        "backbone",
                        init::zeros(&[out_ch]),
                        true,
                    );
                    rmean[i] = store.register(
                        format!("{base}.bn.{tag}.rmean"),
                        "stats",
                        init::zeros(&[out_ch]),
                        false,
                    );
                    rvar[i] = store.register(
                        format!("{base}.bn.{tag}.rvar"),
                        "stats",
                        init::full(&[out_ch], 1.0),
                        false,
                    );
                }
                blocks.push(ConvBlock { w, stride, gamma, beta, rmean, rvar });
            }
            stages.push(blocks);
            in_ch = out_ch;
        }
        Backbone { stages }
    }

    /// Runs the batch through all stages, tapping a feature map after each.
    /// In training mode, batch statistics normalize the activations and the
    /// refreshed running buffers for `domain` are returned as updates.
    pub fn forward<F: Scalar>(
        &self,
        tape: &mut Tape<F>,
        bind: &Binding,
        x: Var,
        domain: Domain,
        train: bool,
    ) -> (FeatureBundle, Vec<StatUpdate<F>>) {
        let d = domain.index();
        let mut updates = Vec::new();
        let mut h = x;
        let mut taps = Vec::with_capacity(3);
        for blocks in &self.stages {
            for blk in blocks {
                let conv = tape.conv2d(h, bind.var(blk.w), None, blk.stride, 1);
                let normed = if train {
                    let (y, mean, var) = tape.batchnorm2d_train(
                        conv,
                        bind.var(blk.gamma[d]),
                        bind.var(blk.beta[d]),
                        F::lit(BN_EPS),
                    );
                    let mom = F::lit(BN_MOMENTUM);
                    let one_m = F::one() - mom;
                    let old_m = as_vec(tape, bind.var(blk.rmean[d]));
                    let old_v = as_vec(tape, bind.var(blk.rvar[d]));
                    updates.push(StatUpdate {
                        id: blk.rmean[d],
                        value: (&old_m * mom + &mean * one_m).into_dyn(),
                    });
                    updates.push(StatUpdate {
                        id: blk.rvar[d],
                        value: (&old_v * mom + &var * one_m).into_dyn(),
                    });
                    y
                } else {
                    let rm = as_vec(tape, bind.var(blk.rmean[d]));
                    let rv = as_vec(tape, bind.var(blk.rvar[d]));
                    tape.batchnorm2d_eval(
                        conv,
                        bind.var(blk.gamma[d]),
                        bind.var(blk.beta[d]),
                        &rm,
                        &rv,
                        F::lit(BN_EPS),
                    )
                };
                h = tape.relu(normed);
            }
            taps.push(h);
        }
        let bundle = FeatureBundle { f_l: taps[0], f_m: taps[1], f_h: taps[2], domain };
        (bundle, updates)
    }
}

fn as_vec<F: Scalar>(tape: &Tape<F>, v: Var) -> Array1<F> {
    tape.value(v).clone().into_dimensionality::<Ix1>().expect("stat buffer is 1-D")
}
