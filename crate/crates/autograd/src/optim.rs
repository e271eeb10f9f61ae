//! AdaDelta with an explicit learning-rate multiplier and global-norm clip.

use crate::{ParamId, ParamStore, Scalar};
use ndarray::ArrayD;

/// AdaDelta (Zeiler 2012): per-element accumulators of squared gradients and
/// squared updates. `lr` scales the final update (1.0 is the canonical
/// setting; small multipliers slow adaptation proportionally).
pub struct AdaDelta<F: Scalar> {
    pub rho: F,
    pub eps: F,
    pub lr: F,
    /// Optional global-norm gradient clip applied before the update.
    pub clip_norm: Option<F>,
    // Accumulators indexed like `ParamStore` entries; `None` for buffers.
    acc_g: Vec<Option<ArrayD<F>>>,
    acc_dx: Vec<Option<ArrayD<F>>>,
}

impl<F: Scalar> AdaDelta<F> {
    pub fn new(store: &ParamStore<F>, rho: F, eps: F, lr: F, clip_norm: Option<F>) -> Self {
        let mut acc_g = Vec::with_capacity(store.len());
        let mut acc_dx = Vec::with_capacity(store.len());
        for (_, e) in store.iter() {
            if e.trainable {
                acc_g.push(Some(ArrayD::zeros(e.value.raw_dim())));
                acc_dx.push(Some(ArrayD::zeros(e.value.raw_dim())));
            } else {
                acc_g.push(None);
                acc_dx.push(None);
            }
        }
        AdaDelta {
            rho,
            eps,
            lr,
            clip_norm,
            acc_g,
            acc_dx,
        }
    }

    /// Applies one update. `grads[i]` is the gradient for `ParamId(i)` or
    /// `None` when no gradient reached it (treated as zero: accumulators
    /// still decay, parameter still receives its — zero-gradient — update).
    pub fn step(&mut self, store: &mut ParamStore<F>, grads: &mut [Option<ArrayD<F>>]) {
        assert_eq!(grads.len(), store.len(), "optimizer/grads length mismatch");
        let scale = self.clip_scale(grads);
        let one = F::one();
        for i in 0..grads.len() {
            let id = ParamId(i);
            let Some(acc_g) = self.acc_g[i].as_mut() else {
                continue; // buffer
            };
            let acc_dx = self.acc_dx[i].as_mut().expect("accumulator pair");
            let value = store.value_mut(id);
            let zero_grad;
            let g: &ArrayD<F> = match &grads[i] {
                Some(g) => {
                    debug_assert_eq!(g.shape(), value.shape(), "gradient shape mismatch");
                    g
                }
                None => {
                    zero_grad = ArrayD::zeros(value.raw_dim());
                    &zero_grad
                }
            };
            let rho = self.rho;
            let eps = self.eps;
            let lr = self.lr;
            ndarray::Zip::from(value)
                .and(acc_g)
                .and(acc_dx)
                .and(g)
                .for_each(|v, ag, ad, &gv| {
                    let gv = gv * scale;
                    *ag = rho * *ag + (one - rho) * gv * gv;
                    let dx = -((*ad + eps).sqrt() / (*ag + eps).sqrt()) * gv;
                    *ad = rho * *ad + (one - rho) * dx * dx;
                    *v = *v + lr * dx;
                });
        }
    }

    /// Returns the multiplier that enforces the global-norm clip.
    fn clip_scale(&self, grads: &[Option<ArrayD<F>>]) -> F {
        let Some(max_norm) = self.clip_norm else {
            return F::one();
        };
        let mut sq = F::zero();
        for g in grads.iter().flatten() {
            sq = sq + g.iter().map(|&v| v * v).sum::<F>();
        }
        let norm = sq.sqrt();
        if norm > max_norm {
            max_norm / norm
        } else {
            F::one()
        }
    }

    /// Accumulator snapshot for checkpointing, in `ParamStore` order
    /// (trainable entries only).
    pub fn state(&self) -> Vec<(ArrayD<F>, ArrayD<F>)> {
        self.acc_g
            .iter()
            .zip(self.acc_dx.iter())
            .filter_map(|(g, d)| Some((g.clone()?, d.clone()?)))
            .collect()
    }

    /// Restores accumulators saved by [`AdaDelta::state`].
    pub fn restore(&mut self, state: Vec<(ArrayD<F>, ArrayD<F>)>) {
        let mut it = state.into_iter();
        for i in 0..self.acc_g.len() {
            if self.acc_g[i].is_some() {
                let (g, d) = it.next().expect("optimizer state too short");
                assert_eq!(
                    g.shape(),
                    self.acc_g[i].as_ref().unwrap().shape(),
                    "optimizer state shape mismatch"
                );
                self.acc_g[i] = Some(g);
                self.acc_dx[i] = Some(d);
            }
        }
        assert!(it.next().is_none(), "optimizer state too long");
    }
}
