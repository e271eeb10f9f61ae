//! Softmax family and the fused masked cross-entropy loss.

use crate::{Scalar, Tape, Var};
use ndarray::{Array2, ArrayD, Axis, IxDyn};

/// Row-stable softmax of a `[rows, k]` view of `x`.
fn softmax_rows<F: Scalar>(x: &ArrayD<F>, rows: usize, k: usize) -> Array2<F> {
    let x2 = x
        .view()
        .into_shape_with_order((rows, k))
        .expect("softmax: row view");
    let mut y = Array2::<F>::zeros((rows, k));
    for r in 0..rows {
        let row = x2.index_axis(Axis(0), r);
        let m = row.iter().cloned().fold(F::neg_infinity(), F::max);
        let mut dst = y.index_axis_mut(Axis(0), r);
        let mut z = F::zero();
        for (d, &v) in dst.iter_mut().zip(row.iter()) {
            let e = (v - m).exp();
            *d = e;
            z = z + e;
        }
        dst.mapv_inplace(|v| v / z);
    }
    y
}

impl<F: Scalar> Tape<F> {
    /// Softmax over the last axis.
    pub fn softmax_last(&mut self, x: Var) -> Var {
        let shape = self.value(x).shape().to_vec();
        let k = *shape.last().expect("softmax_last: x has no axes");
        let rows = self.value(x).len() / k;
        let y = softmax_rows(self.value(x), rows, k);
        let value = y.clone().into_dyn().into_shape_with_order(IxDyn(&shape)).unwrap();
        let grad = self.tracks_grad(x);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g2 = g.view().into_shape_with_order((rows, k)).unwrap();
                let mut dx = Array2::<F>::zeros((rows, k));
                for r in 0..rows {
                    let yr = y.index_axis(Axis(0), r);
                    let gr = g2.index_axis(Axis(0), r);
                    let dot = yr.iter().zip(gr.iter()).map(|(&yv, &gv)| yv * gv).sum::<F>();
                    let mut dr = dx.index_axis_mut(Axis(0), r);
                    for c in 0..k {
                        dr[c] = yr[c] * (gr[c] - dot);
                    }
                }
                let shape = t.value(x).shape().to_vec();
                sink.add(x, dx.into_dyn().into_shape_with_order(IxDyn(&shape)).unwrap());
            }),
        )
    }

    /// Log-softmax over the last axis.
    pub fn log_softmax_last(&mut self, x: Var) -> Var {
        let shape = self.value(x).shape().to_vec();
        let k = *shape.last().expect("log_softmax_last: x has no axes");
        let rows = self.value(x).len() / k;
        let sm = softmax_rows(self.value(x), rows, k);
        let x2 = self.value(x).view().into_shape_with_order((rows, k)).unwrap();
        let mut value = Array2::<F>::zeros((rows, k));
        for r in 0..rows {
            let row = x2.index_axis(Axis(0), r);
            let m = row.iter().cloned().fold(F::neg_infinity(), F::max);
            let z = row.iter().map(|&v| (v - m).exp()).sum::<F>().ln() + m;
            let mut dst = value.index_axis_mut(Axis(0), r);
            dst.zip_mut_with(&row, |d, &v| *d = v - z);
        }
        let value = value.into_dyn().into_shape_with_order(IxDyn(&shape)).unwrap();
        let grad = self.tracks_grad(x);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g2 = g.view().into_shape_with_order((rows, k)).unwrap();
                let mut dx = Array2::<F>::zeros((rows, k));
                for r in 0..rows {
                    let gr = g2.index_axis(Axis(0), r);
                    let sum_g = gr.sum();
                    let sr = sm.index_axis(Axis(0), r);
                    let mut dr = dx.index_axis_mut(Axis(0), r);
                    for c in 0..k {
                        dr[c] = gr[c] - sr[c] * sum_g;
                    }
                }
                let shape = t.value(x).shape().to_vec();
                sink.add(x, dx.into_dyn().into_shape_with_order(IxDyn(&shape)).unwrap());
            }),
        )
    }

    /// Fused masked cross-entropy: for logits `[N, K]`, integer targets and
    /// per-row weights `mask`, returns `scale · Σ_i mask_i · NLL_i` as a
    /// `[1]` node. Rows with mask 0 contribute nothing to value or gradient.
    pub fn masked_ce(&mut self, logits: Var, targets: &[usize], mask: &[F], scale: F) -> Var {
        let shape = self.value(logits).shape().to_vec();
        assert_eq!(shape.len(), 2, "masked_ce: logits must be [N,K]");
        let (n, k) = (shape[0], shape[1]);
        assert_eq!(targets.len(), n, "masked_ce: target count");
        assert_eq!(mask.len(), n, "masked_ce: mask count");
        let sm = softmax_rows(self.value(logits), n, k);
        let x2 = self.value(logits).view().into_shape_with_order((n, k)).unwrap();
        let mut loss = F::zero();
        for r in 0..n {
            if mask[r] == F::zero() {
                continue;
            }
            debug_assert!(targets[r] < k, "masked_ce: target out of range");
            let row = x2.index_axis(Axis(0), r);
            let m = row.iter().cloned().fold(F::neg_infinity(), F::max);
            let z = row.iter().map(|&v| (v - m).exp()).sum::<F>().ln() + m;
            loss = loss + mask[r] * (z - row[targets[r]]);
        }
        let grad = self.tracks_grad(logits);
        let targets_v = targets.to_vec();
        let mask_v = mask.to_vec();
        self.push_op(
            ArrayD::from_elem(IxDyn(&[1]), loss * scale),
            grad,
            Box::new(move |_, g, sink| {
                let gs = g[[0]] * scale;
                let mut dx = Array2::<F>::zeros((n, k));
                for r in 0..n {
                    if mask_v[r] == F::zero() {
                        continue;
                    }
                    let w = gs * mask_v[r];
                    let sr = sm.index_axis(Axis(0), r);
                    let mut dr = dx.index_axis_mut(Axis(0), r);
                    for c in 0..k {
                        dr[c] = w * sr[c];
                    }
                    dr[targets_v[r]] = dr[targets_v[r]] - w;
                }
                sink.add(logits, dx.into_dyn());
            }),
        )
    }
}
