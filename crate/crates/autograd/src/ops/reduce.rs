//! Reductions: full sums/means, per-axis sums, spatial means.

use crate::{Scalar, Tape, Var};
use ndarray::{ArrayD, Axis, IxDyn};

impl<F: Scalar> Tape<F> {
    /// Sum of all elements, shape `[1]`.
    pub fn sum_all(&mut self, a: Var) -> Var {
        let s = self.value(a).sum();
        let grad = self.tracks_grad(a);
        self.push_op(
            ArrayD::from_elem(IxDyn(&[1]), s),
            grad,
            Box::new(move |t, g, sink| {
                let gv = g[[0]];
                sink.add(a, ArrayD::from_elem(t.value(a).raw_dim(), gv));
            }),
        )
    }

    /// Mean of all elements, shape `[1]`.
    pub fn mean_all(&mut self, a: Var) -> Var {
        let n = F::from_count(self.value(a).len());
        let s = self.sum_all(a);
        self.scale(s, F::one() / n)
    }

    /// Sums over one axis, removing it.
    pub fn sum_axis(&mut self, a: Var, axis: usize) -> Var {
        let value = self.value(a).sum_axis(Axis(axis)).into_dyn();
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let shape = t.value(a).shape().to_vec();
                let expanded = g
                    .view()
                    .insert_axis(Axis(axis))
                    .broadcast(IxDyn(&shape))
                    .expect("sum_axis backward broadcast")
                    .to_owned();
                sink.add(a, expanded);
            }),
        )
    }

    /// Spatial mean of `x: [B, C, H, W]` → `[B, C]`.
    pub fn mean_hw(&mut self, x: Var) -> Var {
        let xs = self.value(x).shape().to_vec();
        debug_assert_eq!(xs.len(), 4, "mean_hw: x must be 4-D");
        let inv = F::one() / F::from_count(xs[2] * xs[3]);
        let s3 = self.sum_axis(x, 3);
        let s2 = self.sum_axis(s3, 2);
        self.scale(s2, inv)
    }
}
