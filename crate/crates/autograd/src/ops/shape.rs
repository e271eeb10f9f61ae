//! Shape moves: reshape, permute, narrow, concat, repeat.

use super::to_std;
use crate::{Scalar, Tape, Var};
use ndarray::{ArrayD, Axis, IxDyn, Slice};

impl<F: Scalar> Tape<F> {
    /// Reinterprets `a` with a new shape (same element count, C order).
    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Var {
        let value = self
            .value(a)
            .clone()
            .into_shape_with_order(IxDyn(shape))
            .expect("reshape: element count mismatch");
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let back = g
                    .clone()
                    .into_shape_with_order(t.value(a).raw_dim())
                    .expect("reshape backward");
                sink.add(a, back);
            }),
        )
    }

    /// Permutes axes; gradient applies the inverse permutation.
    pub fn permute(&mut self, a: Var, axes: &[usize]) -> Var {
        let axes_v = axes.to_vec();
        let value = to_std(self.value(a).view().permuted_axes(IxDyn(axes)));
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| {
                let mut inverse = vec![0usize; axes_v.len()];
                for (i, &ax) in axes_v.iter().enumerate() {
                    inverse[ax] = i;
                }
                sink.add(a, to_std(g.view().permuted_axes(IxDyn(&inverse))));
            }),
        )
    }

    /// Transposes a 2-D array.
    pub fn transpose2(&mut self, a: Var) -> Var {
        debug_assert_eq!(self.value(a).ndim(), 2, "transpose2: a must be 2-D");
        self.permute(a, &[1, 0])
    }

    /// Slice `[start, start+len)` along `axis`.
    pub fn narrow(&mut self, a: Var, axis: usize, start: usize, len: usize) -> Var {
        let value = to_std(self.value(a).slice_axis(
            Axis(axis),
            Slice::from(start..start + len),
        ));
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let mut full = ArrayD::zeros(t.value(a).raw_dim());
                full.slice_axis_mut(Axis(axis), Slice::from(start..start + len))
                    .assign(g);
                sink.add(a, full);
            }),
        )
    }

    /// Concatenates nodes along `axis`; gradient splits back.
    pub fn concat(&mut self, axis: usize, parts: &[Var]) -> Var {
        assert!(!parts.is_empty(), "concat: no inputs");
        let views: Vec<_> = parts.iter().map(|&p| self.value(p).view()).collect();
        let value = to_std(
            ndarray::concatenate(Axis(axis), &views)
                .expect("concat: incompatible shapes")
                .view(),
        );
        let grad = parts.iter().any(|&p| self.tracks_grad(p));
        let parts_v = parts.to_vec();
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let mut offset = 0usize;
                for &p in &parts_v {
                    let len = t.value(p).shape()[axis];
                    if t.tracks_grad(p) {
                        let piece = to_std(g.slice_axis(Axis(axis), Slice::from(offset..offset + len)));
                        sink.add(p, piece);
                    }
                    offset += len;
                }
            }),
        )
    }

    /// Inserts a new axis of length `n` at `axis`, repeating the data;
    /// gradient sums over that axis.
    pub fn repeat_new_axis(&mut self, a: Var, axis: usize, n: usize) -> Var {
        let mut shape = self.value(a).shape().to_vec();
        shape.insert(axis, n);
        let value = self
            .value(a)
            .view()
            .insert_axis(Axis(axis))
            .broadcast(IxDyn(&shape))
            .expect("repeat_new_axis broadcast")
            .to_owned();
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| {
                sink.add(a, g.sum_axis(Axis(axis)));
            }),
        )
    }
}
