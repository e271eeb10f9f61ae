//! Bespoke ops: cumulative sums, column-broadcast division, grouped max.

use crate::{Scalar, Tape, Var};
use ndarray::{Array2, ArrayD, Axis, IxDyn};

impl<F: Scalar> Tape<F> {
    /// Inclusive cumulative sum along the last axis. Gradient is the
    /// reversed cumulative sum of the incoming gradient.
    pub fn cumsum_last(&mut self, x: Var) -> Var {
        let shape = self.value(x).shape().to_vec();
        let k = *shape.last().expect("cumsum_last: x has no axes");
        let rows = self.value(x).len() / k;
        let x2 = self.value(x).view().into_shape_with_order((rows, k)).unwrap();
        let mut y = Array2::<F>::zeros((rows, k));
        for r in 0..rows {
            let mut acc = F::zero();
            for c in 0..k {
                acc = acc + x2[[r, c]];
                y[[r, c]] = acc;
            }
        }
        let value = y.into_dyn().into_shape_with_order(IxDyn(&shape)).unwrap();
        let grad = self.tracks_grad(x);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g2 = g.view().into_shape_with_order((rows, k)).unwrap();
                let mut dx = Array2::<F>::zeros((rows, k));
                for r in 0..rows {
                    let mut acc = F::zero();
                    for c in (0..k).rev() {
                        acc = acc + g2[[r, c]];
                        dx[[r, c]] = acc;
                    }
                }
                let shape = t.value(x).shape().to_vec();
                sink.add(x, dx.into_dyn().into_shape_with_order(IxDyn(&shape)).unwrap());
            }),
        )
    }

    /// Divides `a: [N, K]` elementwise by the column vector `d: [N, 1]`.
    pub fn div_by_col(&mut self, a: Var, d: Var) -> Var {
        let ashape = self.value(a).shape().to_vec();
        assert_eq!(ashape.len(), 2, "div_by_col: a must be [N,K]");
        let (n, k) = (ashape[0], ashape[1]);
        assert_eq!(self.value(d).shape(), &[n, 1], "div_by_col: d must be [N,1]");
        let a2 = self.value(a).view().into_shape_with_order((n, k)).unwrap();
        let dv = self.value(d).view().into_shape_with_order((n, 1)).unwrap();
        let mut y = Array2::<F>::zeros((n, k));
        for r in 0..n {
            let inv = F::one() / dv[[r, 0]];
            let src = a2.index_axis(Axis(0), r);
            let mut dst = y.index_axis_mut(Axis(0), r);
            dst.zip_mut_with(&src, |yv, &av| *yv = av * inv);
        }
        let grad = self.tracks_grad(a) || self.tracks_grad(d);
        self.push_op(
            y.into_dyn(),
            grad,
            Box::new(move |t, g, sink| {
                let g2 = g.view().into_shape_with_order((n, k)).unwrap();
                let a2 = t.value(a).view().into_shape_with_order((n, k)).unwrap();
                let dv = t.value(d).view().into_shape_with_order((n, 1)).unwrap();
                if t.tracks_grad(a) {
                    let mut da = Array2::<F>::zeros((n, k));
                    for r in 0..n {
                        let inv = F::one() / dv[[r, 0]];
                        let gr = g2.index_axis(Axis(0), r);
                        let mut dr = da.index_axis_mut(Axis(0), r);
                        dr.zip_mut_with(&gr, |dvv, &gv| *dvv = gv * inv);
                    }
                    sink.add(a, da.into_dyn());
                }
                if t.tracks_grad(d) {
                    let mut dd = ArrayD::<F>::zeros(IxDyn(&[n, 1]));
                    for r in 0..n {
                        let inv2 = F::one() / (dv[[r, 0]] * dv[[r, 0]]);
                        let s = g2
                            .index_axis(Axis(0), r)
                            .iter()
                            .zip(a2.index_axis(Axis(0), r).iter())
                            .map(|(&gv, &av)| gv * av)
                            .sum::<F>();
                        dd[[r, 0]] = -s * inv2;
                    }
                    sink.add(d, dd);
                }
            }),
        )
    }

    /// Grouped row max: for scores `x: [N, R]` and contiguous row groups
    /// `groups[m] = (start, end)`, returns `[N, M]` with
    /// `y[n, m] = max_{r ∈ groups[m]} x[n, r]`. Gradient routes to the argmax
    /// column of each group (ties go to the first maximum).
    pub fn group_max(&mut self, x: Var, groups: &[(usize, usize)]) -> Var {
        let shape = self.value(x).shape().to_vec();
        assert_eq!(shape.len(), 2, "group_max: x must be [N,R]");
        let (n, rtot) = (shape[0], shape[1]);
        let m = groups.len();
        for &(s, e) in groups {
            assert!(s < e && e <= rtot, "group_max: bad group bounds");
        }
        let x2 = self.value(x).view().into_shape_with_order((n, rtot)).unwrap();
        let mut y = Array2::<F>::zeros((n, m));
        let mut arg = vec![0usize; n * m];
        for r in 0..n {
            let row = x2.index_axis(Axis(0), r);
            for (mi, &(s, e)) in groups.iter().enumerate() {
                let mut best = row[s];
                let mut best_i = s;
                for c in s + 1..e {
                    if row[c] > best {
                        best = row[c];
                        best_i = c;
                    }
                }
                y[[r, mi]] = best;
                arg[r * m + mi] = best_i;
            }
        }
        let grad = self.tracks_grad(x);
        self.push_op(
            y.into_dyn(),
            grad,
            Box::new(move |_, g, sink| {
                let g2 = g.view().into_shape_with_order((n, m)).unwrap();
                let mut dx = Array2::<F>::zeros((n, rtot));
                for r in 0..n {
                    for mi in 0..m {
                        let c = arg[r * m + mi];
                        dx[[r, c]] = dx[[r, c]] + g2[[r, mi]];
                    }
                }
                sink.add(x, dx.into_dyn());
            }),
        )
    }
}
