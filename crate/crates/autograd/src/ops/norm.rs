//! Normalization ops: batch norm (train/eval), layer norm, row L2 norms.

use crate::{Scalar, Tape, Var};
use ndarray::{Array1, ArrayD, Axis, Ix2, Ix4, IxDyn};

/// Smallest denominator used to guard divisions in backward passes. Forward
/// values stay exact; only gradient formulas clamp.
fn safe_denom<F: Scalar>(v: F) -> F {
    let tiny = F::lit(1e-30);
    if v > tiny {
        v
    } else {
        tiny
    }
}

impl<F: Scalar> Tape<F> {
    /// Batch norm over `x: [B,C,H,W]` using *batch* statistics (training
    /// mode). Returns the normalized output plus the per-channel batch mean
    /// and biased variance so the caller can maintain running buffers — the
    /// op itself mutates nothing.
    pub fn batchnorm2d_train(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: F,
    ) -> (Var, Array1<F>, Array1<F>) {
        let xs = self.value(x).shape().to_vec();
        assert_eq!(xs.len(), 4, "batchnorm2d_train: x must be 4-D");
        let (b, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        let n = F::from_count(b * h * w);
        let x4 = self.value(x).view().into_dimensionality::<Ix4>().unwrap();
        let mut mean = Array1::<F>::zeros(c);
        let mut var = Array1::<F>::zeros(c);
        for ci in 0..c {
            let ch = x4.index_axis(Axis(1), ci);
            let m = ch.sum() / n;
            let v = ch.iter().map(|&xv| (xv - m) * (xv - m)).sum::<F>() / n;
            mean[ci] = m;
            var[ci] = v;
        }
        let gv = self.value(gamma).clone();
        let bv = self.value(beta).clone();
        let mut value = ArrayD::<F>::zeros(IxDyn(&xs));
        let mut invstd = Array1::<F>::zeros(c);
        {
            let mut y4 = value.view_mut().into_dimensionality::<Ix4>().unwrap();
            for ci in 0..c {
                let is = F::one() / (var[ci] + eps).sqrt();
                invstd[ci] = is;
                let (gc, bc) = (gv[[ci]], bv[[ci]]);
                let mc = mean[ci];
                let src = x4.index_axis(Axis(1), ci);
                let mut dst = y4.index_axis_mut(Axis(1), ci);
                dst.zip_mut_with(&src, |d, &s| *d = (s - mc) * is * gc + bc);
            }
        }
        let grad = self.tracks_grad(x) || self.tracks_grad(gamma) || self.tracks_grad(beta);
        let mean_c = mean.clone();
        let invstd_c = invstd.clone();
        let out = self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g4 = g.view().into_dimensionality::<Ix4>().unwrap();
                let x4 = t.value(x).view().into_dimensionality::<Ix4>().unwrap();
                let gammav = t.value(gamma);
                let mut dgamma = ArrayD::<F>::zeros(IxDyn(&[c]));
                let mut dbeta = ArrayD::<F>::zeros(IxDyn(&[c]));
                let mut dx = ArrayD::<F>::zeros(t.value(x).raw_dim());
                {
                    let mut dx4 = dx.view_mut().into_dimensionality::<Ix4>().unwrap();
                    for ci in 0..c {
                        let is = invstd_c[ci];
                        let mc = mean_c[ci];
                        let gch = g4.index_axis(Axis(1), ci);
                        let xch = x4.index_axis(Axis(1), ci);
                        let mut sum_g = F::zero();
                        let mut sum_gx = F::zero();
                        ndarray::Zip::from(&gch).and(&xch).for_each(|&gv, &xv| {
                            sum_g = sum_g + gv;
                            sum_gx = sum_gx + gv * (xv - mc) * is;
                        });
                        dbeta[[ci]] = sum_g;
                        dgamma[[ci]] = sum_gx;
                        if t.tracks_grad(x) {
                            let k = gammav[[ci]] * is / n;
                            let mut dch = dx4.index_axis_mut(Axis(1), ci);
                            ndarray::Zip::from(&mut dch).and(&gch).and(&xch).for_each(
                                |d, &gv, &xv| {
                                    let xh = (xv - mc) * is;
                                    *d = k * (n * gv - sum_g - xh * sum_gx);
                                },
                            );
                        }
                    }
                }
                if t.tracks_grad(x) {
                    sink.add(x, dx);
                }
                if t.tracks_grad(gamma) {
                    sink.add(gamma, dgamma);
                }
                if t.tracks_grad(beta) {
                    sink.add(beta, dbeta);
                }
            }),
        );
        (out, mean, var)
    }

    /// Batch norm using fixed running statistics (evaluation mode).
    pub fn batchnorm2d_eval(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        rmean: &Array1<F>,
        rvar: &Array1<F>,
        eps: F,
    ) -> Var {
        let xs = self.value(x).shape().to_vec();
        assert_eq!(xs.len(), 4, "batchnorm2d_eval: x must be 4-D");
        let c = xs[1];
        assert_eq!(rmean.len(), c, "batchnorm2d_eval: running mean length");
        let invstd: Array1<F> = rvar.mapv(|v| F::one() / (v + eps).sqrt());
        let gv = self.value(gamma).clone();
        let bv = self.value(beta).clone();
        let x4 = self.value(x).view().into_dimensionality::<Ix4>().unwrap();
        let mut value = ArrayD::<F>::zeros(IxDyn(&xs));
        {
            let mut y4 = value.view_mut().into_dimensionality::<Ix4>().unwrap();
            for ci in 0..c {
                let (is, mc) = (invstd[ci], rmean[ci]);
                let (gc, bc) = (gv[[ci]], bv[[ci]]);
                let src = x4.index_axis(Axis(1), ci);
                let mut dst = y4.index_axis_mut(Axis(1), ci);
                dst.zip_mut_with(&src, |d, &s| *d = (s - mc) * is * gc + bc);
            }
        }
        let grad = self.tracks_grad(x) || self.tracks_grad(gamma) || self.tracks_grad(beta);
        let rmean_c = rmean.clone();
        let invstd_c = invstd;
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g4 = g.view().into_dimensionality::<Ix4>().unwrap();
                let x4 = t.value(x).view().into_dimensionality::<Ix4>().unwrap();
                let gammav = t.value(gamma);
                if t.tracks_grad(x) {
                    let mut dx = ArrayD::<F>::zeros(t.value(x).raw_dim());
                    {
                        let mut dx4 = dx.view_mut().into_dimensionality::<Ix4>().unwrap();
                        for ci in 0..c {
                            let k = gammav[[ci]] * invstd_c[ci];
                            let gch = g4.index_axis(Axis(1), ci);
                            let mut dch = dx4.index_axis_mut(Axis(1), ci);
                            dch.zip_mut_with(&gch, |d, &gv| *d = gv * k);
                        }
                    }
                    sink.add(x, dx);
                }
                if t.tracks_grad(gamma) {
                    let mut dgamma = ArrayD::<F>::zeros(IxDyn(&[c]));
                    for ci in 0..c {
                        let (is, mc) = (invstd_c[ci], rmean_c[ci]);
                        let gch = g4.index_axis(Axis(1), ci);
                        let xch = x4.index_axis(Axis(1), ci);
                        let mut s = F::zero();
                        ndarray::Zip::from(&gch).and(&xch).for_each(|&gv, &xv| {
                            s = s + gv * (xv - mc) * is;
                        });
                        dgamma[[ci]] = s;
                    }
                    sink.add(gamma, dgamma);
                }
                if t.tracks_grad(beta) {
                    let mut dbeta = ArrayD::<F>::zeros(IxDyn(&[c]));
                    for ci in 0..c {
                        dbeta[[ci]] = g4.index_axis(Axis(1), ci).sum();
                    }
                    sink.add(beta, dbeta);
                }
            }),
        )
    }

    /// Layer norm over the last axis of `x: [..., C]` with affine `gamma`,
    /// `beta: [C]`.
    pub fn layer_norm_last(&mut self, x: Var, gamma: Var, beta: Var, eps: F) -> Var {
        let xs = self.value(x).shape().to_vec();
        let c = *xs.last().expect("layer_norm_last: x has no axes");
        let rows = self.value(x).len() / c;
        let n = F::from_count(c);
        let x2 = self
            .value(x)
            .view()
            .into_shape_with_order((rows, c))
            .expect("layer_norm_last: row view");
        let gv = self.value(gamma).clone();
        let bv = self.value(beta).clone();
        let mut value = ArrayD::<F>::zeros(IxDyn(&[rows, c]));
        let mut mean = Array1::<F>::zeros(rows);
        let mut invstd = Array1::<F>::zeros(rows);
        {
            let mut y2 = value.view_mut().into_dimensionality::<Ix2>().unwrap();
            for r in 0..rows {
                let row = x2.index_axis(Axis(0), r);
                let m = row.sum() / n;
                let v = row.iter().map(|&xv| (xv - m) * (xv - m)).sum::<F>() / n;
                let is = F::one() / (v + eps).sqrt();
                mean[r] = m;
                invstd[r] = is;
                let mut dst = y2.index_axis_mut(Axis(0), r);
                for ci in 0..c {
                    dst[ci] = (row[ci] - m) * is * gv[[ci]] + bv[[ci]];
                }
            }
        }
        let value = value.into_shape_with_order(IxDyn(&xs)).unwrap();
        let grad = self.tracks_grad(x) || self.tracks_grad(gamma) || self.tracks_grad(beta);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g2 = g
                    .view()
                    .into_shape_with_order((rows, c))
                    .expect("layer_norm_last backward: g rows");
                let x2 = t
                    .value(x)
                    .view()
                    .into_shape_with_order((rows, c))
                    .unwrap();
                let gammav = t.value(gamma);
                let mut dx = ArrayD::<F>::zeros(IxDyn(&[rows, c]));
                let mut dgamma = ArrayD::<F>::zeros(IxDyn(&[c]));
                let mut dbeta = ArrayD::<F>::zeros(IxDyn(&[c]));
                {
                    let mut dx2 = dx.view_mut().into_dimensionality::<Ix2>().unwrap();
                    for r in 0..rows {
                        let (m, is) = (mean[r], invstd[r]);
                        let grow = g2.index_axis(Axis(0), r);
                        let xrow = x2.index_axis(Axis(0), r);
                        let mut sum_gh = F::zero();
                        let mut sum_ghx = F::zero();
                        for ci in 0..c {
                            let xh = (xrow[ci] - m) * is;
                            let gh = grow[ci] * gammav[[ci]];
                            sum_gh = sum_gh + gh;
                            sum_ghx = sum_ghx + gh * xh;
                            dgamma[[ci]] = dgamma[[ci]] + grow[ci] * xh;
                            dbeta[[ci]] = dbeta[[ci]] + grow[ci];
                        }
                        if t.tracks_grad(x) {
                            let mut drow = dx2.index_axis_mut(Axis(0), r);
                            for ci in 0..c {
                                let xh = (xrow[ci] - m) * is;
                                let gh = grow[ci] * gammav[[ci]];
                                drow[ci] = is * (gh - sum_gh / n - xh * sum_ghx / n);
                            }
                        }
                    }
                }
                if t.tracks_grad(x) {
                    let shape = t.value(x).shape().to_vec();
                    sink.add(x, dx.into_shape_with_order(IxDyn(&shape)).unwrap());
                }
                if t.tracks_grad(gamma) {
                    sink.add(gamma, dgamma);
                }
                if t.tracks_grad(beta) {
                    sink.add(beta, dbeta);
                }
            }),
        )
    }

    /// Normalizes each row of `x: [N, D]` to unit L2 norm. Zero rows pass
    /// through a tiny clamped denominator.
    pub fn l2norm_rows(&mut self, x: Var) -> Var {
        let xs = self.value(x).shape().to_vec();
        assert_eq!(xs.len(), 2, "l2norm_rows: x must be 2-D");
        let (nr, d) = (xs[0], xs[1]);
        let x2 = self.value(x).view().into_dimensionality::<Ix2>().unwrap();
        let mut value = ArrayD::<F>::zeros(IxDyn(&[nr, d]));
        let mut norms = Array1::<F>::zeros(nr);
        {
            let mut y2 = value.view_mut().into_dimensionality::<Ix2>().unwrap();
            for r in 0..nr {
                let row = x2.index_axis(Axis(0), r);
                let nrm = safe_denom(row.iter().map(|&v| v * v).sum::<F>().sqrt());
                norms[r] = nrm;
                let mut dst = y2.index_axis_mut(Axis(0), r);
                dst.zip_mut_with(&row, |dv, &sv| *dv = sv / nrm);
            }
        }
        let grad = self.tracks_grad(x);
        let saved = value.clone();
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| {
                let g2 = g.view().into_dimensionality::<Ix2>().unwrap();
                let y2 = saved.view().into_dimensionality::<Ix2>().unwrap();
                let mut dx = ArrayD::<F>::zeros(IxDyn(&[nr, d]));
                {
                    let mut dx2 = dx.view_mut().into_dimensionality::<Ix2>().unwrap();
                    for r in 0..nr {
                        let grow = g2.index_axis(Axis(0), r);
                        let yrow = y2.index_axis(Axis(0), r);
                        let dot = grow
                            .iter()
                            .zip(yrow.iter())
                            .map(|(&gv, &yv)| gv * yv)
                            .sum::<F>();
                        let nrm = norms[r];
                        let mut drow = dx2.index_axis_mut(Axis(0), r);
                        for ci in 0..d {
                            drow[ci] = (grow[ci] - yrow[ci] * dot) / nrm;
                        }
                    }
                }
                sink.add(x, dx);
            }),
        )
    }

    /// Row L2 norms of `x: [N, D]` → `[N]` (exact in forward).
    pub fn l2_norm_mag(&mut self, x: Var) -> Var {
        let xs = self.value(x).shape().to_vec();
        assert_eq!(xs.len(), 2, "l2_norm_mag: x must be 2-D");
        let (nr, d) = (xs[0], xs[1]);
        let x2 = self.value(x).view().into_dimensionality::<Ix2>().unwrap();
        let mut value = ArrayD::<F>::zeros(IxDyn(&[nr]));
        for r in 0..nr {
            value[[r]] = x2
                .index_axis(Axis(0), r)
                .iter()
                .map(|&v| v * v)
                .sum::<F>()
                .sqrt();
        }
        let grad = self.tracks_grad(x);
        let saved = value.clone();
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let x2 = t.value(x).view().into_dimensionality::<Ix2>().unwrap();
                let mut dx = ArrayD::<F>::zeros(IxDyn(&[nr, d]));
                {
                    let mut dx2 = dx.view_mut().into_dimensionality::<Ix2>().unwrap();
                    for r in 0..nr {
                        let k = g[[r]] / safe_denom(saved[[r]]);
                        let xrow = x2.index_axis(Axis(0), r);
                        let mut drow = dx2.index_axis_mut(Axis(0), r);
                        drow.zip_mut_with(&xrow, |dv, &xv| *dv = xv * k);
                    }
                }
                sink.add(x, dx);
            }),
        )
    }
}
