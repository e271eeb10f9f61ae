//! 2-D convolution (im2col + matmul) and average pooling, NCHW layout.

use crate::{Scalar, Tape, Var};
use ndarray::{Array2, ArrayD, ArrayView4, Axis, Ix4, IxDyn};

/// Lowers `x` into the im2col matrix `[Cin*kh*kw, B*Ho*Wo]`.
fn im2col<F: Scalar>(
    x: &ArrayView4<'_, F>,
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
) -> Array2<F> {
    let (b, cin, h, w) = (x.shape()[0], x.shape()[1], x.shape()[2], x.shape()[3]);
    let mut cols = Array2::<F>::zeros((cin * kh * kw, b * ho * wo));
    for bi in 0..b {
        for ci in 0..cin {
            for ki in 0..kh {
                for kj in 0..kw {
                    let row = (ci * kh + ki) * kw + kj;
                    for hi in 0..ho {
                        let ih = (hi * stride + ki).wrapping_sub(pad);
                        if ih >= h {
                            continue; // zero padding
                        }
                        for wi in 0..wo {
                            let iw = (wi * stride + kj).wrapping_sub(pad);
                            if iw >= w {
                                continue;
                            }
                            cols[[row, (bi * ho + hi) * wo + wi]] = x[[bi, ci, ih, iw]];
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-adds an im2col-shaped gradient back onto the input image grid.
fn col2im<F: Scalar>(
    dcols: &Array2<F>,
    shape: (usize, usize, usize, usize),
    kh: usize,
    kw: usize,
    stride: usize,
    pad: usize,
    ho: usize,
    wo: usize,
) -> ArrayD<F> {
    let (b, cin, h, w) = shape;
    let mut dx = ArrayD::<F>::zeros(IxDyn(&[b, cin, h, w]));
    {
        let mut dx4 = dx.view_mut().into_dimensionality::<Ix4>().unwrap();
        for bi in 0..b {
            for ci in 0..cin {
                for ki in 0..kh {
                    for kj in 0..kw {
                        let row = (ci * kh + ki) * kw + kj;
                        for hi in 0..ho {
                            let ih = (hi * stride + ki).wrapping_sub(pad);
                            if ih >= h {
                                continue;
                            }
                            for wi in 0..wo {
                                let iw = (wi * stride + kj).wrapping_sub(pad);
                                if iw >= w {
                                    continue;
                                }
                                dx4[[bi, ci, ih, iw]] =
                                    dx4[[bi, ci, ih, iw]] + dcols[[row, (bi * ho + hi) * wo + wi]];
                            }
                        }
                    }
                }
            }
        }
    }
    dx
}

impl<F: Scalar> Tape<F> {
    /// Convolution of `x: [B,Cin,H,W]` with `w: [Cout,Cin,kh,kw]` plus an
    /// optional `[Cout]` bias, square stride and zero padding.
    pub fn conv2d(&mut self, x: Var, w: Var, bias: Option<Var>, stride: usize, pad: usize) -> Var {
        let xs = self.value(x).shape().to_vec();
        let ws = self.value(w).shape().to_vec();
        assert_eq!(xs.len(), 4, "conv2d: x must be [B,Cin,H,W]");
        assert_eq!(ws.len(), 4, "conv2d: w must be [Cout,Cin,kh,kw]");
        assert_eq!(xs[1], ws[1], "conv2d: channel mismatch");
        let (b, cin, h, wd) = (xs[0], xs[1], xs[2], xs[3]);
        let (cout, kh, kw) = (ws[0], ws[2], ws[3]);
        let ho = (h + 2 * pad - kh) / stride + 1;
        let wo = (wd + 2 * pad - kw) / stride + 1;

        let x4 = self.value(x).view().into_dimensionality::<Ix4>().unwrap();
        let cols = im2col(&x4, kh, kw, stride, pad, ho, wo);
        let wmat = self
            .value(w)
            .view()
            .into_shape_with_order((cout, cin * kh * kw))
            .expect("conv2d: weight reshape")
            .to_owned();
        let out_mat = wmat.dot(&cols); // [Cout, B*Ho*Wo]
        let mut value = out_mat
            .into_shape_with_order((cout, b, ho, wo))
            .unwrap()
            .permuted_axes([1, 0, 2, 3])
            .as_standard_layout()
            .into_owned()
            .into_dyn();
        if let Some(bias) = bias {
            let bv = self.value(bias).clone();
            let mut v4 = value.view_mut().into_dimensionality::<Ix4>().unwrap();
            for (c, &bc) in bv.iter().enumerate() {
                v4.index_axis_mut(Axis(1), c).mapv_inplace(|v| v + bc);
            }
        }

        let grad =
            self.tracks_grad(x) || self.tracks_grad(w) || bias.is_some_and(|bv| self.tracks_grad(bv));
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g4 = g.view().into_dimensionality::<Ix4>().unwrap();
                // [B,Cout,Ho,Wo] → [Cout, B*Ho*Wo]
                let gmat = g4
                    .permuted_axes([1, 0, 2, 3])
                    .as_standard_layout()
                    .into_owned()
                    .into_shape_with_order((cout, b * ho * wo))
                    .unwrap();
                if let Some(bias) = bias {
                    if t.tracks_grad(bias) {
                        let db = gmat.sum_axis(Axis(1)).into_dyn();
                        sink.add(bias, db);
                    }
                }
                if t.tracks_grad(w) {
                    let dw = gmat
                        .dot(&cols.t())
                        .into_shape_with_order((cout, cin, kh, kw))
                        .unwrap()
                        .into_dyn();
                    sink.add(w, dw);
                }
                if t.tracks_grad(x) {
                    let wmat = t
                        .value(w)
                        .view()
                        .into_shape_with_order((cout, cin * kh * kw))
                        .unwrap()
                        .to_owned();
                    let dcols = wmat.t().dot(&gmat);
                    sink.add(x, col2im(&dcols, (b, cin, h, wd), kh, kw, stride, pad, ho, wo));
                }
            }),
        )
    }

    /// Non-overlapping `k×k` average pooling of `x: [B,C,H,W]`; spatial dims
    /// must divide by `k`.
    pub fn avg_pool2d(&mut self, x: Var, k: usize) -> Var {
        let xs = self.value(x).shape().to_vec();
        assert_eq!(xs.len(), 4, "avg_pool2d: x must be 4-D");
        let (b, c, h, w) = (xs[0], xs[1], xs[2], xs[3]);
        assert!(h % k == 0 && w % k == 0, "avg_pool2d: dims must divide by k");
        let (ho, wo) = (h / k, w / k);
        let inv = F::one() / F::from_count(k * k);
        let x4 = self.value(x).view().into_dimensionality::<Ix4>().unwrap();
        let mut value = ArrayD::<F>::zeros(IxDyn(&[b, c, ho, wo]));
        {
            let mut v4 = value.view_mut().into_dimensionality::<Ix4>().unwrap();
            for bi in 0..b {
                for ci in 0..c {
                    for hi in 0..ho {
                        for wi in 0..wo {
                            let mut s = F::zero();
                            for di in 0..k {
                                for dj in 0..k {
                                    s = s + x4[[bi, ci, hi * k + di, wi * k + dj]];
                                }
                            }
                            v4[[bi, ci, hi, wi]] = s * inv;
                        }
                    }
                }
            }
        }
        let grad = self.tracks_grad(x);
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| {
                let g4 = g.view().into_dimensionality::<Ix4>().unwrap();
                let mut dx = ArrayD::<F>::zeros(IxDyn(&[b, c, h, w]));
                {
                    let mut dx4 = dx.view_mut().into_dimensionality::<Ix4>().unwrap();
                    for bi in 0..b {
                        for ci in 0..c {
                            for hi in 0..ho {
                                for wi in 0..wo {
                                    let gv = g4[[bi, ci, hi, wi]] * inv;
                                    for di in 0..k {
                                        for dj in 0..k {
                                            dx4[[bi, ci, hi * k + di, wi * k + dj]] = gv;
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                sink.add(x, dx);
            }),
        )
    }
}
