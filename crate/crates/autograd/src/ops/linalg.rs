//! Dense products: 2-D matmul and batched matmul.

use crate::{Scalar, Tape, Var};
use ndarray::{ArrayD, Ix2, Ix3};

impl<F: Scalar> Tape<F> {
    /// `a [M,K] · b [K,N] → [M,N]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let av = self.value(a).view().into_dimensionality::<Ix2>().expect("matmul: a 2-D");
        let bv = self.value(b).view().into_dimensionality::<Ix2>().expect("matmul: b 2-D");
        debug_assert_eq!(av.shape()[1], bv.shape()[0], "matmul: inner dim");
        let value = av.dot(&bv).into_dyn();
        let grad = self.tracks_grad(a) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g2 = g.view().into_dimensionality::<Ix2>().unwrap();
                if t.tracks_grad(a) {
                    let bv = t.value(b).view().into_dimensionality::<Ix2>().unwrap();
                    sink.add(a, g2.dot(&bv.t()).into_dyn());
                }
                if t.tracks_grad(b) {
                    let av = t.value(a).view().into_dimensionality::<Ix2>().unwrap();
                    sink.add(b, av.t().dot(&g2).into_dyn());
                }
            }),
        )
    }

    /// Batched matmul: `a [B,M,K] · b [B,K,N] → [B,M,N]`.
    pub fn bmm(&mut self, a: Var, b: Var) -> Var {
        let av = self.value(a).view().into_dimensionality::<Ix3>().expect("bmm: a 3-D");
        let bv = self.value(b).view().into_dimensionality::<Ix3>().expect("bmm: b 3-D");
        let (bb, m, k) = (av.shape()[0], av.shape()[1], av.shape()[2]);
        debug_assert_eq!(bv.shape()[0], bb, "bmm: batch dim");
        debug_assert_eq!(bv.shape()[1], k, "bmm: inner dim");
        let n = bv.shape()[2];
        let mut value = ArrayD::zeros(ndarray::IxDyn(&[bb, m, n]));
        {
            let mut v3 = value.view_mut().into_dimensionality::<Ix3>().unwrap();
            for i in 0..bb {
                let prod = av.index_axis(ndarray::Axis(0), i).dot(&bv.index_axis(ndarray::Axis(0), i));
                v3.index_axis_mut(ndarray::Axis(0), i).assign(&prod);
            }
        }
        let grad = self.tracks_grad(a) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let g3 = g.view().into_dimensionality::<Ix3>().unwrap();
                let av = t.value(a).view().into_dimensionality::<Ix3>().unwrap();
                let bv = t.value(b).view().into_dimensionality::<Ix3>().unwrap();
                if t.tracks_grad(a) {
                    let mut da = ArrayD::zeros(t.value(a).raw_dim());
                    {
                        let mut da3 = da.view_mut().into_dimensionality::<Ix3>().unwrap();
                        for i in 0..bb {
                            let gi = g3.index_axis(ndarray::Axis(0), i);
                            let bi = bv.index_axis(ndarray::Axis(0), i);
                            da3.index_axis_mut(ndarray::Axis(0), i).assign(&gi.dot(&bi.t()));
                        }
                    }
                    sink.add(a, da);
                }
                if t.tracks_grad(b) {
                    let mut db = ArrayD::zeros(t.value(b).raw_dim());
                    {
                        let mut db3 = db.view_mut().into_dimensionality::<Ix3>().unwrap();
                        for i in 0..bb {
                            let gi = g3.index_axis(ndarray::Axis(0), i);
                            let ai = av.index_axis(ndarray::Axis(0), i);
                            db3.index_axis_mut(ndarray::Axis(0), i).assign(&ai.t().dot(&gi));
                        }
                    }
                    sink.add(b, db);
                }
            }),
        )
    }
}
