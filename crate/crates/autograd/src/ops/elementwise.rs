//! Elementwise ops (same-shape binary, unary, and scalar-node broadcast).

use crate::{Scalar, Tape, Var};
use ndarray::ArrayD;

impl<F: Scalar> Tape<F> {
    fn binary_same_shape(&self, a: Var, b: Var, op: &str) {
        debug_assert_eq!(
            self.value(a).shape(),
            self.value(b).shape(),
            "{op}: shape mismatch"
        );
    }

    /// `a + b`, same shapes.
    pub fn add(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape(a, b, "add");
        let value = self.value(a) + self.value(b);
        let grad = self.tracks_grad(a) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                if t.tracks_grad(a) {
                    sink.add(a, g.clone());
                }
                if t.tracks_grad(b) {
                    sink.add(b, g.clone());
                }
            }),
        )
    }

    /// `a - b`, same shapes.
    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape(a, b, "sub");
        let value = self.value(a) - self.value(b);
        let grad = self.tracks_grad(a) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                if t.tracks_grad(a) {
                    sink.add(a, g.clone());
                }
                if t.tracks_grad(b) {
                    sink.add(b, g.mapv(|v| -v));
                }
            }),
        )
    }

    /// Hadamard product, same shapes.
    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        self.binary_same_shape(a, b, "mul");
        let value = self.value(a) * self.value(b);
        let grad = self.tracks_grad(a) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                if t.tracks_grad(a) {
                    sink.add(a, g * t.value(b));
                }
                if t.tracks_grad(b) {
                    sink.add(b, g * t.value(a));
                }
            }),
        )
    }

    /// `-a`.
    pub fn neg(&mut self, a: Var) -> Var {
        self.scale(a, -F::one())
    }

    /// `k * a` for a compile-time constant `k`.
    pub fn scale(&mut self, a: Var, k: F) -> Var {
        let value = self.value(a).mapv(|v| v * k);
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| sink.add(a, g.mapv(|v| v * k))),
        )
    }

    /// `a + k` for a constant `k`.
    pub fn add_const(&mut self, a: Var, k: F) -> Var {
        let value = self.value(a).mapv(|v| v + k);
        let grad = self.tracks_grad(a);
        self.push_op(value, grad, Box::new(move |_, g, sink| sink.add(a, g.clone())))
    }

    /// `max(a, 0)`.
    pub fn relu(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|v| if v > F::zero() { v } else { F::zero() });
        let grad = self.tracks_grad(a);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let mut dx = g.clone();
                dx.zip_mut_with(t.value(a), |d, &x| {
                    if x <= F::zero() {
                        *d = F::zero();
                    }
                });
                sink.add(a, dx);
            }),
        )
    }

    /// Logistic sigmoid.
    pub fn sigmoid(&mut self, a: Var) -> Var {
        let one = F::one();
        let value = self.value(a).mapv(|v| one / (one + (-v).exp()));
        let grad = self.tracks_grad(a);
        let saved = value.clone();
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| {
                let dx = ndarray::Zip::from(g)
                    .and(&saved)
                    .map_collect(|&gi, &yi| gi * yi * (one - yi));
                sink.add(a, dx);
            }),
        )
    }

    /// `exp(a)`.
    pub fn exp(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|v| v.exp());
        let grad = self.tracks_grad(a);
        let saved = value.clone();
        self.push_op(
            value,
            grad,
            Box::new(move |_, g, sink| sink.add(a, g * &saved)),
        )
    }

    /// `a^2`.
    pub fn square(&mut self, a: Var) -> Var {
        let value = self.value(a).mapv(|v| v * v);
        let grad = self.tracks_grad(a);
        let two = F::lit(2.0);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| sink.add(a, g * &t.value(a).mapv(|v| v * two))),
        )
    }

    /// Broadcast-multiplies `a` by a single-element node `s` (trainable
    /// scalars such as gains and thresholds).
    pub fn mul_scalar_node(&mut self, a: Var, s: Var) -> Var {
        debug_assert_eq!(self.value(s).len(), 1, "mul_scalar_node: s must be scalar");
        let sv = self.scalar(s);
        let value = self.value(a).mapv(|v| v * sv);
        let grad = self.tracks_grad(a) || self.tracks_grad(s);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                let sv = t.scalar(s);
                if t.tracks_grad(a) {
                    sink.add(a, g.mapv(|v| v * sv));
                }
                if t.tracks_grad(s) {
                    let dot = g
                        .iter()
                        .zip(t.value(a).iter())
                        .map(|(&gi, &ai)| gi * ai)
                        .sum::<F>();
                    sink.add(s, ArrayD::from_elem(t.value(s).raw_dim(), dot));
                }
            }),
        )
    }

    /// Adds per-channel bias `b: [C]` to `x: [B, C, H, W]`.
    pub fn add_bias4(&mut self, x: Var, b: Var) -> Var {
        let xs = self.value(x).shape().to_vec();
        debug_assert_eq!(xs.len(), 4, "add_bias4: x must be 4-D");
        debug_assert_eq!(self.value(b).len(), xs[1], "add_bias4: bias length");
        let bv = self.value(b).clone();
        let mut value = self.value(x).clone();
        {
            let mut v4 = value.view_mut().into_dimensionality::<ndarray::Ix4>().unwrap();
            for (c, &bc) in bv.iter().enumerate() {
                v4.index_axis_mut(ndarray::Axis(1), c).mapv_inplace(|v| v + bc);
            }
        }
        let grad = self.tracks_grad(x) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                if t.tracks_grad(x) {
                    sink.add(x, g.clone());
                }
                if t.tracks_grad(b) {
                    let g4 = g.view().into_dimensionality::<ndarray::Ix4>().unwrap();
                    let c = g4.shape()[1];
                    let mut db = ArrayD::zeros(ndarray::IxDyn(&[c]));
                    for ci in 0..c {
                        db[[ci]] = g4.index_axis(ndarray::Axis(1), ci).sum();
                    }
                    sink.add(b, db);
                }
            }),
        )
    }

    /// Adds row-wise bias `b: [D]` to `x: [N, D]`.
    pub fn add_bias2(&mut self, x: Var, b: Var) -> Var {
        let xs = self.value(x).shape().to_vec();
        debug_assert_eq!(xs.len(), 2, "add_bias2: x must be 2-D");
        debug_assert_eq!(self.value(b).len(), xs[1], "add_bias2: bias length");
        let x2 = self.value(x).view().into_dimensionality::<ndarray::Ix2>().unwrap();
        let b1 = self.value(b).view().into_dimensionality::<ndarray::Ix1>().unwrap();
        let value = (&x2 + &b1).into_dyn();
        let grad = self.tracks_grad(x) || self.tracks_grad(b);
        self.push_op(
            value,
            grad,
            Box::new(move |t, g, sink| {
                if t.tracks_grad(x) {
                    sink.add(x, g.clone());
                }
                if t.tracks_grad(b) {
                    let g2 = g.view().into_dimensionality::<ndarray::Ix2>().unwrap();
                    sink.add(b, g2.sum_axis(ndarray::Axis(0)).into_dyn());
                }
            }),
        )
    }
}
