//! Op vocabulary. Each op records its exact vector-Jacobian product.
//!
//! Conventions shared by every op:
//! - inputs and outputs are standard-layout `ArrayD`;
//! - an op's output node tracks gradient iff any differentiable parent does;
//! - backward closures read parent *values* from the tape (never stale
//!   copies) and capture only small auxiliary data (indices, saved columns).

mod conv;
mod elementwise;
mod linalg;
mod norm;
mod reduce;
mod shape;
mod softmax;
mod special;

use crate::Scalar;
use ndarray::ArrayD;

/// Re-owns an array in standard (C) layout.
pub(crate) fn to_std<F: Scalar>(a: ndarray::ArrayViewD<'_, F>) -> ArrayD<F> {
    if a.is_standard_layout() {
        a.to_owned()
    } else {
        a.as_standard_layout().into_owned()
    }
}
