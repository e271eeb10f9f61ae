//! Floating-point scalar abstraction: `f32` for speed, `f64` for precision.

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Element type usable by the tape and every op.
///
/// `LinalgScalar` routes `Array2::dot` through the fast matmul kernels for
/// `f32`/`f64`; `Float` supplies elementary functions with exact-rounding
/// semantics that do not depend on the surrounding graph.
pub trait Scalar:
    LinalgScalar
    + ScalarOperand
    + Float
    + FromPrimitive
    + Sum<Self>
    + std::ops::AddAssign
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Container/dtype tag used by the model serializer.
    const DTYPE: &'static str;

    fn lit(v: f64) -> Self;
    fn to_f64(self) -> f64;
    /// Lossy count-to-scalar conversion (distinct name so it cannot shadow
    /// `FromPrimitive::from_usize`).
    fn from_count(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize fits in scalar")
    }
}

impl Scalar for f32 {
    const DTYPE: &'static str = "f32";

    fn lit(v: f64) -> Self {
        v as f32
    }
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const DTYPE: &'static str = "f64";

    fn lit(v: f64) -> Self {
        v
    }
    fn to_f64(self) -> f64 {
        self
    }
}
