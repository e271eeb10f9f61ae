//! Reverse-mode automatic differentiation on dynamic-rank `ndarray` tensors.
//!
//! The crate provides exactly what the recognizer needs and nothing more:
//!
//! - a [`Tape`] (Wengert list) of immutable values with boxed backward
//!   closures, generic over [`Scalar`] (`f32` for training speed, `f64` for
//!   high-precision gradient checks);
//! - a fixed op vocabulary (elementwise, reductions, shape moves, matmul,
//!   conv2d, normalization, softmax/cross-entropy, and a few bespoke ops such
//!   as grouped max and cumulative sums) — each op carries its own exact VJP;
//! - [`ParamStore`]: named, grouped parameter storage that lives *outside*
//!   the tape, so a forward pass is side-effect free;
//! - an [`AdaDelta`] optimizer with optional global-norm clipping;
//! - finite-difference helpers for gradient verification.
//!
//! Design rules that the recognizer's contracts depend on:
//!
//! - `detach` copies a value onto the tape as a gradient-dead leaf; blocked
//!   gradients are therefore *exactly* zero, not merely small.
//! - No op mutates state: batch-norm training ops return their batch
//!   statistics to the caller instead of updating running buffers.
//! - All values are kept in standard (C) memory order so reshapes are
//!   well-defined.

mod grad_check;
mod optim;
mod param;
mod scalar;
mod tape;

pub mod ops;

pub use grad_check::{central_difference, relative_error};
pub use optim::AdaDelta;
pub use param::{ParamEntry, ParamId, ParamStore};
pub use scalar::Scalar;
pub use tape::{Gradients, Tape, Var};
