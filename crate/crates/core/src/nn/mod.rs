//! The recognizer network: dual-domain convolutional encoder, prototype
//! generation, detached temporal attention, open-set prototype classifier,
//! and the context-anchor encoder, assembled into [`Model`].
//!
//! Parameters live in a [`ParamStore`] outside any tape. A forward pass
//! first [`Model::bind`]s every entry onto a fresh tape (trainable entries
//! as gradient leaves, buffers as constants), then builds the graph through
//! the part structs, which only hold [`ParamId`]s. Batch-norm running
//! statistics are returned as [`StatUpdate`]s for the caller to apply after
//! the step, so a forward pass itself never mutates state.
//!
//! Gradient-isolation contracts implemented here:
//! - the temporal head consumes detached copies of the feature maps when
//!   `dta_detach` is on, so neither the length loss nor the attention map
//!   can reach backbone parameters;
//! - the gather step always treats the attention weights as constants, so
//!   classifier losses reach the backbone only through feature values;
//! - the context encoder reads the visual posterior `Y`, so its loss reaches
//!   the backbone exactly through that distribution (the explain-away path).

mod attention;
mod backbone;
mod bank;
mod classifier;
mod context;
mod init;
mod model;
mod protogen;
#[cfg(test)]
mod tests;

pub use attention::{gather_sequence, PlanVars, TemporalHead};
pub use backbone::{Backbone, FeatureBundle};
pub use bank::PrototypeBank;
pub use classifier::Classifier;
pub use context::{fuse_predictions, sinusoidal_posenc, ContextEncoder, FuseMode};
pub use model::{glyph_batch, sample_label_subset, stack_images, Binding, Model, SubsetPlan};
pub use protogen::ProtoGen;

use autograd::ParamId;
use autograd::Scalar;
use ndarray::ArrayD;

/// Normalization-statistics domain of a forward pass.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Domain {
    Word,
    Glyph,
}

impl Domain {
    pub fn index(self) -> usize {
        match self {
            Domain::Word => 0,
            Domain::Glyph => 1,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Domain::Word => "word",
            Domain::Glyph => "glyph",
        }
    }
}

/// A replacement value for a running-statistics buffer, produced during a
/// training-mode forward pass and applied to the store after the step.
pub struct StatUpdate<F: Scalar> {
    pub id: ParamId,
    pub value: ArrayD<F>,
}

/// Momentum for running-statistics buffers (standard practice).
pub const BN_MOMENTUM: f64 = 0.9;
/// Batch-norm epsilon.
pub const BN_EPS: f64 = 1e-5;
/// Layer-norm epsilon.
pub const LN_EPS: f64 = 1e-5;
/// Additive mask value for padded attention keys.
pub const NEG_INF_MASK: f64 = -1e9;
