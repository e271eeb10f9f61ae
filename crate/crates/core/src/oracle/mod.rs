//! Exactly enumerable discrete generative worlds and brute-force checks of
//! the probabilistic identities the recognizer's factorization relies on.
//!
//! A [`DiscreteWorld`] draws a context `c`, then `l` labels `y_t` from
//! per-timestamp conditionals, then `l` render symbols `x_t` from per-label
//! emissions. [`JointTable`] enumerates the full joint exactly; the checks
//! compare both sides of each identity computed *only* from that joint:
//!
//! - [`check_anchor_property`]: `P(y|x,l) = ∏_t Σ_c P(y_t|x_t,c)·P(c|x,l)` —
//!   exact when labels are conditionally independent given the context *and*
//!   the image pins down the context; satisfying worlds are therefore built
//!   with per-context blocks of labels and render symbols (a generic world
//!   with overlapping context supports breaks the identity: a product of
//!   mixtures is not a mixture of products).
//! - [`check_separability`]: `P(y_t|x_t,c) ∝_y P(y_t|x_t)·P(y_t|c)/P(y_t)` —
//!   exact on any world whose emissions do not depend on the context.
//! - [`check_dca_factorization`]: for fixed `x`, the ratio
//!   `P(y|x,l) / [∏_t P(y_t|x_t) · ∏_t Σ_c P(y_t|c)P(c|x,l)] · ∏_t P(y_t)`
//!   is constant across `y` (the absorbed character-frequency constant).
//!
//! Violated fixtures flip the respective assumption: prefix-dependent label
//! transitions (for the anchor check) or per-context emission tables (for
//! the other two) on worlds with overlapping supports, where the identities
//! fail by a wide, detectable margin.

mod checks;
mod joint;
mod world;

pub use checks::{
    beta_term, check_anchor_property, check_dca_factorization, check_separability, CheckResult,
};
pub use joint::JointTable;
pub use world::{build_world, DiscreteWorld, WorldKind, WorldSizes};
