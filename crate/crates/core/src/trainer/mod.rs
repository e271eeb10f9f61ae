//! Training: the three-term objective with its gradient-isolation
//! contracts, the AdaDelta loop, checkpoints, and the training log.
//!
//! The central mechanical claim lives here as the *gradient-block map*: with
//! detachment on, `L_len` never touches a backbone parameter, and neither
//! the visual nor the context loss ever touches an FPN parameter — while the
//! explain-away path (`L_ctx` → `Y` → visual stack) stays open. The tests
//! backward each loss term separately and assert the exact zero/nonzero
//! pattern block by block.

mod data;
mod fit;
mod step;
#[cfg(test)]
mod tests;

pub use data::{LoadedSplit, TrainSet};
pub use fit::{fit, FitOutcome, LogRow};
pub use step::{build_losses, objective, train_step, BuiltLosses, LossBundle};
