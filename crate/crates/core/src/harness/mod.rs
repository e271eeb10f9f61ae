//! Evaluation harness: decoding, metrics, category reports, ablation
//! statistics, and deterministic SVG curves.

mod ablate;
mod infer;
pub mod metrics;
mod report;
mod stats;
pub mod svg;


pub use ablate::{ablate, render_curves_tsv, render_stats_tsv, AblationOutcome, Comparison, CurvePoint};
pub use infer::{build_bank, decode_split, EvalMode};
pub use metrics::{char_accuracy_1ned, char_accuracy_sample, levenshtein, line_accuracy, UNK_TOKEN};
pub use report::{categorize, evaluate, Category, CategoryReport, EvalReport};
pub use stats::{incomplete_beta, ln_gamma, paired_t, t_two_sided_p, PairedT};
