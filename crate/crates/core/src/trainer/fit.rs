//! The training loop: learning-rate schedule, periodic validation and
//! checkpointing, the training log, and final container emission.

use crate::bytesio::sha256_bytes;
use crate::config::TrainConfig;
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::harness::{build_bank, decode_split, line_accuracy, EvalMode};
use crate::nn::Model;
use crate::trainer::{train_step, LossBundle, TrainSet};
use autograd::{AdaDelta, Scalar};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// One line of the training log.
#[derive(Debug, Clone)]
pub struct LogRow {
    /// Completed iterations (1-based).
    pub iter: u64,
    pub losses: LossBundle,
    pub lr: f64,
    /// Holdout Line Accuracy when this iteration hit the validation cadence.
    pub val_la: Option<f64>,
}

/// What `fit` leaves on disk plus the in-memory log.
pub struct FitOutcome {
    pub model_path: PathBuf,
    pub log_path: PathBuf,
    pub checkpoint_paths: Vec<PathBuf>,
    pub log: Vec<LogRow>,
}

/// Trains a model on the corpus at `data_dir`, writing into `out_dir`:
/// `config.txt` (the canonical echo), `train_log.tsv`, cadence checkpoints,
/// and the final `model.bin`. `resume` continues from a checkpoint written
/// by an earlier run of the same config over the same corpus.
pub fn fit<F: Scalar>(
    cfg: &TrainConfig,
    data_dir: &Path,
    out_dir: &Path,
    resume: Option<&Path>,
) -> Result<FitOutcome> {
    cfg.validate()?;
    let ds = Dataset::load(data_dir)?;
    let alphabet_path = data_dir.join("alphabet.bin");
    let alphabet_bytes = std::fs::read(&alphabet_path).map_err(|e| Error::io(&alphabet_path, e))?;
    let alphabet_hash = sha256_bytes(&alphabet_bytes);

    let (mut model, mut opt, start_iter) = match resume {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
            let (model, opt, next_iter) = Model::<F>::from_checkpoint_bytes(&bytes)?;
            if model.cfg.to_text() != cfg.to_text() {
                return Err(Error::Config(
                    "resume checkpoint was trained under a different config".into(),
                ));
            }
            (model, opt, next_iter)
        }
        None => {
            let model = Model::<F>::new(cfg, ds.train_label_set(), alphabet_hash)?;
            let clip = if cfg.clip_norm > 0.0 { Some(F::lit(cfg.clip_norm)) } else { None };
            let opt = AdaDelta::new(
                &model.store,
                F::lit(cfg.rho),
                F::lit(cfg.eps),
                F::lit(cfg.lr),
                clip,
            );
            (model, opt, 0u64)
        }
    };
    if model.alphabet_hash != alphabet_hash {
        return Err(Error::BankMismatch(
            "model was trained against a different alphabet container".into(),
        ));
    }
    if model.labels != ds.train_label_set() {
        return Err(Error::Config("model label set does not match the train split".into()));
    }

    let set = TrainSet::build(&ds, cfg.val_holdout)?;
    if (set.train.height, set.train.width) != (cfg.model.image_height, cfg.model.image_width) {
        return Err(Error::Config(format!(
            "corpus images are {}x{}, config expects {}x{}",
            set.train.width, set.train.height, cfg.model.image_width, cfg.model.image_height
        )));
    }

    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let config_path = out_dir.join("config.txt");
    std::fs::write(&config_path, cfg.to_text()).map_err(|e| Error::io(&config_path, e))?;

    let decay_at = cfg.effective_decay_iter() as u64;
    let total_iters = cfg.iters as u64;
    let mut log: Vec<LogRow> = Vec::with_capacity(cfg.iters.saturating_sub(start_iter as usize));
    let mut checkpoint_paths = Vec::new();
    let mut warned_clamp = false;

    for iter in start_iter..total_iters {
        opt.lr =
            F::lit(if iter >= decay_at { cfg.lr * cfg.decay_factor } else { cfg.lr });
        let (losses, clamped) = train_step(&mut model, &mut opt, &set, &ds.glyphs, iter)?;
        if clamped && !warned_clamp {
            eprintln!(
                "[train] note: fewer than {} negative labels available; subset clamped",
                cfg.negatives
            );
            warned_clamp = true;
        }

        let done = iter + 1;
        let val_la = if cfg.val_every > 0 && done % cfg.val_every as u64 == 0
            && !set.holdout.is_empty()
        {
            let bank = build_bank(&model, &ds.glyphs, &model.labels)?;
            let preds =
                decode_split(&model, &bank, &set.holdout, EvalMode::Open, cfg.batch_size)?;
            Some(line_accuracy(&preds, &set.holdout.labels))
        } else {
            None
        };

        if done % 100 == 0 || done == total_iters {
            let val = val_la.map(|v| format!(" val_la={v:.4}")).unwrap_or_default();
            println!(
                "[train] iter {done}/{total_iters} len={:.4} vis={:.4} ctx={:.4} lr={}{val}",
                losses.len,
                losses.vis,
                losses.ctx,
                opt.lr
            );
        }

        log.push(LogRow { iter: done, losses, lr: opt.lr.to_f64(), val_la });

        if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every as u64 == 0 {
            let path = out_dir.join(format!("checkpoint_{done:06}.bin"));
            std::fs::write(&path, model.checkpoint_bytes(&opt, done))
                .map_err(|e| Error::io(&path, e))?;
            checkpoint_paths.push(path);
        }
    }

    let model_path = out_dir.join("model.bin");
    model.save(&model_path)?;
    let log_path = out_dir.join("train_log.tsv");
    std::fs::write(&log_path, render_log(&log)).map_err(|e| Error::io(&log_path, e))?;

    Ok(FitOutcome { model_path, log_path, checkpoint_paths, log })
}

fn render_log(rows: &[LogRow]) -> String {
    let mut out = String::from("iter\tl_len\tl_vis\tl_ctx\ttotal\tlr\tval_la\n");
    for row in rows {
        let val = row.val_la.map(|v| format!("{v:.6}")).unwrap_or_default();
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}",
            row.iter,
            row.losses.len,
            row.losses.vis,
            row.losses.ctx,
            row.losses.total(),
            row.lr,
            val
        );
    }
    out
}
