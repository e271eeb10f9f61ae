use super::*;
use crate::config::{AblationMode, CorpusConfig, TrainConfig};
use crate::corpus::{generate_corpus, Dataset, Split};
use crate::nn::Model;
use autograd::{AdaDelta, Scalar, Tape};
use ndarray::ArrayD;
use std::path::PathBuf;

/// Generates (or reuses) a small corpus under the system temp dir.
fn tiny_corpus(name: &str) -> (PathBuf, Dataset) {
    let dir = std::env::temp_dir().join(format!("occd-trainer-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    let cfg = tiny_corpus_cfg();
    generate_corpus(&cfg, &dir).unwrap();
    let ds = Dataset::load(&dir).unwrap();
    (dir, ds)
}

fn tiny_corpus_cfg() -> CorpusConfig {
    CorpusConfig {
        seed: 71,
        alphabet_size: 12,
        cases_per_label: 1,
        glyph_size: 16,
        embed_dim: 8,
        distinctness: 0.1,
        image_height: 24,
        image_width: 96,
        min_len: 1,
        max_len: 4,
        seen_fraction: 0.75,
        bigram_skew: 4.0,
        train_count: 48,
        test_seen_count: 4,
        test_novel_count: 4,
        test_mixed_count: 4,
        render_noise: 0.03,
        jitter: 1,
        ..CorpusConfig::default()
    }
}

fn tiny_train_cfg(seed: u64) -> TrainConfig {
    let mut c = TrainConfig::default();
    c.seed = seed;
    c.model.channels = vec![3, 4, 6];
    c.model.strides = vec![1, 2, 4];
    c.model.stage_convs = 1;
    // Deliberately != channels.last(): the context width is independent of
    // the feature dimension D.
    c.model.embed_dim = 4;
    c.model.max_len = 4;
    c.model.image_height = 24;
    c.model.image_width = 96;
    c.model.ctx_layers = 2;
    c.model.ctx_heads = 2;
    c.lr = 1.0;
    c.batch_size = 8;
    c.iters = 30;
    c.negatives = 3;
    c.val_every = 0;
    c.checkpoint_every = 0;
    c.val_holdout = 8;
    c.validate().unwrap();
    c
}

fn fresh_model<F: Scalar>(cfg: &TrainConfig, ds: &Dataset) -> (Model<F>, AdaDelta<F>) {
    let model = Model::<F>::new(cfg, ds.train_label_set(), [7u8; 32]).unwrap();
    let clip = if cfg.clip_norm > 0.0 { Some(F::lit(cfg.clip_norm)) } else { None };
    let opt =
        AdaDelta::new(&model.store, F::lit(cfg.rho), F::lit(cfg.eps), F::lit(cfg.lr), clip);
    (model, opt)
}

/// `Some(group → has a nonzero gradient)` per trainable parameter group.
fn group_grad_map<F: Scalar>(
    tape: &Tape<F>,
    model: &Model<F>,
    built: &BuiltLosses<F>,
    loss: autograd::Var,
) -> std::collections::BTreeMap<String, bool> {
    let mut grads = tape.backward(loss);
    let vec = model.collect_grads(&mut grads, &built.bind);
    let mut map: std::collections::BTreeMap<String, bool> = Default::default();
    for ((_, entry), g) in model.store.iter().zip(vec.iter()) {
        if !entry.trainable {
            continue;
        }
        let nonzero = match g {
            None => false,
            Some(arr) => arr.iter().any(|&v| v != F::zero()),
        };
        *map.entry(entry.group.clone()).or_insert(false) |= nonzero;
    }
    map
}

fn expect_map(map: &std::collections::BTreeMap<String, bool>, expect: &[(&str, bool)]) {
    for &(group, want) in expect {
        assert_eq!(
            map.get(group).copied().unwrap_or(false),
            want,
            "group `{group}`: expected nonzero={want}, map {map:?}"
        );
    }
}

#[test]
fn gradient_block_map_matches_contract() {
    let (_dir, ds) = tiny_corpus("gradmap");
    let cfg = tiny_train_cfg(5);
    let (mut model, mut opt) = fresh_model::<f64>(&cfg, &ds);
    let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();

    // The map must hold at every step, not just at init: check on a few
    // real optimization states.
    for iter in 0..3u64 {
        let mut tape = Tape::new();
        let built = build_losses(&mut tape, &model, &set, &ds.glyphs, iter, false).unwrap();

        let len_map = group_grad_map(&tape, &model, &built, built.l_len);
        expect_map(
            &len_map,
            &[
                ("backbone", false),
                ("fpn", true),
                ("proto", false),
                ("classifier", false),
                ("context", false),
            ],
        );

        let vis_map = group_grad_map(&tape, &model, &built, built.l_vis);
        expect_map(
            &vis_map,
            &[
                ("backbone", true),
                ("fpn", false),
                ("proto", true),
                ("classifier", true),
                ("context", false),
            ],
        );

        let ctx_map = group_grad_map(&tape, &model, &built, built.l_ctx.unwrap());
        expect_map(
            &ctx_map,
            &[
                ("backbone", true), // the explain-away path through Y
                ("fpn", false),
                ("proto", true),
                ("classifier", false),
                ("context", true),
            ],
        );

        let ent_map = group_grad_map(&tape, &model, &built, built.entropy.unwrap());
        expect_map(
            &ent_map,
            &[
                ("backbone", false),
                ("fpn", true),
                ("proto", false),
                ("classifier", false),
                ("context", false),
            ],
        );

        train_step(&mut model, &mut opt, &set, &ds.glyphs, iter).unwrap();
    }
}

#[test]
fn detaching_y_severs_the_explain_away_path() {
    let (_dir, ds) = tiny_corpus("detachy");
    let cfg = tiny_train_cfg(6);
    let (model, _) = fresh_model::<f64>(&cfg, &ds);
    let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();

    let mut tape = Tape::new();
    let built = build_losses(&mut tape, &model, &set, &ds.glyphs, 0, true).unwrap();
    let ctx_map = group_grad_map(&tape, &model, &built, built.l_ctx.unwrap());
    expect_map(
        &ctx_map,
        &[("backbone", false), ("fpn", false), ("proto", false), ("context", true)],
    );
}

#[test]
fn disabling_detachment_routes_length_loss_into_backbone() {
    let (_dir, ds) = tiny_corpus("nodetach");
    let mut cfg = tiny_train_cfg(7);
    cfg.model.dta_detach = false;
    let (model, _) = fresh_model::<f64>(&cfg, &ds);
    let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();

    let mut tape = Tape::new();
    let built = build_losses(&mut tape, &model, &set, &ds.glyphs, 0, false).unwrap();
    let len_map = group_grad_map(&tape, &model, &built, built.l_len);
    expect_map(&len_map, &[("backbone", true), ("fpn", true)]);
}

#[test]
fn loss_bundle_total_is_the_exact_sum() {
    let b = LossBundle { len: 1.5, vis: 2.25, ctx: 0.75 };
    assert_eq!(b.total(), 4.5);
    let zero = LossBundle { len: 0.0, vis: 0.0, ctx: 0.0 };
    assert_eq!(zero.total(), 0.0);
}

/// Uniform logits over M+1 classes → L_vis = l*·ln(M+1) (per-sample sums,
/// batch-averaged), and certainty with the correct length → total ≈ 0.
#[test]
fn cross_entropy_values_match_closed_forms() {
    let mut tape = Tape::<f64>::new();
    // Two samples, t_max = 3, lengths 3 and 2, nine classes (M = 8 + UNK).
    let logits = tape.constant(ArrayD::zeros(ndarray::IxDyn(&[6, 9])));
    let targets = [0usize, 3, 5, 1, 2, 0];
    let mask = [1.0, 1.0, 1.0, 1.0, 1.0, 0.0];
    let l_vis = tape.masked_ce(logits, &targets, &mask, 0.5);
    // (3 + 2)·ln 9 / 2 = 5.49306144334054845697...
    assert!((tape.scalar(l_vis) - 5.493061443340548).abs() < 1e-12);

    // Near-one-hot logits at the targets (margin 60) → loss ≈ 0.
    let mut sharp = ArrayD::zeros(ndarray::IxDyn(&[6, 9]));
    for (r, &t) in targets.iter().enumerate() {
        sharp[[r, t]] = 60.0;
    }
    let sharp_logits = tape.constant(sharp);
    let l_sharp = tape.masked_ce(sharp_logits, &targets, &mask, 0.5);
    assert!(tape.scalar(l_sharp).abs() < 1e-12);
}

#[test]
fn overfit_probe_drops_total_loss_by_ninety_percent() {
    let corpus_cfg = CorpusConfig {
        seed: 401,
        alphabet_size: 8,
        min_len: 1,
        max_len: 2,
        seen_fraction: 0.8,
        train_count: 32,
        render_noise: 0.0,
        jitter: 0,
        ..tiny_corpus_cfg()
    };
    let dir = std::env::temp_dir().join("occd-trainer-overfit");
    let _ = std::fs::remove_dir_all(&dir);
    generate_corpus(&corpus_cfg, &dir).unwrap();
    let ds = Dataset::load(&dir).unwrap();

    let mut cfg = tiny_train_cfg(8);
    cfg.model.channels = vec![4, 6, 8];
    cfg.model.embed_dim = 8;
    cfg.model.max_len = 2;
    cfg.lr = 2.0;
    cfg.batch_size = 16;
    cfg.val_holdout = 0; // memorization set: all 32 samples
    let (mut model, mut opt) = fresh_model::<f32>(&cfg, &ds);
    let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();
    assert_eq!(set.train.len(), 32);

    let (first, _) = train_step(&mut model, &mut opt, &set, &ds.glyphs, 0).unwrap();
    let mut last = first;
    for iter in 1..200u64 {
        let (bundle, _) = train_step(&mut model, &mut opt, &set, &ds.glyphs, iter).unwrap();
        if iter % 20 == 0 {
            println!(
                "iter {iter}: len={:.4} vis={:.4} ctx={:.4} total={:.4}",
                bundle.len,
                bundle.vis,
                bundle.ctx,
                bundle.total()
            );
        }
        last = bundle;
    }
    assert!(
        last.total() <= 0.1 * first.total(),
        "200-step overfit probe: first total {} → last total {}",
        first.total(),
        last.total()
    );
}

#[test]
fn same_seed_runs_are_bit_identical() {
    let (_dir, ds) = tiny_corpus("determinism");
    let cfg = tiny_train_cfg(9);
    let run = || {
        let (mut model, mut opt) = fresh_model::<f32>(&cfg, &ds);
        let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();
        let mut history = Vec::new();
        for iter in 0..20u64 {
            let (bundle, _) = train_step(&mut model, &mut opt, &set, &ds.glyphs, iter).unwrap();
            history.push(bundle);
        }
        (history, model.to_bytes())
    };
    let (h1, bytes1) = run();
    let (h2, bytes2) = run();
    assert_eq!(h1, h2, "loss trajectories must match exactly");
    assert_eq!(bytes1, bytes2, "final containers must be byte-identical");
}

/// dca=true with ctx_weight=0 must reproduce the dta ablation bit for bit on
/// every shared parameter and loss value.
#[test]
fn zero_weight_context_matches_dta_ablation_bitwise() {
    let (_dir, ds) = tiny_corpus("dcazero");
    let mut cfg_a = tiny_train_cfg(10);
    cfg_a.ctx_weight = 0.0; // dca stays on: module registered, never run
    let mut cfg_b = tiny_train_cfg(10);
    cfg_b.apply_ablation(AblationMode::Dta);
    assert!(cfg_a.model.dca && !cfg_b.model.dca);

    let run = |cfg: &TrainConfig| {
        let (mut model, mut opt) = fresh_model::<f32>(cfg, &ds);
        let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();
        let mut history = Vec::new();
        for iter in 0..15u64 {
            let (bundle, _) = train_step(&mut model, &mut opt, &set, &ds.glyphs, iter).unwrap();
            history.push(bundle);
        }
        (history, model)
    };
    let (ha, model_a) = run(&cfg_a);
    let (hb, model_b) = run(&cfg_b);
    assert_eq!(ha, hb, "loss trajectories diverged");
    for (id_b, entry_b) in model_b.store.iter() {
        let id_a = model_a.store.lookup(&entry_b.name).expect("shared parameter");
        assert_eq!(
            model_a.store.value(id_a),
            model_b.store.value(id_b),
            "parameter {} diverged",
            entry_b.name
        );
        let _ = id_a;
    }
    // The context parameters exist in A but stayed at their initialization.
    assert!(model_a.store.lookup("ctx.e_c").is_some());
    assert!(model_b.store.lookup("ctx.e_c").is_none());
}

#[test]
fn checkpoint_resume_reproduces_the_next_step_exactly() {
    let (_dir, ds) = tiny_corpus("resume");
    let cfg = tiny_train_cfg(11);
    let (mut model, mut opt) = fresh_model::<f32>(&cfg, &ds);
    let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();
    for iter in 0..10u64 {
        train_step(&mut model, &mut opt, &set, &ds.glyphs, iter).unwrap();
    }
    let snapshot = model.checkpoint_bytes(&opt, 10);
    let (mut resumed, mut opt2, next) = Model::<f32>::from_checkpoint_bytes(&snapshot).unwrap();
    assert_eq!(next, 10);

    for iter in 10..14u64 {
        let (a, _) = train_step(&mut model, &mut opt, &set, &ds.glyphs, iter).unwrap();
        let (b, _) = train_step(&mut resumed, &mut opt2, &set, &ds.glyphs, iter).unwrap();
        assert_eq!(a, b, "diverged at iteration {iter}");
    }
    assert_eq!(model.to_bytes(), resumed.to_bytes());
}

#[test]
fn non_finite_loss_aborts_with_diagnostic() {
    let (_dir, ds) = tiny_corpus("nanabort");
    let cfg = tiny_train_cfg(12);
    let (mut model, mut opt) = fresh_model::<f32>(&cfg, &ds);
    let set = TrainSet::build(&ds, cfg.val_holdout).unwrap();
    // Poison a parameter the loss reads directly (conv-path NaNs would be
    // absorbed by relu's max-with-zero).
    let id = model.store.lookup("classifier.alpha").unwrap();
    model.store.value_mut(id)[[0]] = f32::NAN;
    let err = train_step(&mut model, &mut opt, &set, &ds.glyphs, 0).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("non-finite loss at iteration 0"), "got: {msg}");
}

#[test]
fn training_label_outside_model_alphabet_is_a_hard_error() {
    let (_dir, ds) = tiny_corpus("badlabel");
    let cfg = tiny_train_cfg(13);
    let (model, _) = fresh_model::<f64>(&cfg, &ds);
    let mut set = TrainSet::build(&ds, cfg.val_holdout).unwrap();
    // Forge a label id the model has never seen.
    set.train.labels[0] = vec![999];
    // Find an iteration whose batch includes sample 0 — batch draws are
    // uniform over 40 samples, so a handful of tries suffices.
    let mut hit = false;
    for iter in 0..64u64 {
        let mut tape = Tape::<f64>::new();
        match build_losses(&mut tape, &model, &set, &ds.glyphs, iter, false) {
            Ok(_) => continue,
            Err(e) => {
                assert!(e.to_string().contains("outside the model alphabet"), "{e}");
                hit = true;
                break;
            }
        }
    }
    assert!(hit, "no batch sampled the forged label");
}

#[test]
fn train_set_holds_out_the_manifest_tail() {
    let (_dir, ds) = tiny_corpus("holdout");
    let set = TrainSet::build(&ds, 8).unwrap();
    assert_eq!(set.train.len(), 40);
    assert_eq!(set.holdout.len(), 8);
    let train_rows = ds.rows_for(Split::Train);
    let expect_tail: Vec<u64> = train_rows[40..].iter().map(|r| r.id).collect();
    assert_eq!(set.holdout.ids, expect_tail);
    assert!(TrainSet::build(&ds, 48).is_err(), "holdout must leave training samples");

    // The cached batches reproduce the loader's pixel values bit for bit.
    let img = ds.image(train_rows[3]).unwrap();
    let batch = set.train.batch_images::<f32>(&[3]);
    for ((y, x), &v) in img.indexed_iter() {
        assert_eq!(batch[[0, 0, y, x]], v);
    }
}

#[test]
fn fit_emits_containers_logs_and_checkpoints() {
    let (dir, ds) = tiny_corpus("fitsmoke");
    let mut cfg = tiny_train_cfg(14);
    cfg.iters = 12;
    cfg.val_every = 6;
    cfg.checkpoint_every = 5;
    let out = std::env::temp_dir().join("occd-trainer-fitsmoke-out");
    let _ = std::fs::remove_dir_all(&out);

    let outcome = fit::<f32>(&cfg, &dir, &out, None).unwrap();
    assert_eq!(outcome.log.len(), 12);
    assert_eq!(outcome.checkpoint_paths.len(), 2); // iters 5 and 10
    assert!(outcome.log[5].val_la.is_some() && outcome.log[11].val_la.is_some());
    assert!(outcome.log[4].val_la.is_none());

    // The trained container is loadable and consistent with the corpus.
    let model = Model::<f32>::load(&outcome.model_path).unwrap();
    assert_eq!(model.labels, ds.train_label_set());
    assert_eq!(model.cfg.to_text(), cfg.to_text());
    let echo = std::fs::read_to_string(out.join("config.txt")).unwrap();
    assert_eq!(echo, cfg.to_text());

    let log_text = std::fs::read_to_string(&outcome.log_path).unwrap();
    let lines: Vec<&str> = log_text.lines().collect();
    assert_eq!(lines.len(), 13, "header plus one row per iteration");
    assert!(lines[0].starts_with("iter\tl_len\tl_vis\tl_ctx\ttotal\tlr"));

    // Resuming the emitted checkpoint replays the remaining iterations to
    // the same final parameters.
    let resumed_out = std::env::temp_dir().join("occd-trainer-fitsmoke-resumed");
    let _ = std::fs::remove_dir_all(&resumed_out);
    let resumed =
        fit::<f32>(&cfg, &dir, &resumed_out, Some(&outcome.checkpoint_paths[1])).unwrap();
    assert_eq!(resumed.log.len(), 2); // iterations 11 and 12
    let a = Model::<f32>::load(&outcome.model_path).unwrap();
    let b = Model::<f32>::load(&resumed.model_path).unwrap();
    assert_eq!(a.to_bytes(), b.to_bytes());

    let _ = std::fs::remove_dir_all(&out);
    let _ = std::fs::remove_dir_all(&resumed_out);
}

#[test]
fn ablation_presets_produce_distinct_config_hashes() {
    let mut base = tiny_train_cfg(15);
    base.apply_ablation(AblationMode::Base);
    let mut dta = tiny_train_cfg(15);
    dta.apply_ablation(AblationMode::Dta);
    let mut full = tiny_train_cfg(15);
    full.apply_ablation(AblationMode::Full);

    let hb = crate::bytesio::sha256_hex(base.to_text().as_bytes());
    let hd = crate::bytesio::sha256_hex(dta.to_text().as_bytes());
    let hf = crate::bytesio::sha256_hex(full.to_text().as_bytes());
    assert_ne!(hb, hd);
    assert_ne!(hd, hf);
    assert_ne!(hb, hf);
}
