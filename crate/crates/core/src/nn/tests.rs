//! Unit tests of the network parts: shapes forced by stride configs,
//! sharing/isolation contracts, the Eq. 10 classifier examples, context
//! scoring and fusion arithmetic, subset sampling, and container
//! round-trips.

use super::*;
use crate::config::TrainConfig;
use autograd::{AdaDelta, Scalar, Tape};
use ndarray::{Array2, ArrayD, IxDyn};

fn tiny_config() -> TrainConfig {
    let mut c = TrainConfig::default();
    c.model.channels = vec![2, 3, 4];
    c.model.strides = vec![1, 2, 4];
    c.model.stage_convs = 1;
    c.model.embed_dim = 8;
    c.model.ctx_layers = 2;
    c.model.ctx_heads = 2;
    c.model.max_len = 4;
    c.model.image_height = 32;
    c.model.image_width = 128;
    c.seed = 11;
    c
}

fn tiny_model() -> Model<f64> {
    Model::new(&tiny_config(), vec![2, 5, 9, 10, 14], [7u8; 32]).unwrap()
}

fn rand_batch(shape: &[usize], seed: u64) -> ArrayD<f64> {
    let mut rng = crate::rng::stream(seed, "test.batch");
    let mut out = ArrayD::<f64>::zeros(IxDyn(shape));
    for v in out.iter_mut() {
        *v = rand::Rng::gen_range(&mut rng, 0.0..1.0);
    }
    out
}

#[test]
fn word_and_glyph_shapes_follow_stride_config() {
    // Final stride 4: 32×128 → 8×32 and 32×32 → 8×8.
    let model = tiny_model();
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let words = tape.constant(rand_batch(&[2, 1, 32, 128], 1));
    let (fb, _) = model.backbone.forward(&mut tape, &bind, words, Domain::Word, false);
    assert_eq!(tape.value(fb.f_l).shape(), &[2, 2, 32, 128]);
    assert_eq!(tape.value(fb.f_m).shape(), &[2, 3, 16, 64]);
    assert_eq!(tape.value(fb.f_h).shape(), &[2, 4, 8, 32]);
    let glyphs = tape.constant(rand_batch(&[3, 1, 32, 32], 2));
    let (fg, _) = model.backbone.forward(&mut tape, &bind, glyphs, Domain::Glyph, false);
    assert_eq!(tape.value(fg.f_h).shape(), &[3, 4, 8, 8]);
}

#[test]
fn eval_forward_is_deterministic_and_pixel_sensitive() {
    let model = tiny_model();
    let x = rand_batch(&[1, 1, 32, 128], 3);
    let run = |input: &ArrayD<f64>| {
        let mut tape = Tape::<f64>::new();
        let bind = model.bind(&mut tape);
        let v = tape.constant(input.clone());
        let (fb, upd) = model.backbone.forward(&mut tape, &bind, v, Domain::Word, false);
        assert!(upd.is_empty(), "eval mode must not propose stat updates");
        tape.value(fb.f_h).clone()
    };
    assert_eq!(run(&x), run(&x));
    let mut x2 = x.clone();
    x2[[0, 0, 16, 64]] += 0.5;
    assert_ne!(run(&x), run(&x2), "receptive field must reach a center pixel");
}

#[test]
fn word_training_pass_only_touches_word_statistics() {
    let mut model = tiny_model();
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let words = tape.constant(rand_batch(&[2, 1, 32, 128], 4));
    let (_, updates) = model.backbone.forward(&mut tape, &bind, words, Domain::Word, true);
    assert!(!updates.is_empty());
    for u in &updates {
        let name = &model.store.entry(u.id).name;
        assert!(name.contains(".word."), "update touched {name}");
    }
    // Applying them changes word buffers only; glyph buffers stay at init.
    model.apply_updates(updates);
    for (_, e) in model.store.iter() {
        if e.name.contains(".glyph.") && e.name.ends_with(".rmean") {
            assert!(e.value.iter().all(|&v| v == 0.0), "glyph stats mutated");
        }
    }
}

#[test]
fn kernels_are_single_storage_shared_across_domains() {
    let model = tiny_model();
    // There is exactly one kernel tensor per conv (no per-domain copies),
    // while normalization parameters exist per domain.
    assert!(model.store.lookup("backbone.s0.c0.w").is_some());
    assert!(model.store.lookup("backbone.s0.c0.bn.word.gamma").is_some());
    assert!(model.store.lookup("backbone.s0.c0.bn.glyph.gamma").is_some());
    for (_, e) in model.store.iter() {
        if e.name.ends_with(".w") && e.name.starts_with("backbone.") {
            assert!(!e.name.contains("word") && !e.name.contains("glyph"));
        }
    }
    // Both domain passes read the same kernel leaf: perturbing it changes
    // both outputs.
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let w = tape.constant(rand_batch(&[1, 1, 32, 32], 5));
    let (fw, _) = model.backbone.forward(&mut tape, &bind, w, Domain::Word, false);
    let (fg, _) = model.backbone.forward(&mut tape, &bind, w, Domain::Glyph, false);
    let sw = tape.sum_all(fw.f_h);
    let sg = tape.sum_all(fg.f_h);
    let total = tape.add(sw, sg);
    let mut grads = tape.backward(total);
    let kid = model.store.lookup("backbone.s0.c0.w").unwrap();
    let g = grads.take(bind.var(kid)).expect("shared kernel receives gradient from both paths");
    assert!(g.iter().any(|&v| v != 0.0));
}

#[test]
fn prototypes_are_unit_norm_deterministic_and_gap_under_uniform_attention() {
    let mut model = tiny_model();
    // Zero the attention map parameters → uniform spatial softmax → the
    // prototype must equal the normalized global average of features.
    let wid = model.store.lookup("proto.attn.w").unwrap();
    model.store.value_mut(wid).fill(0.0);
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let one = rand_batch(&[1, 1, 32, 32], 6);
    let mut two = ArrayD::<f64>::zeros(IxDyn(&[2, 1, 32, 32]));
    for b in 0..2 {
        for y in 0..32 {
            for x in 0..32 {
                two[[b, 0, y, x]] = one[[0, 0, y, x]];
            }
        }
    }
    let g = tape.constant(two);
    let (fg, _) = model.backbone.forward(&mut tape, &bind, g, Domain::Glyph, false);
    let rows = model.protogen.generate(&mut tape, &bind, fg.f_h);
    let rv = tape.value(rows).clone();
    assert_eq!(rv.shape(), &[2, 4]);
    for r in 0..2 {
        let norm: f64 = (0..4).map(|c| rv[[r, c]] * rv[[r, c]]).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-9, "row norm {norm}");
    }
    for c in 0..4 {
        assert_eq!(rv[[0, c]], rv[[1, c]], "identical glyphs → identical prototypes");
    }
    // Compare against explicit GAP + normalize.
    let gap = tape.mean_hw(fg.f_h);
    let gap_n = tape.l2norm_rows(gap);
    let gv = tape.value(gap_n);
    for c in 0..4 {
        assert!((rv[[0, c]] - gv[[0, c]]).abs() < 1e-9);
    }
}

#[test]
fn plan_emits_normalized_slices_and_valid_length_distribution() {
    let model = tiny_model();
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let words = tape.constant(rand_batch(&[2, 1, 32, 128], 7));
    let (fb, _) = model.backbone.forward(&mut tape, &bind, words, Domain::Word, false);
    let plan = model.head.plan(&mut tape, &bind, &fb, &model.cfg.model, Some(&[3, 1]), 0.0);
    assert_eq!(plan.lengths, vec![3, 1]);
    let a = tape.value(plan.attn);
    assert_eq!(a.shape(), &[2, 4, 8 * 32]);
    for b in 0..2 {
        for t in 0..4 {
            let s: f64 = (0..8 * 32).map(|i| a[[b, t, i]]).sum();
            assert!((s - 1.0).abs() < 1e-6, "slice ({b},{t}) sums to {s}");
            assert!((0..8 * 32).all(|i| a[[b, t, i]] >= 0.0));
        }
    }
    let ld = tape.softmax_last(plan.len_logits);
    let lv = tape.value(ld);
    for b in 0..2 {
        let s: f64 = (0..4).map(|i| lv[[b, i]]).sum();
        assert!((s - 1.0).abs() < 1e-6);
    }
    // Without a teacher, lengths are the argmax of the logits.
    let plan2 = model.head.plan(&mut tape, &bind, &fb, &model.cfg.model, None, 0.0);
    let ll = tape.value(plan2.len_logits);
    for b in 0..2 {
        let mut best = 0;
        for c in 1..4 {
            if ll[[b, c]] > ll[[b, best]] {
                best = c;
            }
        }
        assert_eq!(plan2.lengths[b], best + 1);
        assert!(plan2.lengths[b] >= 1 && plan2.lengths[b] <= 4);
    }
}

#[test]
fn detachment_contracts_length_head_and_gather() {
    let model = tiny_model();
    let backbone_ids = model.store.group_ids("backbone");
    let fpn_ids = model.store.group_ids("fpn");

    // (a) dta_detach on: the length loss reaches no backbone parameter,
    // but does reach FPN parameters.
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let words = tape.constant(rand_batch(&[2, 1, 32, 128], 8));
    let (fb, _) = model.backbone.forward(&mut tape, &bind, words, Domain::Word, true);
    let plan = model.head.plan(&mut tape, &bind, &fb, &model.cfg.model, Some(&[2, 2]), 0.01);
    let len_loss = tape.masked_ce(plan.len_logits, &[1, 1], &[1.0, 1.0], 0.5);
    let grads = tape.backward(len_loss);
    for &id in &backbone_ids {
        assert!(grads.get(bind.var(id)).is_none(), "len loss leaked into backbone");
    }
    assert!(
        fpn_ids.iter().any(|&id| grads.get(bind.var(id)).is_some()),
        "len loss must train the FPN"
    );

    // (b) the entropy regularizer trains the presence field but not the
    // backbone.
    let ent = plan.entropy.expect("entropy requested");
    let mut g2 = tape.backward(ent);
    for &id in &backbone_ids {
        assert!(g2.get(bind.var(id)).is_none(), "entropy leaked into backbone");
    }
    let pw = model.store.lookup("fpn.presence.w").unwrap();
    assert!(g2.take(bind.var(pw)).is_some(), "entropy must reach the presence conv");

    // (c) gather detaches A: a loss on gathered features reaches the
    // backbone (through values) but never the FPN.
    let x = gather_sequence(&mut tape, fb.f_h, plan.attn, 2);
    let xs = tape.sum_all(x);
    let g3 = tape.backward(xs);
    assert!(
        backbone_ids.iter().any(|&id| g3.get(bind.var(id)).is_some()),
        "features must train the backbone"
    );
    for &id in &fpn_ids {
        assert!(g3.get(bind.var(id)).is_none(), "gather leaked into the FPN");
    }

    // (d) dta_detach off: the length loss now reaches the backbone.
    let mut cfg2 = tiny_config();
    cfg2.model.dta_detach = false;
    let model2 = Model::<f64>::new(&cfg2, vec![1, 2, 3], [0u8; 32]).unwrap();
    let mut tape2 = Tape::<f64>::new();
    let bind2 = model2.bind(&mut tape2);
    let words2 = tape2.constant(rand_batch(&[1, 1, 32, 128], 9));
    let (fb2, _) = model2.backbone.forward(&mut tape2, &bind2, words2, Domain::Word, true);
    let plan2 = model2.head.plan(&mut tape2, &bind2, &fb2, &cfg2.model, Some(&[2]), 0.0);
    let loss2 = tape2.masked_ce(plan2.len_logits, &[1], &[1.0], 1.0);
    let g4 = tape2.backward(loss2);
    let b2 = model2.store.group_ids("backbone");
    assert!(
        b2.iter().any(|&id| g4.get(bind2.var(id)).is_some()),
        "without detachment the length loss must reach the backbone"
    );
}

#[test]
fn gather_matches_one_hot_and_uniform_selection() {
    let mut tape = Tape::<f64>::new();
    let f = rand_batch(&[1, 4, 2, 3], 10); // [B=1, D=4, H=2, W=3]
    let f_h = tape.constant(f.clone());
    let hw = 6;
    let mut a = ArrayD::<f64>::zeros(IxDyn(&[1, 2, hw]));
    // Slice 0: one-hot at (h=1, w=2) → flat 1·3+2 = 5. Slice 1: uniform.
    a[[0, 0, 5]] = 1.0;
    for i in 0..hw {
        a[[0, 1, i]] = 1.0 / hw as f64;
    }
    let attn = tape.constant(a);
    let x = gather_sequence(&mut tape, f_h, attn, 2);
    let xv = tape.value(x);
    for d in 0..4 {
        assert!((xv[[0, 0, d]] - f[[0, d, 1, 2]]).abs() < 1e-12, "one-hot selection");
        let mean: f64 = {
            let mut s = 0.0;
            for h in 0..2 {
                for w in 0..3 {
                    s += f[[0, d, h, w]];
                }
            }
            s / 6.0
        };
        assert!((xv[[0, 1, d]] - mean).abs() < 1e-12, "uniform = spatial mean");
    }
}

#[test]
fn classifier_implements_eq10_examples() {
    let model = tiny_model(); // alpha_init = 0.5
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    // Orthonormal prototypes: rows of I₄; labels: {0: rows 0–1, 1: row 2, 2: row 3}.
    let mut p = Array2::<f64>::zeros((4, 4));
    for i in 0..4 {
        p[[i, i]] = 1.0;
    }
    let protos = tape.constant(p.into_dyn());
    let groups = [(0, 2), (2, 3), (3, 4)];

    // x equals prototype row 2 → label 1 wins over α = 0.5.
    let x1 = tape.constant(ArrayD::from_shape_vec(IxDyn(&[1, 4]), vec![0.0, 0.0, 1.0, 0.0]).unwrap());
    let (logits, _) = model.classifier.score(&mut tape, &bind, x1, protos, &groups);
    let lv = tape.value(logits);
    assert_eq!(lv.shape(), &[1, 4]); // 3 labels + UNK
    let argmax = (0..4).max_by(|&a, &b| lv[[0, a]].partial_cmp(&lv[[0, b]]).unwrap()).unwrap();
    assert_eq!(argmax, 1, "cos=1 must dominate α=0.5");

    // Two case-prototypes at cos 0.3 and 0.7 → Sim = 0.7 (max over cases).
    let x2v = vec![0.3, 0.7, 0.0, 0.0]; // |x| ≈ 0.7616
    let norm = (0.3f64 * 0.3 + 0.7 * 0.7).sqrt();
    let x2 = tape.constant(ArrayD::from_shape_vec(IxDyn(&[1, 4]), x2v).unwrap());
    let (logits2, _) = model.classifier.score(&mut tape, &bind, x2, protos, &groups);
    let l2 = tape.value(logits2);
    assert!((l2[[0, 0]] - 0.7).abs() < 1e-12, "score = |x|·max cos = 0.7");
    assert!((l2[[0, 0]] / norm - 0.7 / norm).abs() < 1e-12, "Sim(label 0) = 0.7");

    // All label cosines ≤ 0.3 with α = 0.5 → argmax is UNK. Needs a
    // direction outside the prototype span, so use D=5 with 4 prototypes.
    let mut p5 = Array2::<f64>::zeros((4, 5));
    for i in 0..4 {
        p5[[i, i]] = 1.0;
    }
    let protos5 = tape.constant(p5.into_dyn());
    let x3v = [0.2, 0.1, 0.15, 0.2, 0.9];
    let mag = x3v.iter().map(|v| v * v).sum::<f64>().sqrt();
    for (i, &v) in x3v.iter().enumerate().take(4) {
        assert!(v / mag <= 0.3, "test vector: cosine {i} must be ≤ 0.3");
    }
    let x3 = tape.constant(ArrayD::from_shape_vec(IxDyn(&[1, 5]), x3v.to_vec()).unwrap());
    let (logits3, _) = model.classifier.score(&mut tape, &bind, x3, protos5, &groups);
    let l3 = tape.value(logits3);
    assert!((l3[[0, 3]] - 0.5 * mag).abs() < 1e-12, "UNK logit = α·|x|");
    let am3 = (0..4).max_by(|&a, &b| l3[[0, a]].partial_cmp(&l3[[0, b]]).unwrap()).unwrap();
    assert_eq!(am3, 3, "rejection wins when every cosine ≤ 0.3 < α");

    // Scale equivariance: ×k scales every logit, argmax invariant.
    let x4 = tape.constant(
        ArrayD::from_shape_vec(IxDyn(&[1, 4]), vec![0.9, 0.6, 0.75, 0.9]).unwrap(),
    );
    let x4s = tape.scale(x4, 1.0); // same values; compare against 3× input
    let (lo, _) = model.classifier.score(&mut tape, &bind, x4s, protos, &groups);
    let x5 = tape.constant(
        ArrayD::from_shape_vec(IxDyn(&[1, 4]), vec![2.7, 1.8, 2.25, 2.7]).unwrap(),
    );
    let (lo3, _) = model.classifier.score(&mut tape, &bind, x5, protos, &groups);
    let (a4, a5) = (tape.value(lo), tape.value(lo3));
    for c in 0..4 {
        assert!((a5[[0, c]] - 3.0 * a4[[0, c]]).abs() < 1e-9, "k-scaling of Eq. 10 scores");
    }
}

#[test]
fn context_scores_match_closed_forms_and_fusion_arithmetic() {
    let mut model = tiny_model(); // 5 labels, embed_dim 8, dca on
    // Overwrite E_c with orthonormal rows (first 5 of I₈).
    let eid = model.context.as_ref().unwrap().embedding_id();
    {
        let v = model.store.value_mut(eid);
        v.fill(0.0);
        for i in 0..5 {
            v[[i, i]] = 1.0;
        }
    }
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let ctx = model.context.as_ref().unwrap();

    // ĉ orthogonal to every embedding → uniform distribution.
    let mut c0 = ArrayD::<f64>::zeros(IxDyn(&[1, 8]));
    c0[[0, 7]] = 3.0;
    let c0v = tape.constant(c0);
    let s0 = ctx.score_against_embeddings(&mut tape, &bind, c0v);
    let p0 = tape.softmax_last(s0);
    let pv = tape.value(p0);
    for c in 0..5 {
        assert!((pv[[0, c]] - 0.2).abs() < 1e-9, "orthogonal ĉ → uniform");
    }

    // ĉ = s·e_y with orthonormal embeddings → P(y) = e^s/(e^s + M − 1).
    let s = 1.7f64;
    let mut c1 = ArrayD::<f64>::zeros(IxDyn(&[1, 8]));
    c1[[0, 2]] = s;
    let c1v = tape.constant(c1);
    let s1 = ctx.score_against_embeddings(&mut tape, &bind, c1v);
    let p1 = tape.softmax_last(s1);
    let p1v = tape.value(p1);
    let expect = s.exp() / (s.exp() + 4.0);
    assert!((p1v[[0, 2]] - expect).abs() < 1e-9, "closed-form softmax value");

    // Fusion arithmetic.
    let fused = fuse_predictions(&[0.8, 0.2], &[0.25, 0.75], FuseMode::Learned);
    assert!((fused[0] - 4.0 / 7.0).abs() < 1e-9 && (fused[1] - 3.0 / 7.0).abs() < 1e-9);
    let bypass = fuse_predictions(&[0.8, 0.2], &[0.25, 0.75], FuseMode::Uniform);
    assert_eq!(bypass, vec![0.8, 0.2]);
    let neutral = fuse_predictions(&[0.8, 0.2], &[0.5, 0.5], FuseMode::Learned);
    assert!((neutral[0] - 0.8).abs() < 1e-12, "uniform context factor is a no-op");
    let passthrough = fuse_predictions(&[0.5, 0.5], &[0.9, 0.1], FuseMode::Learned);
    assert!((passthrough[0] - 0.9).abs() < 1e-12, "uniform visual passes context through");
    let contradiction = fuse_predictions(&[1.0, 0.0], &[0.0, 1.0], FuseMode::Learned);
    assert_eq!(contradiction, vec![1.0, 0.0], "disjoint supports fall back to visual");
}

#[test]
fn context_forward_runs_and_trains_through_y() {
    let model = tiny_model();
    let ctx = model.context.as_ref().unwrap();
    let mut tape = Tape::<f64>::new();
    let bind = model.bind(&mut tape);
    let (b, t, m) = (2, 3, 5);
    let y_logits = tape.param(rand_batch(&[b * t, m], 11));
    let y = tape.softmax_last(y_logits);
    let valid = vec![true, true, false, true, true, true];
    let logits = ctx.forward(&mut tape, &bind, y, b, t, &valid);
    assert_eq!(tape.value(logits).shape(), &[b * t, m]);
    assert!(tape.value(logits).iter().all(|v| v.is_finite()));
    let loss = tape.masked_ce(
        logits,
        &[0, 1, 0, 2, 3, 4],
        &[1.0, 1.0, 0.0, 1.0, 1.0, 1.0],
        0.5,
    );
    let mut grads = tape.backward(loss);
    // The explain-away path: gradient reaches the visual posterior Y.
    assert!(grads.take(y_logits).is_some(), "context loss must flow through Y");
    let eid = ctx.embedding_id();
    assert!(grads.take(bind.var(eid)).is_some(), "embeddings must train");
}

#[test]
fn subset_sampling_examples() {
    let (s, k) = sample_label_subset(&[3, 7, 3], 10, 0, 1, 0);
    assert_eq!(s, vec![3, 7]);
    assert_eq!(k, 0);
    let (s5, k5) = sample_label_subset(&[3, 7], 10, 5, 1, 0);
    assert_eq!(s5.len(), 7);
    assert_eq!(k5, 5);
    assert!(s5.windows(2).all(|w| w[0] < w[1]));
    assert!(s5.contains(&3) && s5.contains(&7));
    let again = sample_label_subset(&[3, 7], 10, 5, 1, 0).0;
    assert_eq!(s5, again, "fixed seed → identical subset");
    let (sc, kc) = sample_label_subset(&[0, 1], 4, 99, 1, 0);
    assert_eq!(sc, vec![0, 1, 2, 3]);
    assert_eq!(kc, 2, "negatives clamp to availability");
}

#[test]
fn bank_container_roundtrips_and_validates() {
    let mut rows = Array2::<f32>::zeros((3, 4));
    for (i, mut r) in rows.rows_mut().into_iter().enumerate() {
        r[i] = 0.6;
        r[i + 1] = 0.8;
    }
    let bank = PrototypeBank::new(rows.clone(), vec![2, 2, 9], 0.5, [3u8; 32]).unwrap();
    assert_eq!(bank.groups(), vec![(2, 0, 2), (9, 2, 1)]);
    let bytes = bank.to_bytes();
    let back = PrototypeBank::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes(), bytes, "bit-exact container round-trip");
    assert_eq!(back.labels, vec![2, 2, 9]);
    assert_eq!(back.alpha, 0.5);

    let mut bad = rows.clone();
    bad[[0, 0]] = 0.9; // norm no longer 1
    assert!(PrototypeBank::new(bad, vec![2, 2, 9], 0.5, [3u8; 32]).is_err());
    assert!(
        PrototypeBank::new(rows, vec![9, 2, 2], 0.5, [3u8; 32]).is_err(),
        "rows must be grouped ascending"
    );
}

#[test]
fn model_container_roundtrips_bit_exactly() {
    let model = {
        let mut c = tiny_config();
        c.seed = 42;
        Model::<f32>::new(&c, vec![1, 4, 6], [9u8; 32]).unwrap()
    };
    let bytes = model.to_bytes();
    let back = Model::<f32>::from_bytes(&bytes).unwrap();
    assert_eq!(back.to_bytes(), bytes, "container must re-serialize identically");
    assert_eq!(back.labels, vec![1, 4, 6]);
    assert_eq!(back.alphabet_hash, [9u8; 32]);
    assert_eq!(back.store.len(), model.store.len());
    for (id, e) in model.store.iter() {
        assert_eq!(e.value, back.store.value(id), "param {} differs", e.name);
    }
}

#[test]
fn checkpoint_roundtrip_restores_optimizer_state() {
    let cfg = tiny_config();
    let model = Model::<f32>::new(&cfg, vec![0, 3], [1u8; 32]).unwrap();
    let mut opt = AdaDelta::new(&model.store, 0.9f32, 1e-6, 1e-2, Some(5.0));
    // Give the accumulators non-trivial content with a fake step.
    let mut model = model;
    let mut grads: Vec<Option<ArrayD<f32>>> = model
        .store
        .iter()
        .map(|(_, e)| e.trainable.then(|| ArrayD::from_elem(e.value.raw_dim(), 0.01f32)))
        .collect();
    opt.step(&mut model.store, &mut grads);
    let bytes = model.checkpoint_bytes(&opt, 17);
    let (back, opt2, iter) = Model::<f32>::from_checkpoint_bytes(&bytes).unwrap();
    assert_eq!(iter, 17);
    assert_eq!(back.to_bytes(), model.to_bytes());
    let (s1, s2) = (opt.state(), opt2.state());
    assert_eq!(s1.len(), s2.len());
    for ((g1, d1), (g2, d2)) in s1.iter().zip(s2.iter()) {
        assert_eq!(g1, g2);
        assert_eq!(d1, d2);
    }
}

#[test]
fn posenc_is_bounded_and_standard() {
    let pe = sinusoidal_posenc::<f64>(6, 8);
    assert_eq!(pe.shape(), &[6, 8]);
    assert!(pe.iter().all(|&v| (-1.0..=1.0).contains(&v)));
    assert_eq!(pe[[0, 0]], 0.0); // sin 0
    assert_eq!(pe[[0, 1]], 1.0); // cos 0
    assert!((pe[[1, 0]] - 1f64.sin()).abs() < 1e-12);
}
