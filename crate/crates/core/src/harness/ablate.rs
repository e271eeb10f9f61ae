//! The ablation grid: trains every (config, seed) cell, evaluates every
//! checkpoint in open mode, and reduces the grid to curves and a paired
//! significance test on novel-word line accuracy.

use crate::config::TrainConfig;
use crate::corpus::{Dataset, Split};
use crate::error::{Error, Result};
use crate::harness::report::evaluate;
use crate::harness::stats::paired_t;
use crate::harness::svg::{render_chart, Series};
use crate::harness::EvalMode;
use crate::nn::Model;
use crate::trainer::fit;
use autograd::Scalar;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// One evaluated point of the grid.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub config: String,
    pub seed: u64,
    pub iter: u64,
    pub la_seen: f64,
    pub la_novel: f64,
}

/// Pairwise comparison of two configs on novel-word line accuracy,
/// paired over matched (seed, iteration) cells.
#[derive(Debug, Clone)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub n: usize,
    pub mean_diff: f64,
    pub t: f64,
    pub p: f64,
}

/// Everything `ablate` leaves on disk, plus the in-memory tables.
#[derive(Debug)]
pub struct AblationOutcome {
    pub points: Vec<CurvePoint>,
    pub comparisons: Vec<Comparison>,
    /// Cells that failed to train, as (config, seed, error text).
    pub failures: Vec<(String, u64, String)>,
}

fn eval_point<F: Scalar>(
    model: &Model<F>,
    ds: &Dataset,
    config: &str,
    seed: u64,
    iter: u64,
) -> Result<CurvePoint> {
    let seen = evaluate(model, ds, Split::TestSeen, EvalMode::Open)?;
    let novel = evaluate(model, ds, Split::TestNovel, EvalMode::Open)?;
    Ok(CurvePoint {
        config: config.to_string(),
        seed,
        iter,
        la_seen: seen.line_accuracy,
        la_novel: novel.line_accuracy,
    })
}

/// Runs the full grid. Each cell trains `configs[i]` with its `seed` field
/// overridden, into `out_dir/<name>-s<seed>`; every checkpoint and the final
/// model are evaluated in open mode on test-seen and test-novel. A cell that
/// fails to train is recorded and skipped — the statistics cover the cells
/// both configs completed.
pub fn ablate<F: Scalar>(
    configs: &[(String, TrainConfig)],
    seeds: &[u64],
    data_dir: &Path,
    out_dir: &Path,
) -> Result<AblationOutcome> {
    if configs.len() < 2 {
        return Err(Error::Config("ablation needs at least two configs".into()));
    }
    if seeds.len() < 2 {
        return Err(Error::Config("ablation needs at least two seeds".into()));
    }
    {
        let mut names: Vec<&str> = configs.iter().map(|(n, _)| n.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != configs.len() {
            return Err(Error::Config("ablation config names must be unique".into()));
        }
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ds = Dataset::load(data_dir)?;

    let mut points: Vec<CurvePoint> = Vec::new();
    let mut failures: Vec<(String, u64, String)> = Vec::new();

    for (name, base_cfg) in configs {
        for &seed in seeds {
            let mut cfg = base_cfg.clone();
            cfg.seed = seed;
            let cell_dir = out_dir.join(format!("{name}-s{seed}"));
            eprintln!("[ablate] training {name} seed {seed}");
            let outcome = match fit::<F>(&cfg, data_dir, &cell_dir, None) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("[ablate] warning: cell {name}-s{seed} failed: {e}");
                    failures.push((name.clone(), seed, e.to_string()));
                    continue;
                }
            };
            // Checkpoints first (ascending by construction), then the final
            // model at the terminal iteration count.
            let mut cell_ok = true;
            for ck in &outcome.checkpoint_paths {
                let bytes = std::fs::read(ck).map_err(|e| Error::io(ck, e))?;
                let (model, _opt, next_iter) = Model::<F>::from_checkpoint_bytes(&bytes)?;
                if next_iter == cfg.iters as u64 {
                    continue; // the final model covers this iteration
                }
                match eval_point(&model, &ds, name, seed, next_iter) {
                    Ok(p) => points.push(p),
                    Err(e) => {
                        eprintln!("[ablate] warning: eval {name}-s{seed}@{next_iter} failed: {e}");
                        failures.push((name.clone(), seed, e.to_string()));
                        cell_ok = false;
                        break;
                    }
                }
            }
            if !cell_ok {
                continue;
            }
            let model = Model::<F>::load(&outcome.model_path)?;
            match eval_point(&model, &ds, name, seed, cfg.iters as u64) {
                Ok(p) => points.push(p),
                Err(e) => {
                    eprintln!("[ablate] warning: eval {name}-s{seed}@final failed: {e}");
                    failures.push((name.clone(), seed, e.to_string()));
                }
            }
        }
    }

    // Pairwise paired t-tests on novel LA over matched (seed, iter) keys.
    let mut by_config: BTreeMap<&str, BTreeMap<(u64, u64), f64>> = BTreeMap::new();
    for p in &points {
        by_config.entry(p.config.as_str()).or_default().insert((p.seed, p.iter), p.la_novel);
    }
    let mut comparisons: Vec<Comparison> = Vec::new();
    for i in 0..configs.len() {
        for j in (i + 1)..configs.len() {
            let (na, nb) = (configs[i].0.as_str(), configs[j].0.as_str());
            let (ka, kb) = match (by_config.get(na), by_config.get(nb)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue,
            };
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for (key, &va) in ka {
                if let Some(&vb) = kb.get(key) {
                    xs.push(va);
                    ys.push(vb);
                }
            }
            if xs.len() < 2 {
                continue;
            }
            let pt = paired_t(&xs, &ys);
            comparisons.push(Comparison {
                a: na.to_string(),
                b: nb.to_string(),
                n: pt.n,
                mean_diff: pt.mean_diff,
                t: pt.t,
                p: pt.p,
            });
        }
    }

    let outcome = AblationOutcome { points, comparisons, failures };
    write_outputs(&outcome, configs, out_dir)?;
    Ok(outcome)
}

pub fn render_curves_tsv(points: &[CurvePoint]) -> String {
    let mut s = String::from("config\tseed\titer\tla_seen\tla_novel\n");
    for p in points {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{:.6}\t{:.6}",
            p.config, p.seed, p.iter, p.la_seen, p.la_novel
        );
    }
    s
}

pub fn render_stats_tsv(comparisons: &[Comparison]) -> String {
    let mut s = String::from("config_a\tconfig_b\tn\tmean_diff_novel_la\tt\tp\n");
    for c in comparisons {
        let _ = writeln!(s, "{}\t{}\t{}\t{:.6}\t{:.6}\t{:.6}", c.a, c.b, c.n, c.mean_diff, c.t, c.p);
    }
    s
}

fn write_outputs(
    outcome: &AblationOutcome,
    configs: &[(String, TrainConfig)],
    out_dir: &Path,
) -> Result<()> {
    let curves_path = out_dir.join("curves.tsv");
    std::fs::write(&curves_path, render_curves_tsv(&outcome.points))
        .map_err(|e| Error::io(&curves_path, e))?;
    let stats_path = out_dir.join("stats.tsv");
    std::fs::write(&stats_path, render_stats_tsv(&outcome.comparisons))
        .map_err(|e| Error::io(&stats_path, e))?;

    // One chart per metric; series keep the caller's config order.
    let mut svg = String::new();
    for (metric, pick) in [
        ("novel-word line accuracy", true),
        ("seen-word line accuracy", false),
    ] {
        let series: Vec<Series> = configs
            .iter()
            .map(|(name, _)| {
                let mut by_seed: BTreeMap<u64, Vec<(f64, f64)>> = BTreeMap::new();
                for p in &outcome.points {
                    if p.config == *name {
                        let v = if pick { p.la_novel } else { p.la_seen };
                        by_seed.entry(p.seed).or_default().push((p.iter as f64, v));
                    }
                }
                let mut per_seed: Vec<Vec<(f64, f64)>> = by_seed.into_values().collect();
                for c in &mut per_seed {
                    c.sort_by(|a, b| a.0.total_cmp(&b.0));
                }
                Series { name: name.clone(), per_seed }
            })
            .collect();
        if svg.is_empty() {
            svg = render_chart(metric, "iterations", "line accuracy", &series);
        } else {
            let extra_path = out_dir.join("curves_seen.svg");
            let chart = render_chart(metric, "iterations", "line accuracy", &series);
            std::fs::write(&extra_path, chart).map_err(|e| Error::io(&extra_path, e))?;
        }
    }
    let svg_path = out_dir.join("curves.svg");
    std::fs::write(&svg_path, svg).map_err(|e| Error::io(&svg_path, e))?;

    let report_path = out_dir.join("report.txt");
    std::fs::write(&report_path, render_report(outcome)).map_err(|e| Error::io(&report_path, e))?;
    Ok(())
}

fn render_report(outcome: &AblationOutcome) -> String {
    let mut s = String::from("ablation report\n===============\n\n");

    // Final-iteration summary per config: mean over seeds at each config's
    // last evaluated iteration.
    let mut finals: BTreeMap<&str, (u64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in &outcome.points {
        let e = finals.entry(p.config.as_str()).or_insert((0, Vec::new(), Vec::new()));
        if p.iter > e.0 {
            e.0 = p.iter;
            e.1.clear();
            e.2.clear();
        }
        if p.iter == e.0 {
            e.1.push(p.la_seen);
            e.2.push(p.la_novel);
        }
    }
    let _ = writeln!(s, "final line accuracy (mean over seeds)");
    for (name, (iter, seen, novel)) in &finals {
        let ms = seen.iter().sum::<f64>() / seen.len().max(1) as f64;
        let mn = novel.iter().sum::<f64>() / novel.len().max(1) as f64;
        let _ = writeln!(
            s,
            "  {name:<12} @{iter:<7} seen {ms:.4}  novel {mn:.4}  ({} seeds)",
            seen.len()
        );
    }

    let _ = writeln!(s, "\npaired t-test on novel-word line accuracy (a minus b)");
    if outcome.comparisons.is_empty() {
        let _ = writeln!(s, "  (not enough matched cells)");
    }
    for c in &outcome.comparisons {
        let _ = writeln!(
            s,
            "  {} vs {}: n={} mean_diff={:+.4} t={:.4} p={:.6}",
            c.a, c.b, c.n, c.mean_diff, c.t, c.p
        );
    }

    if !outcome.failures.is_empty() {
        let _ = writeln!(s, "\nfailed cells");
        for (name, seed, err) in &outcome.failures {
            let _ = writeln!(s, "  {name}-s{seed}: {err}");
        }
    }
    s
}
