//! `occd` — command-line driver for the open-set glyph recognizer pipeline.

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use occd::config::{AblationMode, CorpusConfig, TrainConfig};
use occd::corpus::{generate_corpus, Dataset, GlyphSet, Split};
use occd::harness::{ablate, build_bank, evaluate, EvalMode};
use occd::nn::Model;
use occd::oracle::{
    build_world, check_anchor_property, check_dca_factorization, check_separability, JointTable,
    WorldKind, WorldSizes,
};
use occd::trainer::fit;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "occd", version, about = "Open-set glyph recognition pipeline")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus (alphabet, rasters, manifest) from a config.
    GenCorpus {
        /// Flat key=value corpus config file.
        #[arg(long)]
        config: PathBuf,
        /// Output dataset directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Machine-verify the anchor/separability/factorization identities on
    /// exactly enumerated discrete worlds.
    OracleCheck {
        /// Number of seeded worlds per world kind.
        #[arg(long, default_value_t = 100)]
        seeds: u64,
        /// World cardinalities as `contexts,labels,renders,len` quadruples;
        /// repeat the flag to cycle several sizes. Default: a built-in mix.
        #[arg(long)]
        sizes: Vec<String>,
        /// Where to write the line-per-seed TSV of residuals.
        #[arg(long)]
        report: PathBuf,
    },
    /// Build a prototype bank ("OPRT") covering a full glyph alphabet.
    ProtoCache {
        /// Trained model container.
        #[arg(long)]
        model: PathBuf,
        /// Alphabet container ("OCCD") supplying the glyphs.
        #[arg(long)]
        alphabet: PathBuf,
        /// Output bank path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a recognizer on a generated corpus.
    Train {
        /// Flat key=value training config file.
        #[arg(long)]
        config: PathBuf,
        /// Dataset directory (from gen-corpus).
        #[arg(long)]
        data: PathBuf,
        /// Output directory (model, checkpoints, log).
        #[arg(long)]
        out: PathBuf,
        /// Ablation preset applied on top of the config.
        #[arg(long, value_parser = AblationMode::parse)]
        ablation: Option<AblationMode>,
        /// Resume from a checkpoint file instead of initializing fresh.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Evaluate a trained model on one split of a corpus.
    Eval {
        /// Trained model container.
        #[arg(long)]
        model: PathBuf,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Split tag: train, test-seen, test-novel, test-mixed.
        #[arg(long, value_parser = Split::parse)]
        split: Split,
        /// Decoding mode: open (visual only) or close (context fused).
        #[arg(long, value_parser = EvalMode::parse, default_value = "open")]
        mode: EvalMode,
        /// Where to write the TSV report (a .txt summary lands next to it).
        #[arg(long)]
        report: PathBuf,
    },
    /// Train an ablation grid and reduce it to curves and paired statistics.
    Ablate {
        /// Two or more training config files; file stems name the configs.
        #[arg(long, num_args = 2.., required = true)]
        configs: Vec<PathBuf>,
        /// Comma-separated seed list, e.g. 1,2,3.
        #[arg(long)]
        seeds: String,
        /// Dataset directory.
        #[arg(long)]
        data: PathBuf,
        /// Output directory (per-cell runs, curves.tsv, stats.tsv, curves.svg).
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::GenCorpus { config, out } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let cfg = CorpusConfig::from_text(&text)?;
            let rows = generate_corpus(&cfg, &out)?;
            let count = |s: Split| rows.iter().filter(|r| r.split == s).count();
            println!(
                "wrote {} ({} words: {} train, {} test-seen, {} test-novel, {} test-mixed)",
                out.display(),
                rows.len(),
                count(Split::Train),
                count(Split::TestSeen),
                count(Split::TestNovel),
                count(Split::TestMixed)
            );
        }
        Cmd::OracleCheck { seeds, sizes, report } => oracle_check(seeds, &sizes, &report)?,
        Cmd::ProtoCache { model, alphabet, out } => {
            let model = Model::<f32>::load(&model)?;
            let glyphs = GlyphSet::load(&alphabet)?;
            let mut labels: Vec<u32> = glyphs.labels.clone();
            labels.sort_unstable();
            labels.dedup();
            let bank = build_bank(&model, &glyphs, &labels)?;
            bank.save(&out)?;
            println!("wrote {} ({} prototypes, {} labels)", out.display(), bank.n(), labels.len());
        }
        Cmd::Train { config, data, out, ablation, resume } => {
            let text = std::fs::read_to_string(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let mut cfg = TrainConfig::from_text(&text)?;
            if let Some(mode) = ablation {
                cfg.apply_ablation(mode);
            }
            let outcome = fit::<f32>(&cfg, &data, &out, resume.as_deref())?;
            let last = outcome.log.last();
            println!(
                "wrote {} ({} iterations{})",
                outcome.model_path.display(),
                outcome.log.len(),
                last.map(|r| format!(", final total loss {:.6}", r.losses.total()))
                    .unwrap_or_default()
            );
        }
        Cmd::Eval { model, data, split, mode, report } => {
            let model = Model::<f32>::load(&model)?;
            let ds = Dataset::load(&data)?;
            let rep = evaluate(&model, &ds, split, mode)?;
            rep.save(&report)?;
            print!("{}", rep.to_text());
            println!("wrote {}", report.display());
        }
        Cmd::Ablate { configs, seeds, data, out } => {
            let seeds = parse_seed_list(&seeds)?;
            let mut named = Vec::new();
            for path in &configs {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                let cfg = TrainConfig::from_text(&text)?;
                let name = path
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| path.display().to_string());
                named.push((name, cfg));
            }
            let outcome = ablate::<f32>(&named, &seeds, &data, &out)?;
            println!(
                "wrote {} ({} curve points, {} comparisons, {} failed cells)",
                out.display(),
                outcome.points.len(),
                outcome.comparisons.len(),
                outcome.failures.len()
            );
            for c in &outcome.comparisons {
                println!(
                    "  {} vs {}: mean novel-LA diff {:+.4} (n={}, t={:.4}, p={:.6})",
                    c.a, c.b, c.mean_diff, c.n, c.t, c.p
                );
            }
        }
    }
    Ok(())
}

fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    let seeds: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().with_context(|| format!("bad seed `{p}`")))
        .collect::<Result<_>>()?;
    if seeds.is_empty() {
        bail!("empty seed list");
    }
    Ok(seeds)
}

fn parse_sizes(specs: &[String]) -> Result<Vec<WorldSizes>> {
    if specs.is_empty() {
        // The built-in mix spans joint tables from ~1e3 to ~3e4 entries.
        return Ok(vec![
            WorldSizes { contexts: 2, labels: 4, renders: 6, len: 2 },
            WorldSizes { contexts: 3, labels: 6, renders: 9, len: 2 },
            WorldSizes { contexts: 2, labels: 4, renders: 6, len: 3 },
            WorldSizes { contexts: 2, labels: 5, renders: 7, len: 2 },
            WorldSizes { contexts: 3, labels: 5, renders: 8, len: 2 },
        ]);
    }
    let mut out = Vec::new();
    for spec in specs {
        let parts: Vec<usize> = spec
            .split(',')
            .map(|p| p.trim().parse::<usize>().with_context(|| format!("bad size `{p}`")))
            .collect::<Result<_>>()?;
        if parts.len() != 4 {
            bail!("--sizes wants `contexts,labels,renders,len`, got `{spec}`");
        }
        out.push(WorldSizes {
            contexts: parts[0],
            labels: parts[1],
            renders: parts[2],
            len: parts[3],
        });
    }
    Ok(out)
}

/// Runs all three identity checks over `seeds` satisfying worlds and the
/// matched violating worlds, writes a line-per-seed residual TSV, prints a
/// verdict, and fails the process if any invariant is broken.
fn oracle_check(seeds: u64, sizes: &[String], report: &std::path::Path) -> Result<()> {
    if seeds == 0 {
        bail!("--seeds must be positive");
    }
    let sizes = parse_sizes(sizes)?;
    const EXACT_TOL: f64 = 1e-9;
    const FALSIFY_TOL: f64 = 1e-3;

    let mut tsv = String::from(
        "seed\tcontexts\tlabels\trenders\tlen\tanchor_satisfying\tseparability_satisfying\t\
         dca_satisfying\tanchor_violate_a1\tseparability_violate_a2\tdca_violate_a2\n",
    );
    let mut max_sat: f64 = 0.0;
    let mut anchor_falsified = 0u64;
    let mut sep_falsified = 0u64;
    let mut dca_falsified = 0u64;

    for seed in 0..seeds {
        let size = sizes[(seed % sizes.len() as u64) as usize];
        let sat = {
            let w = build_world(WorldKind::Satisfying, size, seed)?;
            let jt = JointTable::new(&w)?;
            (
                check_anchor_property(&jt).residual,
                check_separability(&jt).residual,
                check_dca_factorization(&jt).residual,
            )
        };
        max_sat = max_sat.max(sat.0).max(sat.1).max(sat.2);

        let a1 = {
            let w = build_world(WorldKind::ViolateA1, size, seed)?;
            let jt = JointTable::new(&w)?;
            check_anchor_property(&jt).residual
        };
        if a1 > FALSIFY_TOL {
            anchor_falsified += 1;
        }

        let (a2_sep, a2_dca) = {
            let w = build_world(WorldKind::ViolateA2, size, seed)?;
            let jt = JointTable::new(&w)?;
            (check_separability(&jt).residual, check_dca_factorization(&jt).residual)
        };
        if a2_sep > FALSIFY_TOL {
            sep_falsified += 1;
        }
        if a2_dca > FALSIFY_TOL {
            dca_falsified += 1;
        }

        let _ = writeln!(
            tsv,
            "{seed}\t{}\t{}\t{}\t{}\t{:.3e}\t{:.3e}\t{:.3e}\t{:.3e}\t{:.3e}\t{:.3e}",
            size.contexts, size.labels, size.renders, size.len, sat.0, sat.1, sat.2, a1, a2_sep,
            a2_dca
        );
    }

    std::fs::write(report, tsv).with_context(|| format!("writing {}", report.display()))?;

    let need = (seeds as f64 * 0.95).ceil() as u64;
    println!("oracle-check over {seeds} seeds per world kind");
    println!("  max satisfying residual   {max_sat:.3e} (tolerance {EXACT_TOL:.0e})");
    println!("  anchor falsified          {anchor_falsified}/{seeds} (need >= {need})");
    println!("  separability falsified    {sep_falsified}/{seeds} (need >= {need})");
    println!("  dca falsified             {dca_falsified}/{seeds} (need >= {need})");
    println!("wrote {}", report.display());

    if max_sat > EXACT_TOL {
        bail!("satisfying-world residual {max_sat:.3e} exceeds {EXACT_TOL:.0e}");
    }
    if anchor_falsified < need || sep_falsified < need || dca_falsified < need {
        bail!("falsification power below 95%");
    }
    println!("all identities verified");
    Ok(())
}
