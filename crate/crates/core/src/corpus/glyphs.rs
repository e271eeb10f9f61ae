//! Procedural glyph construction: seeded random strokes on a square canvas
//! with an enforced minimum pairwise distinctness between labels.

use super::GlyphSet;
use crate::config::CorpusConfig;
use crate::error::{Error, Result};
use crate::rng;
use ndarray::Array2;
use rand::Rng;

/// Attempts allowed per glyph slot before the distinctness threshold is
/// declared infeasible.
const MAX_ATTEMPTS_PER_GLYPH: u64 = 500;

/// Builds the glyph alphabet: `alphabet_size` labels with `cases_per_label`
/// independent shapes each, every cross-label pair at least `distinctness`
/// apart in mean absolute pixel difference after center-of-mass alignment.
pub fn build_alphabet(cfg: &CorpusConfig) -> Result<GlyphSet> {
    cfg.validate()?;
    let m = cfg.alphabet_size;
    let n = m * cfg.cases_per_label;
    let g = cfg.glyph_size;

    let mut glyphs: Vec<Array2<f32>> = Vec::with_capacity(n);
    let mut labels: Vec<u32> = Vec::with_capacity(n);
    let mut centered: Vec<Array2<f32>> = Vec::with_capacity(n);
    let mut attempt: u64 = 0;

    for label in 0..m as u32 {
        for _case in 0..cfg.cases_per_label {
            let slot_deadline = attempt + MAX_ATTEMPTS_PER_GLYPH;
            loop {
                if attempt >= slot_deadline {
                    return Err(Error::Infeasible(format!(
                        "could not draw a glyph for label {label} at distinctness {} \
                         within {MAX_ATTEMPTS_PER_GLYPH} attempts",
                        cfg.distinctness
                    )));
                }
                let candidate = draw_glyph(cfg.seed, attempt, g);
                attempt += 1;
                let cand_centered = center_of_mass_align(&candidate);
                let distinct = glyphs
                    .iter()
                    .zip(&labels)
                    .zip(&centered)
                    .filter(|((_, &lab), _)| lab != label)
                    .all(|((_, _), prev)| mean_abs_diff(&cand_centered, prev) >= cfg.distinctness);
                if distinct {
                    glyphs.push(candidate);
                    centered.push(cand_centered);
                    labels.push(label);
                    break;
                }
            }
        }
    }

    let embeddings = draw_embeddings(cfg.seed, m, cfg.embed_dim);
    let set = GlyphSet { glyph_size: g, glyphs, labels, embeddings };
    set.validate()?;
    Ok(set)
}

/// Mean absolute pixel difference — the distinctness metric.
pub fn mean_abs_diff(a: &Array2<f32>, b: &Array2<f32>) -> f64 {
    let n = a.len() as f64;
    a.iter().zip(b.iter()).map(|(&x, &y)| (x - y).abs() as f64).sum::<f64>() / n
}

/// Shifts the foreground's center of mass to the canvas center (integer
/// shift, zero fill).
pub fn center_of_mass_align(img: &Array2<f32>) -> Array2<f32> {
    let (h, w) = img.dim();
    let mut mass = 0.0f64;
    let (mut cy, mut cx) = (0.0f64, 0.0f64);
    for ((y, x), &v) in img.indexed_iter() {
        let v = v as f64;
        mass += v;
        cy += v * y as f64;
        cx += v * x as f64;
    }
    if mass == 0.0 {
        return img.clone();
    }
    let dy = ((h as f64 - 1.0) / 2.0 - cy / mass).round() as isize;
    let dx = ((w as f64 - 1.0) / 2.0 - cx / mass).round() as isize;
    let mut out = Array2::zeros((h, w));
    for ((y, x), &v) in img.indexed_iter() {
        let ny = y as isize + dy;
        let nx = x as isize + dx;
        if ny >= 0 && nx >= 0 && (ny as usize) < h && (nx as usize) < w {
            out[(ny as usize, nx as usize)] = v;
        }
    }
    out
}

/// One candidate glyph: 3–6 strokes (segments or quadratic arcs) between
/// jittered anchor-grid points, stamped as binary discs along the curve.
fn draw_glyph(seed: u64, attempt: u64, g: usize) -> Array2<f32> {
    let mut rng = rng::stream_n(seed, "corpus.glyph", attempt);
    let mut img = Array2::<f32>::zeros((g, g));
    let gf = g as f64;
    let margin = 0.18 * gf;
    let span = gf - 2.0 * margin;
    let anchor = |rng: &mut rand_chacha::ChaCha8Rng| -> (f64, f64) {
        let iy = rng.gen_range(0..5) as f64;
        let ix = rng.gen_range(0..5) as f64;
        let jy: f64 = rng.gen_range(-0.05..0.05) * gf;
        let jx: f64 = rng.gen_range(-0.05..0.05) * gf;
        (margin + iy / 4.0 * span + jy, margin + ix / 4.0 * span + jx)
    };
    let strokes = rng.gen_range(3..=6);
    for _ in 0..strokes {
        let p0 = anchor(&mut rng);
        let mut p1 = anchor(&mut rng);
        // Degenerate zero-length strokes stamp a dot; nudge them apart.
        if (p0.0 - p1.0).abs() + (p0.1 - p1.1).abs() < 1.0 {
            p1.0 += 0.25 * gf;
        }
        let radius = gf * 0.07 + rng.gen_range(0.0..0.04) * gf;
        let arc = rng.gen_bool(0.5);
        let ctrl = if arc {
            let mid = ((p0.0 + p1.0) / 2.0, (p0.1 + p1.1) / 2.0);
            let perp = (-(p1.1 - p0.1), p1.0 - p0.0);
            let norm = (perp.0 * perp.0 + perp.1 * perp.1).sqrt().max(1e-9);
            let amp: f64 = rng.gen_range(-0.35..0.35) * gf;
            (mid.0 + perp.0 / norm * amp, mid.1 + perp.1 / norm * amp)
        } else {
            ((p0.0 + p1.0) / 2.0, (p0.1 + p1.1) / 2.0)
        };
        stamp_curve(&mut img, p0, ctrl, p1, radius);
    }
    img
}

/// Rasterizes a quadratic Bezier by stamping filled discs at dense samples.
fn stamp_curve(img: &mut Array2<f32>, p0: (f64, f64), c: (f64, f64), p1: (f64, f64), r: f64) {
    let (h, w) = img.dim();
    let steps = 3 * h.max(w);
    let ri = r.ceil() as isize;
    for s in 0..=steps {
        let t = s as f64 / steps as f64;
        let u = 1.0 - t;
        let y = u * u * p0.0 + 2.0 * u * t * c.0 + t * t * p1.0;
        let x = u * u * p0.1 + 2.0 * u * t * c.1 + t * t * p1.1;
        let (yc, xc) = (y.round() as isize, x.round() as isize);
        for dy in -ri..=ri {
            for dx in -ri..=ri {
                let (py, px) = (yc + dy, xc + dx);
                if py < 0 || px < 0 || py as usize >= h || px as usize >= w {
                    continue;
                }
                let fy = py as f64 - y;
                let fx = px as f64 - x;
                if fy * fy + fx * fx <= r * r {
                    img[(py as usize, px as usize)] = 1.0;
                }
            }
        }
    }
}

/// Per-label embedding rows: seeded Gaussian entries scaled by 1/sqrt(C).
fn draw_embeddings(seed: u64, m: usize, c: usize) -> Array2<f64> {
    let mut rng = rng::stream(seed, "corpus.embed");
    let scale = 1.0 / (c as f64).sqrt();
    Array2::from_shape_fn((m, c), |_| {
        // Box-Muller on two uniform draws.
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos() * scale
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: usize, seed: u64) -> CorpusConfig {
        CorpusConfig { alphabet_size: m, seed, ..CorpusConfig::default() }
    }

    #[test]
    fn counts_match_config() {
        // (M=60, 1 case each, 32px, C=64, 0.15, seed=7) → 60 glyphs, 60 labels.
        let set = build_alphabet(&cfg(60, 7)).unwrap();
        assert_eq!(set.n(), 60);
        assert_eq!(set.m(), 60);
        assert_eq!(set.c(), 64);
        assert_eq!(set.glyph_size, 32);
    }

    #[test]
    fn same_call_twice_is_byte_identical() {
        let a = build_alphabet(&cfg(20, 7)).unwrap();
        let b = build_alphabet(&cfg(20, 7)).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = build_alphabet(&cfg(20, 8)).unwrap();
        assert_ne!(a.to_bytes(), c.to_bytes());
    }

    #[test]
    fn pairwise_distinctness_holds_after_generation() {
        // [DERIVED] re-measure all pairwise differences post hoc.
        let config = cfg(60, 7);
        let set = build_alphabet(&config).unwrap();
        let centered: Vec<_> = set.glyphs.iter().map(center_of_mass_align).collect();
        let mut min_diff = f64::INFINITY;
        for i in 0..set.n() {
            for j in 0..i {
                if set.labels[i] != set.labels[j] {
                    min_diff = min_diff.min(mean_abs_diff(&centered[i], &centered[j]));
                }
            }
        }
        assert!(
            min_diff >= config.distinctness,
            "min pairwise difference {min_diff} below threshold"
        );
    }

    #[test]
    fn glyphs_are_binary_with_foreground() {
        let set = build_alphabet(&cfg(12, 3)).unwrap();
        for g in &set.glyphs {
            assert!(g.iter().all(|&v| v == 0.0 || v == 1.0));
            assert!(g.iter().any(|&v| v == 1.0));
        }
    }

    #[test]
    fn infeasible_threshold_is_reported() {
        let mut config = cfg(40, 1);
        config.distinctness = 0.93;
        assert!(matches!(build_alphabet(&config), Err(Error::Infeasible(_))));
    }

    #[test]
    fn cases_share_labels() {
        let mut config = cfg(10, 5);
        config.cases_per_label = 3;
        let set = build_alphabet(&config).unwrap();
        assert_eq!(set.n(), 30);
        assert_eq!(set.m(), 10);
        assert_eq!(set.rows_for_label(4).len(), 3);
    }
}
