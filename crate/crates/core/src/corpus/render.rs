//! Word-image rendering. Every style decision is drawn from the style seed
//! alone — content never influences style, so the style/content joint
//! factorizes by construction.

use super::GlyphSet;
use crate::config::CorpusConfig;
use crate::error::{Error, Result};
use crate::rng;
use ndarray::Array2;
use rand::Rng;

/// The per-sample style vector. Fixed-length (slot entries are drawn for all
/// max_len positions regardless of the actual word length) so it is a pure
/// function of (style_seed, config) — the A2-by-construction contract.
#[derive(Debug, Clone, PartialEq)]
pub struct StyleParams {
    /// Dilation blend in [0, 0.6]: thickens strokes.
    pub thickness: f64,
    /// Foreground intensity in [0.75, 1].
    pub fg: f64,
    /// Background intensity in [0, 0.2].
    pub bg: f64,
    /// Box-blur blend in [0, 0.5].
    pub blur: f64,
    /// Additive noise amplitude in [0, render_noise].
    pub noise_amp: f64,
    /// Per-slot vertical jitter in [-jitter, jitter], max_len entries.
    pub jitter_y: Vec<i64>,
    /// Per-slot trailing spacing in {0..3} pixels, max_len entries.
    pub spacing: Vec<usize>,
    /// Per-slot case selectors (reduced modulo the label's case count).
    pub case_pick: Vec<u64>,
}

impl StyleParams {
    /// Flattened form used by the factorization tests.
    pub fn as_vector(&self) -> Vec<f64> {
        let mut v = vec![self.thickness, self.fg, self.bg, self.blur, self.noise_amp];
        v.extend(self.jitter_y.iter().map(|&j| j as f64));
        v.extend(self.spacing.iter().map(|&s| s as f64));
        v.extend(self.case_pick.iter().map(|&c| c as f64));
        v
    }
}

/// Draws the style vector for a sample. Depends only on (style_seed, config).
pub fn style_params(style_seed: u64, cfg: &CorpusConfig) -> StyleParams {
    let mut rng = rng::stream(style_seed, "corpus.style");
    let thickness = rng.gen_range(0.0..0.6);
    let fg = rng.gen_range(0.75..1.0);
    let bg = rng.gen_range(0.0..0.2);
    let blur = rng.gen_range(0.0..0.5);
    let noise_amp = if cfg.render_noise > 0.0 { rng.gen_range(0.0..cfg.render_noise) } else { 0.0 };
    let j = cfg.jitter as i64;
    let jitter_y: Vec<i64> =
        (0..cfg.max_len).map(|_| if j > 0 { rng.gen_range(-j..=j) } else { 0 }).collect();
    let spacing: Vec<usize> = (0..cfg.max_len).map(|_| rng.gen_range(0..=3)).collect();
    let case_pick: Vec<u64> = (0..cfg.max_len).map(|_| rng.gen()).collect();
    StyleParams { thickness, fg, bg, blur, noise_amp, jitter_y, spacing, case_pick }
}

/// Renders a word: glyphs left-to-right with seeded jitter and spacing,
/// style post-processing, aspect-preserving resize, and zero center-padding
/// to (image_height, image_width).
pub fn render_word(
    labels: &[u32],
    style_seed: u64,
    set: &GlyphSet,
    cfg: &CorpusConfig,
) -> Result<Array2<f32>> {
    if labels.is_empty() {
        return Err(Error::Invalid("cannot render an empty word".into()));
    }
    if labels.len() > cfg.max_len {
        return Err(Error::Invalid(format!(
            "word length {} exceeds max_len {}",
            labels.len(),
            cfg.max_len
        )));
    }
    for &lab in labels {
        if lab as usize >= set.m() {
            return Err(Error::Invalid(format!("unknown label {lab}")));
        }
    }
    let style = style_params(style_seed, cfg);
    let l = labels.len();
    let g = set.glyph_size;
    let pad_v = cfg.jitter + 2;
    let pad_h = 2usize;
    let spacing_total: usize = style.spacing[..l.saturating_sub(1)].iter().sum();
    let nat_h = g + 2 * pad_v;
    let nat_w = 2 * pad_h + l * g + spacing_total;

    // Compose glyph cases onto the natural canvas.
    let mut canvas = Array2::<f64>::zeros((nat_h, nat_w));
    let mut x_off = pad_h;
    for (t, &lab) in labels.iter().enumerate() {
        let cases = set.rows_for_label(lab);
        let case = &set.glyphs[cases[(style.case_pick[t] % cases.len() as u64) as usize]];
        let y_off = (pad_v as i64 + style.jitter_y[t]) as usize;
        for ((gy, gx), &v) in case.indexed_iter() {
            let slot = &mut canvas[(y_off + gy, x_off + gx)];
            *slot = slot.max(v as f64);
        }
        x_off += g + if t + 1 < l { style.spacing[t] } else { 0 };
    }

    // Style post-processing on the natural canvas.
    if style.thickness > 0.0 {
        let dilated = max_filter3(&canvas);
        canvas.zip_mut_with(&dilated, |c, &d| *c = c.max(style.thickness * d));
    }
    if style.blur > 0.0 {
        let blurred = box_filter3(&canvas);
        canvas.zip_mut_with(&blurred, |c, &b| *c = (1.0 - style.blur) * *c + style.blur * b);
    }
    canvas.mapv_inplace(|v| style.bg + v * (style.fg - style.bg));

    // Aspect-preserving resize, style noise, zero center-padding.
    let (h, w) = (cfg.image_height, cfg.image_width);
    let scale = (h as f64 / nat_h as f64).min(w as f64 / nat_w as f64);
    let th = ((nat_h as f64 * scale).round() as usize).clamp(1, h);
    let tw = ((nat_w as f64 * scale).round() as usize).clamp(1, w);
    let mut content = bilinear_resize(&canvas, th, tw);
    if style.noise_amp > 0.0 {
        let mut noise_rng = rng::stream(style_seed, "corpus.noise");
        // The field is drawn at full image size so the draw count never
        // depends on the word; the content box reads its top-left corner.
        let field =
            Array2::<f64>::from_shape_fn((h, w), |_| noise_rng.gen_range(-1.0..1.0));
        for ((y, x), v) in content.indexed_iter_mut() {
            *v = (*v + style.noise_amp * field[(y, x)]).clamp(0.0, 1.0);
        }
    }
    let mut out = Array2::<f32>::zeros((h, w));
    let oy = (h - th) / 2;
    let ox = (w - tw) / 2;
    for ((y, x), &v) in content.indexed_iter() {
        out[(oy + y, ox + x)] = v as f32;
    }
    Ok(out)
}

fn max_filter3(img: &Array2<f64>) -> Array2<f64> {
    let (h, w) = img.dim();
    Array2::from_shape_fn((h, w), |(y, x)| {
        let mut m = 0.0f64;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (py, px) = (y as i64 + dy, x as i64 + dx);
                if py >= 0 && px >= 0 && (py as usize) < h && (px as usize) < w {
                    m = m.max(img[(py as usize, px as usize)]);
                }
            }
        }
        m
    })
}

fn box_filter3(img: &Array2<f64>) -> Array2<f64> {
    let (h, w) = img.dim();
    Array2::from_shape_fn((h, w), |(y, x)| {
        let mut sum = 0.0;
        let mut count = 0.0;
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (py, px) = (y as i64 + dy, x as i64 + dx);
                if py >= 0 && px >= 0 && (py as usize) < h && (px as usize) < w {
                    sum += img[(py as usize, px as usize)];
                    count += 1.0;
                }
            }
        }
        sum / count
    })
}

fn bilinear_resize(img: &Array2<f64>, th: usize, tw: usize) -> Array2<f64> {
    let (h, w) = img.dim();
    Array2::from_shape_fn((th, tw), |(y, x)| {
        let sy = ((y as f64 + 0.5) * h as f64 / th as f64 - 0.5).clamp(0.0, h as f64 - 1.0);
        let sx = ((x as f64 + 0.5) * w as f64 / tw as f64 - 0.5).clamp(0.0, w as f64 - 1.0);
        let (y0, x0) = (sy.floor() as usize, sx.floor() as usize);
        let (y1, x1) = ((y0 + 1).min(h - 1), (x0 + 1).min(w - 1));
        let (fy, fx) = (sy - y0 as f64, sx - x0 as f64);
        img[(y0, x0)] * (1.0 - fy) * (1.0 - fx)
            + img[(y0, x1)] * (1.0 - fy) * fx
            + img[(y1, x0)] * fy * (1.0 - fx)
            + img[(y1, x1)] * fy * fx
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_alphabet;

    fn setup() -> (GlyphSet, CorpusConfig) {
        let cfg = CorpusConfig { alphabet_size: 12, seed: 5, ..CorpusConfig::default() };
        (build_alphabet(&cfg).unwrap(), cfg)
    }

    #[test]
    fn rendering_is_deterministic() {
        let (set, cfg) = setup();
        let a = render_word(&[1, 4, 2], 99, &set, &cfg).unwrap();
        let b = render_word(&[1, 4, 2], 99, &set, &cfg).unwrap();
        assert_eq!(a, b);
        let c = render_word(&[1, 4, 2], 100, &set, &cfg).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn output_shape_is_the_configured_clip_size() {
        let (set, cfg) = setup();
        for len in [1, 3, 8] {
            let labels: Vec<u32> = (0..len as u32).collect();
            let img = render_word(&labels, 7, &set, &cfg).unwrap();
            assert_eq!(img.dim(), (32, 128));
            assert!(img.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn style_vector_is_a_pure_function_of_the_seed() {
        let (_, cfg) = setup();
        // Two different words, same style seed → identical style vectors.
        let a = style_params(1234, &cfg).as_vector();
        let b = style_params(1234, &cfg).as_vector();
        assert_eq!(a, b);
        let c = style_params(1235, &cfg).as_vector();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_words() {
        let (set, cfg) = setup();
        assert!(render_word(&[], 1, &set, &cfg).is_err());
        assert!(render_word(&[99], 1, &set, &cfg).is_err());
        let too_long: Vec<u32> = vec![0; cfg.max_len + 1];
        assert!(render_word(&too_long, 1, &set, &cfg).is_err());
    }
}
