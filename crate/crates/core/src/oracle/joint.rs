//! Dense enumeration of a world's joint distribution and its marginals.

use super::world::{DiscreteWorld, ENUMERATION_CAP};
use crate::error::{Error, Result};

/// The full joint `P(c, y, x)` of a [`DiscreteWorld`], stored densely, plus
/// the marginals the identity checks consume. Words are encoded big-endian:
/// `yidx = sum_t y_t * labels^(len-1-t)` and likewise for render strings.
///
/// All marginals are plain sums over the dense table — no closed forms — so
/// every check in [`super::checks`] compares quantities derived from the same
/// exhaustive enumeration.
pub struct JointTable {
    contexts: usize,
    labels: usize,
    renders: usize,
    len: usize,
    /// `p[(c * labels^len + yidx) * renders^len + xidx]`.
    p: Vec<f64>,
    /// `P(x)` per `xidx`.
    m_x: Vec<f64>,
    /// `P(y, x)` at `yidx * renders^len + xidx`.
    m_yx: Vec<f64>,
    /// `P(c, x)` at `c * renders^len + xidx`.
    m_cx: Vec<f64>,
    /// Per-timestamp symbol marginals `P(y_t = y, x_t = x, c)` at
    /// `((t * labels + y) * renders + x) * contexts + c`.
    m_t_yxc: Vec<f64>,
}

impl JointTable {
    pub fn new(world: &DiscreteWorld) -> Result<JointTable> {
        let sizes = world.sizes();
        let entries = sizes.joint_entries();
        if entries > ENUMERATION_CAP {
            return Err(Error::EnumerationCap(entries, ENUMERATION_CAP));
        }
        let (contexts, labels, renders, len) =
            (sizes.contexts, sizes.labels, sizes.renders, sizes.len);
        let ny = labels.pow(len as u32);
        let nx = renders.pow(len as u32);

        let mut p = vec![0.0; contexts * ny * nx];
        let mut m_x = vec![0.0; nx];
        let mut m_yx = vec![0.0; ny * nx];
        let mut m_cx = vec![0.0; contexts * nx];
        let mut m_t_yxc = vec![0.0; len * labels * renders * contexts];

        let mut ys = vec![0usize; len];
        let mut xs = vec![0usize; len];
        for c in 0..contexts {
            for yidx in 0..ny {
                decode(yidx, labels, &mut ys);
                let py = world.prior()[c] * world.word_prob_given_context(c, &ys);
                if py == 0.0 {
                    continue;
                }
                for xidx in 0..nx {
                    decode(xidx, renders, &mut xs);
                    let prob = py * world.render_prob(c, &ys, &xs);
                    if prob == 0.0 {
                        continue;
                    }
                    p[(c * ny + yidx) * nx + xidx] = prob;
                    m_x[xidx] += prob;
                    m_yx[yidx * nx + xidx] += prob;
                    m_cx[c * nx + xidx] += prob;
                    for t in 0..len {
                        m_t_yxc[((t * labels + ys[t]) * renders + xs[t]) * contexts + c] += prob;
                    }
                }
            }
        }
        Ok(JointTable { contexts, labels, renders, len, p, m_x, m_yx, m_cx, m_t_yxc })
    }

    pub fn contexts(&self) -> usize {
        self.contexts
    }

    pub fn labels(&self) -> usize {
        self.labels
    }

    pub fn renders(&self) -> usize {
        self.renders
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of distinct label words `labels^len`.
    pub fn n_words(&self) -> usize {
        self.labels.pow(self.len as u32)
    }

    /// Number of distinct render strings `renders^len`.
    pub fn n_images(&self) -> usize {
        self.renders.pow(self.len as u32)
    }

    /// Joint `P(c, y, x)` by encoded indices.
    pub fn joint(&self, c: usize, yidx: usize, xidx: usize) -> f64 {
        self.p[(c * self.n_words() + yidx) * self.n_images() + xidx]
    }

    /// `P(x)`.
    pub fn p_x(&self, xidx: usize) -> f64 {
        self.m_x[xidx]
    }

    /// `P(y, x)`.
    pub fn p_yx(&self, yidx: usize, xidx: usize) -> f64 {
        self.m_yx[yidx * self.n_images() + xidx]
    }

    /// `P(c, x)`.
    pub fn p_cx(&self, c: usize, xidx: usize) -> f64 {
        self.m_cx[c * self.n_images() + xidx]
    }

    /// Per-timestamp `P(y_t = y, x_t = x, c)`.
    pub fn p_t_yxc(&self, t: usize, y: usize, x: usize, c: usize) -> f64 {
        self.m_t_yxc[((t * self.labels + y) * self.renders + x) * self.contexts + c]
    }

    /// Per-timestamp `P(y_t = y, x_t = x)`.
    pub fn p_t_yx(&self, t: usize, y: usize, x: usize) -> f64 {
        (0..self.contexts).map(|c| self.p_t_yxc(t, y, x, c)).sum()
    }

    /// Per-timestamp `P(y_t = y, c)`.
    pub fn p_t_yc(&self, t: usize, y: usize, c: usize) -> f64 {
        (0..self.renders).map(|x| self.p_t_yxc(t, y, x, c)).sum()
    }

    /// Per-timestamp `P(x_t = x, c)`.
    pub fn p_t_xc(&self, t: usize, x: usize, c: usize) -> f64 {
        (0..self.labels).map(|y| self.p_t_yxc(t, y, x, c)).sum()
    }

    /// Per-timestamp `P(x_t = x)`.
    pub fn p_t_x(&self, t: usize, x: usize) -> f64 {
        (0..self.contexts).map(|c| self.p_t_xc(t, x, c)).sum()
    }

    /// Per-timestamp label marginal `P(y_t = y)`.
    pub fn p_t_y(&self, t: usize, y: usize) -> f64 {
        (0..self.contexts).map(|c| self.p_t_yc(t, y, c)).sum()
    }

    /// Decodes an encoded word into digit form (most significant first).
    pub fn decode_y(&self, yidx: usize) -> Vec<usize> {
        let mut out = vec![0; self.len];
        decode(yidx, self.labels, &mut out);
        out
    }

    /// Decodes an encoded render string into digit form.
    pub fn decode_x(&self, xidx: usize) -> Vec<usize> {
        let mut out = vec![0; self.len];
        decode(xidx, self.renders, &mut out);
        out
    }

    /// Encodes a label word.
    pub fn encode_y(&self, ys: &[usize]) -> usize {
        encode(ys, self.labels)
    }
}

fn decode(mut idx: usize, base: usize, out: &mut [usize]) {
    for slot in out.iter_mut().rev() {
        *slot = idx % base;
        idx /= base;
    }
}

fn encode(digits: &[usize], base: usize) -> usize {
    digits.iter().fold(0, |acc, &d| acc * base + d)
}
