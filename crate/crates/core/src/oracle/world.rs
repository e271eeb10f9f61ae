//! Construction of exactly enumerable discrete worlds.

use crate::error::{Error, Result};
use crate::rng;
use rand::Rng;

/// Hard cap on the number of joint-table entries a world may enumerate to.
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// Which generative assumption a constructed world satisfies or breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WorldKind {
    /// Labels and render symbols are partitioned into per-context blocks and
    /// the emission table is shared across contexts. Within such a world the
    /// image identifies the context exactly and labels are conditionally
    /// independent given it, so all three checked identities hold exactly.
    Satisfying,
    /// Label conditionals are first-order Markov within the word (each label
    /// depends on its predecessor), on overlapping supports. Emissions stay
    /// shared across contexts, isolating the broken independence assumption.
    ViolateA1,
    /// Emission tables differ per context, on overlapping supports. Label
    /// conditionals stay independent per timestamp, isolating the broken
    /// context-free-rendering assumption.
    ViolateA2,
}

impl WorldKind {
    pub fn as_str(self) -> &'static str {
        match self {
            WorldKind::Satisfying => "satisfying",
            WorldKind::ViolateA1 => "violate-a1",
            WorldKind::ViolateA2 => "violate-a2",
        }
    }
}

/// Cardinalities of a discrete world.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WorldSizes {
    /// Number of contexts `|C|`.
    pub contexts: usize,
    /// Number of labels `|Y|`.
    pub labels: usize,
    /// Number of render symbols `|X|`.
    pub renders: usize,
    /// Word length `l` (every word in the world has this length).
    pub len: usize,
}

impl WorldSizes {
    /// Joint-table entry count `|C| * |Y|^l * |X|^l`.
    pub fn joint_entries(&self) -> u128 {
        let y = (self.labels as u128).pow(self.len as u32);
        let x = (self.renders as u128).pow(self.len as u32);
        self.contexts as u128 * y * x
    }
}

/// A fully tabulated generative process
/// `c ~ P(c)`, `y_t ~ P_t(y|c)` (or `P_t(y|c, y_{t-1})`), `x_t ~ P(x|y[,c])`.
#[derive(Debug, Clone)]
pub struct DiscreteWorld {
    sizes: WorldSizes,
    kind: WorldKind,
    /// `P(c)`, length `contexts`.
    prior: Vec<f64>,
    /// `label_cond[t][c][y] = P_t(y | c)`; for `ViolateA1` this is the `t = 0`
    /// distribution only (later steps use `label_trans`).
    label_cond: Vec<Vec<Vec<f64>>>,
    /// `label_trans[t-1][c][prev][y] = P_t(y | c, y_{t-1} = prev)` for t >= 1.
    label_trans: Option<Vec<Vec<Vec<Vec<f64>>>>>,
    /// `emission[c][y][x] = P(x | y, c)`; identical across `c` iff `a2_holds`.
    emission: Vec<Vec<Vec<f64>>>,
    a2_holds: bool,
}

const STOCHASTIC_TOL: f64 = 1e-12;

fn validate_row(row: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &p in row {
        if !(0.0..=1.0 + STOCHASTIC_TOL).contains(&p) {
            return Err(Error::Invalid(format!(
                "{what}: entry {p} outside [0, 1]"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::Invalid(format!(
            "{what}: row sums to {sum}, expected 1 within {STOCHASTIC_TOL}"
        )));
    }
    Ok(())
}

impl DiscreteWorld {
    /// Builds a world from explicit tables (no transition structure). The
    /// tables are validated for shape and row-stochasticity but not altered,
    /// so hand-written probabilities enter the joint table untouched.
    pub fn from_tables(
        sizes: WorldSizes,
        prior: Vec<f64>,
        label_cond: Vec<Vec<Vec<f64>>>,
        emission: Vec<Vec<Vec<f64>>>,
    ) -> Result<DiscreteWorld> {
        let WorldSizes { contexts, labels, renders, len } = sizes;
        if prior.len() != contexts {
            return Err(Error::Invalid(format!(
                "prior has {} entries, expected {contexts}",
                prior.len()
            )));
        }
        validate_row(&prior, "context prior")?;
        if label_cond.len() != len {
            return Err(Error::Invalid(format!(
                "label_cond has {} timestamps, expected {len}",
                label_cond.len()
            )));
        }
        for (t, per_c) in label_cond.iter().enumerate() {
            if per_c.len() != contexts {
                return Err(Error::Invalid(format!(
                    "label_cond[{t}] has {} contexts, expected {contexts}",
                    per_c.len()
                )));
            }
            for (c, row) in per_c.iter().enumerate() {
                if row.len() != labels {
                    return Err(Error::Invalid(format!(
                        "label_cond[{t}][{c}] has {} labels, expected {labels}",
                        row.len()
                    )));
                }
                validate_row(row, &format!("label_cond[{t}][{c}]"))?;
            }
        }
        if emission.len() != contexts {
            return Err(Error::Invalid(format!(
                "emission has {} contexts, expected {contexts}",
                emission.len()
            )));
        }
        for (c, per_y) in emission.iter().enumerate() {
            if per_y.len() != labels {
                return Err(Error::Invalid(format!(
                    "emission[{c}] has {} labels, expected {labels}",
                    per_y.len()
                )));
            }
            for (y, row) in per_y.iter().enumerate() {
                if row.len() != renders {
                    return Err(Error::Invalid(format!(
                        "emission[{c}][{y}] has {} renders, expected {renders}",
                        row.len()
                    )));
                }
                validate_row(row, &format!("emission[{c}][{y}]"))?;
            }
        }
        let a2_holds = emission.iter().all(|e| e == &emission[0]);
        let kind = if a2_holds { WorldKind::Satisfying } else { WorldKind::ViolateA2 };
        Ok(DiscreteWorld { sizes, kind, prior, label_cond, label_trans: None, emission, a2_holds })
    }

    pub fn sizes(&self) -> WorldSizes {
        self.sizes
    }

    pub fn kind(&self) -> WorldKind {
        self.kind
    }

    /// Whether the emission tables are identical across contexts (exact
    /// equality, not a tolerance check).
    pub fn a2_holds(&self) -> bool {
        self.a2_holds
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn emission(&self, c: usize) -> &Vec<Vec<f64>> {
        &self.emission[c]
    }

    /// `P(y_0, .., y_{l-1} | c)` under this world's label process.
    pub fn word_prob_given_context(&self, c: usize, ys: &[usize]) -> f64 {
        debug_assert_eq!(ys.len(), self.sizes.len);
        let mut p = self.label_cond[0][c][ys[0]];
        for t in 1..ys.len() {
            p *= match &self.label_trans {
                Some(trans) => trans[t - 1][c][ys[t - 1]][ys[t]],
                None => self.label_cond[t][c][ys[t]],
            };
        }
        p
    }

    /// `P(x_0, .., x_{l-1} | y, c) = prod_t P(x_t | y_t, c)`.
    pub fn render_prob(&self, c: usize, ys: &[usize], xs: &[usize]) -> f64 {
        debug_assert_eq!(ys.len(), xs.len());
        let table = &self.emission[c];
        ys.iter().zip(xs).map(|(&y, &x)| table[y][x]).product()
    }

    /// Exact joint `P(c, y, x)`.
    pub fn joint_prob(&self, c: usize, ys: &[usize], xs: &[usize]) -> f64 {
        self.prior[c] * self.word_prob_given_context(c, ys) * self.render_prob(c, ys, xs)
    }
}

/// Splits `n` items into `parts` contiguous runs of near-equal size; run `k`
/// is `ranges[k].0 .. ranges[k].1`.
fn partition(n: usize, parts: usize) -> Vec<(usize, usize)> {
    let base = n / parts;
    let extra = n % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for k in 0..parts {
        let size = base + usize::from(k < extra);
        out.push((start, start + size));
        start += size;
    }
    out
}

/// Random positive probability vector over `lo..hi` (zero elsewhere), with
/// entries bounded away from zero; `sharp` squares the raw draws to raise
/// contrast between likely and unlikely outcomes.
fn random_dist<R: Rng>(rng: &mut R, n: usize, lo: usize, hi: usize, sharp: bool) -> Vec<f64> {
    let mut row = vec![0.0; n];
    let mut sum = 0.0;
    for slot in row.iter_mut().take(hi).skip(lo) {
        let u: f64 = rng.gen_range(0.05..1.0);
        let w = if sharp { u * u } else { u };
        *slot = w;
        sum += w;
    }
    for slot in row.iter_mut() {
        *slot /= sum;
    }
    row
}

/// Deterministically constructs a world of the requested kind.
///
/// Satisfying worlds partition labels and render symbols into `contexts`
/// contiguous blocks: context `k` draws labels only from label block `k`, and
/// a single emission table (shared by every context) sends label block `k`
/// only into render block `k`. Violated worlds use full, overlapping supports
/// and break exactly one assumption as documented on [`WorldKind`].
pub fn build_world(kind: WorldKind, sizes: WorldSizes, seed: u64) -> Result<DiscreteWorld> {
    let WorldSizes { contexts, labels, renders, len } = sizes;
    if contexts < 2 || labels < 2 || len == 0 {
        return Err(Error::Infeasible(format!(
            "world needs >= 2 contexts, >= 2 labels, len >= 1; got {sizes:?}"
        )));
    }
    if renders < labels {
        return Err(Error::Infeasible(format!(
            "world needs at least as many render symbols as labels; got {sizes:?}"
        )));
    }
    let entries = sizes.joint_entries();
    if entries > ENUMERATION_CAP {
        return Err(Error::EnumerationCap(entries, ENUMERATION_CAP));
    }
    if kind == WorldKind::Satisfying && labels < contexts {
        return Err(Error::Infeasible(format!(
            "block construction needs >= 1 label per context; got {sizes:?}"
        )));
    }
    if kind == WorldKind::ViolateA1 && len < 2 {
        return Err(Error::Infeasible(
            "prefix-dependent world needs len >= 2".into(),
        ));
    }

    let mut rng = rng::stream_n(seed, &format!("oracle.world.{}", kind.as_str()), len as u64);
    let prior = random_dist(&mut rng, contexts, 0, contexts, false);

    let world = match kind {
        WorldKind::Satisfying => {
            let y_blocks = partition(labels, contexts);
            let x_blocks = partition(renders, contexts);
            // Near-equal splits allocate their remainders to the lowest
            // blocks in the same order, so renders >= labels guarantees each
            // render block can cover its label block.
            for (yb, xb) in y_blocks.iter().zip(&x_blocks) {
                debug_assert!(xb.1 - xb.0 >= yb.1 - yb.0);
            }
            let mut label_cond = Vec::with_capacity(len);
            for _ in 0..len {
                let per_c: Vec<Vec<f64>> = y_blocks
                    .iter()
                    .map(|&(lo, hi)| random_dist(&mut rng, labels, lo, hi, false))
                    .collect();
                label_cond.push(per_c);
            }
            let shared: Vec<Vec<f64>> = (0..labels)
                .map(|y| {
                    let k = y_blocks.iter().position(|&(lo, hi)| (lo..hi).contains(&y)).unwrap();
                    let (lo, hi) = x_blocks[k];
                    random_dist(&mut rng, renders, lo, hi, false)
                })
                .collect();
            let emission = vec![shared; contexts];
            DiscreteWorld {
                sizes,
                kind,
                prior,
                label_cond,
                label_trans: None,
                emission,
                a2_holds: true,
            }
        }
        WorldKind::ViolateA1 => {
            let first: Vec<Vec<f64>> = (0..contexts)
                .map(|_| random_dist(&mut rng, labels, 0, labels, true))
                .collect();
            let label_cond = vec![first];
            let mut label_trans = Vec::with_capacity(len - 1);
            for _ in 1..len {
                let per_c: Vec<Vec<Vec<f64>>> = (0..contexts)
                    .map(|_| {
                        (0..labels)
                            .map(|_| random_dist(&mut rng, labels, 0, labels, true))
                            .collect()
                    })
                    .collect();
                label_trans.push(per_c);
            }
            let shared: Vec<Vec<f64>> = (0..labels)
                .map(|_| random_dist(&mut rng, renders, 0, renders, true))
                .collect();
            let emission = vec![shared; contexts];
            DiscreteWorld {
                sizes,
                kind,
                prior,
                label_cond,
                label_trans: Some(label_trans),
                emission,
                a2_holds: true,
            }
        }
        WorldKind::ViolateA2 => {
            let mut label_cond = Vec::with_capacity(len);
            for _ in 0..len {
                let per_c: Vec<Vec<f64>> = (0..contexts)
                    .map(|_| random_dist(&mut rng, labels, 0, labels, true))
                    .collect();
                label_cond.push(per_c);
            }
            let emission: Vec<Vec<Vec<f64>>> = (0..contexts)
                .map(|_| {
                    (0..labels)
                        .map(|_| random_dist(&mut rng, renders, 0, renders, true))
                        .collect()
                })
                .collect();
            DiscreteWorld {
                sizes,
                kind,
                prior,
                label_cond,
                label_trans: None,
                emission,
                a2_holds: false,
            }
        }
    };
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_is_contiguous_and_exhaustive() {
        for n in 2..20 {
            for parts in 2..=n.min(6) {
                let ranges = partition(n, parts);
                assert_eq!(ranges[0].0, 0);
                assert_eq!(ranges[parts - 1].1, n);
                for w in ranges.windows(2) {
                    assert_eq!(w[0].1, w[1].0);
                    assert!(w[0].1 > w[0].0);
                }
            }
        }
    }

    #[test]
    fn build_is_deterministic_per_seed() {
        let sizes = WorldSizes { contexts: 2, labels: 4, renders: 6, len: 2 };
        for kind in [WorldKind::Satisfying, WorldKind::ViolateA1, WorldKind::ViolateA2] {
            let a = build_world(kind, sizes, 7).unwrap();
            let b = build_world(kind, sizes, 7).unwrap();
            assert_eq!(a.prior, b.prior);
            assert_eq!(a.label_cond, b.label_cond);
            assert_eq!(a.emission, b.emission);
            let c = build_world(kind, sizes, 8).unwrap();
            assert_ne!(a.prior, c.prior);
        }
    }

    #[test]
    fn satisfying_world_shares_emissions_exactly() {
        // Trivial shape: 2 contexts, 2 labels, 3 renders, single-step words.
        let sizes = WorldSizes { contexts: 2, labels: 2, renders: 3, len: 1 };
        let w = build_world(WorldKind::Satisfying, sizes, 3).unwrap();
        assert!(w.a2_holds());
        assert_eq!(w.emission(0), w.emission(1));
        // Block structure: label 0 only renders into block 0, label 1 into block 1.
        assert!(w.emission(0)[0][2] == 0.0 && w.emission(0)[1][0] == 0.0);
    }

    #[test]
    fn violating_world_emissions_differ() {
        let sizes = WorldSizes { contexts: 2, labels: 3, renders: 4, len: 2 };
        let w = build_world(WorldKind::ViolateA2, sizes, 3).unwrap();
        assert!(!w.a2_holds());
        assert_ne!(w.emission(0), w.emission(1));
    }

    #[test]
    fn enumeration_cap_is_enforced() {
        let sizes = WorldSizes { contexts: 4, labels: 30, renders: 40, len: 4 };
        match build_world(WorldKind::Satisfying, sizes, 0) {
            Err(crate::Error::EnumerationCap(need, cap)) => {
                assert!(need > cap);
            }
            other => panic!("expected EnumerationCap, got {other:?}"),
        }
    }

    #[test]
    fn hand_built_joint_matches_product() {
        // [DERIVED] 0.5 * 0.9 * 0.8 = 0.36.
        let sizes = WorldSizes { contexts: 2, labels: 2, renders: 3, len: 1 };
        let shared = vec![vec![0.8, 0.15, 0.05], vec![0.1, 0.3, 0.6]];
        let w = DiscreteWorld::from_tables(
            sizes,
            vec![0.5, 0.5],
            vec![vec![vec![0.9, 0.1], vec![0.2, 0.8]]],
            vec![shared.clone(), shared],
        )
        .unwrap();
        assert!((w.joint_prob(0, &[0], &[0]) - 0.36).abs() < 1e-15);
        assert!(w.a2_holds());
    }

    #[test]
    fn from_tables_rejects_non_stochastic_rows() {
        let sizes = WorldSizes { contexts: 2, labels: 2, renders: 2, len: 1 };
        let bad = DiscreteWorld::from_tables(
            sizes,
            vec![0.5, 0.6],
            vec![vec![vec![0.5, 0.5], vec![0.5, 0.5]]],
            vec![
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
                vec![vec![0.5, 0.5], vec![0.5, 0.5]],
            ],
        );
        assert!(matches!(bad, Err(crate::Error::Invalid(_))));
    }
}
