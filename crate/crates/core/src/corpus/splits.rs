//! Seen/novel label partitioning and the skewed training bigram.

use super::SplitSpec;
use crate::error::{Error, Result};
use crate::rng;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;

/// Partitions the alphabet into seen/novel label sets and builds the
/// row-stochastic bigram over seen labels with a seeded skew: high cells are
/// `skew` times more probable than low cells within each row, so the
/// training corpus carries nontrivial linguistic structure that the
/// uniform-model test splits deliberately do not share.
pub fn make_splits(m: usize, seen_fraction: f64, skew: f64, seed: u64) -> Result<SplitSpec> {
    if !(seen_fraction > 0.0 && seen_fraction < 1.0) {
        return Err(Error::Config("seen_fraction must lie in (0, 1)".into()));
    }
    let n_seen = (m as f64 * seen_fraction).round() as usize;
    if n_seen == 0 || n_seen == m {
        return Err(Error::Infeasible(format!(
            "seen_fraction {seen_fraction} leaves an empty side for M = {m}"
        )));
    }
    let mut order: Vec<u32> = (0..m as u32).collect();
    let mut rng = rng::stream(seed, "corpus.split");
    order.shuffle(&mut rng);
    let mut seen: Vec<u32> = order[..n_seen].to_vec();
    let mut novel: Vec<u32> = order[n_seen..].to_vec();
    seen.sort_unstable();
    novel.sort_unstable();

    let s = n_seen;
    let mut bigram = Array2::<f64>::zeros((s, s));
    let mut brng = rng::stream(seed, "corpus.bigram");
    for i in 0..s {
        let mut high = vec![false; s];
        for flag in high.iter_mut() {
            *flag = brng.gen_bool(0.3);
        }
        // Guarantee each row has both levels so the in-row max/min
        // probability ratio equals the skew exactly.
        if high.iter().all(|&h| h) {
            high[i] = false;
        }
        if high.iter().all(|&h| !h) {
            high[(i + 1) % s] = true;
        }
        let mut total = 0.0;
        for j in 0..s {
            let w = if high[j] { skew } else { 1.0 };
            bigram[(i, j)] = w;
            total += w;
        }
        for j in 0..s {
            bigram[(i, j)] /= total;
        }
    }

    let spec = SplitSpec { seen, novel, seed, bigram };
    spec.validate(m)?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_sizes_and_disjointness() {
        // (M=60, 2/3, seed) → 40 seen, 20 novel, disjoint.
        let spec = make_splits(60, 2.0 / 3.0, 10.0, 3).unwrap();
        assert_eq!(spec.seen.len(), 40);
        assert_eq!(spec.novel.len(), 20);
        assert!(spec.seen.iter().all(|l| !spec.novel.contains(l)));
        spec.validate(60).unwrap();
    }

    #[test]
    fn bigram_rows_sum_to_one_with_skew() {
        let spec = make_splits(30, 0.5, 10.0, 11).unwrap();
        for row in spec.bigram.rows() {
            let sum: f64 = row.sum();
            assert!((sum - 1.0).abs() < 1e-12);
            let max = row.iter().cloned().fold(f64::MIN, f64::max);
            let min = row.iter().cloned().fold(f64::MAX, f64::min);
            // [DERIVED] in-row probability ratio ≥ 5 (equals the skew, 10).
            assert!(max / min >= 5.0, "ratio {}", max / min);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_splits(40, 0.6, 10.0, 5).unwrap();
        let b = make_splits(40, 0.6, 10.0, 5).unwrap();
        assert_eq!(a, b);
        let c = make_splits(40, 0.6, 10.0, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_side_is_infeasible() {
        assert!(make_splits(3, 0.05, 10.0, 0).is_err());
    }
}
