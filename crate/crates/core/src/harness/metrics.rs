//! Sequence metrics: Line Accuracy and Character Accuracy (1-NED).

/// Sentinel for UNK emissions in decoded sequences. Never a valid label id
/// (corpus label ids are dense and start at 0), so an UNK prediction counts
/// as a wrong character against every ground truth.
pub const UNK_TOKEN: u32 = u32::MAX;

/// Edit distance between two label sequences.
pub fn levenshtein(a: &[u32], b: &[u32]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Fraction of samples whose prediction matches the ground truth exactly.
pub fn line_accuracy(preds: &[Vec<u32>], gts: &[Vec<u32>]) -> f64 {
    assert_eq!(preds.len(), gts.len(), "prediction/ground-truth count mismatch");
    assert!(!preds.is_empty(), "line accuracy over an empty set");
    let hits = preds.iter().zip(gts).filter(|(p, g)| p == g).count();
    hits as f64 / preds.len() as f64
}

/// Character accuracy of one sample: `1 − edit_distance / max(|gt|, |pred|)`,
/// with the empty-vs-empty pair scoring 1.
pub fn char_accuracy_sample(pred: &[u32], gt: &[u32]) -> f64 {
    let denom = pred.len().max(gt.len());
    if denom == 0 {
        return 1.0;
    }
    1.0 - levenshtein(pred, gt) as f64 / denom as f64
}

/// Mean per-sample character accuracy (the "1-NED" of the evaluation
/// protocol).
pub fn char_accuracy_1ned(preds: &[Vec<u32>], gts: &[Vec<u32>]) -> f64 {
    assert_eq!(preds.len(), gts.len(), "prediction/ground-truth count mismatch");
    assert!(!preds.is_empty(), "1-NED over an empty set");
    let total: f64 = preds.iter().zip(gts).map(|(p, g)| char_accuracy_sample(p, g)).sum();
    total / preds.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levenshtein_textbook_cases() {
        assert_eq!(levenshtein(&[], &[]), 0);
        assert_eq!(levenshtein(&[1, 2, 3], &[1, 2, 3]), 0);
        assert_eq!(levenshtein(&[1, 2, 3], &[]), 3);
        assert_eq!(levenshtein(&[], &[7, 8]), 2);
        // kitten → sitting as label ids.
        let kitten = [10, 8, 19, 19, 4, 13];
        let sitting = [18, 8, 19, 19, 8, 13, 6];
        assert_eq!(levenshtein(&kitten, &sitting), 3);
        // Transposition costs 2 (no Damerau extension).
        assert_eq!(levenshtein(&[1, 2], &[2, 1]), 2);
    }

    #[test]
    fn char_accuracy_matches_worked_examples() {
        // ("abc", "abd") → 1 − 1/3.
        let acc = char_accuracy_sample(&[0, 1, 2], &[0, 1, 3]);
        assert!((acc - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
        assert!((acc - 0.6667).abs() < 1e-4);
        // ("", "ab") → 0.
        assert_eq!(char_accuracy_sample(&[], &[0, 1]), 0.0);
        // Empty vs empty → 1.
        assert_eq!(char_accuracy_sample(&[], &[]), 1.0);
        // An UNK emission counts as a wrong character.
        let acc = char_accuracy_sample(&[0, UNK_TOKEN, 2], &[0, 1, 2]);
        assert!((acc - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn aggregates_average_over_samples() {
        let preds = vec![vec![1, 2], vec![3], vec![4, 5, 6]];
        let gts = vec![vec![1, 2], vec![3, 9], vec![4, 5, 6]];
        assert!((line_accuracy(&preds, &gts) - 2.0 / 3.0).abs() < 1e-12);
        let expect = (1.0 + 0.5 + 1.0) / 3.0;
        assert!((char_accuracy_1ned(&preds, &gts) - expect).abs() < 1e-12);
    }
}
