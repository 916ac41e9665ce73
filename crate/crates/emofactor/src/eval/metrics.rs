//! Recall-based scoring: unweighted average recall and confusion matrices
//! over the four emotion classes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::record::EmotionLabel;

/// Unweighted average recall in percent: the mean, over classes that occur
/// in `labels`, of per-class recall. Classes absent from the ground truth do
/// not dilute the mean.
pub fn uar(preds: &[EmotionLabel], labels: &[EmotionLabel]) -> Result<f64> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch(preds.len(), labels.len()));
    }
    if labels.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut totals = [0usize; 4];
    let mut hits = [0usize; 4];
    for (p, l) in preds.iter().zip(labels.iter()) {
        totals[l.index()] += 1;
        if p == l {
            hits[l.index()] += 1;
        }
    }
    let mut sum = 0.0;
    let mut present = 0usize;
    for c in 0..4 {
        if totals[c] > 0 {
            sum += hits[c] as f64 / totals[c] as f64;
            present += 1;
        }
    }
    Ok(sum / present as f64 * 100.0)
}

/// Prediction counts per ground-truth class; rows are truth, columns are
/// predictions, both in class-index order A, H, S, N.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    /// Row-normalized view in percent. Rows with no samples stay all-zero.
    pub fn normalized(&self) -> [[f64; 4]; 4] {
        let mut out = [[0.0; 4]; 4];
        for (i, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (j, &c) in row.iter().enumerate() {
                    out[i][j] = c as f64 / total as f64 * 100.0;
                }
            }
        }
        out
    }

    /// Samples per ground-truth class.
    pub fn row_totals(&self) -> [u64; 4] {
        let mut t = [0u64; 4];
        for (i, row) in self.counts.iter().enumerate() {
            t[i] = row.iter().sum();
        }
        t
    }
}

pub fn confusion_matrix(preds: &[EmotionLabel], labels: &[EmotionLabel]) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::LengthMismatch(preds.len(), labels.len()));
    }
    let mut counts = [[0u64; 4]; 4];
    for (p, l) in preds.iter().zip(labels.iter()) {
        counts[l.index()][p.index()] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use EmotionLabel::{A, H, N, S};

    /// Deliberately different implementation: explicit per-class loops over
    /// the raw slices.
    fn uar_brute_force(preds: &[EmotionLabel], labels: &[EmotionLabel]) -> f64 {
        let mut recalls = Vec::new();
        for class in EmotionLabel::ALL {
            let idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if idx.is_empty() {
                continue;
            }
            let correct = idx.iter().filter(|&&i| preds[i] == class).count();
            recalls.push(correct as f64 / idx.len() as f64);
        }
        recalls.iter().sum::<f64>() / recalls.len() as f64 * 100.0
    }

    #[test]
    fn perfect_predictions_score_100() {
        let labels = vec![A, H, S, N, A, S];
        assert_eq!(uar(&labels, &labels).unwrap(), 100.0);
    }

    #[test]
    fn hand_computed_mixed_case() {
        // Recalls: A 1/2, H 1/1, S 1/1; N absent and excluded.
        let labels = [A, A, H, S];
        let preds = [A, H, H, S];
        let got = uar(&preds, &labels).unwrap();
        assert!((got - 250.0 / 3.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn length_mismatch_and_empty_are_rejected() {
        assert!(matches!(uar(&[A], &[A, H]), Err(Error::LengthMismatch(1, 2))));
        assert!(uar(&[], &[]).is_err());
        assert!(matches!(
            confusion_matrix(&[A], &[A, H]),
            Err(Error::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn matches_brute_force_on_random_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        for _ in 0..1000 {
            let n = rng.gen_range(1..=200);
            let labels: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let preds: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let fast = uar(&preds, &labels).unwrap();
            let slow = uar_brute_force(&preds, &labels);
            assert!((fast - slow).abs() < 1e-9, "fast {fast} slow {slow}");
        }
    }

    #[test]
    fn invariant_under_joint_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let perms: [[usize; 4]; 4] = [[1, 0, 3, 2], [3, 2, 1, 0], [2, 3, 0, 1], [1, 2, 3, 0]];
        for perm in perms {
            let n = 120;
            let labels: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let preds: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let relabel =
                |v: &[EmotionLabel]| -> Vec<EmotionLabel> {
                    v.iter()
                        .map(|l| EmotionLabel::from_index(perm[l.index()]).unwrap())
                        .collect()
                };
            let base = uar(&preds, &labels).unwrap();
            let mapped = uar(&relabel(&preds), &relabel(&labels)).unwrap();
            assert!((base - mapped).abs() < 1e-9);
        }
    }

    #[test]
    fn confusion_identity_is_diagonal() {
        let labels = vec![A, H, S, N, A, H, S, N];
        let m = confusion_matrix(&labels, &labels).unwrap();
        let norm = m.normalized();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 100.0 } else { 0.0 };
                assert_eq!(norm[i][j], want);
            }
        }
    }

    #[test]
    fn confusion_hand_count() {
        let labels = [A, A];
        let preds = [H, S];
        let m = confusion_matrix(&preds, &labels).unwrap();
        assert_eq!(m.counts[0], [0, 1, 1, 0]);
        let norm = m.normalized();
        assert_eq!(norm[0], [0.0, 50.0, 50.0, 0.0]);
        // Empty rows stay zero rather than NaN.
        assert_eq!(norm[1], [0.0; 4]);
    }

    #[test]
    fn normalized_rows_sum_to_100_for_present_classes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let n = rng.gen_range(1..=80);
            let labels: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let preds: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let m = confusion_matrix(&preds, &labels).unwrap();
            let norm = m.normalized();
            for (i, &total) in m.row_totals().iter().enumerate() {
                if total > 0 {
                    let sum: f64 = norm[i].iter().sum();
                    assert!((sum - 100.0).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn diagonal_mean_equals_uar() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=60);
            let labels: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let preds: Vec<EmotionLabel> = (0..n)
                .map(|_| EmotionLabel::from_index(rng.gen_range(0..4)).unwrap())
                .collect();
            let m = confusion_matrix(&preds, &labels).unwrap();
            let norm = m.normalized();
            let totals = m.row_totals();
            let mut sum = 0.0;
            let mut present = 0;
            for i in 0..4 {
                if totals[i] > 0 {
                    sum += norm[i][i];
                    present += 1;
                }
            }
            let diag_mean = sum / present as f64;
            let score = uar(&preds, &labels).unwrap();
            assert!((diag_mean - score).abs() < 1e-9);
        }
    }
}
