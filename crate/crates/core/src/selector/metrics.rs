//! Support-weighted classification metrics over the three method labels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_LABELS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub weighted_precision: f64,
    pub weighted_recall: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    /// `confusion[true][predicted]`.
    pub confusion: [[usize; N_LABELS]; N_LABELS],
    pub support: [usize; N_LABELS],
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn evaluate_metrics(y_true: &[usize], y_pred: &[usize]) -> Result<ClassificationReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::arg(format!(
            "{} true labels but {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mut confusion = [[0usize; N_LABELS]; N_LABELS];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= N_LABELS || p >= N_LABELS {
            return Err(Error::arg(format!("label pair ({t}, {p}) outside the 3-class space")));
        }
        confusion[t][p] += 1;
    }
    let total = y_true.len();
    let mut support = [0usize; N_LABELS];
    for (c, row) in confusion.iter().enumerate() {
        support[c] = row.iter().sum();
    }
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for c in 0..N_LABELS {
        let tp = confusion[c][c] as f64;
        let predicted: usize = (0..N_LABELS).map(|t| confusion[t][c]).sum();
        let precision = ratio(tp, predicted as f64);
        let recall = ratio(tp, support[c] as f64);
        let f1 = ratio(2.0 * precision * recall, precision + recall);
        let weight = support[c] as f64;
        wp += weight * precision;
        wr += weight * recall;
        wf += weight * f1;
    }
    let total_f = total as f64;
    let correct: usize = (0..N_LABELS).map(|c| confusion[c][c]).sum();
    Ok(ClassificationReport {
        weighted_precision: ratio(wp, total_f),
        weighted_recall: ratio(wr, total_f),
        weighted_f1: ratio(wf, total_f),
        accuracy: ratio(correct as f64, total as f64),
        confusion,
        support,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 2, 1, 0, 0];
        let r = evaluate_metrics(&y, &y).unwrap();
        assert_eq!(r.weighted_f1, 1.0);
        assert_eq!(r.weighted_precision, 1.0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.confusion, [[3, 0, 0], [0, 2, 0], [0, 0, 2]]);
    }

    #[test]
    fn all_wrong_binary_style() {
        let r = evaluate_metrics(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.weighted_precision, 0.0);
        assert_eq!(r.weighted_recall, 0.0);
        assert_eq!(r.weighted_f1, 0.0);
    }

    /// Confusion [[2,1,0],[0,3,0],[1,0,3]] worked by hand:
    /// class 0: P = 2/3, R = 2/3, F1 = 2/3, support 3
    /// class 1: P = 3/4, R = 1,   F1 = 6/7, support 3
    /// class 2: P = 1,   R = 3/4, F1 = 6/7, support 4
    #[test]
    fn hand_table_weighted_f1() {
        let confusion = [[2, 1, 0], [0, 3, 0], [1, 0, 3]];
        let (mut t, mut p) = (Vec::new(), Vec::new());
        for (i, row) in confusion.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                for _ in 0..c {
                    t.push(i);
                    p.push(j);
                }
            }
        }
        let r = evaluate_metrics(&t, &p).unwrap();
        assert_eq!(r.confusion, confusion);
        let f1 = (3.0 * (2.0 / 3.0) + 3.0 * (6.0 / 7.0) + 4.0 * (6.0 / 7.0)) / 10.0;
        let precision = (3.0 * (2.0 / 3.0) + 3.0 * 0.75 + 4.0 * 1.0) / 10.0;
        assert!((r.weighted_f1 - f1).abs() < 1e-12);
        assert!((r.weighted_precision - precision).abs() < 1e-12);
        assert!((r.accuracy - 0.8).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(evaluate_metrics(&[0, 1], &[0]).is_err());
        assert!(evaluate_metrics(&[3], &[0]).is_err());
    }

    proptest! {
        #[test]
        fn weighted_recall_equals_accuracy(seed in 0u64..500, n in 3usize..60) {
            let mut rng = rng_from_seed(seed);
            let t: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            let mut p: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
            p[0] = 0;
            p[1] = 1;
            p[2] = 2;
            let r = evaluate_metrics(&t, &p).unwrap();
            prop_assert!((r.weighted_recall - r.accuracy).abs() < 1e-12);
            for c in 0..3 {
                prop_assert_eq!(r.confusion[c].iter().sum::<usize>(), r.support[c]);
            }
        }
    }
}
