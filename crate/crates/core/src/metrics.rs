//! Confusion matrices and support-weighted multiclass metrics.
//!
//! Aggregates use support weighting: each class's metric is weighted by its
//! true-instance count. Weighted terms are evaluated as
//! `(support * numerator) / denominator`, which keeps weighted recall exactly
//! equal to accuracy (the numerator telescopes to the matrix trace) without
//! special-casing any metric.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::num::{from_count, Real};

/// Per-class confusion counts; `counts[i][j]` is rows of true class `i`
/// predicted as class `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    classes: Vec<String>,
    counts: Vec<Vec<usize>>,
}

/// Tallies a confusion matrix from parallel truth/prediction vectors.
pub fn confusion(
    y_true: &[usize],
    y_pred: &[usize],
    class_count: usize,
) -> Result<ConfusionMatrix> {
    let names = (0..class_count).map(|c| format!("class_{c}")).collect();
    confusion_named(y_true, y_pred, names)
}

/// Same as [`confusion`] with explicit class names.
pub fn confusion_named(
    y_true: &[usize],
    y_pred: &[usize],
    classes: Vec<String>,
) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Argument(format!(
            "length mismatch: {} true labels vs {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let k = classes.len();
    let mut counts = vec![vec![0usize; k]; k];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        if t >= k || p >= k {
            return Err(Error::Argument(format!(
                "class index out of range: true={t}, pred={p}, classes={k}"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { classes, counts })
}

impl ConfusionMatrix {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: usize) -> usize {
        self.counts[class][class]
    }

    /// Rows of true class `class` — the class support.
    pub fn support(&self, class: usize) -> usize {
        self.counts[class].iter().sum()
    }

    pub fn false_negatives(&self, class: usize) -> usize {
        self.support(class) - self.true_positives(class)
    }

    pub fn false_positives(&self, class: usize) -> usize {
        (0..self.class_count())
            .map(|i| self.counts[i][class])
            .sum::<usize>()
            - self.true_positives(class)
    }

    pub fn true_negatives(&self, class: usize) -> usize {
        self.total()
            - self.true_positives(class)
            - self.false_positives(class)
            - self.false_negatives(class)
    }
}

/// Metrics for a single class.
#[derive(Debug, Clone, Serialize)]
pub struct ClassMetrics<R: Real = f64> {
    pub class_name: String,
    pub precision: R,
    pub recall: R,
    pub f1: R,
    pub support: usize,
}

/// Accuracy plus support-weighted precision/recall/F1 with per-class detail.
#[derive(Debug, Clone, Serialize)]
pub struct MetricsReport<R: Real = f64> {
    pub accuracy: R,
    pub precision_weighted: R,
    pub recall_weighted: R,
    pub f1_weighted: R,
    pub per_class: Vec<ClassMetrics<R>>,
    pub zero_division_events: usize,
}

/// Computes the full metrics report from a confusion matrix.
///
/// Per-class precision is `TP/(TP+FP)`, recall is `TP/(TP+FN)`, and F1 the
/// harmonic mean of the two — all evaluated per class before weighting.
/// A zero denominator yields 0 and bumps `zero_division_events`.
pub fn report<R: Real>(cm: &ConfusionMatrix) -> Result<MetricsReport<R>> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Argument(
            "confusion matrix has no evaluated rows".to_string(),
        ));
    }
    let total_r = from_count::<R>(total);
    let k = cm.class_count();

    let mut zero_division_events = 0usize;
    let mut per_class = Vec::with_capacity(k);
    let mut precision_sum = R::zero();
    let mut recall_sum = R::zero();
    let mut f1_sum = R::zero();

    for c in 0..k {
        let tp = cm.true_positives(c);
        let fp = cm.false_positives(c);
        let fn_ = cm.false_negatives(c);
        let support = cm.support(c);

        let p_den = tp + fp;
        let r_den = tp + fn_;
        let precision = if p_den == 0 {
            zero_division_events += 1;
            R::zero()
        } else {
            from_count::<R>(tp) / from_count::<R>(p_den)
        };
        let recall = if r_den == 0 {
            zero_division_events += 1;
            R::zero()
        } else {
            from_count::<R>(tp) / from_count::<R>(r_den)
        };
        let two = R::one() + R::one();
        let f1 = if precision + recall > R::zero() {
            two * precision * recall / (precision + recall)
        } else {
            R::zero()
        };

        // Weighted terms as (support * num) / den: exact when den == support.
        if p_den > 0 {
            precision_sum += from_count::<R>(support * tp) / from_count::<R>(p_den);
        }
        if r_den > 0 {
            recall_sum += from_count::<R>(support * tp) / from_count::<R>(r_den);
        }
        f1_sum += from_count::<R>(support) * f1;

        per_class.push(ClassMetrics {
            class_name: cm.classes()[c].clone(),
            precision,
            recall,
            f1,
            support,
        });
    }

    let trace: usize = (0..k).map(|c| cm.true_positives(c)).sum();
    Ok(MetricsReport {
        accuracy: from_count::<R>(trace) / total_r,
        precision_weighted: precision_sum / total_r,
        recall_weighted: recall_sum / total_r,
        f1_weighted: f1_sum / total_r,
        per_class,
        zero_division_events,
    })
}
