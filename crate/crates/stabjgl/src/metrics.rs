//! Graph-recovery metrics: confusion counts, precision/recall, and
//! Matthews correlation, all over the `p(p-1)/2` unordered node pairs.

use crate::error::{Error, Result};
use crate::model::EdgeSet;

/// Pairwise classification counts of an estimated graph against a truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct ConfusionCounts {
    /// Edges present in both graphs.
    pub true_pos: usize,
    /// Estimated edges absent from the truth.
    pub false_pos: usize,
    /// True edges the estimate missed.
    pub false_neg: usize,
    /// Pairs that are edges in neither graph.
    pub true_neg: usize,
}

impl ConfusionCounts {
    /// Total number of unordered pairs classified.
    pub fn total_pairs(&self) -> usize {
        self.true_pos + self.false_pos + self.false_neg + self.true_neg
    }
}

/// Classify every unordered node pair of `estimated` against `truth`.
pub fn confusion(estimated: &EdgeSet, truth: &EdgeSet) -> Result<ConfusionCounts> {
    if estimated.p() != truth.p() {
        return Err(Error::NodeCountMismatch(estimated.p(), truth.p()));
    }
    let p = estimated.p();
    let true_pos = estimated.shared_edge_count(truth)?;
    let false_pos = estimated.len() - true_pos;
    let false_neg = truth.len() - true_pos;
    let true_neg = p * (p - 1) / 2 - true_pos - false_pos - false_neg;
    Ok(ConfusionCounts {
        true_pos,
        false_pos,
        false_neg,
        true_neg,
    })
}

/// Positive predictive value: the fraction of predicted edges that are
/// real. `None` when nothing was predicted.
pub fn precision(c: &ConfusionCounts) -> Option<f64> {
    let predicted = c.true_pos + c.false_pos;
    (predicted > 0).then(|| c.true_pos as f64 / predicted as f64)
}

/// Sensitivity: the fraction of true edges that were found. `None` when
/// the truth has no edges.
pub fn recall(c: &ConfusionCounts) -> Option<f64> {
    let actual = c.true_pos + c.false_neg;
    (actual > 0).then(|| c.true_pos as f64 / actual as f64)
}

/// Matthews correlation between the counts' two classifications, with the
/// standard convention that a zero denominator yields 0.
pub fn mcc_from_counts(c: &ConfusionCounts) -> f64 {
    let tp = c.true_pos as f64;
    let fp = c.false_pos as f64;
    let fn_ = c.false_neg as f64;
    let tn = c.true_neg as f64;
    // The four factors individually stay within exact-integer range; their
    // product need not, so take square roots before multiplying.
    let denom = ((tp + fp) * (tp + fn_)).sqrt() * ((tn + fp) * (tn + fn_)).sqrt();
    if denom == 0.0 {
        return 0.0;
    }
    (tp * tn - fp * fn_) / denom
}

/// Matthews correlation between two edge sets; symmetric in its arguments
/// and 0 for degenerate (empty or complete) graphs.
pub fn mcc(a: &EdgeSet, b: &EdgeSet) -> Result<f64> {
    Ok(mcc_from_counts(&confusion(a, b)?))
}
