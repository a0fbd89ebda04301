// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Label, LearnError};
use crate::Scalar;

/// Confusion counts with `High` as the positive class. Ratios with a zero
/// denominator are reported as 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics<F> {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tpr: F,
    pub tnr: F,
    pub precision: F,
    pub accuracy: F,
    pub f1: F,
}

impl<F: Scalar> Metrics<F> {
    pub fn from_counts(tp: usize, tn: usize, fp: usize, fn_: usize) -> Metrics<F> {
        let div = |a: usize, b: usize| {
            if b == 0 {
                F::zero()
            } else {
                F::from_count(a) / F::from_count(b)
            }
        };
        let tpr = div(tp, tp + fn_);
        let precision = div(tp, tp + fp);
        let f1 = if precision + tpr > F::zero() {
            F::lit(2.0) * precision * tpr / (precision + tpr)
        } else {
            F::zero()
        };
        Metrics {
            tp,
            tn,
            fp,
            fn_,
            tpr,
            tnr: div(tn, tn + fp),
            precision,
            accuracy: div(tp + tn, tp + tn + fp + fn_),
            f1,
        }
    }
}

pub fn evaluate<F: Scalar>(predicted: &[Label], actual: &[Label]) -> Result<Metrics<F>, LearnError> {
    if predicted.len() != actual.len() {
        return Err(LearnError::LengthMismatch(predicted.len(), actual.len()));
    }
    let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
    for (p, a) in predicted.iter().zip(actual) {
        match (p, a) {
            (Label::High, Label::High) => tp += 1,
            (Label::Low, Label::Low) => tn += 1,
            (Label::High, Label::Low) => fp += 1,
            (Label::Low, Label::High) => fn_ += 1,
        }
    }
    Ok(Metrics::from_counts(tp, tn, fp, fn_))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Roc<F> {
    /// `(FPR, TPR)` from (0, 0) to (1, 1).
    pub points: Vec<(F, F)>,
    pub auc: F,
}

/// ROC by sweeping a `score >= threshold` rule over the distinct scores in
/// descending order; AUC by the trapezoid rule.
pub fn roc<F: Scalar>(scores: &[F], actual: &[Label]) -> Result<Roc<F>, LearnError> {
    if scores.len() != actual.len() {
        return Err(LearnError::LengthMismatch(scores.len(), actual.len()));
    }
    let pos = actual.iter().filter(|&&l| l == Label::High).count();
    let neg = actual.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(LearnError::SingleClassDataset);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));
    let mut points = vec![(F::zero(), F::zero())];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            match actual[order[k]] {
                Label::High => tp += 1,
                Label::Low => fp += 1,
            }
            k += 1;
        }
        points.push((
            F::from_count(fp) / F::from_count(neg),
            F::from_count(tp) / F::from_count(pos),
        ));
    }
    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / F::lit(2.0))
        .sum();
    Ok(Roc { points, auc })
}
