// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{FeatureVector, LearnError};
use crate::netlist::CellId;
use crate::Scalar;

/// Per-feature min-max scaling fitted on a labeled set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<F> {
    pub min: Vec<F>,
    pub max: Vec<F>,
}

impl<F: Scalar> Normalizer<F> {
    pub fn fit(rows: &[Vec<F>]) -> Normalizer<F> {
        let width = rows.first().map_or(0, Vec::len);
        let mut min = vec![F::infinity(); width];
        let mut max = vec![F::neg_infinity(); width];
        for r in rows {
            for (k, &v) in r.iter().enumerate() {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Normalizer { min, max }
    }

    pub fn width(&self) -> usize {
        self.min.len()
    }

    /// Constant features map to 0.
    pub fn apply(&self, raw: &[F]) -> Vec<F> {
        raw.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| if hi > lo { (v - lo) / (hi - lo) } else { F::zero() })
            .collect()
    }

    pub fn invert(&self, scaled: &[F]) -> Vec<F> {
        scaled
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&s, (&lo, &hi))| lo + s * (hi - lo))
            .collect()
    }
}

/// Labeled, scaled training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset<F> {
    pub nodes: Vec<CellId>,
    /// Scaled features, every value in [0, 1].
    pub x: Vec<Vec<F>>,
    /// +1 for high sensitivity, -1 for low.
    pub y: Vec<F>,
    pub normalizer: Normalizer<F>,
    /// Columns used for training.
    pub mask: Vec<bool>,
}

impl<F: Scalar> Dataset<F> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn width(&self) -> usize {
        self.normalizer.width()
    }

    pub fn with_mask(&self, mask: Vec<bool>) -> Dataset<F> {
        Dataset { mask, ..self.clone() }
    }

    /// Rows restricted to the masked columns.
    pub fn projected(&self) -> Vec<Vec<F>> {
        self.x.iter().map(|r| project(r, &self.mask)).collect()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&v| v > F::zero()).count();
        (pos, self.len() - pos)
    }
}

pub(crate) fn project<F: Copy>(row: &[F], mask: &[bool]) -> Vec<F> {
    row.iter().zip(mask).filter(|(_, &m)| m).map(|(&v, _)| v).collect()
}

/// Drop unlabeled rows and min-max scale the rest.
pub fn preprocess<F: Scalar>(vectors: &[FeatureVector<F>]) -> Result<Dataset<F>, LearnError> {
    let labeled: Vec<&FeatureVector<F>> = vectors.iter().filter(|v| v.label.is_some()).collect();
    if let Some(first) = labeled.first() {
        if let Some(bad) = labeled.iter().find(|v| v.raw.len() != first.raw.len()) {
            return Err(LearnError::LengthMismatch(first.raw.len(), bad.raw.len()));
        }
    }
    let y: Vec<F> = labeled
        .iter()
        .map(|v| v.label.map_or(F::zero(), |l| l.sign()))
        .collect();
    let pos = y.iter().filter(|&&v| v > F::zero()).count();
    if pos == 0 || pos == y.len() {
        return Err(LearnError::SingleClassDataset);
    }
    let raw: Vec<Vec<F>> = labeled.iter().map(|v| v.raw.clone()).collect();
    let normalizer = Normalizer::fit(&raw);
    let x = raw.iter().map(|r| normalizer.apply(r)).collect();
    Ok(Dataset {
        nodes: labeled.iter().map(|v| v.node).collect(),
        x,
        y,
        mask: vec![true; normalizer.width()],
        normalizer,
    })
}
