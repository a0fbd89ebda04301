// SPDX-License-Identifier: Apache-2.0

//! Sensitive-node classification: structural features, min-max scaling, an
//! RBF-kernel SVM trained by SMO, cross-validated model selection and
//! binary-classification metrics.

mod dataset;
mod features;
mod metrics;
mod select;
mod svm;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::NetlistError;

pub use dataset::{preprocess, Dataset, Normalizer};
pub use features::{extract_features, label_nodes, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};
pub use metrics::{evaluate, roc, Metrics, Roc};
pub use select::{
    cross_val_accuracy, cross_val_predict, forward_feature_selection, grid_search, stratified_folds, FeatureSelection,
    GridResult, DEFAULT_C_GRID, DEFAULT_GAMMA_GRID,
};
pub use svm::{dual_objective, predict_sensitivity, train_svm, NodePrediction, SvmModel, SvmParams, MODEL_VERSION};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("dataset needs both classes")]
    SingleClassDataset,
    #[error("C and gamma must be positive and finite")]
    NonPositiveHyperparameter,
    #[error("too few samples: {0}")]
    TooFewSamples(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("feature vectors have {got} features, model expects {expected}")]
    FeatureMaskMismatch { expected: usize, got: usize },
    #[error("feature mask selects no features")]
    EmptyFeatureMask,
    #[error("model file: {0}")]
    Model(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Sensitivity class of a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    High,
    Low,
}

impl Label {
    /// Non-negative scores map to `High`.
    pub fn from_score<F: crate::Scalar>(score: F) -> Label {
        if score >= F::zero() {
            Label::High
        } else {
            Label::Low
        }
    }

    pub fn sign<F: crate::Scalar>(self) -> F {
        match self {
            Label::High => F::one(),
            Label::Low => -F::one(),
        }
    }
}
