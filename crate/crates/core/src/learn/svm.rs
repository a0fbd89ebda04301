// SPDX-License-Identifier: Apache-2.0

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::dataset::project;
use super::{Dataset, FeatureVector, Label, LearnError, Normalizer};
use crate::netlist::CellId;
use crate::Scalar;

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParams<F> {
    pub c: F,
    pub gamma: F,
    /// Stop once the maximal KKT violation gap is at most `tol`.
    pub tol: F,
    /// Iteration cap, in multiples of the training-set size.
    pub max_passes: usize,
}

impl<F: Scalar> SvmParams<F> {
    pub fn new(c: F, gamma: F) -> Self {
        SvmParams {
            c,
            gamma,
            tol: F::lit(1e-3),
            max_passes: 100,
        }
    }

    fn check(&self) -> Result<(), LearnError> {
        let ok = |v: F| v.is_finite() && v > F::zero();
        if ok(self.c) && ok(self.gamma) && ok(self.tol) {
            Ok(())
        } else {
            Err(LearnError::NonPositiveHyperparameter)
        }
    }
}

pub(crate) fn rbf<F: Scalar>(a: &[F], b: &[F], gamma: F) -> F {
    let d2: F = a.iter().zip(b).map(|(&x, &z)| (x - z) * (x - z)).sum();
    (-gamma * d2).exp()
}

/// Trained classifier: `decision(x) = Σ coef_i K(sv_i, x) + bias`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel<F> {
    pub version: u32,
    pub c: F,
    pub gamma: F,
    /// Scaled, masked support vectors.
    pub support_vectors: Vec<Vec<F>>,
    /// Multipliers of the support vectors, each in (0, C].
    pub alpha: Vec<F>,
    /// Labels (±1) of the support vectors.
    pub sv_labels: Vec<F>,
    /// Row of each support vector in the training set.
    pub sv_indices: Vec<usize>,
    pub bias: F,
    pub normalizer: Normalizer<F>,
    pub mask: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
}

impl<F: Scalar> SvmModel<F> {
    /// Decision value of an already scaled and masked vector.
    pub fn decision_scaled(&self, x: &[F]) -> F {
        let s: F = self
            .support_vectors
            .iter()
            .zip(self.alpha.iter().zip(&self.sv_labels))
            .map(|(sv, (&a, &y))| a * y * rbf(sv, x, self.gamma))
            .sum();
        s + self.bias
    }

    /// Decision value of a raw (unscaled, full-width) feature vector.
    pub fn decision(&self, raw: &[F]) -> Result<F, LearnError> {
        if raw.len() != self.normalizer.width() {
            return Err(LearnError::FeatureMaskMismatch {
                expected: self.normalizer.width(),
                got: raw.len(),
            });
        }
        Ok(self.decision_scaled(&project(&self.normalizer.apply(raw), &self.mask)))
    }

    pub fn predict(&self, raw: &[F]) -> Result<Label, LearnError> {
        self.decision(raw).map(Label::from_score)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, LearnError> {
        let m: SvmModel<F> = serde_json::from_str(text).map_err(|e| LearnError::Model(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(LearnError::Model(format!("unsupported model version {}", m.version)));
        }
        let n = m.support_vectors.len();
        if m.alpha.len() != n
            || m.sv_labels.len() != n
            || m.sv_indices.len() != n
            || m.mask.len() != m.normalizer.width()
        {
            return Err(LearnError::Model("inconsistent array lengths".into()));
        }
        Ok(m)
    }
}

/// Dual objective `½ αᵀQα − Σα` with `Q_ij = y_i y_j K(x_i, x_j)`.
pub fn dual_objective<F: Scalar>(x: &[Vec<F>], y: &[F], alpha: &[F], gamma: F) -> F {
    let n = x.len();
    let mut quad = F::zero();
    for i in 0..n {
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * rbf(&x[i], &x[j], gamma);
        }
    }
    F::lit(0.5) * quad - alpha.iter().copied().sum::<F>()
}

pub(crate) struct Solution<F> {
    pub alpha: Vec<F>,
    pub rho: F,
    pub iterations: usize,
    pub converged: bool,
}

/// SMO with second-order working-set selection on the soft-margin dual.
pub(crate) fn solve<F: Scalar>(x: &[Vec<F>], y: &[F], p: &SvmParams<F>) -> Solution<F> {
    let n = x.len();
    let c = p.c;
    let mut k = vec![F::zero(); n * n];
    for i in 0..n {
        for j in i..n {
            let v = rbf(&x[i], &x[j], p.gamma);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let q = |i: usize, j: usize| y[i] * y[j] * k[i * n + j];
    let mut alpha = vec![F::zero(); n];
    // gradient of the dual objective
    let mut g = vec![-F::one(); n];
    let pos = |v: F| v > F::zero();
    let in_up = |a: F, yi: F| (pos(yi) && a < c) || (!pos(yi) && a > F::zero());
    let in_low = |a: F, yi: F| (pos(yi) && a > F::zero()) || (!pos(yi) && a < c);
    let cap = p.max_passes.saturating_mul(n.max(1));
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cap {
        let mut gmax = F::neg_infinity();
        let mut i_sel = None;
        for t in 0..n {
            let v = -y[t] * g[t];
            if in_up(alpha[t], y[t]) && (i_sel.is_none() || v > gmax) {
                gmax = v;
                i_sel = Some(t);
            }
        }
        let mut gmin = F::infinity();
        let mut j_sel = None;
        let mut best = F::infinity();
        if let Some(i) = i_sel {
            for t in 0..n {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * g[t];
                gmin = gmin.min(v);
                let b = gmax - v;
                if b > F::zero() {
                    let mut a = k[i * n + i] + k[t * n + t] - F::lit(2.0) * k[i * n + t];
                    if a <= F::zero() {
                        a = F::TAU;
                    }
                    let score = -(b * b) / a;
                    if score < best {
                        best = score;
                        j_sel = Some(t);
                    }
                }
            }
        }
        let (Some(i), Some(j)) = (i_sel, j_sel) else {
            converged = true;
            break;
        };
        if gmax - gmin <= p.tol {
            converged = true;
            break;
        }
        iterations += 1;

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + F::lit(2.0) * q(i, j);
            if quad <= F::zero() {
                quad = F::TAU;
            }
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > F::zero() {
                if alpha[j] < F::zero() {
                    alpha[j] = F::zero();
                    alpha[i] = diff;
                }
            } else if alpha[i] < F::zero() {
                alpha[i] = F::zero();
                alpha[j] = -diff;
            }
            if diff > F::zero() {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - F::lit(2.0) * q(i, j);
            if quad <= F::zero() {
                quad = F::TAU;
            }
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < F::zero() {
                alpha[j] = F::zero();
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < F::zero() {
                alpha[i] = F::zero();
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, gt) in g.iter_mut().enumerate() {
            *gt += q(t, i) * di + q(t, j) * dj;
        }
    }

    // threshold from free multipliers, else the middle of the feasible range
    let mut ub = F::infinity();
    let mut lb = F::neg_infinity();
    let mut free_sum = F::zero();
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * g[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= F::zero();
        if at_upper {
            if pos(y[t]) {
                lb = lb.max(yg);
            } else {
                ub = ub.min(yg);
            }
        } else if at_lower {
            if pos(y[t]) {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / F::from_count(free)
    } else {
        (ub + lb) / F::lit(2.0)
    };
    Solution {
        alpha,
        rho,
        iterations,
        converged,
    }
}

/// Fit on the dataset's masked columns.
pub fn train_svm<F: Scalar>(ds: &Dataset<F>, params: &SvmParams<F>) -> Result<SvmModel<F>, LearnError> {
    params.check()?;
    if ds.mask.len() != ds.width() {
        return Err(LearnError::FeatureMaskMismatch {
            expected: ds.width(),
            got: ds.mask.len(),
        });
    }
    if !ds.mask.iter().any(|&m| m) {
        return Err(LearnError::EmptyFeatureMask);
    }
    let (pos, neg) = ds.class_counts();
    if pos == 0 || neg == 0 {
        return Err(LearnError::SingleClassDataset);
    }
    let x = ds.projected();
    let sol = solve(&x, &ds.y, params);
    let mut model = SvmModel {
        version: MODEL_VERSION,
        c: params.c,
        gamma: params.gamma,
        support_vectors: Vec::new(),
        alpha: Vec::new(),
        sv_labels: Vec::new(),
        sv_indices: Vec::new(),
        bias: -sol.rho,
        normalizer: ds.normalizer.clone(),
        mask: ds.mask.clone(),
        iterations: sol.iterations,
        converged: sol.converged,
    };
    for (t, &a) in sol.alpha.iter().enumerate() {
        if a > F::zero() {
            model.support_vectors.push(x[t].clone());
            model.alpha.push(a);
            model.sv_labels.push(ds.y[t]);
            model.sv_indices.push(t);
        }
    }
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodePrediction<F> {
    pub node: CellId,
    pub name: String,
    pub label: Label,
    pub score: F,
}

/// Classify every vector; also returns the elapsed wall time.
pub fn predict_sensitivity<F: Scalar>(
    model: &SvmModel<F>,
    vectors: &[FeatureVector<F>],
) -> Result<(Vec<NodePrediction<F>>, Duration), LearnError> {
    let start = Instant::now();
    let out = vectors
        .iter()
        .map(|v| {
            let score = model.decision(&v.raw)?;
            Ok(NodePrediction {
                node: v.node,
                name: v.name.clone(),
                label: Label::from_score(score),
                score,
            })
        })
        .collect::<Result<Vec<_>, LearnError>>()?;
    Ok((out, start.elapsed()))
}
