// SPDX-License-Identifier: Apache-2.0

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::svm::{rbf, solve};
use super::{Dataset, LearnError, SvmParams};
use crate::Scalar;

pub const DEFAULT_C_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const DEFAULT_GAMMA_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Scores closer than this count as ties.
const SCORE_EPS: f64 = 1e-12;

/// Fold index of every sample. Each class is shuffled on its own, then the
/// concatenation is dealt round-robin, so class proportions stay balanced.
pub fn stratified_folds<F: Scalar>(y: &[F], k: usize, seed: u64) -> Result<Vec<usize>, LearnError> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] > F::zero()).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] <= F::zero()).collect();
    if k < 2 || y.len() < k {
        return Err(LearnError::TooFewSamples(format!("{} samples for {k} folds", y.len())));
    }
    if pos.len() < 2 || neg.len() < 2 {
        return Err(LearnError::TooFewSamples(format!(
            "each class needs 2 samples, have {} high / {} low",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![0; y.len()];
    let mut counter = 0;
    for mut class in [pos, neg] {
        class.shuffle(&mut rng);
        for i in class {
            folds[i] = counter % k;
            counter += 1;
        }
    }
    Ok(folds)
}

/// Out-of-fold decision value of every sample, with the fold assignment.
pub fn cross_val_predict<F: Scalar>(
    ds: &Dataset<F>,
    params: &SvmParams<F>,
    k: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<F>), LearnError> {
    let folds = stratified_folds(&ds.y, k, seed)?;
    let x = ds.projected();
    if x.first().is_some_and(|r| r.is_empty()) {
        return Err(LearnError::EmptyFeatureMask);
    }
    let mut scores = vec![F::zero(); ds.len()];
    for f in 0..k {
        let train: Vec<usize> = (0..ds.len()).filter(|&i| folds[i] != f).collect();
        let tx: Vec<Vec<F>> = train.iter().map(|&i| x[i].clone()).collect();
        let ty: Vec<F> = train.iter().map(|&i| ds.y[i]).collect();
        let sol = solve(&tx, &ty, params);
        for i in (0..ds.len()).filter(|&i| folds[i] == f) {
            let s: F = tx
                .iter()
                .zip(sol.alpha.iter().zip(&ty))
                .filter(|(_, (&a, _))| a > F::zero())
                .map(|(xt, (&a, &yt))| a * yt * rbf(xt, &x[i], params.gamma))
                .sum();
            scores[i] = s - sol.rho;
        }
    }
    Ok((folds, scores))
}

/// Mean held-out accuracy over `k` stratified folds using the dataset's mask.
pub fn cross_val_accuracy<F: Scalar>(
    ds: &Dataset<F>,
    params: &SvmParams<F>,
    k: usize,
    seed: u64,
) -> Result<F, LearnError> {
    let (folds, scores) = cross_val_predict(ds, params, k, seed)?;
    let mut total = F::zero();
    for f in 0..k {
        let test: Vec<usize> = (0..ds.len()).filter(|&i| folds[i] == f).collect();
        let correct = test
            .iter()
            .filter(|&&i| (scores[i] >= F::zero()) == (ds.y[i] > F::zero()))
            .count();
        total += F::from_count(correct) / F::from_count(test.len());
    }
    Ok(total / F::from_count(k))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult<F> {
    pub c: F,
    pub gamma: F,
    pub accuracy: F,
    /// `(C, gamma, mean CV accuracy)` for every grid cell.
    pub table: Vec<(F, F, F)>,
}

/// Best `(C, gamma)` by mean CV accuracy; ties go to the smallest C, then
/// the smallest gamma. Grid cells run in parallel in the current pool.
pub fn grid_search<F: Scalar>(
    ds: &Dataset<F>,
    c_grid: &[F],
    gamma_grid: &[F],
    base: &SvmParams<F>,
    k: usize,
    seed: u64,
) -> Result<GridResult<F>, LearnError> {
    let mut cells: Vec<(F, F)> = Vec::new();
    for &c in c_grid {
        for &g in gamma_grid {
            cells.push((c, g));
        }
    }
    if cells.is_empty() {
        return Err(LearnError::NonPositiveHyperparameter);
    }
    if cells
        .iter()
        .any(|&(c, g)| !(c > F::zero() && g > F::zero() && c.is_finite() && g.is_finite()))
    {
        return Err(LearnError::NonPositiveHyperparameter);
    }
    stratified_folds(&ds.y, k, seed)?;
    let table: Vec<(F, F, F)> = cells
        .par_iter()
        .map(|&(c, gamma)| {
            let p = SvmParams { c, gamma, ..*base };
            cross_val_accuracy(ds, &p, k, seed).map(|a| (c, gamma, a))
        })
        .collect::<Result<_, _>>()?;
    let mut best = table[0];
    for &row in &table[1..] {
        let better = row.2 > best.2 + F::lit(SCORE_EPS);
        let tie = (row.2 - best.2).abs() <= F::lit(SCORE_EPS);
        if better || (tie && (row.0 < best.0 || (row.0 == best.0 && row.1 < best.1))) {
            best = row;
        }
    }
    Ok(GridResult {
        c: best.0,
        gamma: best.1,
        accuracy: best.2,
        table,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection<F> {
    /// Selected columns.
    pub mask: Vec<bool>,
    /// Feature added at each step, in order.
    pub order: Vec<usize>,
    /// Mean CV accuracy after each step; one entry per candidate feature.
    pub curve: Vec<F>,
}

/// Greedy forward selection. Each step adds the feature with the best mean
/// CV accuracy (ties to the lowest index); the returned mask is the prefix
/// with the best score, preferring fewer features on ties.
pub fn forward_feature_selection<F: Scalar>(
    ds: &Dataset<F>,
    params: &SvmParams<F>,
    k: usize,
    seed: u64,
) -> Result<FeatureSelection<F>, LearnError> {
    let width = ds.width();
    if width < 2 {
        return Err(LearnError::TooFewSamples(format!("{width} candidate features")));
    }
    stratified_folds(&ds.y, k, seed)?;
    let mut chosen = vec![false; width];
    let mut order = Vec::with_capacity(width);
    let mut curve = Vec::with_capacity(width);
    for _ in 0..width {
        let candidates: Vec<usize> = (0..width).filter(|&f| !chosen[f]).collect();
        let scores: Vec<F> = candidates
            .par_iter()
            .map(|&f| {
                let mut mask = chosen.clone();
                mask[f] = true;
                cross_val_accuracy(&ds.with_mask(mask), params, k, seed)
            })
            .collect::<Result<_, _>>()?;
        let mut best = 0;
        for t in 1..scores.len() {
            if scores[t] > scores[best] + F::lit(SCORE_EPS) {
                best = t;
            }
        }
        chosen[candidates[best]] = true;
        order.push(candidates[best]);
        curve.push(scores[best]);
    }
    let mut size = 0;
    for t in 1..curve.len() {
        if curve[t] > curve[size] + F::lit(SCORE_EPS) {
            size = t;
        }
    }
    let mut mask = vec![false; width];
    for &f in &order[..=size] {
        mask[f] = true;
    }
    Ok(FeatureSelection { mask, order, curve })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::Normalizer;
    use crate::netlist::CellId;

    fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset<f64> {
        let w = x[0].len();
        Dataset {
            nodes: (0..x.len()).map(CellId).collect(),
            normalizer: Normalizer {
                min: vec![0.0; w],
                max: vec![1.0; w],
            },
            mask: vec![true; w],
            x,
            y,
        }
    }

    #[test]
    fn folds_are_stratified_and_seeded() {
        let y: Vec<f64> = (0..30).map(|i| if i % 3 == 0 { 1.0 } else { -1.0 }).collect();
        let f = stratified_folds(&y, 5, 4).unwrap();
        for fold in 0..5 {
            let members: Vec<usize> = (0..30).filter(|&i| f[i] == fold).collect();
            assert_eq!(members.len(), 6);
            assert_eq!(members.iter().filter(|&&i| y[i] > 0.0).count(), 2);
        }
        assert_eq!(stratified_folds(&y, 5, 4).unwrap(), f);
        assert_ne!(stratified_folds(&y, 5, 5).unwrap(), f);
        assert!(stratified_folds(&y[..4], 5, 0).is_err());
        assert!(stratified_folds(&[1.0, -1.0, -1.0, -1.0], 2, 0).is_err());
    }

    /// Two separated blobs.
    fn separable() -> Dataset<f64> {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let t = i as f64 / 40.0;
            x.push(vec![t, 0.5]);
            y.push(-1.0);
            x.push(vec![1.0 - t, 0.5]);
            y.push(1.0);
        }
        dataset(x, y)
    }

    #[test]
    fn grid_ties_pick_smallest() {
        let ds = separable();
        let r = grid_search(&ds, &[10.0, 1.0], &[10.0, 1.0], &SvmParams::new(1.0, 1.0), 5, 0).unwrap();
        assert_eq!(r.accuracy, 1.0);
        assert_eq!((r.c, r.gamma), (1.0, 1.0));
        let single = grid_search(&ds, &[3.0], &[0.3], &SvmParams::new(1.0, 1.0), 5, 0).unwrap();
        assert_eq!((single.c, single.gamma), (3.0, 0.3));
        assert_eq!(single.table.len(), 1);
    }

    #[test]
    fn selection_finds_predictive_feature() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..24 {
            // classes separated by a margin around 0.5
            let signal = if i < 12 {
                i as f64 / 30.0
            } else {
                0.6 + (i - 12) as f64 / 30.0
            };
            let noise_a = ((i * 7) % 11) as f64 / 10.0;
            let noise_b = ((i * 5) % 13) as f64 / 12.0;
            x.push(vec![noise_a, signal, noise_b]);
            y.push(if signal >= 0.5 { 1.0 } else { -1.0 });
        }
        let ds = dataset(x, y);
        let fs = forward_feature_selection(&ds, &SvmParams::new(10.0, 1.0), 4, 1).unwrap();
        assert_eq!(fs.order[0], 1);
        assert_eq!(fs.mask, vec![false, true, false]);
        assert_eq!(fs.curve.len(), 3);
    }

    #[test]
    fn duplicate_features_flat_curve() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let v = if i < 10 {
                i as f64 / 25.0
            } else {
                0.6 + (i - 10) as f64 / 25.0
            };
            x.push(vec![v, v, v]);
            y.push(if v >= 0.5 { 1.0 } else { -1.0 });
        }
        let fs = forward_feature_selection(&dataset(x, y), &SvmParams::new(1.0, 1.0), 5, 2).unwrap();
        assert!(fs.curve.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-12));
        assert_eq!(fs.mask.iter().filter(|&&m| m).count(), 1);
    }
}
