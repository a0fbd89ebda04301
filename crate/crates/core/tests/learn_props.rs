// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{brute_force_dual, dataset, kkt_holds};
use proptest::prelude::*;
use ssresf::learn::{
    dual_objective, grid_search, preprocess, roc, train_svm, Dataset, FeatureVector, Label, SvmModel, SvmParams,
};
use ssresf::netlist::CellId;

/// Random points in the unit cube with both classes present.
fn small_set(max_n: usize) -> impl Strategy<Value = Dataset<f64>> {
    (1usize..=3, 2usize..=max_n).prop_flat_map(|(dim, n)| {
        (
            prop::collection::vec(prop::collection::vec(0.0f64..1.0, dim), n),
            prop::collection::vec(any::<bool>(), n - 2),
        )
            .prop_map(|(x, labels)| {
                let mut y = vec![1.0, -1.0];
                y.extend(labels.iter().map(|&b| if b { 1.0 } else { -1.0 }));
                dataset(x, y)
            })
    })
}

fn hyper() -> impl Strategy<Value = (f64, f64)> {
    (
        prop::sample::select(vec![0.1, 1.0, 10.0]),
        prop::sample::select(vec![0.1, 1.0, 5.0]),
    )
}

proptest! {
    #[test]
    fn smo_meets_kkt((ds, (c, gamma)) in (small_set(12), hyper())) {
        let m = train_svm(&ds, &SvmParams::new(c, gamma)).unwrap();
        prop_assert!(m.converged);
        prop_assert!(kkt_holds(&m, &ds, 1e-3));
        let balance: f64 = m.alpha.iter().zip(&m.sv_labels).map(|(a, y)| a * y).sum();
        prop_assert!(balance.abs() < 1e-6);
        prop_assert!(m.alpha.iter().all(|&a| a > 0.0 && a <= c));
    }

    #[test]
    fn smo_matches_brute_force((ds, (c, gamma)) in (small_set(6), hyper())) {
        // A KKT gap of 1e-3 does not bound the objective error when the kernel
        // matrix is near singular (close points, small gamma), so solve tightly.
        let params = SvmParams { tol: 1e-7, max_passes: 100_000, ..SvmParams::new(c, gamma) };
        let m = train_svm(&ds, &params).unwrap();
        prop_assert!(m.converged);
        let smo = dual_objective(&m.support_vectors, &m.sv_labels, &m.alpha, gamma);
        let exact = brute_force_dual(&ds.x, &ds.y, c, gamma);
        prop_assert!(exact <= smo + 1e-9, "brute {} smo {}", exact, smo);
        prop_assert!(smo - exact <= 1e-3, "brute {} smo {}", exact, smo);
    }

    #[test]
    fn prediction_ignores_support_vector_order(ds in small_set(10), seed in any::<u64>(), probe in prop::collection::vec(0.0f64..1.0, 3)) {
        let m = train_svm(&ds, &SvmParams::new(1.0, 1.0)).unwrap();
        let mut perm: Vec<usize> = (0..m.alpha.len()).collect();
        perm.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
        let shuffled = SvmModel {
            support_vectors: perm.iter().map(|&i| m.support_vectors[i].clone()).collect(),
            alpha: perm.iter().map(|&i| m.alpha[i]).collect(),
            sv_labels: perm.iter().map(|&i| m.sv_labels[i]).collect(),
            sv_indices: perm.iter().map(|&i| m.sv_indices[i]).collect(),
            ..m.clone()
        };
        let p = &probe[..ds.width()];
        prop_assert!((m.decision_scaled(p) - shuffled.decision_scaled(p)).abs() < 1e-12);
    }

    #[test]
    fn normalization_round_trips(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 4), 2..20)) {
        let vectors: Vec<FeatureVector<f64>> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| FeatureVector {
                node: CellId(i),
                name: String::new(),
                raw: r.clone(),
                label: Some(if i == 0 { Label::High } else { Label::Low }),
            })
            .collect();
        let ds = preprocess(&vectors).unwrap();
        for (scaled, orig) in ds.x.iter().zip(&rows) {
            prop_assert!(scaled.iter().all(|&v| (0.0..=1.0).contains(&v)));
            let back = ds.normalizer.invert(scaled);
            for (a, b) in back.iter().zip(orig) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn roc_is_monotone(pairs in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..60)) {
        let mut labels: Vec<Label> = pairs.iter().map(|p| if p.1 { Label::High } else { Label::Low }).collect();
        labels[0] = Label::High;
        labels[1] = Label::Low;
        let scores: Vec<f64> = pairs.iter().map(|p| (p.0 * 4.0).round() / 4.0).collect();
        let r = roc(&scores, &labels).unwrap();
        prop_assert_eq!(r.points[0], (0.0, 0.0));
        prop_assert_eq!(*r.points.last().unwrap(), (1.0, 1.0));
        prop_assert!(r.points.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
        prop_assert!((0.0..=1.0).contains(&r.auc));
    }
}

#[test]
fn xor_grid_prefers_flexible_kernel() {
    // four noisy corner clouds in XOR arrangement
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..40 {
        let corner = i % 4;
        let jitter = (i / 4) as f64 * 0.012;
        let (cx, cy) = [(0.0, 0.0), (1.0, 1.0), (0.0, 1.0), (1.0, 0.0)][corner];
        x.push(vec![(cx - jitter).abs(), (cy - jitter * 0.5).abs()]);
        y.push(if corner < 2 { -1.0 } else { 1.0 });
    }
    let ds = dataset(x, y);
    let base = SvmParams::new(1.0, 1.0);
    let r = grid_search(&ds, &[0.1, 10.0], &[0.01, 1.0], &base, 10, 3).unwrap();
    let acc = |c: f64, g: f64| r.table.iter().find(|t| t.0 == c && t.1 == g).unwrap().2;
    assert!(acc(10.0, 1.0) > acc(0.1, 0.01));
    assert!(r.accuracy >= acc(10.0, 1.0));
}
