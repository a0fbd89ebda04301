// SPDX-License-Identifier: Apache-2.0

//! Medoid clustering of cells under a layer-weighted hierarchy distance.
//!
//! Two cells are compared layer by layer along their enclosing module
//! paths, outermost layer first. A mismatch at layer `li` (1-based) costs
//! `2^(ln - li)`, so disagreement high in the hierarchy dominates. Paths
//! shorter than `ln` are padded with a token that only equals itself.

use std::collections::BTreeSet;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{CellId, CellInfo};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClusterError {
    #[error("requested {kn} clusters from {cells} cells")]
    TooFewCells { kn: usize, cells: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterParams {
    /// Number of clusters.
    pub kn: usize,
    /// Layer depth compared by the distance.
    pub ln: usize,
    pub seed: u64,
    pub max_iterations: usize,
}

impl ClusterParams {
    pub fn new(kn: usize, ln: usize, seed: u64) -> Self {
        ClusterParams {
            kn,
            ln,
            seed,
            max_iterations: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    #[serde(rename = "id")]
    pub cluster_id: usize,
    pub center: CellId,
    pub members: Vec<CellId>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Final partition plus the per-iteration history of the medoid objective
/// (sum over cells of the distance to their cluster center).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterOutcome {
    pub clusters: Vec<Cluster>,
    pub iterations: usize,
    pub objective: Vec<u64>,
}

/// Serialized cluster report.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub params: ClusterParams,
    pub clusters: Vec<Cluster>,
}

impl ClusterReport {
    /// Cluster index of every cell, indexed by cell id.
    pub fn membership(&self, n_cells: usize) -> Vec<Option<usize>> {
        membership(&self.clusters, n_cells)
    }
}

pub fn membership(clusters: &[Cluster], n_cells: usize) -> Vec<Option<usize>> {
    let mut of = vec![None; n_cells];
    for (k, c) in clusters.iter().enumerate() {
        for m in &c.members {
            if m.0 < n_cells {
                of[m.0] = Some(k);
            }
        }
    }
    of
}

const PAD: &str = "-";

fn layer(path: &[String], li: usize) -> &str {
    path.get(li).map_or(PAD, String::as_str)
}

/// Layer-weighted hierarchy distance between two module paths.
pub fn path_distance(a: &[String], b: &[String], ln: usize) -> u64 {
    (0..ln)
        .filter(|&li| layer(a, li) != layer(b, li))
        .map(|li| 1u64 << (ln - 1 - li))
        .sum()
}

pub fn distance(a: &CellInfo, b: &CellInfo, ln: usize) -> u64 {
    path_distance(&a.path, &b.path, ln)
}

fn position(cells: &[CellInfo], id: CellId) -> usize {
    // ids are dense for elaborated designs; fall back to a scan otherwise
    match cells.get(id.0) {
        Some(c) if c.id == id => id.0,
        _ => cells
            .iter()
            .position(|c| c.id == id)
            .expect("cell id present in cell list"),
    }
}

/// Assign every cell to its nearest center. A center always joins its own
/// cluster; other ties go to the lowest center index.
pub fn assign_cells(cells: &[CellInfo], centers: &[CellId], ln: usize) -> Vec<Cluster> {
    let mut clusters: Vec<Cluster> = centers
        .iter()
        .enumerate()
        .map(|(k, &c)| Cluster {
            cluster_id: k,
            center: c,
            members: Vec::new(),
        })
        .collect();
    let center_cells: Vec<&CellInfo> = centers.iter().map(|&c| &cells[position(cells, c)]).collect();
    for cell in cells {
        let best = match centers.iter().position(|&c| c == cell.id) {
            Some(own) => own,
            None => {
                let mut best = 0;
                let mut best_d = u64::MAX;
                for (k, cc) in center_cells.iter().enumerate() {
                    let d = distance(cell, cc, ln);
                    if d < best_d {
                        best_d = d;
                        best = k;
                    }
                }
                best
            }
        };
        clusters[best].members.push(cell.id);
    }
    clusters
}

/// Medoid of every cluster: the member with the least distance sum to the
/// other members, ties to the lowest cell id.
pub fn update_centers(cells: &[CellInfo], clusters: &[Cluster], ln: usize) -> Result<Vec<CellId>, ClusterError> {
    clusters
        .iter()
        .map(|cl| {
            if cl.members.is_empty() {
                return Err(ClusterError::EmptyCluster(cl.cluster_id));
            }
            let members: Vec<&CellInfo> = cl.members.iter().map(|&m| &cells[position(cells, m)]).collect();
            let mut best: Option<(u64, CellId)> = None;
            for a in &members {
                let sum: u64 = members.iter().map(|b| distance(a, b, ln)).sum();
                if best.is_none_or(|(s, id)| sum < s || (sum == s && a.id < id)) {
                    best = Some((sum, a.id));
                }
            }
            Ok(best.expect("non-empty cluster").1)
        })
        .collect()
}

fn objective(cells: &[CellInfo], clusters: &[Cluster], ln: usize) -> u64 {
    clusters
        .iter()
        .map(|cl| {
            let c = &cells[position(cells, cl.center)];
            cl.members
                .iter()
                .map(|&m| distance(&cells[position(cells, m)], c, ln))
                .sum::<u64>()
        })
        .sum()
}

/// Seeded medoid clustering: sample `kn` distinct initial centers, then
/// alternate assignment and medoid update until the center set repeats.
pub fn cluster_cells(cells: &[CellInfo], params: &ClusterParams) -> Result<ClusterOutcome, ClusterError> {
    if params.kn == 0 {
        return Err(ClusterError::InvalidParams("kn must be at least 1".into()));
    }
    if params.ln == 0 {
        return Err(ClusterError::InvalidParams("ln must be at least 1".into()));
    }
    if params.kn > cells.len() {
        return Err(ClusterError::TooFewCells {
            kn: params.kn,
            cells: cells.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut picks = index::sample(&mut rng, cells.len(), params.kn).into_vec();
    picks.sort_unstable();
    let mut centers: Vec<CellId> = picks.into_iter().map(|i| cells[i].id).collect();

    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        let clusters = assign_cells(cells, &centers, params.ln);
        history.push(objective(cells, &clusters, params.ln));
        iterations += 1;
        let next = update_centers(cells, &clusters, params.ln)?;
        let same = next.iter().collect::<BTreeSet<_>>() == centers.iter().collect::<BTreeSet<_>>();
        if same || iterations >= params.max_iterations.max(1) {
            return Ok(ClusterOutcome {
                clusters,
                iterations,
                objective: history,
            });
        }
        centers = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{CellKind, GateType, NetId};

    fn p(parts: &[&str]) -> Vec<String> {
        parts.iter().map(|s| s.to_string()).collect()
    }

    pub(crate) fn cell(id: usize, path: &[&str]) -> CellInfo {
        CellInfo {
            id: CellId(id),
            path: p(path),
            instance_name: format!("g{id}"),
            cell_type: GateType::Buf,
            kind: CellKind::Combinational,
            output_net: NetId(id),
            inputs: vec![],
        }
    }

    #[test]
    fn distance_examples() {
        assert_eq!(path_distance(&p(&["cpu", "alu"]), &p(&["cpu", "alu"]), 3), 0);
        assert_eq!(
            path_distance(&p(&["cpu", "alu", "adder"]), &p(&["cpu", "alu", "shifter"]), 3),
            1
        );
        assert_eq!(
            path_distance(&p(&["cpu", "alu", "adder"]), &p(&["mem", "bank0", "row0"]), 3),
            7
        );
    }

    #[test]
    fn padding_equals_itself() {
        assert_eq!(path_distance(&[], &[], 4), 0);
        assert_eq!(path_distance(&p(&["cpu"]), &p(&["cpu", "alu"]), 3), 2);
    }

    #[test]
    fn assign_nearest_and_tie() {
        let cells = vec![
            cell(0, &["cpu", "alu", "adder"]),
            cell(1, &["mem", "bank0", "row0"]),
            cell(2, &["cpu", "dec", "pc"]),
            cell(3, &["io", "x", "y"]),
        ];
        let cl = assign_cells(&cells, &[CellId(0), CellId(1)], 3);
        assert_eq!(cl[0].members, vec![CellId(0), CellId(2), CellId(3)]);
        assert_eq!(cl[1].members, vec![CellId(1)]);
        assert_eq!(distance(&cells[3], &cells[0], 3), 7);
        assert_eq!(distance(&cells[3], &cells[1], 3), 7);
    }

    #[test]
    fn single_center_takes_everything() {
        let cells = vec![cell(0, &["a"]), cell(1, &["b"]), cell(2, &[])];
        let cl = assign_cells(&cells, &[CellId(1)], 2);
        assert_eq!(cl.len(), 1);
        assert_eq!(cl[0].members.len(), 3);
    }

    #[test]
    fn medoid_sums_and_ties() {
        let cells = vec![
            cell(0, &["cpu", "alu"]),
            cell(1, &["cpu", "alu"]),
            cell(2, &["cpu", "dec"]),
        ];
        let cl = vec![Cluster {
            cluster_id: 0,
            center: CellId(2),
            members: vec![CellId(0), CellId(1), CellId(2)],
        }];
        assert_eq!(update_centers(&cells, &cl, 3).unwrap(), vec![CellId(0)]);
    }

    #[test]
    fn medoid_singleton_and_empty() {
        let cells = vec![cell(0, &["x"]), cell(1, &["x"])];
        let single = vec![Cluster {
            cluster_id: 0,
            center: CellId(1),
            members: vec![CellId(1)],
        }];
        assert_eq!(update_centers(&cells, &single, 2).unwrap(), vec![CellId(1)]);
        let empty = vec![Cluster {
            cluster_id: 3,
            center: CellId(1),
            members: vec![],
        }];
        assert_eq!(update_centers(&cells, &empty, 2), Err(ClusterError::EmptyCluster(3)));
    }

    #[test]
    fn kn_one() {
        let cells = vec![cell(0, &["b"]), cell(1, &["a"]), cell(2, &["a"])];
        let out = cluster_cells(&cells, &ClusterParams::new(1, 1, 5)).unwrap();
        assert_eq!(out.clusters.len(), 1);
        assert_eq!(out.clusters[0].members.len(), 3);
        assert_eq!(out.clusters[0].center, CellId(1));
    }

    #[test]
    fn kn_equals_cells() {
        let cells: Vec<_> = (0..5).map(|i| cell(i, &["same"])).collect();
        let out = cluster_cells(&cells, &ClusterParams::new(5, 2, 9)).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.clusters.iter().all(|c| c.members == vec![c.center]));
    }

    #[test]
    fn too_few_cells() {
        let cells = vec![cell(0, &[])];
        assert_eq!(
            cluster_cells(&cells, &ClusterParams::new(2, 1, 0)),
            Err(ClusterError::TooFewCells { kn: 2, cells: 1 })
        );
    }

    #[test]
    fn two_modules_every_init() {
        let cells: Vec<_> = (0..8)
            .map(|i| cell(i, if i < 4 { &["cpu"] } else { &["mem"] }))
            .collect();
        // exhaustive over initial center pairs
        for a in 0..8 {
            for b in (a + 1)..8 {
                let mut centers = vec![CellId(a), CellId(b)];
                for _ in 0..10 {
                    let cl = assign_cells(&cells, &centers, 1);
                    let next = update_centers(&cells, &cl, 1).unwrap();
                    if next == centers {
                        break;
                    }
                    centers = next;
                }
                let mut groups: Vec<Vec<CellId>> = assign_cells(&cells, &centers, 1)
                    .into_iter()
                    .map(|c| c.members)
                    .collect();
                groups.sort();
                let cpu: Vec<_> = (0..4).map(CellId).collect();
                let mem: Vec<_> = (4..8).map(CellId).collect();
                assert_eq!(groups, vec![cpu, mem], "init ({a}, {b})");
            }
        }
    }
}
