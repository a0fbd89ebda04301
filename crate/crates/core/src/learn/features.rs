// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use super::{Label, LearnError};
use crate::campaign::CampaignResult;
use crate::clustering::Cluster;
use crate::gatesim::Trace;
use crate::netlist::{levelize, reverse_levelize, CellId, FlatDesign};
use crate::Scalar;

pub const FEATURE_COUNT: usize = 8;

/// Candidate feature names, in column order.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "fan_in",
    "fan_out",
    "depth_from_inputs",
    "depth_to_outputs",
    "is_sequential",
    "hierarchy_depth",
    "cluster_size",
    "toggle_count",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<F> {
    pub node: CellId,
    pub name: String,
    /// Unscaled values in [`FEATURE_NAMES`] order.
    pub raw: Vec<F>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
}

/// One vector per cell. `golden` should record every net (toggle counts of
/// nets it lacks are 0).
pub fn extract_features<F: Scalar>(
    design: &FlatDesign,
    clusters: &[Cluster],
    golden: &Trace,
) -> Result<Vec<FeatureVector<F>>, LearnError> {
    let level = levelize(design)?;
    let rlevel = reverse_levelize(design)?;
    let mut cluster_size = vec![0usize; design.cells.len()];
    for c in clusters {
        for m in &c.members {
            cluster_size[m.0] = c.len();
        }
    }
    let toggles: std::collections::HashMap<&str, usize> =
        golden.signals.iter().map(|s| (s.name.as_str(), s.toggles())).collect();
    let n = |v: usize| F::from_count(v);
    Ok(design
        .cells
        .iter()
        .map(|cell| {
            let out = cell.output_net;
            let fan_out = design.fanout(out).len() + usize::from(design.is_primary_output(out));
            let raw = vec![
                n(cell.inputs.len()),
                n(fan_out),
                n(level[cell.id.0] as usize),
                n(rlevel[cell.id.0] as usize),
                n(usize::from(cell.is_sequential())),
                n(cell.path.len()),
                n(cluster_size[cell.id.0]),
                n(toggles.get(design.net_name(out)).copied().unwrap_or(0)),
            ];
            FeatureVector {
                node: cell.id,
                name: cell.full_name(),
                raw,
                label: None,
            }
        })
        .collect())
}

/// High iff the node's empirical sensitivity is at least `tau`; nodes the
/// campaign never hit stay unlabeled.
pub fn label_nodes<F: Scalar>(
    mut vectors: Vec<FeatureVector<F>>,
    campaign: &CampaignResult<F>,
    tau: F,
) -> Vec<FeatureVector<F>> {
    for v in &mut vectors {
        v.label =
            campaign
                .node(v.node)
                .and_then(|n| n.sensitivity)
                .map(|s| if s >= tau { Label::High } else { Label::Low });
    }
    vectors
}
