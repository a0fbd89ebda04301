// SPDX-License-Identifier: Apache-2.0

//! Topological levelization of the combinational subgraph.
//!
//! Primary inputs, undriven nets and DFF outputs are level-0 sources. A
//! combinational cell sits one level above its deepest combinational
//! driver. A DFF is levelled as a sink: one above the deepest driver of its
//! inputs.

use std::collections::VecDeque;

use super::{CellId, Driver, FlatDesign, NetId, NetlistError};

fn comb_driver(d: &FlatDesign, net: NetId) -> Option<CellId> {
    match d.driver(net) {
        Driver::Cell(c) if !d.cell(c).is_sequential() => Some(c),
        _ => None,
    }
}

/// Combinational cells in topological order, or the members of one loop.
fn topo_order(d: &FlatDesign) -> Result<Vec<CellId>, NetlistError> {
    let n = d.cells.len();
    let mut indeg = vec![0usize; n];
    for c in d.cells.iter().filter(|c| !c.is_sequential()) {
        indeg[c.id.0] = c.inputs.iter().filter(|&&i| comb_driver(d, i).is_some()).count();
    }
    let mut queue: VecDeque<CellId> = d
        .cells
        .iter()
        .filter(|c| !c.is_sequential() && indeg[c.id.0] == 0)
        .map(|c| c.id)
        .collect();
    let mut order = Vec::with_capacity(n);
    while let Some(c) = queue.pop_front() {
        order.push(c);
        for &(sink, _) in d.fanout(d.cell(c).output_net) {
            if d.cell(sink).is_sequential() {
                continue;
            }
            indeg[sink.0] -= 1;
            if indeg[sink.0] == 0 {
                queue.push_back(sink);
            }
        }
    }
    let comb_total = d.cells.iter().filter(|c| !c.is_sequential()).count();
    if order.len() == comb_total {
        return Ok(order);
    }

    // Every leftover cell has a leftover predecessor, so walking backwards
    // must revisit a cell.
    let stuck = |c: CellId| !d.cell(c).is_sequential() && indeg[c.0] > 0;
    let start = d.cells.iter().map(|c| c.id).find(|&c| stuck(c)).unwrap();
    let mut walk = vec![start];
    let mut seen = vec![usize::MAX; n];
    seen[start.0] = 0;
    let mut cur = start;
    loop {
        let pred = d
            .cell(cur)
            .inputs
            .iter()
            .filter_map(|&i| comb_driver(d, i))
            .find(|&p| stuck(p))
            .expect("stuck cell has a stuck predecessor");
        if seen[pred.0] != usize::MAX {
            let mut cycle: Vec<String> = walk[seen[pred.0]..].iter().map(|&c| d.cell(c).full_name()).collect();
            cycle.reverse();
            return Err(NetlistError::CombinationalLoop(cycle));
        }
        seen[pred.0] = walk.len();
        walk.push(pred);
        cur = pred;
    }
}

/// Level of every cell (indexed by cell id), each ≥ 1.
pub fn levelize(d: &FlatDesign) -> Result<Vec<u32>, NetlistError> {
    let order = topo_order(d)?;
    let mut level = vec![0u32; d.cells.len()];
    let net_level = |level: &[u32], net: NetId| comb_driver(d, net).map_or(0, |c| level[c.0]);
    for c in order {
        let cell = d.cell(c);
        level[c.0] = 1 + cell.inputs.iter().map(|&i| net_level(&level, i)).max().unwrap_or(0);
    }
    for cell in d.cells.iter().filter(|c| c.is_sequential()) {
        level[cell.id.0] = 1 + cell.inputs.iter().map(|&i| net_level(&level, i)).max().unwrap_or(0);
    }
    Ok(level)
}

/// Distance of every cell to the nearest sequential or primary-output
/// boundary, counted in cells along the longest combinational path (≥ 1).
pub fn reverse_levelize(d: &FlatDesign) -> Result<Vec<u32>, NetlistError> {
    let order = topo_order(d)?;
    let mut rlevel = vec![0u32; d.cells.len()];
    let downstream = |rlevel: &[u32], net: NetId| {
        d.fanout(net)
            .iter()
            .filter(|(s, _)| !d.cell(*s).is_sequential())
            .map(|(s, _)| rlevel[s.0])
            .max()
            .unwrap_or(0)
    };
    for &c in order.iter().rev() {
        rlevel[c.0] = 1 + downstream(&rlevel, d.cell(c).output_net);
    }
    for cell in d.cells.iter().filter(|c| c.is_sequential()) {
        rlevel[cell.id.0] = 1 + downstream(&rlevel, cell.output_net);
    }
    Ok(rlevel)
}
