// SPDX-License-Identifier: Apache-2.0

//! Sampled fault-injection campaigns and soft-error-rate aggregation.

use std::fmt::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clustering::{membership, Cluster};
use crate::faultdb::{make_set_event, make_seu_event, FaultDb, FaultDbError, FaultKind, InjectionEvent};
use crate::gatesim::{compare_traces, SimError, Simulator, Stimulus};
use crate::netlist::{CellId, FlatDesign, GateType};
use crate::Scalar;

/// Event lists above this size are treated as a configuration mistake.
pub const MAX_EVENTS: u64 = 10_000_000;

/// RNG stream offset for event draws; sampling uses streams `0..clusters`.
const EVENT_STREAM: u64 = 1 << 63;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CampaignError {
    #[error("invalid campaign configuration: {0}")]
    InvalidConfig(String),
    #[error("no fault record for sampled cell type {0}")]
    MissingFaultRecord(GateType),
    #[error("every sampled cell has zero cross-section at this LET")]
    ZeroCrossSection,
    #[error("fluence is zero")]
    ZeroFluence,
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig<F> {
    /// MeV·cm²/mg
    #[serde(rename = "let")]
    pub let_value: F,
    /// particles/(cm²·s)
    pub flux: F,
    /// cm²
    pub device_area: F,
    /// seconds
    pub window: F,
    pub sample_fraction: F,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stimulus: Option<String>,
}

impl<F: Scalar> CampaignConfig<F> {
    pub fn validate(&self) -> Result<(), CampaignError> {
        let bad = |m: &str| Err(CampaignError::InvalidConfig(m.to_string()));
        let finite = [
            self.let_value,
            self.flux,
            self.device_area,
            self.window,
            self.sample_fraction,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all numeric fields must be finite");
        }
        if self.let_value < F::zero() || self.flux < F::zero() {
            return bad("LET and flux must be non-negative");
        }
        if self.device_area <= F::zero() || self.window <= F::zero() {
            return bad("device area and window must be positive");
        }
        if self.sample_fraction <= F::zero() || self.sample_fraction > F::one() {
            return bad("sample fraction must be in (0, 1]");
        }
        if self.event_count().is_none() {
            return bad("event count flux·area·window is too large");
        }
        Ok(())
    }

    /// particles/cm²
    pub fn fluence(&self) -> F {
        self.flux * self.window
    }

    /// `round(flux · area · window)`, or `None` above [`MAX_EVENTS`].
    pub fn event_count(&self) -> Option<u64> {
        let n = (self.flux * self.device_area * self.window).round().to_u64()?;
        (n <= MAX_EVENTS).then_some(n)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSample {
    pub cluster_id: usize,
    /// Sorted by cell id.
    pub cells: Vec<CellId>,
}

/// Number of cells drawn from a cluster of `n`: `max(1, round(n·fraction))`.
pub fn sample_size<F: Scalar>(n: usize, fraction: F) -> usize {
    if n == 0 {
        return 0;
    }
    let m = (F::from_count(n) * fraction).round().to_usize().unwrap_or(n);
    m.clamp(1, n)
}

/// Uniform sampling without replacement inside each cluster.
pub fn sample_cells<F: Scalar>(clusters: &[Cluster], fraction: F, seed: u64) -> Vec<ClusterSample> {
    clusters
        .iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c.cluster_id as u64);
            let m = sample_size(c.len(), fraction);
            let mut cells: Vec<CellId> = rand::seq::index::sample(&mut rng, c.len(), m)
                .into_iter()
                .map(|k| c.members[k])
                .collect();
            cells.sort();
            ClusterSample {
                cluster_id: c.cluster_id,
                cells,
            }
        })
        .collect()
}

/// Draw `round(flux·area·window)` events over the sampled cells, each target
/// picked proportionally to its cross-section at the configured LET.
pub fn build_injection_list<F: Scalar>(
    design: &FlatDesign,
    samples: &[ClusterSample],
    db: &FaultDb<F>,
    cfg: &CampaignConfig<F>,
    stim: &Stimulus,
) -> Result<Vec<InjectionEvent>, CampaignError> {
    cfg.validate()?;
    let targets: Vec<CellId> = samples.iter().flat_map(|s| s.cells.iter().copied()).collect();
    let mut weights = Vec::with_capacity(targets.len());
    for &id in &targets {
        let cell = design.cell(id);
        let kind = FaultKind::for_cell(cell.cell_type);
        let w = db
            .cross_section(cell.cell_type, kind, cfg.let_value)
            .map_err(|_| CampaignError::MissingFaultRecord(cell.cell_type))?;
        weights.push(w.as_f64());
    }
    let n = cfg.event_count().unwrap_or(0);
    if n == 0 {
        return Ok(Vec::new());
    }
    if stim.duration == 0 {
        return Err(CampaignError::InvalidConfig("stimulus duration is zero".into()));
    }
    let pick = WeightedIndex::new(&weights).map_err(|_| CampaignError::ZeroCrossSection)?;
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(EVENT_STREAM | i);
            let cell = design.cell(targets[pick.sample(&mut rng)]);
            let time = rng.gen_range(0..stim.duration);
            let ev = if cell.is_sequential() {
                make_seu_event(cell, time)
            } else {
                make_set_event(cell, time, cfg.let_value, db)
            };
            ev.map_err(|e| match e {
                FaultDbError::UnknownCellType(t) => CampaignError::MissingFaultRecord(t),
                _ => CampaignError::MissingFaultRecord(cell.cell_type),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventOutcome {
    pub event: InjectionEvent,
    pub soft_error: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_divergence: Option<(String, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult<F> {
    #[serde(rename = "id")]
    pub cluster_id: usize,
    pub size: usize,
    pub sampled: Vec<CellId>,
    pub injections: u64,
    pub soft_errors: u64,
    pub ser: F,
    /// No injection landed in this cluster; `ser` is reported as 0.
    pub unsampled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeResult<F> {
    pub cell: CellId,
    pub name: String,
    pub cluster_id: usize,
    pub injections: u64,
    pub soft_errors: u64,
    /// `soft_errors / injections`, absent for a sampled node never hit.
    pub sensitivity: Option<F>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult<F> {
    pub clusters: Vec<ClusterResult<F>>,
    /// Every sampled node, by cell id.
    pub nodes: Vec<NodeResult<F>>,
    pub chip_ser: F,
    pub set_injections: u64,
    pub seu_injections: u64,
    pub set_errors: u64,
    pub seu_errors: u64,
    pub events: Vec<EventOutcome>,
}

impl<F: Scalar> CampaignResult<F> {
    pub fn node(&self, cell: CellId) -> Option<&NodeResult<F>> {
        self.nodes
            .binary_search_by_key(&cell, |n| n.cell)
            .ok()
            .map(|k| &self.nodes[k])
    }
}

fn ratio<F: Scalar>(num: u64, den: u64) -> Option<F> {
    (den > 0).then(|| F::from_count(num as usize) / F::from_count(den as usize))
}

/// Tally event outcomes into per-cluster and per-node counts and SERs.
pub fn aggregate<F: Scalar>(
    design: &FlatDesign,
    clusters: &[Cluster],
    samples: &[ClusterSample],
    outcomes: Vec<EventOutcome>,
) -> CampaignResult<F> {
    let member = membership(clusters, design.cells.len());
    let mut rows: Vec<ClusterResult<F>> = clusters
        .iter()
        .map(|c| ClusterResult {
            cluster_id: c.cluster_id,
            size: c.len(),
            sampled: samples
                .iter()
                .find(|s| s.cluster_id == c.cluster_id)
                .map(|s| s.cells.clone())
                .unwrap_or_default(),
            injections: 0,
            soft_errors: 0,
            ser: F::zero(),
            unsampled: true,
        })
        .collect();
    let row_of = |cluster_id: usize| rows.iter().position(|r| r.cluster_id == cluster_id);
    let row_index: Vec<Option<usize>> = member.iter().map(|m| m.and_then(row_of)).collect();

    let mut sampled: Vec<CellId> = samples.iter().flat_map(|s| s.cells.iter().copied()).collect();
    sampled.sort();
    sampled.dedup();
    let mut nodes: Vec<NodeResult<F>> = sampled
        .iter()
        .map(|&id| NodeResult {
            cell: id,
            name: design.cell(id).full_name(),
            cluster_id: member[id.0].unwrap_or(usize::MAX),
            injections: 0,
            soft_errors: 0,
            sensitivity: None,
        })
        .collect();

    let (mut set_inj, mut seu_inj, mut set_err, mut seu_err) = (0, 0, 0, 0);
    for o in &outcomes {
        let id = o.event.target_cell;
        let hit = u64::from(o.soft_error);
        if let Some(r) = row_index.get(id.0).copied().flatten() {
            rows[r].injections += 1;
            rows[r].soft_errors += hit;
        }
        if let Ok(k) = nodes.binary_search_by_key(&id, |n| n.cell) {
            nodes[k].injections += 1;
            nodes[k].soft_errors += hit;
        }
        match o.event.fault_kind {
            FaultKind::Set => {
                set_inj += 1;
                set_err += hit;
            }
            FaultKind::Seu => {
                seu_inj += 1;
                seu_err += hit;
            }
        }
    }
    for r in &mut rows {
        r.unsampled = r.injections == 0;
        r.ser = ratio(r.soft_errors, r.injections).unwrap_or_else(F::zero);
    }
    for n in &mut nodes {
        n.sensitivity = ratio(n.soft_errors, n.injections);
    }
    let mut result = CampaignResult {
        clusters: rows,
        nodes,
        chip_ser: F::zero(),
        set_injections: set_inj,
        seu_injections: seu_inj,
        set_errors: set_err,
        seu_errors: seu_err,
        events: outcomes,
    };
    result.chip_ser = chip_ser(&result);
    result
}

/// Run one faulty simulation per event against a single golden run.
/// `jobs` caps the worker count; results do not depend on it.
pub fn simulate_events(
    sim: &Simulator<'_>,
    stim: &Stimulus,
    events: &[InjectionEvent],
    jobs: Option<usize>,
) -> Result<Vec<EventOutcome>, CampaignError> {
    let golden = sim.run(stim, &[])?;
    let one = |ev: &InjectionEvent| -> Result<EventOutcome, CampaignError> {
        let faulty = sim.run(stim, std::slice::from_ref(ev))?;
        let v = compare_traces(&golden, &faulty, (ev.time, stim.duration))?;
        Ok(EventOutcome {
            event: *ev,
            soft_error: v.is_error(),
            first_divergence: v.first_divergence,
        })
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| CampaignError::ThreadPool(e.to_string()))?;
    pool.install(|| events.par_iter().map(one).collect())
}

pub fn run_campaign<F: Scalar>(
    sim: &Simulator<'_>,
    stim: &Stimulus,
    events: &[InjectionEvent],
    clusters: &[Cluster],
    samples: &[ClusterSample],
    jobs: Option<usize>,
) -> Result<CampaignResult<F>, CampaignError> {
    let outcomes = simulate_events(sim, stim, events, jobs)?;
    Ok(aggregate(sim.design(), clusters, samples, outcomes))
}

/// Per-cluster SER in cluster order; 0 for clusters without injections.
pub fn cluster_ser<F: Scalar>(result: &CampaignResult<F>) -> Vec<F> {
    result
        .clusters
        .iter()
        .map(|r| ratio(r.soft_errors, r.injections).unwrap_or_else(F::zero))
        .collect()
}

/// Size-weighted mean of cluster SERs.
pub fn weighted_ser<F: Scalar>(rows: &[(usize, F)]) -> F {
    let total: usize = rows.iter().map(|r| r.0).sum();
    if total == 0 {
        return F::zero();
    }
    let num: F = rows.iter().map(|&(n, s)| F::from_count(n) * s).sum();
    num / F::from_count(total)
}

pub fn chip_ser<F: Scalar>(result: &CampaignResult<F>) -> F {
    let rows: Vec<(usize, F)> = result
        .clusters
        .iter()
        .zip(cluster_ser(result))
        .map(|(r, s)| (r.size, s))
        .collect();
    weighted_ser(&rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossSections<F> {
    /// cm²
    pub set: F,
    /// cm²
    pub seu: F,
}

/// Errors of each kind divided by fluence.
pub fn estimate_xsect<F: Scalar>(
    result: &CampaignResult<F>,
    cfg: &CampaignConfig<F>,
) -> Result<CrossSections<F>, CampaignError> {
    let fluence = cfg.fluence();
    if fluence <= F::zero() {
        return Err(CampaignError::ZeroFluence);
    }
    Ok(CrossSections {
        set: F::from_count(result.set_errors as usize) / fluence,
        seu: F::from_count(result.seu_errors as usize) / fluence,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedNode<F> {
    pub cell: CellId,
    pub name: String,
    pub cluster_id: usize,
    pub cluster_ser: F,
    pub sensitivity: F,
    pub injections: u64,
    pub soft_errors: u64,
}

/// Tested nodes ordered by cluster SER (descending, ties to the lower
/// cluster id), then node sensitivity (descending), then cell id.
pub fn rank_sensitive_nodes<F: Scalar>(result: &CampaignResult<F>) -> Vec<RankedNode<F>> {
    let cser = |id: usize| {
        result
            .clusters
            .iter()
            .find(|r| r.cluster_id == id)
            .map_or(F::zero(), |r| r.ser)
    };
    let mut ranked: Vec<RankedNode<F>> = result
        .nodes
        .iter()
        .filter_map(|n| {
            Some(RankedNode {
                cell: n.cell,
                name: n.name.clone(),
                cluster_id: n.cluster_id,
                cluster_ser: cser(n.cluster_id),
                sensitivity: n.sensitivity?,
                injections: n.injections,
                soft_errors: n.soft_errors,
            })
        })
        .collect();
    ranked.sort_by(|a, b| {
        b.cluster_ser
            .partial_cmp(&a.cluster_ser)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cluster_id.cmp(&b.cluster_id))
            .then(
                b.sensitivity
                    .partial_cmp(&a.sensitivity)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
            .then(a.cell.cmp(&b.cell))
    });
    ranked
}

/// Counts of tested-node sensitivities in `bins` equal-width bins over [0, 1].
pub fn sensitivity_histogram<F: Scalar>(result: &CampaignResult<F>, bins: usize) -> Vec<usize> {
    let mut h = vec![0; bins];
    if bins == 0 {
        return h;
    }
    for s in result.nodes.iter().filter_map(|n| n.sensitivity) {
        let k = (s * F::from_count(bins)).floor().to_usize().unwrap_or(0).min(bins - 1);
        h[k] += 1;
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport<F> {
    pub config: CampaignConfig<F>,
    pub design: String,
    pub cells: usize,
    pub event_count: u64,
    pub clusters: Vec<ClusterResult<F>>,
    pub chip_ser: F,
    /// `None` when the fluence is zero.
    pub set_xsect: Option<F>,
    pub seu_xsect: Option<F>,
    pub ranking: Vec<RankedNode<F>>,
    pub sensitivity_histogram: Vec<usize>,
    pub nodes: Vec<NodeResult<F>>,
    pub events: Vec<EventOutcome>,
}

impl<F: Scalar> CampaignReport<F> {
    pub fn new(design: &FlatDesign, cfg: &CampaignConfig<F>, result: CampaignResult<F>) -> Self {
        let xs = estimate_xsect(&result, cfg).ok();
        CampaignReport {
            config: cfg.clone(),
            design: design.top.clone(),
            cells: design.cells.len(),
            event_count: result.events.len() as u64,
            ranking: rank_sensitive_nodes(&result),
            sensitivity_histogram: sensitivity_histogram(&result, 10),
            chip_ser: result.chip_ser,
            set_xsect: xs.map(|x| x.set),
            seu_xsect: xs.map(|x| x.seu),
            clusters: result.clusters,
            nodes: result.nodes,
            events: result.events,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Rebuild the counts view used by labelling and ranking.
    pub fn result(&self) -> CampaignResult<F> {
        let count = |kind: FaultKind, err: bool| {
            self.events
                .iter()
                .filter(|o| o.event.fault_kind == kind && (!err || o.soft_error))
                .count() as u64
        };
        CampaignResult {
            clusters: self.clusters.clone(),
            nodes: self.nodes.clone(),
            chip_ser: self.chip_ser,
            set_injections: count(FaultKind::Set, false),
            seu_injections: count(FaultKind::Seu, false),
            set_errors: count(FaultKind::Set, true),
            seu_errors: count(FaultKind::Seu, true),
            events: self.events.clone(),
        }
    }

    /// Plain-text summary table.
    pub fn to_table(&self) -> String {
        let pct = |v: F| format!("{:.2}", v.as_f64() * 100.0);
        let sci = |v: Option<F>| v.map_or("n/a".to_string(), |x| format!("{:.3e}", x.as_f64()));
        let mut s = String::new();
        let _ = writeln!(
            s,
            "design {}  LET {} MeV·cm²/mg  flux {:.3e} /(cm²·s)  events {}",
            self.design,
            self.config.let_value,
            self.config.flux.as_f64(),
            self.event_count
        );
        let _ = writeln!(
            s,
            "{:>8} {:>7} {:>8} {:>11} {:>7} {:>8}",
            "cluster", "cells", "sampled", "injections", "errors", "SER (%)"
        );
        for r in &self.clusters {
            let flag = if r.unsampled { " *" } else { "" };
            let _ = writeln!(
                s,
                "{:>8} {:>7} {:>8} {:>11} {:>7} {:>8}{flag}",
                r.cluster_id,
                r.size,
                r.sampled.len(),
                r.injections,
                r.soft_errors,
                pct(r.ser)
            );
        }
        let _ = writeln!(s, "chip SER (%)         {}", pct(self.chip_ser));
        let _ = writeln!(s, "SET Xsect (cm²)      {}", sci(self.set_xsect));
        let _ = writeln!(s, "SEU Xsect (cm²)      {}", sci(self.seu_xsect));
        if self.clusters.iter().any(|r| r.unsampled) {
            s.push_str("* no injections landed in this cluster\n");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{cluster_cells, ClusterParams};
    use crate::faultdb::load_fault_db;
    use crate::gatesim::ClockSpec;
    use crate::netlist::{elaborate, parse_netlist};

    fn cluster(id: usize, members: std::ops::Range<usize>) -> Cluster {
        Cluster {
            cluster_id: id,
            center: CellId(members.start),
            members: members.map(CellId).collect(),
        }
    }

    fn cfg(flux: f64, area: f64, window: f64) -> CampaignConfig<f64> {
        CampaignConfig {
            let_value: 37.0,
            flux,
            device_area: area,
            window,
            sample_fraction: 1.0,
            seed: 11,
            stimulus: None,
        }
    }

    #[test]
    fn sample_sizes_round_with_floor_of_one() {
        let cs = [cluster(0, 0..50), cluster(1, 50..250)];
        let s = sample_cells(&cs, 0.1, 3);
        assert_eq!(s.iter().map(|s| s.cells.len()).collect::<Vec<_>>(), vec![5, 20]);
        assert!(s[1].cells.iter().all(|c| (50..250).contains(&c.0)));
        let all = sample_cells(&cs, 1.0, 3);
        assert_eq!(all[0].cells, cs[0].members);
        assert_eq!(sample_cells(&[cluster(0, 7..8)], 0.01, 3)[0].cells, vec![CellId(7)]);
        assert_eq!(sample_cells(&cs, 0.1, 3), s);
    }

    #[test]
    fn event_count_rounds() {
        assert_eq!(cfg(4e8, 1e-5, 1e-3).event_count(), Some(4));
        assert_eq!(cfg(0.0, 1e-5, 1e-3).event_count(), Some(0));
        assert_eq!(cfg(1e30, 1.0, 1.0).event_count(), None);
        assert!(cfg(1e30, 1.0, 1.0).validate().is_err());
        assert!(CampaignConfig {
            sample_fraction: 0.0,
            ..cfg(1.0, 1.0, 1.0)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn eq2_hand_case() {
        let v = weighted_ser::<f64>(&[(100, 0.10), (300, 0.30)]);
        assert!((v - 0.25).abs() < 1e-12);
        assert_eq!(weighted_ser::<f64>(&[(10, 0.4)]), 0.4);
        assert_eq!(weighted_ser::<f64>(&[(10, 0.0), (20, 0.0)]), 0.0);
    }

    fn five_gate() -> FlatDesign {
        let text = "module top(input a, input b, input c, input clk, output y, output q);
            wire n1, n2, n3;
            NAND2 g1(a, b, n1); NOT g2(c, n2); AND2 g3(n1, n2, n3); BUF g4(n3, y); DFF f(n3, clk, q);
            endmodule";
        elaborate(&parse_netlist(text).unwrap(), "top").unwrap()
    }

    fn five_stim() -> Stimulus {
        Stimulus {
            clock: Some(ClockSpec {
                net: "clk".into(),
                period: 10,
                first_edge: 5,
            }),
            inputs: [
                ("a".to_string(), vec![(0, 1), (30, 0)]),
                ("b".to_string(), vec![(0, 1)]),
                ("c".to_string(), vec![(0, 0)]),
            ]
            .into(),
            duration: 60,
            dff_init: 0,
        }
    }

    #[test]
    fn output_driver_hit_counts_one_error() {
        let d = five_gate();
        let cs = vec![cluster(0, 0..5)];
        let samples = sample_cells(&cs, 1.0, 0);
        let sim = Simulator::new(&d);
        let ev = InjectionEvent {
            target_cell: d.cell_by_name("g4").unwrap(),
            fault_kind: FaultKind::Set,
            time: 12,
            width: Some(2),
        };
        let r: CampaignResult<f64> =
            run_campaign(&sim, &five_stim(), std::slice::from_ref(&ev), &cs, &samples, Some(2)).unwrap();
        assert_eq!(r.clusters[0].soft_errors, 1);
        assert_eq!(r.clusters[0].ser, 1.0);
        let again: CampaignResult<f64> = run_campaign(&sim, &five_stim(), &[ev, ev], &cs, &samples, Some(1)).unwrap();
        assert_eq!(again.events[0], again.events[1]);
    }

    #[test]
    fn zero_events_zero_ser() {
        let d = five_gate();
        let cs = vec![cluster(0, 0..3), cluster(1, 3..5)];
        let samples = sample_cells(&cs, 1.0, 0);
        let r: CampaignResult<f64> = run_campaign(&Simulator::new(&d), &five_stim(), &[], &cs, &samples, None).unwrap();
        assert!(r
            .clusters
            .iter()
            .all(|c| c.ser == 0.0 && c.unsampled && c.injections == 0));
        assert_eq!(r.chip_ser, 0.0);
        assert!(rank_sensitive_nodes(&r).is_empty());
    }

    #[test]
    fn xsect_arithmetic() {
        let mut r: CampaignResult<f64> = aggregate(&five_gate(), &[cluster(0, 0..5)], &[], vec![]);
        r.seu_errors = 10;
        let c = cfg(4e8, 1e-5, 1e-3);
        let x = estimate_xsect(&r, &c).unwrap();
        assert!((x.seu - 2.5e-5).abs() < 1e-18);
        assert_eq!(x.set, 0.0);
        let doubled = estimate_xsect(
            &r,
            &CampaignConfig {
                window: 2e-3,
                ..c.clone()
            },
        )
        .unwrap();
        assert!((doubled.seu - x.seu / 2.0).abs() < 1e-18);
        assert_eq!(estimate_xsect(&r, &cfg(0.0, 1.0, 1.0)), Err(CampaignError::ZeroFluence));
    }

    fn two_type_db() -> FaultDb<f64> {
        load_fault_db(
            r#"{"time_unit_ns": 1.0, "cell_types": {
                "NOT": {"fault_kind": "SET", "let_xsect": [[1.0, 1e-9], [100.0, 1e-9]], "pulse_width": [[1.0, 2.0], [100.0, 2.0]]},
                "BUF": {"fault_kind": "SET", "let_xsect": [[1.0, 3e-9], [100.0, 3e-9]], "pulse_width": [[1.0, 2.0], [100.0, 2.0]]}
            }}"#,
        )
        .unwrap()
    }

    #[test]
    fn target_selection_follows_cross_section() {
        let d = elaborate(
            &parse_netlist("module top(input a, output y, output z); NOT n(a, y); BUF b(a, z); endmodule").unwrap(),
            "top",
        )
        .unwrap();
        let db = two_type_db();
        let samples = vec![ClusterSample {
            cluster_id: 0,
            cells: vec![CellId(0), CellId(1)],
        }];
        let stim = Stimulus {
            clock: None,
            inputs: Default::default(),
            duration: 100,
            dff_init: 0,
        };
        let c = cfg(2e4, 1.0, 1.0);
        let evs = build_injection_list(&d, &samples, &db, &c, &stim).unwrap();
        assert_eq!(evs.len(), 20_000);
        let buf = evs.iter().filter(|e| e.target_cell == CellId(1)).count() as f64;
        let not = evs.len() as f64 - buf;
        let (eb, en) = (0.75 * 20_000.0, 0.25 * 20_000.0);
        let chi2 = (buf - eb).powi(2) / eb + (not - en).powi(2) / en;
        // 1 degree of freedom, p = 0.001
        assert!(chi2 < 10.83, "chi2 = {chi2}");
        assert!(evs.iter().all(|e| e.time < 100 && e.width == Some(2)));
        assert_eq!(build_injection_list(&d, &samples, &db, &c, &stim).unwrap(), evs);
        assert!(build_injection_list(&d, &samples, &db, &cfg(0.0, 1.0, 1.0), &stim)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn missing_record() {
        let d = five_gate();
        let db = two_type_db();
        let samples = vec![ClusterSample {
            cluster_id: 0,
            cells: vec![CellId(0)],
        }];
        assert_eq!(
            build_injection_list(&d, &samples, &db, &cfg(1.0, 1.0, 1.0), &five_stim()),
            Err(CampaignError::MissingFaultRecord(GateType::Nand2))
        );
    }

    #[test]
    fn ranking_order() {
        let d = five_gate();
        let cs = vec![cluster(0, 0..2), cluster(1, 2..5)];
        let samples = sample_cells(&cs, 1.0, 0);
        let ev = |c: usize, err: bool| EventOutcome {
            event: InjectionEvent {
                target_cell: CellId(c),
                fault_kind: if c == 4 { FaultKind::Seu } else { FaultKind::Set },
                time: 1,
                width: (c != 4).then_some(1),
            },
            soft_error: err,
            first_divergence: None,
        };
        let outcomes = vec![
            ev(0, false),
            ev(1, true),
            ev(2, true),
            ev(3, false),
            ev(4, true),
            ev(4, false),
        ];
        let r: CampaignResult<f64> = aggregate(&d, &cs, &samples, outcomes);
        assert_eq!(r.clusters[0].ser, 0.5);
        assert_eq!(r.clusters[1].ser, 0.5);
        let order: Vec<usize> = rank_sensitive_nodes(&r).iter().map(|n| n.cell.0).collect();
        assert_eq!(order, vec![1, 0, 2, 4, 3]);
        assert_eq!(r.seu_injections, 2);
        assert_eq!(r.set_errors, 2);
        let expect = (2.0 * 0.5 + 3.0 * 0.5) / 5.0;
        assert!((r.chip_ser - expect).abs() < 1e-12);
        assert_eq!(sensitivity_histogram(&r, 2), vec![2, 3]);
    }

    #[test]
    fn report_round_trips_and_tabulates() {
        let d = five_gate();
        let cs = cluster_cells(&d.cells, &ClusterParams::new(2, 1, 1)).unwrap().clusters;
        let samples = sample_cells(&cs, 1.0, 0);
        let stim = five_stim();
        let db: FaultDb<f64> = load_fault_db(&equal_db()).unwrap();
        let c = CampaignConfig {
            sample_fraction: 1.0,
            ..cfg(50.0, 1.0, 1.0)
        };
        let evs = build_injection_list(&d, &samples, &db, &c, &stim).unwrap();
        let r = run_campaign(&Simulator::new(&d), &stim, &evs, &cs, &samples, None).unwrap();
        let report = CampaignReport::new(&d, &c, r.clone());
        let text = report.to_json();
        let back: CampaignReport<f64> = CampaignReport::from_json(&text).unwrap();
        assert_eq!(back, report);
        assert_eq!(back.result(), r);
        let table = report.to_table();
        assert!(table.contains("SER (%)") && table.contains("SEU Xsect"));
    }

    fn equal_db() -> String {
        let mut s = String::from(r#"{"time_unit_ns": 1.0, "cell_types": {"#);
        let entries: Vec<String> = GateType::ALL
            .iter()
            .map(|g| {
                let kind = FaultKind::for_cell(*g);
                let pw = if kind == FaultKind::Set {
                    r#", "pulse_width": [[1.0, 2.0]]"#
                } else {
                    ""
                };
                format!(
                    r#""{}": {{"fault_kind": "{kind}", "let_xsect": [[1.0, 1e-9]]{pw}}}"#,
                    g.name()
                )
            })
            .collect();
        s.push_str(&entries.join(","));
        s.push_str("}}");
        s
    }
}
