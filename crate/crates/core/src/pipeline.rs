// SPDX-License-Identifier: Apache-2.0

//! Stage glue shared by the command-line tool and the end-to-end tests.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::campaign::{
    build_injection_list, run_campaign, sample_cells, simulate_events, CampaignConfig, CampaignError, CampaignReport,
};
use crate::clustering::Cluster;
use crate::faultdb::{make_set_event, make_seu_event, FaultDb, InjectionEvent};
use crate::gatesim::{RecordSet, SimError, Simulator, Stimulus, Trace};
use crate::learn::{
    cross_val_predict, evaluate, forward_feature_selection, grid_search, predict_sensitivity, roc, train_svm, Dataset,
    FeatureSelection, FeatureVector, GridResult, Label, LearnError, Metrics, NodePrediction, Roc, SvmModel, SvmParams,
};
use crate::netlist::{elaborate, levelize, parse_netlist, CellId, CellInfo, FlatDesign, NetlistError, NetlistSource};
use crate::Scalar;

/// The unique module that no other module instantiates.
pub fn infer_top(src: &NetlistSource) -> Result<String, NetlistError> {
    let used: BTreeSet<&str> = src
        .modules
        .iter()
        .flat_map(|m| m.instances.iter().map(|i| i.master.as_str()))
        .collect();
    let roots: Vec<&str> = src
        .modules
        .iter()
        .map(|m| m.name.as_str())
        .filter(|n| !used.contains(n))
        .collect();
    match roots.as_slice() {
        [one] => Ok(one.to_string()),
        [] => Err(NetlistError::UnknownTop("<none: every module is instantiated>".into())),
        many => Err(NetlistError::UnknownTop(format!("<ambiguous: {}>", many.join(", ")))),
    }
}

pub fn load_design(text: &str, top: Option<&str>) -> Result<FlatDesign, NetlistError> {
    let src = parse_netlist(text)?;
    let top = match top {
        Some(t) => t.to_string(),
        None => infer_top(&src)?,
    };
    elaborate(&src, &top)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSummary {
    pub top: String,
    pub cells: usize,
    pub nets: usize,
    pub sequential_cells: usize,
    pub primary_inputs: Vec<String>,
    pub primary_outputs: Vec<String>,
    pub clock_nets: Vec<String>,
    pub cell_types: BTreeMap<String, usize>,
    pub max_level: u32,
}

pub fn summarize(design: &FlatDesign) -> Result<DesignSummary, NetlistError> {
    let names = |ids: &[crate::netlist::NetId]| ids.iter().map(|&n| design.net_name(n).to_string()).collect();
    let mut cell_types = BTreeMap::new();
    for c in &design.cells {
        *cell_types.entry(c.cell_type.name().to_string()).or_insert(0) += 1;
    }
    Ok(DesignSummary {
        top: design.top.clone(),
        cells: design.cells.len(),
        nets: design.nets.len(),
        sequential_cells: design.sequential_count(),
        primary_inputs: names(&design.primary_inputs),
        primary_outputs: names(&design.primary_outputs),
        clock_nets: names(&design.clock_nets),
        cell_types,
        max_level: levelize(design)?.into_iter().max().unwrap_or(0),
    })
}

/// Sample, draw events, simulate and aggregate in one go.
pub fn campaign_report<F: Scalar>(
    design: &FlatDesign,
    stim: &Stimulus,
    db: &FaultDb<F>,
    clusters: &[Cluster],
    cfg: &CampaignConfig<F>,
    jobs: Option<usize>,
) -> Result<CampaignReport<F>, CampaignError> {
    cfg.validate()?;
    let samples = sample_cells(clusters, cfg.sample_fraction, cfg.seed);
    let events = build_injection_list(design, &samples, db, cfg, stim)?;
    let sim = Simulator::new(design);
    let result = run_campaign(&sim, stim, &events, clusters, &samples, jobs)?;
    Ok(CampaignReport::new(design, cfg, result))
}

/// Run `f` on a pool capped at `jobs` workers (all cores when `None`).
pub fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, PipelineError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| PipelineError::ThreadPool(e.to_string()))?;
    Ok(pool.install(f))
}

/// Fault-free run recording every net, as needed for toggle counts.
pub fn golden_all_nets(design: &FlatDesign, stim: &Stimulus) -> Result<Trace, SimError> {
    Simulator::with_record(design, RecordSet::AllNets).run(stim, &[])
}

/// Cells the campaign did not sample, in id order.
pub fn unsampled_nodes<F>(design: &FlatDesign, report: &CampaignReport<F>) -> Vec<CellId> {
    let sampled: BTreeSet<CellId> = report.clusters.iter().flat_map(|c| c.sampled.iter().copied()).collect();
    design
        .cells
        .iter()
        .map(|c| c.id)
        .filter(|id| !sampled.contains(id))
        .collect()
}

/// Campaign labels where the node has one, model predictions elsewhere.
pub fn merged_labels<F>(labeled: &[FeatureVector<F>], predictions: &[NodePrediction<F>]) -> Vec<(CellId, Label)> {
    let mut out: BTreeMap<CellId, Label> = predictions.iter().map(|p| (p.node, p.label)).collect();
    for v in labeled {
        if let Some(l) = v.label {
            out.insert(v.node, l);
        }
    }
    out.into_iter().collect()
}

/// Mean of the per-fold ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanMetrics<F> {
    pub tpr: F,
    pub tnr: F,
    pub precision: F,
    pub accuracy: F,
    pub f1: F,
}

impl<F: Scalar> MeanMetrics<F> {
    pub fn of(rows: &[Metrics<F>]) -> MeanMetrics<F> {
        let n = F::from_count(rows.len().max(1));
        let mean = |f: fn(&Metrics<F>) -> F| rows.iter().map(f).sum::<F>() / n;
        MeanMetrics {
            tpr: mean(|m| m.tpr),
            tnr: mean(|m| m.tnr),
            precision: mean(|m| m.precision),
            accuracy: mean(|m| m.accuracy),
            f1: mean(|m| m.f1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig<F> {
    pub folds: usize,
    pub seed: u64,
    pub c_grid: Vec<F>,
    pub gamma_grid: Vec<F>,
    /// Kernel parameters used while selecting features.
    pub selection_params: SvmParams<F>,
}

impl<F: Scalar> TrainConfig<F> {
    pub fn new(folds: usize, seed: u64) -> Self {
        TrainConfig {
            folds,
            seed,
            c_grid: crate::learn::DEFAULT_C_GRID.iter().map(|&v| F::lit(v)).collect(),
            gamma_grid: crate::learn::DEFAULT_GAMMA_GRID.iter().map(|&v| F::lit(v)).collect(),
            selection_params: SvmParams::new(F::one(), F::one()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome<F> {
    pub model: SvmModel<F>,
    pub selection: FeatureSelection<F>,
    pub grid: GridResult<F>,
    /// Out-of-fold metrics of the final parameters, one row per fold.
    pub fold_metrics: Vec<Metrics<F>>,
    pub average: MeanMetrics<F>,
    /// ROC of the pooled out-of-fold scores.
    pub roc: Roc<F>,
}

/// Forward feature selection, then a grid search on the selected columns,
/// then a final fit on all labeled rows.
pub fn train_pipeline<F: Scalar>(ds: &Dataset<F>, cfg: &TrainConfig<F>) -> Result<TrainOutcome<F>, LearnError> {
    let selection = forward_feature_selection(ds, &cfg.selection_params, cfg.folds, cfg.seed)?;
    let masked = ds.with_mask(selection.mask.clone());
    let grid = grid_search(
        &masked,
        &cfg.c_grid,
        &cfg.gamma_grid,
        &cfg.selection_params,
        cfg.folds,
        cfg.seed,
    )?;
    let params = SvmParams {
        c: grid.c,
        gamma: grid.gamma,
        ..cfg.selection_params
    };
    let (folds, scores) = cross_val_predict(&masked, &params, cfg.folds, cfg.seed)?;
    let label = |v: F| if v > F::zero() { Label::High } else { Label::Low };
    let actual: Vec<Label> = masked.y.iter().map(|&v| label(v)).collect();
    let predicted: Vec<Label> = scores.iter().map(|&s| Label::from_score(s)).collect();
    let mut fold_metrics = Vec::with_capacity(cfg.folds);
    for f in 0..cfg.folds {
        let idx: Vec<usize> = (0..masked.len()).filter(|&i| folds[i] == f).collect();
        let p: Vec<Label> = idx.iter().map(|&i| predicted[i]).collect();
        let a: Vec<Label> = idx.iter().map(|&i| actual[i]).collect();
        fold_metrics.push(evaluate(&p, &a)?);
    }
    let roc = roc(&scores, &actual)?;
    let model = train_svm(&masked, &params)?;
    Ok(TrainOutcome {
        average: MeanMetrics::of(&fold_metrics),
        model,
        selection,
        grid,
        fold_metrics,
        roc,
    })
}

/// Empirical sensitivity of each node from `per_node` injections at
/// uniformly random times, plus the wall time of the simulations.
#[allow(clippy::too_many_arguments)]
pub fn reference_sensitivity<F: Scalar>(
    sim: &Simulator<'_>,
    stim: &Stimulus,
    db: &FaultDb<F>,
    let_value: F,
    nodes: &[CellId],
    per_node: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<(Vec<F>, Duration), CampaignError> {
    let design = sim.design();
    let mut events: Vec<InjectionEvent> = Vec::with_capacity(nodes.len() * per_node);
    if stim.duration == 0 {
        return Err(CampaignError::InvalidConfig("stimulus duration is zero".into()));
    }
    for &id in nodes {
        let cell = design.cell(id);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id.0 as u64);
        for _ in 0..per_node {
            let time = rng.gen_range(0..stim.duration);
            let ev = if cell.is_sequential() {
                make_seu_event(cell, time)
            } else {
                make_set_event(cell, time, let_value, db)
            };
            events.push(ev.map_err(|_| CampaignError::MissingFaultRecord(cell.cell_type))?);
        }
    }
    let start = Instant::now();
    let outcomes = simulate_events(sim, stim, &events, jobs)?;
    let elapsed = start.elapsed();
    let sens = outcomes
        .chunks(per_node.max(1))
        .map(|ch| F::from_count(ch.iter().filter(|o| o.soft_error).count()) / F::from_count(per_node.max(1)))
        .collect();
    Ok((sens, elapsed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionAssessment<F> {
    pub nodes: usize,
    pub threshold: F,
    pub metrics: Metrics<F>,
    pub prediction_seconds: f64,
    pub injection_seconds: f64,
    /// Full-injection wall time over prediction wall time.
    pub speedup: f64,
}

/// Compare model predictions on `vectors` with labels from a full
/// reference injection over the same nodes.
#[allow(clippy::too_many_arguments)]
pub fn assess_predictions<F: Scalar>(
    model: &SvmModel<F>,
    vectors: &[FeatureVector<F>],
    sim: &Simulator<'_>,
    stim: &Stimulus,
    db: &FaultDb<F>,
    let_value: F,
    tau: F,
    per_node: usize,
    seed: u64,
    jobs: Option<usize>,
) -> Result<(PredictionAssessment<F>, Vec<NodePrediction<F>>), PipelineError> {
    let (pred, pred_time) = predict_sensitivity(model, vectors)?;
    let nodes: Vec<CellId> = vectors.iter().map(|v| v.node).collect();
    let (sens, inj_time) = reference_sensitivity(sim, stim, db, let_value, &nodes, per_node, seed, jobs)?;
    let actual: Vec<Label> = sens
        .iter()
        .map(|&s| if s >= tau { Label::High } else { Label::Low })
        .collect();
    let predicted: Vec<Label> = pred.iter().map(|p| p.label).collect();
    let metrics = evaluate(&predicted, &actual)?;
    let p = pred_time.as_secs_f64();
    let i = inj_time.as_secs_f64();
    Ok((
        PredictionAssessment {
            nodes: nodes.len(),
            threshold: tau,
            metrics,
            prediction_seconds: p,
            injection_seconds: i,
            speedup: if p > 0.0 { i / p } else { f64::INFINITY },
        },
        pred,
    ))
}

/// Module name → hierarchical instance-path prefixes (e.g. `"u_cpu"`).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleMap {
    pub modules: BTreeMap<String, Vec<String>>,
}

impl ModuleMap {
    pub const OTHER: &'static str = "other";

    pub fn from_json(text: &str) -> Result<ModuleMap, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One module per top-level instance, named after the instance.
    pub fn top_level(design: &FlatDesign) -> ModuleMap {
        let names: BTreeSet<&String> = design.cells.iter().filter_map(|c| c.path.first()).collect();
        ModuleMap {
            modules: names.into_iter().map(|n| (n.clone(), vec![n.clone()])).collect(),
        }
    }

    /// First module (in name order) with a prefix matching the cell's
    /// instance path, else [`ModuleMap::OTHER`].
    pub fn module_of(&self, cell: &CellInfo) -> &str {
        let path = cell.path.join(".");
        for (name, prefixes) in &self.modules {
            let hit = prefixes
                .iter()
                .any(|p| path == *p || path.starts_with(&format!("{p}.")));
            if hit {
                return name;
            }
        }
        Self::OTHER
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleShare<F> {
    pub module: String,
    pub nodes: usize,
    pub high: usize,
    /// Percentage of all high-sensitivity nodes that sit in this module.
    pub share_pct: F,
}

/// Distribution of high-sensitivity nodes over modules. Shares sum to 100
/// whenever at least one node is high.
pub fn module_proportions<F: Scalar>(
    design: &FlatDesign,
    labels: &[(CellId, Label)],
    map: &ModuleMap,
) -> Vec<ModuleShare<F>> {
    let mut rows: BTreeMap<String, (usize, usize)> = map.modules.keys().map(|k| (k.clone(), (0, 0))).collect();
    for &(id, label) in labels {
        let e = rows.entry(map.module_of(design.cell(id)).to_string()).or_insert((0, 0));
        e.0 += 1;
        e.1 += usize::from(label == Label::High);
    }
    let total_high: usize = rows.values().map(|r| r.1).sum();
    rows.into_iter()
        .map(|(module, (nodes, high))| ModuleShare {
            module,
            nodes,
            high,
            share_pct: if total_high == 0 {
                F::zero()
            } else {
                F::lit(100.0) * F::from_count(high) / F::from_count(total_high)
            },
        })
        .collect()
}

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum PipelineError {
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error(transparent)]
    Campaign(#[from] CampaignError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_is_the_uninstantiated_module() {
        let src = parse_netlist(
            "module leaf(input a, output y); NOT n(a, y); endmodule
             module top(input a, output y); leaf u(a, y); endmodule",
        )
        .unwrap();
        assert_eq!(infer_top(&src).unwrap(), "top");
        let two = parse_netlist(
            "module a(input x, output y); NOT n(x, y); endmodule module b(input x, output y); BUF n(x, y); endmodule",
        )
        .unwrap();
        assert!(matches!(infer_top(&two), Err(NetlistError::UnknownTop(_))));
    }

    #[test]
    fn shares_sum_to_hundred() {
        let d = load_design(
            "module m(input a, output y); wire w; NOT n1(a, w); NOT n2(w, y); endmodule
             module top(input a, output y, output z); wire w; m u_a(a, w); m u_b(w, y); BUF z1(a, z); endmodule",
            None,
        )
        .unwrap();
        let map = ModuleMap {
            modules: [
                ("alpha".to_string(), vec!["u_a".to_string()]),
                ("beta".to_string(), vec!["u_b".to_string()]),
            ]
            .into(),
        };
        let labels: Vec<(CellId, Label)> = d
            .cells
            .iter()
            .map(|c| {
                (
                    c.id,
                    if c.instance_name == "n1" || c.path.is_empty() {
                        Label::High
                    } else {
                        Label::Low
                    },
                )
            })
            .collect();
        let shares: Vec<ModuleShare<f64>> = module_proportions(&d, &labels, &map);
        let names: Vec<&str> = shares.iter().map(|s| s.module.as_str()).collect();
        assert_eq!(names, vec!["alpha", "beta", "other"]);
        assert_eq!(shares.iter().map(|s| s.high).collect::<Vec<_>>(), vec![1, 1, 1]);
        let total: f64 = shares.iter().map(|s| s.share_pct).sum();
        assert!((total - 100.0).abs() < 1e-9);
    }
}
