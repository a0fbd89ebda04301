// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use ssresf::campaign::{CampaignConfig, RankedNode};
use ssresf::clustering::{cluster_cells, membership, ClusterParams, ClusterReport};
use ssresf::faultdb::load_fault_db;
use ssresf::gatesim::{write_vcd, Simulator, Stimulus};
use ssresf::learn::{
    extract_features, label_nodes, predict_sensitivity, preprocess, FeatureVector, NodePrediction, FEATURE_NAMES,
};
use ssresf::netlist::FlatDesign;
use ssresf::pipeline::{
    assess_predictions, campaign_report, golden_all_nets, load_design, merged_labels, module_proportions, summarize,
    train_pipeline, unsampled_nodes, with_jobs, ModuleMap, ModuleShare, PredictionAssessment, TrainConfig,
};
use ssresf::{CampaignReport64, FaultDb64, SvmModel64};

use crate::error::CliError;
use crate::manifest::RunManifest;
use crate::{Command, DesignArgs};

fn json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes") + "\n"
}

/// File access for one invocation; every read is digested into the manifest.
struct Ctx {
    manifest: RunManifest,
}

impl Ctx {
    fn read(&mut self, path: &Path) -> Result<String, CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::input(path.display(), e))?;
        self.manifest.input(path, &bytes);
        String::from_utf8(bytes).map_err(|e| CliError::input(path.display(), e))
    }

    fn write(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::input(dir.display(), e))?;
        }
        fs::write(path, text).map_err(|e| CliError::input(path.display(), e))?;
        self.manifest.outputs.push(path.display().to_string());
        Ok(())
    }

    /// To the file when given, else stdout.
    fn emit(&mut self, out: Option<&Path>, text: &str) -> Result<(), CliError> {
        match out {
            Some(p) => self.write(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn design(&mut self, args: &DesignArgs) -> Result<FlatDesign, CliError> {
        let text = self.read(&args.netlist)?;
        Ok(self
            .manifest
            .time("parse", || load_design(&text, args.top.as_deref()))?)
    }

    /// Cluster report that partitions exactly this design's cells.
    fn clusters(&mut self, path: &Path, design: &FlatDesign) -> Result<ClusterReport, CliError> {
        let text = self.read(path)?;
        let report: ClusterReport = serde_json::from_str(&text).map_err(|e| CliError::input(path.display(), e))?;
        let n = design.cells.len();
        let members: usize = report.clusters.iter().map(|c| c.len()).sum();
        let covered = membership(&report.clusters, n).iter().all(Option::is_some);
        let in_range = report.clusters.iter().flat_map(|c| &c.members).all(|m| m.0 < n);
        if members != n || !covered || !in_range {
            return Err(CliError::input(
                path.display(),
                "cluster report does not partition the netlist's cells",
            ));
        }
        Ok(report)
    }

    fn stimulus(&mut self, path: &Path) -> Result<Stimulus, CliError> {
        let text = self.read(path)?;
        Stimulus::from_json(&text).map_err(|e| CliError::input(path.display(), e))
    }

    fn db(&mut self, path: &Path) -> Result<FaultDb64, CliError> {
        let text = self.read(path)?;
        load_fault_db(&text).map_err(|e| CliError::input(path.display(), e))
    }

    fn campaign(&mut self, path: &Path, design: &FlatDesign) -> Result<CampaignReport64, CliError> {
        let text = self.read(path)?;
        let report = CampaignReport64::from_json(&text).map_err(|e| CliError::input(path.display(), e))?;
        if report.cells != design.cells.len() {
            return Err(CliError::input(
                path.display(),
                "campaign report was produced for a different netlist",
            ));
        }
        Ok(report)
    }

    fn model(&mut self, path: &Path) -> Result<SvmModel64, CliError> {
        let text = self.read(path)?;
        SvmModel64::from_json(&text).map_err(|e| CliError::input(path.display(), e))
    }

    fn features(
        &mut self,
        design: &FlatDesign,
        clusters: &ClusterReport,
        stim: &Stimulus,
    ) -> Result<Vec<FeatureVector<f64>>, CliError> {
        let golden = self.manifest.time("golden", || golden_all_nets(design, stim))?;
        Ok(extract_features(design, &clusters.clusters, &golden)?)
    }
}

pub fn run(cmd: Command, manifest_path: Option<&Path>) -> Result<(), CliError> {
    let name = match &cmd {
        Command::Parse { .. } => "parse",
        Command::Cluster { .. } => "cluster",
        Command::Campaign { .. } => "campaign",
        Command::Train { .. } => "train",
        Command::Predict { .. } => "predict",
        Command::Report { .. } => "report",
    };
    let mut ctx = Ctx {
        manifest: RunManifest::new(name),
    };
    match cmd {
        Command::Parse { design, output } => {
            let d = ctx.design(&design)?;
            ctx.emit(output.as_deref(), &json(&summarize(&d)?))?;
        }
        Command::Cluster {
            design,
            kn,
            ln,
            max_iterations,
            seed,
            output,
        } => {
            let d = ctx.design(&design)?;
            let params = ClusterParams {
                max_iterations,
                ..ClusterParams::new(kn, ln, seed.seed)
            };
            ctx.manifest.seed("cluster", seed.seed);
            let outcome = ctx.manifest.time("cluster", || cluster_cells(&d.cells, &params))?;
            let report = ClusterReport {
                params,
                clusters: outcome.clusters,
            };
            ctx.emit(output.as_deref(), &json(&report))?;
        }
        Command::Campaign {
            design,
            clusters,
            db,
            stimulus,
            let_value,
            flux,
            area,
            window,
            fraction,
            seed,
            jobs,
            dump_vcd,
            vcd_limit,
            table,
            output,
        } => {
            let d = ctx.design(&design)?;
            let clusters_report = ctx.clusters(&clusters, &d)?;
            let db = ctx.db(&db)?;
            let stim = ctx.stimulus(&stimulus)?;
            let cfg = CampaignConfig {
                let_value,
                flux,
                device_area: area,
                window,
                sample_fraction: fraction,
                seed: seed.seed,
                stimulus: Some(stimulus.display().to_string()),
            };
            ctx.manifest.seed("campaign", seed.seed);
            let report = ctx.manifest.time("campaign", || {
                campaign_report(&d, &stim, &db, &clusters_report.clusters, &cfg, jobs.jobs)
            })?;
            if let Some(dir) = dump_vcd {
                let sim = Simulator::new(&d);
                let golden = sim.run(&stim, &[])?;
                ctx.write(&dir.join("golden.vcd"), &write_vcd(&golden, &d))?;
                for (i, o) in report.events.iter().take(vcd_limit).enumerate() {
                    let faulty = sim.run(&stim, std::slice::from_ref(&o.event))?;
                    ctx.write(&dir.join(format!("event_{i:05}.vcd")), &write_vcd(&faulty, &d))?;
                }
            }
            if let Some(t) = table {
                ctx.write(&t, &report.to_table())?;
            }
            ctx.emit(output.as_deref(), &report.to_json())?;
        }
        Command::Train {
            design,
            clusters,
            campaign,
            stimulus,
            tau,
            folds,
            seed,
            jobs,
            out_dir,
        } => {
            let d = ctx.design(&design)?;
            let clusters = ctx.clusters(&clusters, &d)?;
            let report = ctx.campaign(&campaign, &d)?;
            let stim = ctx.stimulus(&stimulus)?;
            let tau = tau.unwrap_or(report.chip_ser);
            let vectors = ctx.features(&d, &clusters, &stim)?;
            let labeled = label_nodes(vectors, &report.result(), tau);
            let ds = preprocess(&labeled)?;
            let cfg = TrainConfig::<f64>::new(folds, seed.seed);
            ctx.manifest.seed("train", seed.seed);
            let out = ctx
                .manifest
                .time("train", || with_jobs(jobs.jobs, || train_pipeline(&ds, &cfg)))??;
            write_training_artifacts(&mut ctx, &out_dir, tau, &labeled, &out)?;
        }
        Command::Predict {
            design,
            clusters,
            stimulus,
            model,
            campaign,
            output,
        } => {
            let d = ctx.design(&design)?;
            let clusters = ctx.clusters(&clusters, &d)?;
            let stim = ctx.stimulus(&stimulus)?;
            let model = ctx.model(&model)?;
            let mut vectors = ctx.features(&d, &clusters, &stim)?;
            if let Some(path) = campaign {
                let report = ctx.campaign(&path, &d)?;
                let keep: BTreeSet<_> = unsampled_nodes(&d, &report).into_iter().collect();
                vectors.retain(|v| keep.contains(&v.node));
            }
            let (nodes, wall) = predict_sensitivity(&model, &vectors)?;
            let seconds = wall.as_secs_f64();
            ctx.manifest.stage_seconds.insert("predict".into(), seconds);
            #[derive(Serialize)]
            struct Predictions {
                high: usize,
                low: usize,
                wall_time_seconds: f64,
                nodes: Vec<NodePrediction<f64>>,
            }
            let high = nodes.iter().filter(|n| n.label == ssresf::learn::Label::High).count();
            let out = Predictions {
                high,
                low: nodes.len() - high,
                wall_time_seconds: seconds,
                nodes,
            };
            ctx.emit(output.as_deref(), &json(&out))?;
        }
        Command::Report {
            design,
            clusters,
            campaign,
            model,
            db,
            stimulus,
            modules,
            tau,
            per_node,
            seed,
            jobs,
            out_dir,
        } => {
            let d = ctx.design(&design)?;
            let clusters = ctx.clusters(&clusters, &d)?;
            let report = ctx.campaign(&campaign, &d)?;
            let model = ctx.model(&model)?;
            let db = ctx.db(&db)?;
            let stim = ctx.stimulus(&stimulus)?;
            let map = match modules {
                Some(p) => {
                    let text = ctx.read(&p)?;
                    ModuleMap::from_json(&text).map_err(|e| CliError::input(p.display(), e))?
                }
                None => ModuleMap::top_level(&d),
            };
            let tau = tau.unwrap_or(report.chip_ser);
            let vectors = ctx.features(&d, &clusters, &stim)?;
            let labeled = label_nodes(vectors, &report.result(), tau);
            let unsampled: BTreeSet<_> = unsampled_nodes(&d, &report).into_iter().collect();
            let held_out: Vec<_> = labeled
                .iter()
                .filter(|v| unsampled.contains(&v.node))
                .cloned()
                .collect();
            ctx.manifest.seed("reference", seed.seed);
            let assessment = if held_out.is_empty() {
                None
            } else {
                let sim = Simulator::new(&d);
                let (a, _) = assess_predictions(
                    &model,
                    &held_out,
                    &sim,
                    &stim,
                    &db,
                    report.config.let_value,
                    tau,
                    per_node,
                    seed.seed,
                    jobs.jobs,
                )?;
                ctx.manifest
                    .stage_seconds
                    .insert("predict".into(), a.prediction_seconds);
                ctx.manifest
                    .stage_seconds
                    .insert("full_injection".into(), a.injection_seconds);
                Some(a)
            };
            let unlabeled: Vec<_> = labeled.iter().filter(|v| v.label.is_none()).cloned().collect();
            let (fill, _) = predict_sensitivity(&model, &unlabeled)?;
            let shares: Vec<ModuleShare<f64>> = module_proportions(&d, &merged_labels(&labeled, &fill), &map);
            let combined = CombinedReport {
                design: &d.top,
                cells: d.cells.len(),
                let_value: report.config.let_value,
                flux: report.config.flux,
                events: report.event_count,
                chip_ser: report.chip_ser,
                set_xsect: report.set_xsect,
                seu_xsect: report.seu_xsect,
                unsampled_clusters: report
                    .clusters
                    .iter()
                    .filter(|c| c.unsampled)
                    .map(|c| c.cluster_id)
                    .collect(),
                tau,
                prediction: assessment,
                modules: shares,
                sensitivity_histogram: &report.sensitivity_histogram,
                top_ranked: &report.ranking[..report.ranking.len().min(10)],
            };
            ctx.write(&out_dir.join("report.json"), &json(&combined))?;
            ctx.write(&out_dir.join("report.txt"), &combined.to_text())?;
        }
    }
    if let Some(path) = manifest_path {
        let manifest = std::mem::replace(&mut ctx.manifest, RunManifest::new(name)).finish();
        ctx.write(path, &json(&manifest))?;
    }
    Ok(())
}

fn write_training_artifacts(
    ctx: &mut Ctx,
    dir: &Path,
    tau: f64,
    labeled: &[FeatureVector<f64>],
    out: &ssresf::pipeline::TrainOutcome<f64>,
) -> Result<(), CliError> {
    ctx.write(&dir.join("model.json"), &out.model.to_json())?;

    #[derive(Serialize)]
    struct TrainingSet<'a> {
        tau: f64,
        feature_names: &'a [&'a str],
        vectors: Vec<&'a FeatureVector<f64>>,
    }
    let set = TrainingSet {
        tau,
        feature_names: &FEATURE_NAMES,
        vectors: labeled.iter().filter(|v| v.label.is_some()).collect(),
    };
    ctx.write(&dir.join("training_set.json"), &json(&set))?;

    let mut curve = String::from("features,added,mean_cv_accuracy\n");
    for (i, (&f, acc)) in out.selection.order.iter().zip(&out.selection.curve).enumerate() {
        let _ = writeln!(curve, "{},{},{}", i + 1, FEATURE_NAMES[f], acc);
    }
    ctx.write(&dir.join("feature_selection.csv"), &curve)?;

    let mut grid = String::from("c,gamma,mean_cv_accuracy\n");
    for (c, g, a) in &out.grid.table {
        let _ = writeln!(grid, "{c},{g},{a}");
    }
    ctx.write(&dir.join("grid.csv"), &grid)?;

    let mut roc = String::from("fpr,tpr\n");
    for (x, y) in &out.roc.points {
        let _ = writeln!(roc, "{x},{y}");
    }
    ctx.write(&dir.join("roc.csv"), &roc)?;

    #[derive(Serialize)]
    struct MetricsFile<'a> {
        c: f64,
        gamma: f64,
        selected_features: Vec<&'a str>,
        folds: &'a [ssresf::Metrics64],
        average: &'a ssresf::pipeline::MeanMetrics<f64>,
        auc: f64,
    }
    let selected: Vec<&str> = (0..FEATURE_NAMES.len())
        .filter(|&i| out.selection.mask[i])
        .map(|i| FEATURE_NAMES[i])
        .collect();
    let m = MetricsFile {
        c: out.grid.c,
        gamma: out.grid.gamma,
        selected_features: selected,
        folds: &out.fold_metrics,
        average: &out.average,
        auc: out.roc.auc,
    };
    ctx.write(&dir.join("metrics.json"), &json(&m))?;

    let pct = |v: f64| format!("{:.2}", v * 100.0);
    let mut t = format!(
        "{:>8} {:>8} {:>8} {:>10} {:>9} {:>6}\n",
        "fold", "TNR (%)", "TPR (%)", "Prec. (%)", "Acc. (%)", "F1"
    );
    for (i, f) in out.fold_metrics.iter().enumerate() {
        let _ = writeln!(
            t,
            "{:>8} {:>8} {:>8} {:>10} {:>9} {:>6.2}",
            i + 1,
            pct(f.tnr),
            pct(f.tpr),
            pct(f.precision),
            pct(f.accuracy),
            f.f1
        );
    }
    let a = &out.average;
    let _ = writeln!(
        t,
        "{:>8} {:>8} {:>8} {:>10} {:>9} {:>6.2}",
        "Average",
        pct(a.tnr),
        pct(a.tpr),
        pct(a.precision),
        pct(a.accuracy),
        a.f1
    );
    let _ = writeln!(
        t,
        "C = {}, gamma = {}, AUC = {:.4}",
        out.grid.c, out.grid.gamma, out.roc.auc
    );
    ctx.write(&dir.join("metrics.txt"), &t)
}

#[derive(Serialize)]
struct CombinedReport<'a> {
    design: &'a str,
    cells: usize,
    #[serde(rename = "let")]
    let_value: f64,
    flux: f64,
    events: u64,
    chip_ser: f64,
    set_xsect: Option<f64>,
    seu_xsect: Option<f64>,
    unsampled_clusters: Vec<usize>,
    tau: f64,
    /// Model labels on unsampled nodes against a full reference injection.
    prediction: Option<PredictionAssessment<f64>>,
    modules: Vec<ModuleShare<f64>>,
    sensitivity_histogram: &'a [usize],
    top_ranked: &'a [RankedNode<f64>],
}

impl CombinedReport<'_> {
    fn to_text(&self) -> String {
        let sci = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.3e}"));
        let mut s = format!(
            "design {} ({} cells), LET {}\n\n",
            self.design, self.cells, self.let_value
        );
        let _ = writeln!(
            s,
            "{:>12} {:>8} {:>9} {:>10} {:>11} {:>13} {:>14} {:>10}",
            "flux", "events", "SER (%)", "SET Xsect", "SEU Xsect", "accuracy (%)", "injection (s)", "speedup"
        );
        let (acc, inj, speed) = match &self.prediction {
            Some(p) => (
                format!("{:.2}", p.metrics.accuracy * 100.0),
                format!("{:.3}", p.injection_seconds),
                format!("{:.1}", p.speedup),
            ),
            None => ("n/a".into(), "n/a".into(), "n/a".into()),
        };
        let _ = writeln!(
            s,
            "{:>12.3e} {:>8} {:>9.2} {:>10} {:>11} {:>13} {:>14} {:>10}",
            self.flux,
            self.events,
            self.chip_ser * 100.0,
            sci(self.set_xsect),
            sci(self.seu_xsect),
            acc,
            inj,
            speed
        );
        if self.prediction.is_none() {
            s.push_str("every cell was sampled, so there is nothing held out to assess\n");
        }
        let _ = writeln!(s, "\nhigh-sensitivity nodes per module (tau = {:.4})", self.tau);
        let _ = writeln!(s, "{:>12} {:>7} {:>6} {:>10}", "module", "nodes", "high", "share (%)");
        for m in &self.modules {
            let _ = writeln!(s, "{:>12} {:>7} {:>6} {:>10.2}", m.module, m.nodes, m.high, m.share_pct);
        }
        if !self.unsampled_clusters.is_empty() {
            let _ = writeln!(s, "\nclusters without injections: {:?}", self.unsampled_clusters);
        }
        s
    }
}
