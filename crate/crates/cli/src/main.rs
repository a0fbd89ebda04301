// SPDX-License-Identifier: Apache-2.0

//! `ssresf`: file-based driver for the soft-error analysis pipeline.
//!
//! Each subcommand reads the previous stage's artifacts and writes its own,
//! so a full run is `parse → cluster → campaign → train → predict/report`.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "ssresf", version, about = "Gate-level single-event-effect analysis")]
struct Cli {
    /// Write a run manifest (input digests, seeds, stage wall times) here.
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct DesignArgs {
    /// Structural Verilog netlist.
    pub netlist: PathBuf,
    /// Top module; inferred when exactly one module is never instantiated.
    #[arg(long)]
    pub top: Option<String>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct SeedArg {
    /// RNG seed (falls back to $SSRESF_SEED, then 0).
    #[arg(long, env = "SSRESF_SEED", default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct JobsArg {
    /// Worker threads for simulation and model selection (default: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Elaborate a netlist and print a design summary.
    Parse {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Group cells by hierarchy with medoid clustering.
    Cluster {
        #[command(flatten)]
        design: DesignArgs,
        /// Number of clusters.
        #[arg(long)]
        kn: usize,
        /// Hierarchy layers compared by the distance.
        #[arg(long)]
        ln: usize,
        #[arg(long, default_value_t = 100)]
        max_iterations: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sample clusters, inject SET/SEU faults and aggregate soft-error rates.
    Campaign {
        #[command(flatten)]
        design: DesignArgs,
        /// Cluster report from `cluster`.
        #[arg(long)]
        clusters: PathBuf,
        /// Fault database JSON.
        #[arg(long)]
        db: PathBuf,
        /// Stimulus JSON.
        #[arg(long)]
        stimulus: PathBuf,
        /// LET in MeV·cm²/mg.
        #[arg(long = "let")]
        let_value: f64,
        /// Particles per cm² per second.
        #[arg(long)]
        flux: f64,
        /// Device area in cm².
        #[arg(long)]
        area: f64,
        /// Exposure window in seconds.
        #[arg(long)]
        window: f64,
        /// Fraction of each cluster to sample, in (0, 1].
        #[arg(long, default_value_t = 1.0)]
        fraction: f64,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        jobs: JobsArg,
        /// Also write the golden and faulty waveforms as VCD into this directory.
        #[arg(long)]
        dump_vcd: Option<PathBuf>,
        /// Number of faulty waveforms written by --dump-vcd.
        #[arg(long, default_value_t = 16)]
        vcd_limit: usize,
        /// Plain-text cluster table.
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Label sampled nodes, select features and hyperparameters, fit the SVM.
    Train {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        clusters: PathBuf,
        /// Campaign report from `campaign`.
        #[arg(long)]
        campaign: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        /// Sensitivity threshold for the high label (default: chip SER).
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long, default_value_t = 10)]
        folds: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        jobs: JobsArg,
        /// Directory for model.json, training_set.json, metrics and CSV curves.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Classify nodes with a trained model.
    Predict {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Restrict prediction to the nodes this campaign did not sample.
        #[arg(long)]
        campaign: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compare prediction against full injection and summarize per module.
    Report {
        #[command(flatten)]
        design: DesignArgs,
        #[arg(long)]
        clusters: PathBuf,
        #[arg(long)]
        campaign: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        db: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        /// Module name → instance path prefixes, e.g. {"modules":{"cpu":["u_cpu"]}}.
        #[arg(long)]
        modules: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        /// Reference injections per unsampled node.
        #[arg(long, default_value_t = 40)]
        per_node: usize,
        #[command(flatten)]
        seed: SeedArg,
        #[command(flatten)]
        jobs: JobsArg,
        /// Directory for report.json and report.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::Usage(e.to_string().trim_end().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match commands::run(cli.command, cli.manifest.as_deref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
