// SPDX-License-Identifier: Apache-2.0

use serde::Serialize;
use thiserror::Error;

use ssresf::campaign::CampaignError;
use ssresf::clustering::ClusterError;
use ssresf::faultdb::FaultDbError;
use ssresf::gatesim::SimError;
use ssresf::learn::LearnError;
use ssresf::netlist::NetlistError;
use ssresf::pipeline::PipelineError;

/// Failure of a subcommand, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            code: i32,
            message: String,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        let w = Wrapper {
            error: Body {
                kind: self.kind(),
                code: self.exit_code(),
                message: self.to_string(),
            },
        };
        serde_json::to_string(&w).expect("error serializes")
    }

    pub fn input(context: impl std::fmt::Display, err: impl std::fmt::Display) -> CliError {
        CliError::Input(format!("{context}: {err}"))
    }
}

impl From<NetlistError> for CliError {
    fn from(e: NetlistError) -> Self {
        CliError::Input(format!("netlist: {e}"))
    }
}

impl From<ClusterError> for CliError {
    fn from(e: ClusterError) -> Self {
        match e {
            ClusterError::EmptyCluster(_) => CliError::Internal(format!("clustering: {e}")),
            _ => CliError::Input(format!("clustering: {e}")),
        }
    }
}

impl From<FaultDbError> for CliError {
    fn from(e: FaultDbError) -> Self {
        CliError::Input(format!("fault database: {e}"))
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Stimulus(_) => CliError::Input(format!("stimulus: {e}")),
            _ => CliError::Internal(format!("simulation: {e}")),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Sim(s) => s.into(),
            CampaignError::ThreadPool(_) => CliError::Internal(format!("campaign: {e}")),
            _ => CliError::Input(format!("campaign: {e}")),
        }
    }
}

impl From<LearnError> for CliError {
    fn from(e: LearnError) -> Self {
        match e {
            LearnError::LengthMismatch(..) => CliError::Internal(format!("learning: {e}")),
            LearnError::Netlist(n) => n.into(),
            _ => CliError::Input(format!("learning: {e}")),
        }
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Netlist(e) => e.into(),
            PipelineError::Campaign(e) => e.into(),
            PipelineError::Learn(e) => e.into(),
            PipelineError::Sim(e) => e.into(),
            PipelineError::ThreadPool(m) => CliError::Internal(format!("thread pool: {m}")),
        }
    }
}
