// SPDX-License-Identifier: Apache-2.0

//! Event-driven two-valued gate-level simulation with fault forcing.
//!
//! Timing model: every combinational cell has a unit transport delay and a
//! flip-flop updates Q one tick after the rising clock edge that captured
//! D. All nets and flip-flop states start at 0 unless the stimulus sets a
//! different flip-flop initial value.
//!
//! Fault models:
//! - SET: at the event time the cell's output net is forced to the
//!   complement of its currently driven value for `width` ticks, then
//!   released to whatever the cell drives at that moment.
//! - SEU: at the event time the flip-flop output is forced to the
//!   complement of its stored state and held until the next rising edge of
//!   its clock (or an asynchronous reset), where normal capture resumes.

mod compare;
mod engine;
mod vcd;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::faultdb::FaultKind;
use crate::netlist::{CellId, FlatDesign, NetId};

pub use compare::{compare_traces, Outcome, SoftErrorVerdict};
pub use engine::{simulate, RecordSet, Simulator};
pub use vcd::{read_vcd, write_vcd};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("injection target {0:?} not found")]
    TargetNotFound(CellId),
    #[error("event at t={time} is not before the stimulus end t={duration}")]
    EventAfterDuration { time: u64, duration: u64 },
    #[error("{kind} event cannot target cell {cell:?}")]
    KindMismatch { cell: CellId, kind: FaultKind },
    #[error("invalid stimulus: {0}")]
    Stimulus(String),
    #[error("recorded net sets differ")]
    NetSetMismatch,
    #[error("VCD error at line {line}: {message}")]
    Vcd { line: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClockSpec {
    pub net: String,
    pub period: u64,
    pub first_edge: u64,
}

/// Input waveforms for one simulation run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stimulus {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clock: Option<ClockSpec>,
    /// Per primary input: `(time, 0|1)` change points, strictly increasing.
    #[serde(default)]
    pub inputs: BTreeMap<String, Vec<(u64, u8)>>,
    pub duration: u64,
    /// Initial state of every flip-flop.
    #[serde(default)]
    pub dff_init: u8,
}

impl Stimulus {
    pub fn from_json(text: &str) -> Result<Stimulus, SimError> {
        serde_json::from_str(text).map_err(|e| SimError::Stimulus(e.to_string()))
    }

    /// Rising edge times of the clock strictly before `duration`.
    pub fn rising_edges(&self) -> Vec<u64> {
        match &self.clock {
            Some(c) if c.period > 0 => (0..)
                .map(|k| c.first_edge + k * c.period)
                .take_while(|&t| t < self.duration)
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Primary-input change list resolved against a design, clock included.
    pub(crate) fn resolve(&self, design: &FlatDesign) -> Result<Vec<(u64, NetId, bool)>, SimError> {
        let bad = |m: String| Err(SimError::Stimulus(m));
        let pi = |name: &str| -> Result<NetId, SimError> {
            design
                .net_by_name(name)
                .filter(|n| design.primary_inputs.contains(n))
                .ok_or_else(|| SimError::Stimulus(format!("`{name}` is not a primary input")))
        };
        if self.dff_init > 1 {
            return bad("dff_init must be 0 or 1".into());
        }
        let mut out = Vec::new();
        for (name, wave) in &self.inputs {
            let net = pi(name)?;
            if wave.windows(2).any(|w| w[1].0 <= w[0].0) {
                return bad(format!("waveform of `{name}` is not strictly increasing in time"));
            }
            for &(t, v) in wave {
                if v > 1 {
                    return bad(format!("value {v} on `{name}` is not 0 or 1"));
                }
                out.push((t, net, v == 1));
            }
        }
        if let Some(c) = &self.clock {
            let net = pi(&c.net)?;
            if self.inputs.contains_key(&c.net) {
                return bad(format!("clock `{}` also has an input waveform", c.net));
            }
            if c.period < 2 {
                return bad("clock period must be at least 2".into());
            }
            let high = c.period / 2;
            for rise in self.rising_edges() {
                out.push((rise, net, true));
                out.push((rise + high, net, false));
            }
        }
        out.sort_by_key(|&(t, n, _)| (t, n));
        Ok(out)
    }
}

/// Time-ordered value changes of recorded nets over `[0, end)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub end: u64,
    pub signals: Vec<Signal>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signal {
    pub name: String,
    /// First entry is the value at time 0; later entries alternate values.
    pub changes: Vec<(u64, bool)>,
}

impl Signal {
    pub fn value_at(&self, t: u64) -> bool {
        let k = self.changes.partition_point(|&(ct, _)| ct <= t);
        if k == 0 {
            false
        } else {
            self.changes[k - 1].1
        }
    }

    /// Number of value transitions after the initial value.
    pub fn toggles(&self) -> usize {
        self.changes.len().saturating_sub(1)
    }
}

impl Trace {
    pub fn signal(&self, name: &str) -> Option<&Signal> {
        self.signals.iter().find(|s| s.name == name)
    }
}
