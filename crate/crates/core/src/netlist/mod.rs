// SPDX-License-Identifier: Apache-2.0

//! Gate-level netlist front-end: parsing, hierarchy elaboration and
//! structural analysis.

mod elab;
mod gate;
mod levels;
mod parse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use elab::elaborate;
pub use gate::{CellKind, GateType};
pub use levels::{levelize, reverse_levelize};
pub use parse::{parse_netlist, Connection, Instance, ModuleDef, NetlistSource, Port, PortDir};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("syntax error at {line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("undeclared net `{net}` in module `{module}`")]
    UndeclaredNet { module: String, net: String },
    #[error("unknown master `{0}`")]
    UnknownMaster(String),
    #[error("duplicate module `{0}`")]
    DuplicateModule(String),
    #[error("duplicate declaration of `{name}` in module `{module}`")]
    DuplicateDeclaration { module: String, name: String },
    #[error("instance `{instance}` in module `{module}`: {message}")]
    BadInstance {
        module: String,
        instance: String,
        message: String,
    },
    #[error("top module `{0}` not found")]
    UnknownTop(String),
    #[error("recursive hierarchy: {}", .0.join(" -> "))]
    RecursiveHierarchy(Vec<String>),
    #[error("net `{0}` has multiple drivers")]
    MultipleDrivers(String),
    #[error("combinational loop through {}", .0.join(", "))]
    CombinationalLoop(Vec<String>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetId(pub usize);

impl CellId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl NetId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// One leaf gate of the elaborated design.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellInfo {
    pub id: CellId,
    /// Enclosing module-instance names from the top's immediate child down
    /// to the cell's parent. Excludes the top module and the cell itself.
    pub path: Vec<String>,
    pub instance_name: String,
    pub cell_type: GateType,
    pub kind: CellKind,
    pub output_net: NetId,
    /// Input nets in [`GateType::input_pins`] order.
    pub inputs: Vec<NetId>,
}

impl CellInfo {
    /// Dotted hierarchical name, e.g. `cpu.alu.g1`.
    pub fn full_name(&self) -> String {
        let mut s = String::new();
        for p in &self.path {
            s.push_str(p);
            s.push('.');
        }
        s.push_str(&self.instance_name);
        s
    }

    pub fn is_sequential(&self) -> bool {
        self.kind == CellKind::Sequential
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Driver {
    None,
    PrimaryInput,
    Cell(CellId),
}

/// A sink pin: `(cell, input pin index)`.
pub type Sink = (CellId, usize);

/// Elaborated, flattened design. Immutable once built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlatDesign {
    pub top: String,
    pub cells: Vec<CellInfo>,
    /// Net names indexed by [`NetId`].
    pub nets: Vec<String>,
    pub primary_inputs: Vec<NetId>,
    pub primary_outputs: Vec<NetId>,
    pub clock_nets: Vec<NetId>,
    drivers: Vec<Driver>,
    fanout: Vec<Vec<Sink>>,
}

impl FlatDesign {
    pub fn cell(&self, id: CellId) -> &CellInfo {
        &self.cells[id.0]
    }

    pub fn net_name(&self, id: NetId) -> &str {
        &self.nets[id.0]
    }

    pub fn net_by_name(&self, name: &str) -> Option<NetId> {
        self.nets.iter().position(|n| n == name).map(NetId)
    }

    pub fn cell_by_name(&self, full_name: &str) -> Option<CellId> {
        self.cells.iter().find(|c| c.full_name() == full_name).map(|c| c.id)
    }

    pub fn driver(&self, net: NetId) -> Driver {
        self.drivers[net.0]
    }

    pub fn fanout(&self, net: NetId) -> &[Sink] {
        &self.fanout[net.0]
    }

    pub fn is_primary_output(&self, net: NetId) -> bool {
        self.primary_outputs.contains(&net)
    }

    pub fn sequential_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_sequential()).count()
    }
}
