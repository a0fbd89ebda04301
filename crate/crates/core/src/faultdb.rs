// SPDX-License-Identifier: Apache-2.0

//! SET/SEU soft-error database and injection-event construction.
//!
//! Each library cell type carries one record: a transient (SET) record for
//! combinational cells or an upset (SEU) record for flip-flops. Records map
//! LET (MeV·cm²/mg) to a per-cell cross-section (cm²) and, for SET, to the
//! width of the equivalent square pulse in simulator ticks.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::{CellId, CellInfo, GateType};
use crate::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FaultDbError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("LET values of `{0}` are not strictly increasing")]
    NonMonotoneLet(String),
    #[error("{kind} fault does not apply to {cell_type}")]
    KindMismatch { cell_type: GateType, kind: FaultKind },
    #[error("no fault record for cell type {0}")]
    UnknownCellType(GateType),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaultKind {
    #[serde(rename = "SET")]
    Set,
    #[serde(rename = "SEU")]
    Seu,
}

impl FaultKind {
    /// Fault model that applies to a cell of the given type.
    pub fn for_cell(cell_type: GateType) -> FaultKind {
        if cell_type.is_sequential() {
            FaultKind::Seu
        } else {
            FaultKind::Set
        }
    }
}

impl fmt::Display for FaultKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FaultKind::Set => "SET",
            FaultKind::Seu => "SEU",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FaultRecord<F> {
    pub fault_kind: FaultKind,
    /// `(LET, cross-section cm²)`, LET strictly increasing.
    pub let_xsect: Vec<(F, F)>,
    /// `(LET, pulse width in ticks)`; SET records only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pulse_width: Vec<(F, F)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct FaultDb<F> {
    /// Reporting metadata: nanoseconds per simulator tick.
    pub time_unit_ns: F,
    pub cell_types: BTreeMap<GateType, FaultRecord<F>>,
}

/// One concrete timed fault.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InjectionEvent {
    pub target_cell: CellId,
    pub fault_kind: FaultKind,
    pub time: u64,
    /// Pulse width in ticks (SET only). An SEU lasts until the next rising
    /// clock edge.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<u64>,
}

pub fn load_fault_db<F: Scalar>(text: &str) -> Result<FaultDb<F>, FaultDbError> {
    // Parse keys as strings first so unknown cell names report as schema errors.
    #[derive(Deserialize)]
    #[serde(bound = "F: Scalar")]
    struct Raw<F> {
        time_unit_ns: F,
        cell_types: BTreeMap<String, FaultRecord<F>>,
    }
    let raw: Raw<F> = serde_json::from_str(text).map_err(|e| FaultDbError::Schema(e.to_string()))?;
    let mut cell_types = BTreeMap::new();
    for (name, rec) in raw.cell_types {
        let g =
            GateType::from_name(&name).ok_or_else(|| FaultDbError::Schema(format!("unknown cell type `{name}`")))?;
        cell_types.insert(g, rec);
    }
    let db = FaultDb {
        time_unit_ns: raw.time_unit_ns,
        cell_types,
    };
    db.validate()?;
    Ok(db)
}

fn check_table<F: Scalar>(
    name: GateType,
    table: &[(F, F)],
    what: &str,
    value_ok: impl Fn(F) -> bool,
) -> Result<(), FaultDbError> {
    if table.is_empty() {
        return Err(FaultDbError::Schema(format!("{name}: empty {what} table")));
    }
    for &(l, v) in table {
        if !l.is_finite() || !v.is_finite() || !value_ok(v) {
            return Err(FaultDbError::Schema(format!("{name}: invalid {what} entry")));
        }
    }
    if table.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(FaultDbError::NonMonotoneLet(name.to_string()));
    }
    Ok(())
}

impl<F: Scalar> FaultDb<F> {
    pub fn validate(&self) -> Result<(), FaultDbError> {
        if self.time_unit_ns.is_nan() || self.time_unit_ns <= F::zero() {
            return Err(FaultDbError::Schema("time_unit_ns must be positive".into()));
        }
        for (&g, rec) in &self.cell_types {
            if rec.fault_kind != FaultKind::for_cell(g) {
                return Err(FaultDbError::KindMismatch {
                    cell_type: g,
                    kind: rec.fault_kind,
                });
            }
            check_table(g, &rec.let_xsect, "let_xsect", |v| v >= F::zero())?;
            match rec.fault_kind {
                FaultKind::Set => check_table(g, &rec.pulse_width, "pulse_width", |v| v > F::zero())?,
                FaultKind::Seu if !rec.pulse_width.is_empty() => {
                    return Err(FaultDbError::Schema(format!("{g}: pulse_width given for SEU record")))
                }
                FaultKind::Seu => {}
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("fault db serializes")
    }

    pub fn record(&self, cell_type: GateType, kind: FaultKind) -> Result<&FaultRecord<F>, FaultDbError> {
        let rec = self
            .cell_types
            .get(&cell_type)
            .ok_or(FaultDbError::UnknownCellType(cell_type))?;
        if rec.fault_kind != kind {
            return Err(FaultDbError::KindMismatch { cell_type, kind });
        }
        Ok(rec)
    }

    /// Cross-section at `let_value`: exact at table points, log-linear in
    /// between, clamped outside the tabulated range.
    pub fn cross_section(&self, cell_type: GateType, kind: FaultKind, let_value: F) -> Result<F, FaultDbError> {
        Ok(interp_log(&self.record(cell_type, kind)?.let_xsect, let_value))
    }

    /// Pulse width in ticks at `let_value` (linear, clamped), rounded to the
    /// nearest tick and at least 1.
    pub fn pulse_width(&self, cell_type: GateType, let_value: F) -> Result<u64, FaultDbError> {
        let rec = self.record(cell_type, FaultKind::Set)?;
        let w = interp_linear(&rec.pulse_width, let_value).round();
        Ok(w.to_u64().unwrap_or(1).max(1))
    }
}

pub fn cross_section<F: Scalar>(
    db: &FaultDb<F>,
    cell_type: GateType,
    kind: FaultKind,
    let_value: F,
) -> Result<F, FaultDbError> {
    db.cross_section(cell_type, kind, let_value)
}

/// Locate the bracketing segment, or the clamped end value.
fn bracket<F: Scalar>(table: &[(F, F)], x: F) -> Result<(usize, F), F> {
    let first = table[0];
    let last = table[table.len() - 1];
    if x <= first.0 {
        return Err(first.1);
    }
    if x >= last.0 {
        return Err(last.1);
    }
    let k = table.partition_point(|&(l, _)| l <= x) - 1;
    if table[k].0 == x {
        return Err(table[k].1);
    }
    let t = (x - table[k].0) / (table[k + 1].0 - table[k].0);
    Ok((k, t))
}

pub(crate) fn interp_linear<F: Scalar>(table: &[(F, F)], x: F) -> F {
    match bracket(table, x) {
        Err(v) => v,
        Ok((k, t)) => table[k].1 + t * (table[k + 1].1 - table[k].1),
    }
}

/// Log-linear interpolation; falls back to linear on a segment touching 0.
pub(crate) fn interp_log<F: Scalar>(table: &[(F, F)], x: F) -> F {
    match bracket(table, x) {
        Err(v) => v,
        Ok((k, t)) => {
            let (a, b) = (table[k].1, table[k + 1].1);
            if a <= F::zero() || b <= F::zero() {
                a + t * (b - a)
            } else {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            }
        }
    }
}

pub fn make_set_event<F: Scalar>(
    cell: &CellInfo,
    time: u64,
    let_value: F,
    db: &FaultDb<F>,
) -> Result<InjectionEvent, FaultDbError> {
    if cell.is_sequential() {
        return Err(FaultDbError::KindMismatch {
            cell_type: cell.cell_type,
            kind: FaultKind::Set,
        });
    }
    Ok(InjectionEvent {
        target_cell: cell.id,
        fault_kind: FaultKind::Set,
        time,
        width: Some(db.pulse_width(cell.cell_type, let_value)?),
    })
}

pub fn make_seu_event(cell: &CellInfo, time: u64) -> Result<InjectionEvent, FaultDbError> {
    if !cell.is_sequential() {
        return Err(FaultDbError::KindMismatch {
            cell_type: cell.cell_type,
            kind: FaultKind::Seu,
        });
    }
    Ok(InjectionEvent {
        target_cell: cell.id,
        fault_kind: FaultKind::Seu,
        time,
        width: None,
    })
}
