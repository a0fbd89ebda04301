// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{SimError, Trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    NoError,
    SoftError,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoftErrorVerdict {
    pub outcome: Outcome,
    /// `(net name, time)` of the earliest difference, set iff `SoftError`.
    pub first_divergence: Option<(String, u64)>,
}

impl SoftErrorVerdict {
    pub fn is_error(&self) -> bool {
        self.outcome == Outcome::SoftError
    }
}

/// Compare two traces over `[t0, t1)`. Signals are matched by name; the
/// reported divergence is the earliest one, ties going to the net listed
/// first in `golden`.
pub fn compare_traces(golden: &Trace, faulty: &Trace, window: (u64, u64)) -> Result<SoftErrorVerdict, SimError> {
    fn names(t: &Trace) -> BTreeSet<&str> {
        t.signals.iter().map(|s| s.name.as_str()).collect()
    }
    if names(golden) != names(faulty) || golden.signals.len() != faulty.signals.len() {
        return Err(SimError::NetSetMismatch);
    }
    let (t0, t1) = window;
    let mut best: Option<(String, u64)> = None;
    for g in &golden.signals {
        let f = faulty.signal(&g.name).ok_or(SimError::NetSetMismatch)?;
        let candidates = std::iter::once(t0).chain(
            g.changes
                .iter()
                .chain(&f.changes)
                .map(|&(t, _)| t)
                .filter(|&t| t > t0 && t < t1),
        );
        let first = candidates.filter(|&t| t < t1 && g.value_at(t) != f.value_at(t)).min();
        if let Some(t) = first {
            if best.as_ref().is_none_or(|(_, bt)| t < *bt) {
                best = Some((g.name.clone(), t));
            }
        }
    }
    Ok(match best {
        Some(d) => SoftErrorVerdict {
            outcome: Outcome::SoftError,
            first_divergence: Some(d),
        },
        None => SoftErrorVerdict {
            outcome: Outcome::NoError,
            first_divergence: None,
        },
    })
}
