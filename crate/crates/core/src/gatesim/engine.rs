// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeMap;

use super::{Signal, SimError, Stimulus, Trace};
use crate::faultdb::{FaultKind, InjectionEvent};
use crate::netlist::{CellId, FlatDesign, GateType, NetId};

/// Which nets a run records into its [`Trace`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum RecordSet {
    PrimaryOutputs,
    AllNets,
    Nets(Vec<NetId>),
}

/// Reusable simulator over one immutable design.
#[derive(Clone, Debug)]
pub struct Simulator<'d> {
    design: &'d FlatDesign,
    record: Vec<NetId>,
}

/// Simulate with the primary outputs recorded.
pub fn simulate(design: &FlatDesign, stim: &Stimulus, events: &[InjectionEvent]) -> Result<Trace, SimError> {
    Simulator::new(design).run(stim, events)
}

impl<'d> Simulator<'d> {
    pub fn new(design: &'d FlatDesign) -> Self {
        Self::with_record(design, RecordSet::PrimaryOutputs)
    }

    pub fn with_record(design: &'d FlatDesign, record: RecordSet) -> Self {
        let record = match record {
            RecordSet::PrimaryOutputs => design.primary_outputs.clone(),
            RecordSet::AllNets => (0..design.nets.len()).map(NetId).collect(),
            RecordSet::Nets(n) => n,
        };
        Simulator { design, record }
    }

    pub fn design(&self) -> &'d FlatDesign {
        self.design
    }

    pub fn run(&self, stim: &Stimulus, events: &[InjectionEvent]) -> Result<Trace, SimError> {
        let d = self.design;
        for ev in events {
            let cell = d
                .cells
                .get(ev.target_cell.0)
                .ok_or(SimError::TargetNotFound(ev.target_cell))?;
            if ev.time >= stim.duration {
                return Err(SimError::EventAfterDuration {
                    time: ev.time,
                    duration: stim.duration,
                });
            }
            let mismatch = FaultKind::for_cell(cell.cell_type) != ev.fault_kind
                || (ev.fault_kind == FaultKind::Set && !ev.width.is_some_and(|w| w > 0));
            if mismatch {
                return Err(SimError::KindMismatch {
                    cell: ev.target_cell,
                    kind: ev.fault_kind,
                });
            }
        }
        let changes = stim.resolve(d)?;

        let mut run = Run::new(d, &self.record, stim.dff_init == 1);
        run.queue.entry(0).or_default();
        for (t, net, v) in changes {
            run.schedule(t, Action::Input(net, v));
        }
        for (k, ev) in events.iter().enumerate() {
            run.schedule(ev.time, Action::Fault(k));
        }
        while let Some(entry) = run.queue.first_entry() {
            if *entry.key() >= stim.duration {
                break;
            }
            let (t, actions) = entry.remove_entry();
            run.step(t, actions, events);
        }
        Ok(Trace {
            end: stim.duration,
            signals: run.signals,
        })
    }
}

#[derive(Clone, Copy, Debug)]
enum Action {
    Input(NetId, bool),
    Drive(CellId, bool),
    Release(CellId, u32),
    Fault(usize),
}

impl Action {
    fn phase(&self) -> u8 {
        match self {
            Action::Input(..) | Action::Drive(..) => 0,
            Action::Release(..) => 1,
            Action::Fault(_) => 2,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Force {
    value: bool,
    token: u32,
    seu: bool,
    start: u64,
}

struct Run<'a> {
    d: &'a FlatDesign,
    value: Vec<bool>,
    driven: Vec<bool>,
    projected: Vec<bool>,
    forced: Vec<Option<Force>>,
    queue: BTreeMap<u64, Vec<Action>>,
    next_token: u32,
    step_id: u32,
    stamp: Vec<u32>,
    old: Vec<bool>,
    changed: Vec<NetId>,
    eval_stamp: Vec<u32>,
    to_eval: Vec<CellId>,
    recorded: Vec<Option<usize>>,
    signals: Vec<Signal>,
}

impl<'a> Run<'a> {
    fn new(d: &'a FlatDesign, record: &[NetId], dff_init: bool) -> Self {
        let n_nets = d.nets.len();
        let n_cells = d.cells.len();
        let mut value = vec![false; n_nets];
        let mut driven = vec![false; n_cells];
        for c in d.cells.iter().filter(|c| c.is_sequential()) {
            driven[c.id.0] = dff_init;
            value[c.output_net.0] = dff_init;
        }
        let mut recorded = vec![None; n_nets];
        let mut signals = Vec::with_capacity(record.len());
        for &net in record {
            if recorded[net.0].is_none() {
                recorded[net.0] = Some(signals.len());
                signals.push(Signal {
                    name: d.net_name(net).to_string(),
                    changes: Vec::new(),
                });
            }
        }
        Run {
            d,
            value,
            projected: driven.clone(),
            driven,
            forced: vec![None; n_cells],
            queue: BTreeMap::new(),
            next_token: 0,
            step_id: 0,
            stamp: vec![0; n_nets],
            old: vec![false; n_nets],
            changed: Vec::new(),
            eval_stamp: vec![0; n_cells],
            to_eval: Vec::new(),
            recorded,
            signals,
        }
    }

    fn schedule(&mut self, t: u64, a: Action) {
        self.queue.entry(t).or_default().push(a);
    }

    fn set_net(&mut self, net: NetId, v: bool) {
        let i = net.0;
        if self.value[i] == v {
            return;
        }
        if self.stamp[i] != self.step_id {
            self.stamp[i] = self.step_id;
            self.old[i] = self.value[i];
            self.changed.push(net);
        }
        self.value[i] = v;
    }

    /// Value of a net just before the current time step.
    fn before(&self, net: NetId) -> bool {
        if self.stamp[net.0] == self.step_id {
            self.old[net.0]
        } else {
            self.value[net.0]
        }
    }

    fn refresh(&mut self, c: CellId) {
        let v = self.forced[c.0].map_or(self.driven[c.0], |f| f.value);
        self.set_net(self.d.cell(c).output_net, v);
    }

    fn release_seu(&mut self, c: CellId, t: u64) {
        if let Some(f) = self.forced[c.0] {
            if f.seu && f.start < t {
                self.forced[c.0] = None;
                self.refresh(c);
            }
        }
    }

    fn drive_later(&mut self, c: CellId, v: bool, t: u64) {
        if self.projected[c.0] != v {
            self.projected[c.0] = v;
            self.schedule(t + 1, Action::Drive(c, v));
        }
    }

    fn step(&mut self, t: u64, mut actions: Vec<Action>, events: &[InjectionEvent]) {
        self.step_id += 1;
        self.changed.clear();
        actions.sort_by_key(Action::phase);

        for a in actions {
            match a {
                Action::Input(net, v) => self.set_net(net, v),
                Action::Drive(c, v) => {
                    self.driven[c.0] = v;
                    self.refresh(c);
                }
                Action::Release(c, token) => {
                    if self.forced[c.0].is_some_and(|f| f.token == token) {
                        self.forced[c.0] = None;
                        self.refresh(c);
                    }
                }
                Action::Fault(k) => {
                    let ev = &events[k];
                    let c = ev.target_cell;
                    let token = self.next_token;
                    self.next_token += 1;
                    self.forced[c.0] = Some(Force {
                        value: !self.driven[c.0],
                        token,
                        seu: ev.fault_kind == FaultKind::Seu,
                        start: t,
                    });
                    self.refresh(c);
                    if let (FaultKind::Set, Some(w)) = (ev.fault_kind, ev.width) {
                        self.schedule(t + w, Action::Release(c, token));
                    }
                }
            }
        }

        // Sequential cells react to rising edges on CK and R. Releases can
        // append further changes, hence the index loop.
        let mut k = 0;
        while k < self.changed.len() {
            let net = self.changed[k];
            k += 1;
            if self.old[net.0] || !self.value[net.0] {
                continue;
            }
            let d = self.d;
            for &(sink, pin) in d.fanout(net) {
                let cell = d.cell(sink);
                if !cell.is_sequential() {
                    continue;
                }
                match pin {
                    1 => {
                        self.release_seu(sink, t);
                        let reset = cell.cell_type == GateType::Dffr && self.before(cell.inputs[2]);
                        let captured = !reset && self.before(cell.inputs[0]);
                        self.drive_later(sink, captured, t);
                    }
                    2 => {
                        if let Some(f) = self.forced[sink.0] {
                            if f.seu {
                                self.forced[sink.0] = None;
                                self.refresh(sink);
                            }
                        }
                        self.drive_later(sink, false, t);
                    }
                    _ => {}
                }
            }
        }

        self.to_eval.clear();
        let d = self.d;
        for idx in 0..self.changed.len() {
            let net = self.changed[idx];
            if self.value[net.0] == self.old[net.0] {
                continue;
            }
            if let Some(s) = self.recorded[net.0] {
                if t > 0 {
                    self.signals[s].changes.push((t, self.value[net.0]));
                }
            }
            for &(sink, _) in d.fanout(net) {
                if !d.cell(sink).is_sequential() && self.eval_stamp[sink.0] != self.step_id {
                    self.eval_stamp[sink.0] = self.step_id;
                    self.to_eval.push(sink);
                }
            }
        }
        if t == 0 {
            for (net, s) in self.recorded.iter().enumerate() {
                if let Some(s) = *s {
                    self.signals[s].changes.push((0, self.value[net]));
                }
            }
            for c in &d.cells {
                if !c.is_sequential() && self.eval_stamp[c.id.0] != self.step_id {
                    self.eval_stamp[c.id.0] = self.step_id;
                    self.to_eval.push(c.id);
                }
            }
        }
        let to_eval = std::mem::take(&mut self.to_eval);
        for &c in &to_eval {
            let cell = d.cell(c);
            let mut ins = [false; 3];
            for (k, &n) in cell.inputs.iter().enumerate() {
                ins[k] = self.value[n.0];
            }
            let v = cell.cell_type.eval(&ins[..cell.inputs.len()]);
            self.drive_later(c, v, t);
        }
        self.to_eval = to_eval;
    }
}
