// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};

use super::gate::GateType;
use super::levels::levelize;
use super::parse::{ModuleDef, NetlistSource, PortDir};
use super::{CellId, CellInfo, Driver, FlatDesign, NetId, NetlistError};

/// Flatten the hierarchy below `top` into a [`FlatDesign`].
///
/// Nets are merged across port boundaries and keep the name they have in
/// the outermost module that declares them; internal wires are named by
/// their dotted instance path (`cpu.alu.w1`).
pub fn elaborate(src: &NetlistSource, top: &str) -> Result<FlatDesign, NetlistError> {
    let top_mod = src
        .module(top)
        .ok_or_else(|| NetlistError::UnknownTop(top.to_string()))?;

    let mut b = Builder {
        src,
        cells: Vec::new(),
        nets: Vec::new(),
    };
    let mut local = HashMap::new();
    let mut primary_inputs = Vec::new();
    let mut primary_outputs = Vec::new();
    for p in &top_mod.ports {
        let id = b.new_net(p.name.clone());
        local.insert(p.name.clone(), id);
        match p.dir {
            PortDir::Input => primary_inputs.push(id),
            PortDir::Output => primary_outputs.push(id),
        }
    }
    let mut stack = vec![top_mod.name.clone()];
    b.expand(top_mod, &[], local, &mut stack)?;

    let n_nets = b.nets.len();
    let mut drivers = vec![Driver::None; n_nets];
    for &pi in &primary_inputs {
        drivers[pi.0] = Driver::PrimaryInput;
    }
    let mut fanout = vec![Vec::new(); n_nets];
    let mut clocks = BTreeSet::new();
    for cell in &b.cells {
        let out = cell.output_net.0;
        if drivers[out] != Driver::None {
            return Err(NetlistError::MultipleDrivers(b.nets[out].clone()));
        }
        drivers[out] = Driver::Cell(cell.id);
        for (pin, &net) in cell.inputs.iter().enumerate() {
            fanout[net.0].push((cell.id, pin));
        }
        if cell.cell_type.is_sequential() {
            clocks.insert(cell.inputs[1]);
        }
    }

    let design = FlatDesign {
        top: top.to_string(),
        cells: b.cells,
        nets: b.nets,
        primary_inputs,
        primary_outputs,
        clock_nets: clocks.into_iter().collect(),
        drivers,
        fanout,
    };
    levelize(&design)?;
    Ok(design)
}

struct Builder<'a> {
    src: &'a NetlistSource,
    cells: Vec<CellInfo>,
    nets: Vec<String>,
}

impl Builder<'_> {
    fn new_net(&mut self, name: String) -> NetId {
        self.nets.push(name);
        NetId(self.nets.len() - 1)
    }

    fn expand(
        &mut self,
        module: &ModuleDef,
        path: &[String],
        mut local: HashMap<String, NetId>,
        stack: &mut Vec<String>,
    ) -> Result<(), NetlistError> {
        let prefix: String = path.iter().map(|p| format!("{p}.")).collect();
        for w in &module.wires {
            let id = self.new_net(format!("{prefix}{w}"));
            local.insert(w.clone(), id);
        }
        for inst in &module.instances {
            if let Some(g) = GateType::from_name(&inst.master) {
                let net = |pin: &str| {
                    let n = inst.net_of(pin).expect("pins resolved at parse time");
                    local[n]
                };
                let inputs = g.input_pins().iter().map(|p| net(p)).collect();
                let id = CellId(self.cells.len());
                self.cells.push(CellInfo {
                    id,
                    path: path.to_vec(),
                    instance_name: inst.name.clone(),
                    cell_type: g,
                    kind: g.kind(),
                    output_net: net(g.output_pin()),
                    inputs,
                });
                continue;
            }
            if stack.contains(&inst.master) {
                let mut cycle = stack.clone();
                cycle.push(inst.master.clone());
                return Err(NetlistError::RecursiveHierarchy(cycle));
            }
            let child = self
                .src
                .module(&inst.master)
                .ok_or_else(|| NetlistError::UnknownMaster(inst.master.clone()))?;
            let child_local = child
                .ports
                .iter()
                .map(|p| {
                    let outer = inst.net_of(&p.name).expect("ports resolved at parse time");
                    (p.name.clone(), local[outer])
                })
                .collect();
            let mut child_path = path.to_vec();
            child_path.push(inst.name.clone());
            stack.push(inst.master.clone());
            self.expand(child, &child_path, child_local, stack)?;
            stack.pop();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_netlist;

    fn design(text: &str, top: &str) -> Result<FlatDesign, NetlistError> {
        elaborate(&parse_netlist(text).unwrap(), top)
    }

    #[test]
    fn child_cell_path() {
        let d = design(
            "module cpu_t(input a, output y); NOT g1(a, y); endmodule
             module top(input a, output y); cpu_t cpu(a, y); endmodule",
            "top",
        )
        .unwrap();
        assert_eq!(d.cells.len(), 1);
        assert_eq!(d.cells[0].path, vec!["cpu".to_string()]);
        assert_eq!(d.cells[0].instance_name, "g1");
        // port nets merge into the parent's names
        assert_eq!(d.net_name(d.cells[0].output_net), "y");
    }

    #[test]
    fn depth_zero_cell() {
        let d = design("module top(input a, output y); NOT g(a, y); endmodule", "top").unwrap();
        assert!(d.cells[0].path.is_empty());
        assert_eq!(d.primary_inputs.len(), 1);
        assert_eq!(d.primary_outputs.len(), 1);
    }

    #[test]
    fn multiple_drivers() {
        let err = design(
            "module top(input a, input b, output y); NOT g1(a, y); NOT g2(b, y); endmodule",
            "top",
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::MultipleDrivers("y".into()));
    }

    #[test]
    fn driving_a_primary_input_is_a_conflict() {
        let err = design(
            "module top(input a, output y); NOT g1(y, a); BUF b(a, y); endmodule",
            "top",
        )
        .unwrap_err();
        assert_eq!(err, NetlistError::MultipleDrivers("a".into()));
    }

    #[test]
    fn recursive_hierarchy() {
        let err = design(
            "module a(input x); b u(x); endmodule
             module b(input x); a u(x); endmodule
             module top(input x); a u(x); endmodule",
            "top",
        )
        .unwrap_err();
        assert!(matches!(err, NetlistError::RecursiveHierarchy(_)));
    }

    #[test]
    fn unknown_top() {
        let err = design("module m(); endmodule", "top").unwrap_err();
        assert_eq!(err, NetlistError::UnknownTop("top".into()));
    }

    #[test]
    fn internal_wires_are_prefixed_and_clock_found() {
        let d = design(
            "module reg1(input d, input ck, output q); wire n; BUF b(d, n); DFF f(n, ck, q); endmodule
             module top(input d, input clk, output q); reg1 r0(d, clk, q); endmodule",
            "top",
        )
        .unwrap();
        assert!(d.net_by_name("r0.n").is_some());
        assert_eq!(d.clock_nets, vec![d.net_by_name("clk").unwrap()]);
        assert_eq!(d.sequential_count(), 1);
    }

    #[test]
    fn cell_count_matches_instance_tree() {
        let d = design(
            "module leaf(input a, output y); wire w; NOT n1(a, w); NOT n2(w, y); endmodule
             module mid(input a, output y); wire w; leaf l1(a, w); leaf l2(w, y); endmodule
             module top(input a, output y, output z); mid m1(a, y); mid m2(a, z); endmodule",
            "top",
        )
        .unwrap();
        assert_eq!(d.cells.len(), 8);
        assert_eq!(d.cells[0].path, vec!["m1".to_string(), "l1".to_string()]);
    }
}
