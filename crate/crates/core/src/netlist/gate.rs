// SPDX-License-Identifier: Apache-2.0

use std::fmt;

use serde::{Deserialize, Serialize};

/// Library cells understood by the front-end and the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateType {
    #[serde(rename = "NOT")]
    Not,
    #[serde(rename = "BUF")]
    Buf,
    #[serde(rename = "AND2")]
    And2,
    #[serde(rename = "OR2")]
    Or2,
    #[serde(rename = "NAND2")]
    Nand2,
    #[serde(rename = "NOR2")]
    Nor2,
    #[serde(rename = "XOR2")]
    Xor2,
    #[serde(rename = "XNOR2")]
    Xnor2,
    #[serde(rename = "MUX2")]
    Mux2,
    /// Rising-edge D flip-flop: `DFF(D, CK, Q)`.
    #[serde(rename = "DFF")]
    Dff,
    /// Rising-edge D flip-flop with asynchronous active-high reset to 0:
    /// `DFFR(D, CK, R, Q)`.
    #[serde(rename = "DFFR")]
    Dffr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Combinational,
    Sequential,
}

impl GateType {
    pub const ALL: [GateType; 11] = [
        GateType::Not,
        GateType::Buf,
        GateType::And2,
        GateType::Or2,
        GateType::Nand2,
        GateType::Nor2,
        GateType::Xor2,
        GateType::Xnor2,
        GateType::Mux2,
        GateType::Dff,
        GateType::Dffr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateType::Not => "NOT",
            GateType::Buf => "BUF",
            GateType::And2 => "AND2",
            GateType::Or2 => "OR2",
            GateType::Nand2 => "NAND2",
            GateType::Nor2 => "NOR2",
            GateType::Xor2 => "XOR2",
            GateType::Xnor2 => "XNOR2",
            GateType::Mux2 => "MUX2",
            GateType::Dff => "DFF",
            GateType::Dffr => "DFFR",
        }
    }

    pub fn from_name(name: &str) -> Option<GateType> {
        GateType::ALL.into_iter().find(|g| g.name() == name)
    }

    /// Input pins in positional order.
    pub fn input_pins(self) -> &'static [&'static str] {
        match self {
            GateType::Not | GateType::Buf => &["A"],
            GateType::And2 | GateType::Or2 | GateType::Nand2 | GateType::Nor2 | GateType::Xor2 | GateType::Xnor2 => {
                &["A", "B"]
            }
            GateType::Mux2 => &["A", "B", "S"],
            GateType::Dff => &["D", "CK"],
            GateType::Dffr => &["D", "CK", "R"],
        }
    }

    pub fn output_pin(self) -> &'static str {
        match self {
            GateType::Dff | GateType::Dffr => "Q",
            _ => "Y",
        }
    }

    /// All pins in positional order: inputs first, then the output.
    pub fn pins(self) -> impl Iterator<Item = &'static str> {
        self.input_pins()
            .iter()
            .copied()
            .chain(std::iter::once(self.output_pin()))
    }

    pub fn kind(self) -> CellKind {
        match self {
            GateType::Dff | GateType::Dffr => CellKind::Sequential,
            _ => CellKind::Combinational,
        }
    }

    pub fn is_sequential(self) -> bool {
        self.kind() == CellKind::Sequential
    }

    /// Boolean function of a combinational cell. `inputs` follows
    /// [`GateType::input_pins`] order.
    ///
    /// Panics when called on a sequential cell.
    pub fn eval(self, inputs: &[bool]) -> bool {
        match self {
            GateType::Not => !inputs[0],
            GateType::Buf => inputs[0],
            GateType::And2 => inputs[0] & inputs[1],
            GateType::Or2 => inputs[0] | inputs[1],
            GateType::Nand2 => !(inputs[0] & inputs[1]),
            GateType::Nor2 => !(inputs[0] | inputs[1]),
            GateType::Xor2 => inputs[0] ^ inputs[1],
            GateType::Xnor2 => !(inputs[0] ^ inputs[1]),
            GateType::Mux2 => {
                if inputs[2] {
                    inputs[1]
                } else {
                    inputs[0]
                }
            }
            GateType::Dff | GateType::Dffr => panic!("eval called on sequential cell {}", self),
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for g in GateType::ALL {
            assert_eq!(GateType::from_name(g.name()), Some(g));
        }
        assert_eq!(GateType::from_name("FOO"), None);
    }

    #[test]
    fn mux_selects_b_when_s_high() {
        assert!(!GateType::Mux2.eval(&[false, true, false]));
        assert!(GateType::Mux2.eval(&[false, true, true]));
    }

    #[test]
    fn sequential_kinds() {
        assert!(GateType::Dff.is_sequential());
        assert!(GateType::Dffr.is_sequential());
        assert!(!GateType::Nand2.is_sequential());
        assert_eq!(GateType::Dffr.pins().collect::<Vec<_>>(), ["D", "CK", "R", "Q"]);
    }
}
