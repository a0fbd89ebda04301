// SPDX-License-Identifier: Apache-2.0

mod common;

use common::{arity, RandomCircuit, COMB};
use proptest::prelude::*;
use ssresf::faultdb::{FaultKind, InjectionEvent};
use ssresf::gatesim::{compare_traces, simulate, ClockSpec, Stimulus};
use ssresf::netlist::{elaborate, parse_netlist, CellId, FlatDesign};

fn circuit() -> impl Strategy<Value = RandomCircuit> {
    (1usize..=4, 1usize..=6).prop_flat_map(|(inputs, n)| {
        let gates: Vec<_> = (0..n)
            .map(|k| {
                (0..COMB.len()).prop_flat_map(move |g| {
                    let kind = COMB[g];
                    prop::collection::vec(0..inputs + k, arity(kind)).prop_map(move |s| (kind, s))
                })
            })
            .collect();
        gates.prop_map(move |gates| RandomCircuit { inputs, gates })
    })
}

fn load(text: &str) -> FlatDesign {
    elaborate(&parse_netlist(text).unwrap(), "top").unwrap()
}

proptest! {
    #[test]
    fn settled_outputs_match_truth_table(c in circuit()) {
        let d = load(&c.verilog());
        let vectors = 1usize << c.inputs;
        let spacing = 10u64;
        let mut stim = Stimulus {
            clock: None,
            inputs: Default::default(),
            duration: spacing * vectors as u64,
            dff_init: 0,
        };
        for k in 0..c.inputs {
            let wave = (0..vectors).map(|v| (v as u64 * spacing, (v >> k & 1) as u8)).collect();
            stim.inputs.insert(format!("i{k}"), wave);
        }
        let tr = simulate(&d, &stim, &[]).unwrap();
        for v in 0..vectors {
            let sample = v as u64 * spacing + spacing - 1;
            let want = c.reference(v);
            for (k, w) in want.iter().enumerate() {
                let got = tr.signal(&format!("g{k}")).unwrap().value_at(sample);
                prop_assert_eq!(got, *w, "vector {} gate g{}", v, k);
            }
        }
    }

    #[test]
    fn zero_event_runs_identical(c in circuit(), seed in 0u64..1000) {
        let d = load(&c.verilog());
        let mut stim = Stimulus { clock: None, inputs: Default::default(), duration: 60, dff_init: 0 };
        for k in 0..c.inputs {
            let wave = (0..6u64).map(|s| (s * 10 + (seed + k as u64) % 7, ((seed >> (s + k as u64)) & 1) as u8)).collect();
            stim.inputs.insert(format!("i{k}"), wave);
        }
        prop_assert_eq!(simulate(&d, &stim, &[]).unwrap(), simulate(&d, &stim, &[]).unwrap());
    }

    #[test]
    fn set_on_observed_output_is_error(c in circuit(), time in 10u64..40, width in 1u64..8) {
        let d = load(&c.verilog());
        let stim = Stimulus { clock: None, inputs: Default::default(), duration: 50, dff_init: 0 };
        let golden = simulate(&d, &stim, &[]).unwrap();
        for cell in 0..d.cells.len() {
            let ev = InjectionEvent { target_cell: CellId(cell), fault_kind: FaultKind::Set, time, width: Some(width) };
            let faulty = simulate(&d, &stim, &[ev]).unwrap();
            let v = compare_traces(&golden, &faulty, (time, stim.duration)).unwrap();
            prop_assert!(v.is_error());
        }
    }

    #[test]
    fn seu_with_constant_d_reconverges_at_next_edge(
        d_val in 0u8..=1,
        period in 2u64..12,
        first_edge in 0u64..10,
        offset in 0u64..40,
    ) {
        let d = load("module top(input d, input clk, output q); DFF f(d, clk, q); endmodule");
        let stim = Stimulus {
            clock: Some(ClockSpec { net: "clk".into(), period, first_edge }),
            inputs: [("d".to_string(), vec![(0, d_val)])].into(),
            duration: first_edge + 80,
            dff_init: 0,
        };
        // inject once Q has settled: the edge at first_edge may still see
        // the initial D, the next one captures d_val
        let time = first_edge + period + 2 + offset;
        prop_assume!(time < stim.duration);
        let golden = simulate(&d, &stim, &[]).unwrap();
        let ev = InjectionEvent { target_cell: CellId(0), fault_kind: FaultKind::Seu, time, width: None };
        let faulty = simulate(&d, &stim, &[ev]).unwrap();
        let next_edge = stim.rising_edges().into_iter().find(|&e| e > time);
        let q_gold = golden.signal("q").unwrap();
        let q_bad = faulty.signal("q").unwrap();
        for t in time..stim.duration {
            let diverged = q_gold.value_at(t) != q_bad.value_at(t);
            prop_assert_eq!(diverged, next_edge.is_none_or(|e| t < e), "t={}", t);
        }
    }
}
