// SPDX-License-Identifier: Apache-2.0

//! Reference models shared by the integration tests.

#![allow(dead_code)]

use ssresf::learn::{Dataset, Normalizer, SvmModel};
use ssresf::netlist::CellId;

pub const COMB: [&str; 9] = ["NOT", "BUF", "AND2", "OR2", "NAND2", "NOR2", "XOR2", "XNOR2", "MUX2"];

/// Gate functions written out independently of the library.
pub fn reference_eval(kind: &str, x: &[bool]) -> bool {
    match kind {
        "NOT" => !x[0],
        "BUF" => x[0],
        "AND2" => x[0] & x[1],
        "OR2" => x[0] | x[1],
        "NAND2" => !(x[0] & x[1]),
        "NOR2" => !(x[0] | x[1]),
        "XOR2" => x[0] ^ x[1],
        "XNOR2" => x[0] == x[1],
        "MUX2" => {
            if x[2] {
                x[1]
            } else {
                x[0]
            }
        }
        _ => unreachable!(),
    }
}

pub fn arity(kind: &str) -> usize {
    match kind {
        "NOT" | "BUF" => 1,
        "MUX2" => 3,
        _ => 2,
    }
}

#[derive(Clone, Debug)]
pub struct RandomCircuit {
    pub inputs: usize,
    /// (gate kind, source indices); sources `< inputs` are primary inputs,
    /// otherwise the output of gate `source - inputs`.
    pub gates: Vec<(&'static str, Vec<usize>)>,
}

impl RandomCircuit {
    pub fn net(&self, src: usize) -> String {
        if src < self.inputs {
            format!("i{src}")
        } else {
            format!("g{}", src - self.inputs)
        }
    }

    pub fn verilog(&self) -> String {
        let mut ports: Vec<String> = (0..self.inputs).map(|k| format!("input i{k}")).collect();
        ports.extend((0..self.gates.len()).map(|k| format!("output g{k}")));
        let mut body = String::new();
        for (k, (kind, srcs)) in self.gates.iter().enumerate() {
            let mut conns: Vec<String> = srcs.iter().map(|&s| self.net(s)).collect();
            conns.push(format!("g{k}"));
            body.push_str(&format!("  {kind} u{k}({});\n", conns.join(", ")));
        }
        format!("module top({});\n{body}endmodule\n", ports.join(", "))
    }

    pub fn reference(&self, vector: usize) -> Vec<bool> {
        let mut vals: Vec<bool> = (0..self.inputs).map(|k| vector >> k & 1 == 1).collect();
        for (kind, srcs) in &self.gates {
            let x: Vec<bool> = srcs.iter().map(|&s| vals[s]).collect();
            vals.push(reference_eval(kind, &x));
        }
        vals.split_off(self.inputs)
    }
}

fn rbf(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum();
    (-gamma * d2).exp()
}

/// Solve `m · v = rhs` by Gaussian elimination with partial pivoting.
fn solve_linear(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[piv][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        let (top, rest) = m.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (k, row) in rest.iter_mut().enumerate() {
            let f = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= f * p;
            }
            rhs[col + 1 + k] -= f * rhs[col];
        }
    }
    let mut v = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * v[c]).sum();
        v[r] = (rhs[r] - s) / m[r][r];
    }
    Some(v)
}

/// Minimum of the soft-margin dual `½ αᵀQα − Σα` subject to `0 ≤ α ≤ C`,
/// `yᵀα = 0`, found by enumerating every assignment of each multiplier to
/// {0, C, free} and solving the equality-constrained stationarity system on
/// the free set. Exponential in `n`; meant for n ≤ 6.
pub fn brute_force_dual(x: &[Vec<f64>], y: &[f64], c: f64, gamma: f64) -> f64 {
    let n = x.len();
    let q: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * rbf(&x[i], &x[j], gamma)).collect())
        .collect();
    let objective = |a: &[f64]| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += a[i] * a[j] * q[i][j];
            }
        }
        0.5 * s - a.iter().sum::<f64>()
    };
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut rest = code;
        for s in state.iter_mut() {
            *s = (rest % 3) as u8;
            rest /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // [Q_FF y_F; y_Fᵀ 0] [α_F; b] = [1 − Q_FB α_B; −y_Bᵀ α_B]
            let m = free.len();
            let mut mat = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    mat[r][cc] = q[i][j];
                }
                mat[r][m] = y[i];
                mat[m][r] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|&j| state[j] == 1).map(|j| q[i][j] * c).sum::<f64>();
            }
            rhs[m] = -(0..n).filter(|&j| state[j] == 1).map(|j| y[j] * c).sum::<f64>();
            let Some(v) = solve_linear(mat, rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = v[r];
            }
        }
        let feasible = alpha.iter().all(|&a| (-1e-9..=c + 1e-9).contains(&a))
            && alpha.iter().zip(y).map(|(a, y)| a * y).sum::<f64>().abs() < 1e-9;
        if feasible {
            best = best.min(objective(&alpha));
        }
    }
    best
}

pub fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset<f64> {
    let w = x[0].len();
    Dataset {
        nodes: (0..x.len()).map(CellId).collect(),
        normalizer: Normalizer {
            min: vec![0.0; w],
            max: vec![1.0; w],
        },
        mask: vec![true; w],
        x,
        y,
    }
}

/// Training multipliers (zero for non-support rows) and decision values.
pub fn audit(m: &SvmModel<f64>, ds: &Dataset<f64>) -> Vec<(f64, f64)> {
    let mut alpha = vec![0.0; ds.len()];
    for (k, &i) in m.sv_indices.iter().enumerate() {
        alpha[i] = m.alpha[k];
    }
    ds.x.iter().zip(alpha).map(|(x, a)| (a, m.decision_scaled(x))).collect()
}

pub fn kkt_holds(m: &SvmModel<f64>, ds: &Dataset<f64>, tol: f64) -> bool {
    audit(m, ds).iter().zip(&ds.y).all(|(&(a, f), &y)| {
        let margin = y * f;
        if a <= 0.0 {
            margin >= 1.0 - tol
        } else if a >= m.c {
            margin <= 1.0 + tol
        } else {
            (margin - 1.0).abs() <= tol
        }
    })
}
