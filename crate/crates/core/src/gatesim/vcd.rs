// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

use super::{Signal, SimError, Trace};
use crate::netlist::FlatDesign;

/// Short printable identifier for the `k`-th variable, base 94 over `!`..`~`.
fn var_id(mut k: usize) -> String {
    let mut s = String::new();
    loop {
        s.push((b'!' + (k % 94) as u8) as char);
        k /= 94;
        if k == 0 {
            break;
        }
        k -= 1;
    }
    s
}

pub fn write_vcd(trace: &Trace, design: &FlatDesign) -> String {
    let mut out = String::new();
    out.push_str("$version ssresf gatesim $end\n");
    out.push_str("$timescale 1ns $end\n");
    let _ = writeln!(out, "$scope module {} $end", design.top);
    let ids: Vec<String> = (0..trace.signals.len()).map(var_id).collect();
    for (s, id) in trace.signals.iter().zip(&ids) {
        let _ = writeln!(out, "$var wire 1 {id} {} $end", s.name);
    }
    out.push_str("$upscope $end\n");
    out.push_str("$enddefinitions $end\n");
    if trace.signals.is_empty() {
        return out;
    }
    let mut by_time: BTreeMap<u64, Vec<(usize, bool)>> = BTreeMap::new();
    for (k, s) in trace.signals.iter().enumerate() {
        for &(t, v) in &s.changes {
            by_time.entry(t).or_default().push((k, v));
        }
    }
    for (t, changes) in by_time {
        let _ = writeln!(out, "#{t}");
        for (k, v) in changes {
            let _ = writeln!(out, "{}{}", u8::from(v), ids[k]);
        }
    }
    let _ = writeln!(out, "#{}", trace.end);
    out
}

/// Parse the VCD subset produced by [`write_vcd`]; `$dumpvars` wrappers are
/// skipped and only scalar 0/1 changes are accepted.
pub fn read_vcd(text: &str) -> Result<Trace, SimError> {
    let err = |line: usize, m: &str| SimError::Vcd {
        line,
        message: m.to_string(),
    };
    let mut ids: HashMap<String, usize> = HashMap::new();
    let mut signals: Vec<Signal> = Vec::new();
    let mut in_defs = true;
    let mut now: Option<u64> = None;
    let mut end = 0u64;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    while let Some((ln, raw)) = lines.next() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if in_defs {
            let words: Vec<&str> = line.split_whitespace().collect();
            match words[0] {
                "$var" => {
                    if words.len() < 6 || words[2] != "1" || words[words.len() - 1] != "$end" {
                        return Err(err(ln, "malformed $var"));
                    }
                    ids.insert(words[3].to_string(), signals.len());
                    signals.push(Signal {
                        name: words[4].to_string(),
                        changes: Vec::new(),
                    });
                }
                "$enddefinitions" => in_defs = false,
                w if w.starts_with('$') => {
                    // skip multi-line sections up to their $end
                    let mut closed = words.last() == Some(&"$end");
                    while !closed {
                        match lines.next() {
                            Some((_, l)) => closed = l.split_whitespace().any(|w| w == "$end"),
                            None => return Err(err(ln, "unterminated section")),
                        }
                    }
                }
                _ => return Err(err(ln, "unexpected text in header")),
            }
            continue;
        }
        if let Some(t) = line.strip_prefix('#') {
            let t: u64 = t.parse().map_err(|_| err(ln, "bad timestamp"))?;
            if now.is_some_and(|p| t < p) {
                return Err(err(ln, "timestamps go backwards"));
            }
            now = Some(t);
            end = end.max(t);
            continue;
        }
        if line.starts_with('$') {
            // $dumpvars / $end wrappers
            continue;
        }
        let (v, id) = line.split_at(1);
        let v = match v {
            "0" => false,
            "1" => true,
            _ => return Err(err(ln, "only scalar 0/1 changes are supported")),
        };
        let k = *ids.get(id).ok_or_else(|| err(ln, "unknown identifier"))?;
        let t = now.ok_or_else(|| err(ln, "value change before any timestamp"))?;
        let ch = &mut signals[k].changes;
        match ch.last_mut() {
            Some(last) if last.0 == t => last.1 = v,
            Some(last) if last.1 == v => {}
            _ => ch.push((t, v)),
        }
    }
    if in_defs {
        return Err(err(text.lines().count(), "missing $enddefinitions"));
    }
    Ok(Trace { end, signals })
}
