//! Independent oracles shared by the integration tests. Nothing here calls into the
//! code under test except to build inputs and read outputs.
#![allow(dead_code)]

pub mod unitary;

use std::collections::HashMap;

use proptest::prelude::*;
use revseq::gatelib::{BitVec, Builtin};
use revseq::netlist::{Circuit, InputRole, OutputRole};
use revseq::sim::{run_sequential_with, Stimulus};

/// Table 3.1 rows as (ABCD, PQRS).
pub const PAREEK_TABLE: [(&str, &str); 16] = [
    ("0000", "0000"),
    ("0001", "0001"),
    ("0010", "0010"),
    ("0011", "0011"),
    ("0100", "0111"),
    ("0101", "0110"),
    ("0110", "0101"),
    ("0111", "0100"),
    ("1000", "1000"),
    ("1001", "1111"),
    ("1010", "1010"),
    ("1011", "1101"),
    ("1100", "1001"),
    ("1101", "1110"),
    ("1110", "1011"),
    ("1111", "1100"),
];

pub const FREDKIN_TABLE: [(&str, &str); 8] = [
    ("000", "000"),
    ("001", "001"),
    ("010", "010"),
    ("011", "011"),
    ("100", "100"),
    ("101", "110"),
    ("110", "101"),
    ("111", "111"),
];

pub const F2G_TABLE: [(&str, &str); 8] = [
    ("000", "000"),
    ("001", "001"),
    ("010", "010"),
    ("011", "011"),
    ("100", "111"),
    ("101", "110"),
    ("110", "101"),
    ("111", "100"),
];

pub fn bv(s: &str) -> BitVec {
    s.parse().unwrap()
}

/// Runs one cycle of `c` from register values `regs` with named primary inputs.
pub fn step(c: &Circuit, regs: &BitVec, inputs: &HashMap<&str, bool>) -> (BitVec, BitVec) {
    let row: Vec<bool> = c.primary_inputs().iter().map(|&i| inputs[c.lines[i].name.as_str()]).collect();
    let s = Stimulus::new(c, vec![row]).unwrap();
    let t = run_sequential_with(c, &s, Some(regs), |_| Vec::new()).unwrap();
    let cy = &t.cycles[0];
    (cy.output.clone(), cy.registers.clone())
}

pub fn out(c: &Circuit, v: &BitVec, name: &str) -> bool {
    v.get(c.line_index(name).unwrap())
}

/// Every assignment of the circuit's primary inputs, as name maps.
pub fn assignments(c: &Circuit) -> Vec<HashMap<&str, bool>> {
    let pis = c.primary_inputs();
    BitVec::all(pis.len())
        .map(|v| pis.iter().enumerate().map(|(k, &i)| (c.lines[i].name.as_str(), v.get(k))).collect())
        .collect()
}

pub type NextState = fn(&HashMap<&str, bool>, bool) -> Option<bool>;

pub fn d_pos(i: &HashMap<&str, bool>, q: bool) -> Option<bool> {
    Some((i["d"] & i["clk"]) | (!i["clk"] & q))
}

pub fn d_neg(i: &HashMap<&str, bool>, q: bool) -> Option<bool> {
    Some((i["d"] & !i["clk"]) | (i["clk"] & q))
}

pub fn rs(i: &HashMap<&str, bool>, q: bool) -> Option<bool> {
    let (s, r, clk) = (i["s"], i["r"], i["clk"]);
    if s && r && clk {
        return None;
    }
    Some((s & clk) | (!(r & clk) & q))
}

pub fn jk(i: &HashMap<&str, bool>, q: bool) -> Option<bool> {
    let (j, k, clk) = (i["j"], i["k"], i["clk"]);
    Some((((j & !q) | (!k & q)) & clk) | (!clk & q))
}

pub fn t(i: &HashMap<&str, bool>, q: bool) -> Option<bool> {
    Some(((i["t"] ^ q) & clk(i)) | (!clk(i) & q))
}

pub fn t_xor(i: &HashMap<&str, bool>, q: bool) -> Option<bool> {
    Some((i["t"] & clk(i)) ^ q)
}

fn clk(i: &HashMap<&str, bool>) -> bool {
    i["clk"]
}

/// Exhaustive check over inputs × Q: the named output and every register must equal
/// the oracle's Q+. Returns the number of rows checked.
pub fn conforms(c: &Circuit, q_out: &str, oracle: NextState) -> Result<usize, String> {
    let mut rows = 0;
    for q in [false, true] {
        let regs = if q { BitVec::ones(c.feedbacks.len()) } else { BitVec::zeros(c.feedbacks.len()) };
        for a in assignments(c) {
            let Some(expect) = oracle(&a, q) else { continue };
            let (o, r) = step(c, &regs, &a);
            if out(c, &o, q_out) != expect || r.bits().iter().any(|&b| b != expect) {
                return Err(format!("{}: inputs {a:?} Q={q}: got {o} regs {r}, want Q+={expect}", c.name));
            }
            rows += 1;
        }
    }
    Ok(rows)
}

/// Strategy for structurally valid circuits: random roles, gates on distinct lines,
/// and feedback bindings forming a permutation over a chosen set of registered lines.
pub fn arb_circuit() -> impl Strategy<Value = Circuit> {
    (1usize..=8)
        .prop_flat_map(|n| {
            let roles = prop::collection::vec((0u8..3, 0u8..2, any::<bool>()), n);
            let gates = prop::collection::vec(
                (prop::sample::select(Builtin::ALL.to_vec()), Just((0..n).collect::<Vec<usize>>()).prop_shuffle()),
                0..10,
            );
            let perm = Just((0..n).collect::<Vec<usize>>()).prop_shuffle();
            (Just(n), roles, gates, perm, "[a-z]{1,3}", any::<u64>(), any::<bool>(), any::<bool>())
        })
        .prop_map(|(n, roles, gates, perm, prefix, init_seed, with_init, with_test)| {
            let mut c = Circuit::new(format!("{prefix}_c"));
            for (i, &(inp, outp, _)) in roles.iter().enumerate() {
                let input = match inp {
                    0 => InputRole::Primary,
                    1 => InputRole::Constant(false),
                    _ => InputRole::Constant(true),
                };
                let output = if outp == 0 { OutputRole::Primary } else { OutputRole::Garbage };
                c.add_line(format!("{prefix}{i}"), input, output);
            }
            let registered: Vec<usize> = (0..n).filter(|&i| roles[i].2).collect();
            let mut sources: Vec<usize> = perm.into_iter().filter(|i| registered.contains(i)).collect();
            sources.truncate(registered.len());
            for (&sink, &source) in registered.iter().zip(&sources) {
                c.lines[sink].input = InputRole::FeedbackSink;
                c.lines[source].output = OutputRole::FeedbackSource;
                c.add_feedback(source, sink);
            }
            for (gate, lines) in gates {
                if gate.arity() <= n {
                    c.add_gate(gate, &lines[..gate.arity()]);
                }
            }
            if with_init && !registered.is_empty() {
                c.init = Some(BitVec::from_index(registered.len(), init_seed & ((1 << registered.len()) - 1)));
            }
            if with_test {
                c.test_line = c.primary_outputs().first().copied();
            }
            c
        })
}

/// Functional forms of the library gates, written out independently.
pub fn reference_gate(g: Builtin, x: &[bool]) -> Vec<bool> {
    match g {
        Builtin::Not => vec![!x[0]],
        Builtin::Cnot => vec![x[0], x[0] ^ x[1]],
        Builtin::Toffoli => vec![x[0], x[1], (x[0] & x[1]) ^ x[2]],
        Builtin::Peres => vec![x[0], x[0] ^ x[1], (x[0] & x[1]) ^ x[2]],
        Builtin::Fredkin => {
            let (a, b, c) = (x[0], x[1], x[2]);
            vec![a, (!a & b) | (a & c), (!a & c) | (a & b)]
        }
        Builtin::F2g => vec![x[0], x[0] ^ x[1], x[0] ^ x[2]],
        Builtin::Pareek => {
            let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
            let q = (!a & b) ^ (a & d);
            vec![a, q, q ^ c, b ^ d]
        }
    }
}

/// The same as a map on basis indices, MSB = first port.
pub fn reference_index(g: Builtin, x: usize) -> usize {
    let n = g.arity();
    let bits: Vec<bool> = (0..n).map(|i| (x >> (n - 1 - i)) & 1 == 1).collect();
    reference_gate(g, &bits).iter().fold(0, |acc, &b| (acc << 1) | b as usize)
}
