//! NCV cost accounting.
//!
//! Primitive semantics use the V-power algebra: each line holds a value in Z4 where a
//! classical bit `x` is `2x`, NOT adds 2, CV adds 1 and CVD adds 3 (V² = NOT, V·V⁺ = I).
//! This is exact as long as every control is classical when read, which
//! [`PrimitiveSeq::eval_z4`] enforces.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::gatelib::{BitVec, Builtin};
use crate::netlist::Circuit;

pub const DEFAULT_BUDGET: usize = 100_000;
pub const BUDGET_ENV: &str = "REVSEQ_BUDGET";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QcostError {
    #[error("circuit has feedback; break it before decomposing")]
    NeedsBreakFeedback,
    #[error("op {op}: control line {line} is not classical")]
    NonClassicalControl { op: usize, line: usize },
    #[error("line {line} ends in a non-classical state")]
    NonClassicalOutput { line: usize },
    #[error("vector width {got} does not match sequence width {expected}")]
    Width { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PrimKind {
    Not,
    Cnot,
    Cv,
    Cvd,
    Box,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Primitive {
    pub kind: PrimKind,
    pub control: Option<usize>,
    pub target: usize,
    /// Merged members of a BOX, in application order; empty otherwise.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub members: Vec<Primitive>,
}

impl Primitive {
    pub fn not(t: usize) -> Self {
        Primitive { kind: PrimKind::Not, control: None, target: t, members: Vec::new() }
    }

    pub fn cnot(c: usize, t: usize) -> Self {
        Self::controlled(PrimKind::Cnot, c, t)
    }

    pub fn cv(c: usize, t: usize) -> Self {
        Self::controlled(PrimKind::Cv, c, t)
    }

    pub fn cvd(c: usize, t: usize) -> Self {
        Self::controlled(PrimKind::Cvd, c, t)
    }

    fn controlled(kind: PrimKind, c: usize, t: usize) -> Self {
        assert_ne!(c, t, "control and target must differ");
        Primitive { kind, control: Some(c), target: t, members: Vec::new() }
    }

    pub fn for_box(members: Vec<Primitive>) -> Self {
        let first = &members[0];
        Primitive { kind: PrimKind::Box, control: first.control, target: first.target, members }
    }

    pub fn lines(&self) -> Vec<usize> {
        self.control.into_iter().chain([self.target]).collect()
    }

    /// Z4 increment applied to the target when the control reads classical `1`.
    fn step(&self) -> u8 {
        match self.kind {
            PrimKind::Not | PrimKind::Cnot => 2,
            PrimKind::Cv => 1,
            PrimKind::Cvd => 3,
            PrimKind::Box => unreachable!("boxes apply their members"),
        }
    }

    pub fn apply_z4(&self, state: &mut [u8], op: usize) -> Result<(), QcostError> {
        match self.kind {
            PrimKind::Box => {
                for m in &self.members {
                    m.apply_z4(state, op)?;
                }
            }
            PrimKind::Not => state[self.target] = (state[self.target] + 2) % 4,
            _ => {
                let c = self.control.expect("controlled primitive");
                match state[c] {
                    0 => {}
                    2 => state[self.target] = (state[self.target] + self.step()) % 4,
                    _ => return Err(QcostError::NonClassicalControl { op, line: c }),
                }
            }
        }
        Ok(())
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            PrimKind::Not => "NOT",
            PrimKind::Cnot => "CNOT",
            PrimKind::Cv => "CV",
            PrimKind::Cvd => "CVD",
            PrimKind::Box => "BOX",
        };
        match self.control {
            Some(c) => write!(f, "{kind} {c} {}", self.target)?,
            None => write!(f, "{kind} - {}", self.target)?,
        }
        if !self.members.is_empty() {
            let inner: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
            write!(f, " [{}]", inner.join("; "))?;
        }
        Ok(())
    }
}

/// True iff `a` and `b` may be swapped: they touch disjoint lines, or (neither being a
/// BOX) every shared line is a control in both or a target in both. Target actions are
/// all powers of V on that line and so commute with each other.
pub fn commutes(a: &Primitive, b: &Primitive) -> bool {
    let shared: Vec<usize> = a.lines().into_iter().filter(|l| b.lines().contains(l)).collect();
    if shared.is_empty() {
        return true;
    }
    if a.kind == PrimKind::Box || b.kind == PrimKind::Box {
        return false;
    }
    shared.iter().all(|&l| (a.target == l) == (b.target == l))
}

fn mergeable(a: &Primitive, b: &Primitive) -> bool {
    use PrimKind::*;
    let kinds_ok = matches!((a.kind, b.kind), (Cnot, Cv | Cvd) | (Cv | Cvd, Cnot));
    let mut la = a.lines();
    let mut lb = b.lines();
    la.sort_unstable();
    lb.sort_unstable();
    kinds_ok && la == lb
}

fn cancels(a: &Primitive, b: &Primitive) -> bool {
    use PrimKind::*;
    matches!((a.kind, b.kind), (Cv, Cvd) | (Cvd, Cv)) && a.control == b.control && a.target == b.target
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
pub struct PrimitiveSeq {
    pub width: usize,
    pub ops: Vec<Primitive>,
}

impl PrimitiveSeq {
    pub fn new(width: usize, ops: Vec<Primitive>) -> Self {
        debug_assert!(ops.iter().all(|p| p.lines().iter().all(|&l| l < width)));
        PrimitiveSeq { width, ops }
    }

    pub fn raw_cost(&self) -> usize {
        self.ops.len()
    }

    pub fn box_count(&self) -> usize {
        self.ops.iter().filter(|p| p.kind == PrimKind::Box).count()
    }

    pub fn is_boolean(&self) -> bool {
        self.ops.iter().all(|p| matches!(p.kind, PrimKind::Not | PrimKind::Cnot))
    }

    pub fn eval_z4(&self, state: &mut [u8]) -> Result<(), QcostError> {
        for (i, op) in self.ops.iter().enumerate() {
            op.apply_z4(state, i)?;
        }
        Ok(())
    }

    /// Classical input to classical output; errors if any line is left in superposition.
    pub fn eval_classical(&self, input: &BitVec) -> Result<BitVec, QcostError> {
        if input.width() != self.width {
            return Err(QcostError::Width { expected: self.width, got: input.width() });
        }
        let mut s: Vec<u8> = input.bits().iter().map(|&b| 2 * b as u8).collect();
        self.eval_z4(&mut s)?;
        s.iter()
            .enumerate()
            .map(|(line, &v)| match v {
                0 => Ok(false),
                2 => Ok(true),
                _ => Err(QcostError::NonClassicalOutput { line }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitVec::from_bits)
    }

    pub fn to_text(&self) -> String {
        self.ops.iter().map(|p| format!("{p}\n")).collect()
    }
}

fn toffoli(a: usize, b: usize, c: usize) -> Vec<Primitive> {
    vec![Primitive::cv(b, c), Primitive::cnot(a, b), Primitive::cvd(b, c), Primitive::cnot(a, b), Primitive::cv(a, c)]
}

/// Fredkin as CNOT · Toffoli · CNOT before any moves (7 primitives).
pub fn fredkin_unmerged(a: usize, b: usize, c: usize) -> Vec<Primitive> {
    let mut v = vec![Primitive::cnot(c, b)];
    v.extend(toffoli(a, b, c));
    v.push(Primitive::cnot(c, b));
    v
}

pub fn template(gate: Builtin, l: &[usize]) -> Vec<Primitive> {
    match gate {
        Builtin::Not => vec![Primitive::not(l[0])],
        Builtin::Cnot => vec![Primitive::cnot(l[0], l[1])],
        Builtin::Toffoli => toffoli(l[0], l[1], l[2]),
        Builtin::Fredkin => {
            let (a, b, c) = (l[0], l[1], l[2]);
            vec![
                Primitive::for_box(vec![Primitive::cnot(c, b), Primitive::cv(b, c)]),
                Primitive::cnot(a, b),
                Primitive::cv(a, c),
                Primitive::for_box(vec![Primitive::cvd(b, c), Primitive::cnot(c, b)]),
                Primitive::cnot(a, b),
            ]
        }
        Builtin::Peres => {
            let (a, b, c) = (l[0], l[1], l[2]);
            vec![Primitive::cv(b, c), Primitive::cv(a, c), Primitive::cnot(a, b), Primitive::cvd(b, c)]
        }
        Builtin::F2g => vec![Primitive::cnot(l[0], l[1]), Primitive::cnot(l[0], l[2])],
        Builtin::Pareek => {
            // Controlled swap of B and D (select A) followed by S = B xor D and R = Q xor C.
            let (a, b, c, d) = (l[0], l[1], l[2], l[3]);
            let mut v = vec![Primitive::cnot(d, b)];
            v.extend(toffoli(a, b, d));
            v.extend([Primitive::cnot(d, b), Primitive::cnot(b, d), Primitive::cnot(b, c)]);
            v
        }
    }
}

pub fn decompose(c: &Circuit) -> Result<PrimitiveSeq, QcostError> {
    if !c.is_combinational() {
        return Err(QcostError::NeedsBreakFeedback);
    }
    let ops = c.gates.iter().flat_map(|g| template(g.gate, &g.lines)).collect();
    Ok(PrimitiveSeq::new(c.width(), ops))
}

pub fn raw_cost(seq: &PrimitiveSeq) -> usize {
    seq.raw_cost()
}

/// Moves the op at `i` to position `j`; `None` if it would cross a non-commuting op.
pub fn move_op(seq: &PrimitiveSeq, i: usize, j: usize) -> Option<PrimitiveSeq> {
    let n = seq.ops.len();
    if i >= n || j >= n {
        return None;
    }
    let op = &seq.ops[i];
    let crossed = if i < j { &seq.ops[i + 1..=j] } else { &seq.ops[j..i] };
    if !crossed.iter().all(|o| commutes(op, o)) {
        return None;
    }
    let mut ops = seq.ops.clone();
    let p = ops.remove(i);
    ops.insert(j, p);
    Some(PrimitiveSeq { width: seq.width, ops })
}

/// Greedy left-to-right merging of adjacent CNOT/CV(D) pairs on the same two lines.
pub fn merge_boxes(seq: &PrimitiveSeq) -> PrimitiveSeq {
    let mut ops: Vec<Primitive> = Vec::with_capacity(seq.ops.len());
    for op in &seq.ops {
        match ops.last() {
            Some(prev) if mergeable(prev, op) => {
                let prev = ops.pop().expect("non-empty");
                ops.push(Primitive::for_box(vec![prev, op.clone()]));
            }
            _ => ops.push(op.clone()),
        }
    }
    PrimitiveSeq { width: seq.width, ops }
}

/// Removes adjacent CV·CVD pairs on the same control and target.
pub fn cancel_pairs(seq: &PrimitiveSeq) -> PrimitiveSeq {
    let mut ops: Vec<Primitive> = Vec::with_capacity(seq.ops.len());
    for op in &seq.ops {
        match ops.last() {
            Some(prev) if cancels(prev, op) => {
                ops.pop();
            }
            _ => ops.push(op.clone()),
        }
    }
    PrimitiveSeq { width: seq.width, ops }
}

/// Cancellation then merging, repeated to a fixpoint.
pub fn normalize(seq: &PrimitiveSeq) -> PrimitiveSeq {
    let mut cur = seq.clone();
    loop {
        let next = merge_boxes(&cancel_pairs(&cur));
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Optimized {
    pub seq: PrimitiveSeq,
    pub cost: usize,
    /// Moves applied to the input to reach `seq` (before normalization).
    pub moves: usize,
    pub explored: usize,
    pub budget_exhausted: bool,
}

/// Best-first search over legal moves, scoring each arrangement by its normalized
/// cost. Ties prefer fewer moves, then earlier generation (lower `i`, then `j`).
pub fn optimize(seq: &PrimitiveSeq, budget: usize) -> Optimized {
    assert!(budget > 0, "budget must be positive");
    let score = |s: &PrimitiveSeq| normalize(s).raw_cost();
    let mut heap = BinaryHeap::new();
    let mut seen: HashSet<Vec<Primitive>> = HashSet::new();
    let mut store: Vec<(PrimitiveSeq, usize)> = Vec::new();
    let mut counter = 0usize;

    let start_cost = score(seq);
    seen.insert(seq.ops.clone());
    store.push((seq.clone(), 0));
    heap.push(Reverse((start_cost, 0usize, counter)));
    let mut best = (start_cost, 0usize, 0usize);
    let mut explored = 0;

    while let Some(Reverse((cost, depth, id))) = heap.pop() {
        if explored >= budget {
            break;
        }
        explored += 1;
        if (cost, depth) < (best.0, best.1) {
            best = (cost, depth, id);
        }
        let cur = store[id].0.clone();
        let n = cur.ops.len();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let Some(next) = move_op(&cur, i, j) else { continue };
                if seen.insert(next.ops.clone()) {
                    counter += 1;
                    let c = score(&next);
                    store.push((next, depth + 1));
                    heap.push(Reverse((c, depth + 1, counter)));
                }
            }
        }
    }
    let exhausted = !heap.is_empty();
    let (cost, moves, id) = best;
    Optimized { seq: normalize(&store[id].0), cost, moves, explored, budget_exhausted: exhausted }
}

pub fn budget_from_env() -> usize {
    std::env::var(BUDGET_ENV).ok().and_then(|v| v.parse().ok()).filter(|&b| b > 0).unwrap_or(DEFAULT_BUDGET)
}
