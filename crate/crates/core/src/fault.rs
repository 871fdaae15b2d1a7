use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::gatelib::BitVec;
use crate::netlist::{Circuit, InputRole};
use crate::sim::{self, SimError, Trace};

/// Free-input limit for exhaustive minimal test-set search.
pub const EXHAUSTIVE_LIMIT: usize = 16;

#[derive(Debug, Error)]
pub enum FaultError {
    #[error("fault site {0} does not exist in this circuit")]
    InvalidSite(FaultSpec),
    #[error("gate {gate} ({name}) is not parity preserving")]
    NotParityPreserving { gate: usize, name: &'static str },
    #[error("{free} free inputs exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}")]
    ExhaustiveLimit { free: usize },
    #[error("circuit declares no test output line")]
    NoTestLine,
    #[error("circuit has feedback; break it first")]
    Sequential,
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultModel {
    StuckAt,
    BitFlip,
}

impl FromStr for FaultModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stuck" | "stuck_at" => Ok(FaultModel::StuckAt),
            "flip" | "bit_flip" => Ok(FaultModel::BitFlip),
            other => Err(format!("unknown fault model `{other}` (expected stuck or flip)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultKind {
    StuckAt(bool),
    BitFlip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Input,
    Output,
}

/// A single port fault. Input-side faults act just before the gate reads its port,
/// output-side faults just after it writes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FaultSpec {
    pub kind: FaultKind,
    pub gate: usize,
    pub port: usize,
    pub side: Side,
}

impl FaultSpec {
    pub fn stuck_at(gate: usize, port: usize, side: Side, polarity: bool) -> Self {
        FaultSpec { kind: FaultKind::StuckAt(polarity), gate, port, side }
    }

    pub fn bit_flip(gate: usize, port: usize) -> Self {
        FaultSpec { kind: FaultKind::BitFlip, gate, port, side: Side::Output }
    }

    pub fn is_valid_for(&self, c: &Circuit) -> bool {
        c.gates.get(self.gate).is_some_and(|g| self.port < g.lines.len())
    }

    /// Circuit line carrying this port.
    pub fn line(&self, c: &Circuit) -> usize {
        c.gates[self.gate].lines[self.port]
    }
}

impl fmt::Display for FaultSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = match self.side {
            Side::Input => "in",
            Side::Output => "out",
        };
        match self.kind {
            FaultKind::StuckAt(p) => write!(f, "{}:{}:{}:sa{}", self.gate, self.port, side, p as u8),
            FaultKind::BitFlip => write!(f, "{}:{}:{}:flip", self.gate, self.port, side),
        }
    }
}

impl Serialize for FaultSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Parses `gate:port:side:kind` where side is `in`/`out` and kind is `sa0`, `sa1` or
/// `flip`, e.g. `0:1:out:flip`.
impl FromStr for FaultSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [gate, port, side, kind] = parts.as_slice() else {
            return Err(format!("fault site `{s}` must look like gate:port:in|out:sa0|sa1|flip"));
        };
        let gate = gate.parse().map_err(|_| format!("bad gate ordinal `{gate}`"))?;
        let port = port.parse().map_err(|_| format!("bad port index `{port}`"))?;
        let side = match *side {
            "in" => Side::Input,
            "out" => Side::Output,
            other => return Err(format!("bad side `{other}`")),
        };
        let kind = match *kind {
            "sa0" => FaultKind::StuckAt(false),
            "sa1" => FaultKind::StuckAt(true),
            "flip" => FaultKind::BitFlip,
            other => return Err(format!("bad fault kind `{other}`")),
        };
        Ok(FaultSpec { kind, gate, port, side })
    }
}

pub fn enumerate_faults(c: &Circuit, model: FaultModel) -> Vec<FaultSpec> {
    let mut out = Vec::new();
    for (gi, g) in c.gates.iter().enumerate() {
        for port in 0..g.lines.len() {
            match model {
                FaultModel::StuckAt => {
                    for side in [Side::Input, Side::Output] {
                        for p in [false, true] {
                            out.push(FaultSpec::stuck_at(gi, port, side, p));
                        }
                    }
                }
                FaultModel::BitFlip => out.push(FaultSpec::bit_flip(gi, port)),
            }
        }
    }
    out
}

/// Combinational evaluation with any number of simultaneous faults.
pub fn inject_many(c: &Circuit, faults: &[FaultSpec], input: &BitVec) -> Result<BitVec, FaultError> {
    if let Some(f) = faults.iter().find(|f| !f.is_valid_for(c)) {
        return Err(FaultError::InvalidSite(*f));
    }
    // Reuse the fault-free entry point for its width/constant/feedback checks.
    sim::eval_combinational(c, input)?;
    let mut state = input.bits().to_vec();
    sim::cascade(c, &mut state, faults);
    Ok(BitVec::from_bits(state))
}

pub fn inject(c: &Circuit, f: &FaultSpec, input: &BitVec) -> Result<BitVec, FaultError> {
    inject_many(c, std::slice::from_ref(f), input)
}

fn require_parity_preserving(c: &Circuit) -> Result<(), FaultError> {
    match c.gates.iter().position(|g| !g.gate.kind().is_parity_preserving()) {
        Some(gi) => Err(FaultError::NotParityPreserving { gate: gi, name: c.gates[gi].gate.name() }),
        None => Ok(()),
    }
}

pub fn parity_detects_many(c: &Circuit, faults: &[FaultSpec], input: &BitVec) -> Result<bool, FaultError> {
    require_parity_preserving(c)?;
    Ok(inject_many(c, faults, input)?.parity() != input.parity())
}

/// Whole-vector parity check, valid only for all-parity-preserving circuits.
pub fn parity_detects(c: &Circuit, f: &FaultSpec, input: &BitVec) -> Result<bool, FaultError> {
    parity_detects_many(c, std::slice::from_ref(f), input)
}

fn primary_outputs_of(v: &BitVec, pos: &[usize]) -> Vec<bool> {
    pos.iter().map(|&i| v.get(i)).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    #[serde(serialize_with = "as_strings")]
    pub vectors: Vec<BitVec>,
    pub faults: Vec<FaultSpec>,
    /// For each fault, the indices into `vectors` that detect it.
    pub detected: Vec<Vec<usize>>,
    /// Indices into `faults`.
    pub undetected: Vec<usize>,
}

fn as_strings<S: Serializer>(v: &[BitVec], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|b| b.to_string()))
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.undetected.is_empty()
    }

    pub fn detected_count(&self) -> usize {
        self.faults.len() - self.undetected.len()
    }

    pub fn undetected_faults(&self) -> Vec<FaultSpec> {
        self.undetected.iter().map(|&i| self.faults[i]).collect()
    }

    /// Fault-by-vector 0/1 matrix with a header of vector strings.
    pub fn matrix_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["fault".to_string()];
        header.extend(self.vectors.iter().map(|v| v.to_string()));
        w.write_record(&header)?;
        for (f, hits) in self.faults.iter().zip(&self.detected) {
            let mut row = vec![f.to_string()];
            row.extend((0..self.vectors.len()).map(|i| if hits.contains(&i) { "1" } else { "0" }.to_string()));
            w.write_record(&row)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// A fault is detected by a vector iff some primary output differs from the fault-free
/// value.
pub fn evaluate_test_set(c: &Circuit, vectors: &[BitVec], faults: &[FaultSpec]) -> Result<CoverageReport, FaultError> {
    if !c.is_combinational() {
        return Err(FaultError::Sequential);
    }
    if let Some(f) = faults.iter().find(|f| !f.is_valid_for(c)) {
        return Err(FaultError::InvalidSite(*f));
    }
    let pos = c.primary_outputs();
    let good = vectors
        .iter()
        .map(|v| sim::eval_combinational(c, v).map(|o| primary_outputs_of(&o, &pos)))
        .collect::<Result<Vec<_>, _>>()?;
    let detected: Vec<Vec<usize>> = faults
        .par_iter()
        .map(|f| {
            vectors
                .iter()
                .enumerate()
                .filter(|(i, v)| {
                    let mut state = v.bits().to_vec();
                    sim::cascade(c, &mut state, std::slice::from_ref(f));
                    pos.iter().zip(&good[*i]).any(|(&p, &g)| state[p] != g)
                })
                .map(|(i, _)| i)
                .collect()
        })
        .collect();
    let undetected = detected.iter().enumerate().filter(|(_, d)| d.is_empty()).map(|(i, _)| i).collect();
    Ok(CoverageReport { vectors: vectors.to_vec(), faults: faults.to_vec(), detected, undetected })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MinimalTestSet {
    Complete {
        #[serde(serialize_with = "as_strings")]
        vectors: Vec<BitVec>,
    },
    /// Some faults are undetectable; `vectors` is a minimum set covering the rest.
    Incomplete {
        undetectable: Vec<FaultSpec>,
        #[serde(serialize_with = "as_strings")]
        vectors: Vec<BitVec>,
    },
}

impl MinimalTestSet {
    pub fn vectors(&self) -> &[BitVec] {
        match self {
            MinimalTestSet::Complete { vectors } | MinimalTestSet::Incomplete { vectors, .. } => vectors,
        }
    }

    pub fn is_complete(&self) -> bool {
        matches!(self, MinimalTestSet::Complete { .. })
    }
}

/// Can `uncovered` be covered by at most `k` sets drawn from `sets[lo..]`?
fn coverable(sets: &[FixedBitSet], lo: usize, uncovered: &FixedBitSet, k: usize) -> bool {
    if uncovered.is_clear() {
        return true;
    }
    if k == 0 {
        return false;
    }
    // Branch on the uncovered fault with the fewest candidate vectors.
    let mut pick: Option<Vec<usize>> = None;
    for f in uncovered.ones() {
        let cands: Vec<usize> = (lo..sets.len()).filter(|&v| sets[v].contains(f)).collect();
        if pick.as_ref().is_none_or(|p| cands.len() < p.len()) {
            let empty = cands.is_empty();
            pick = Some(cands);
            if empty {
                break;
            }
        }
    }
    pick.unwrap_or_default().into_iter().any(|v| {
        let mut rest = uncovered.clone();
        rest.difference_with(&sets[v]);
        coverable(sets, lo, &rest, k - 1)
    })
}

/// Exact minimum cover of the detectable faults over the whole input space; among
/// minimum covers the lexicographically smallest (by vector value) is returned.
pub fn minimal_complete_test_set(c: &Circuit, model: FaultModel) -> Result<MinimalTestSet, FaultError> {
    if !c.is_combinational() {
        return Err(FaultError::Sequential);
    }
    let free = c.indices_not_constant().len();
    if free > EXHAUSTIVE_LIMIT {
        return Err(FaultError::ExhaustiveLimit { free });
    }
    let vectors = sim::input_space(c);
    let faults = enumerate_faults(c, model);
    let report = evaluate_test_set(c, &vectors, &faults)?;

    let nf = faults.len();
    let sets: Vec<FixedBitSet> = (0..vectors.len())
        .map(|v| {
            let mut s = FixedBitSet::with_capacity(nf);
            for (f, hits) in report.detected.iter().enumerate() {
                if hits.binary_search(&v).is_ok() {
                    s.insert(f);
                }
            }
            s
        })
        .collect();
    let mut target = FixedBitSet::with_capacity(nf);
    for f in 0..nf {
        if !report.detected[f].is_empty() {
            target.insert(f);
        }
    }

    let mut k = 0;
    while !coverable(&sets, 0, &target, k) {
        k += 1;
    }
    let mut chosen = Vec::with_capacity(k);
    let mut uncovered = target;
    let mut lo = 0;
    while !uncovered.is_clear() {
        let left = k - chosen.len() - 1;
        let i = (lo..sets.len())
            .find(|&i| {
                let mut rest = uncovered.clone();
                rest.difference_with(&sets[i]);
                rest != uncovered && coverable(&sets, i + 1, &rest, left)
            })
            .expect("a cover of size k exists");
        uncovered.difference_with(&sets[i]);
        chosen.push(vectors[i].clone());
        lo = i + 1;
    }

    let undetectable = report.undetected_faults();
    Ok(if undetectable.is_empty() {
        MinimalTestSet::Complete { vectors: chosen }
    } else {
        MinimalTestSet::Incomplete { undetectable, vectors: chosen }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Fault,
    NoFault,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Fault => "FAULT",
            Verdict::NoFault => "NO_FAULT",
        })
    }
}

/// Per-cycle verdict read from the designated test output.
pub fn online_check(c: &Circuit, t: &Trace) -> Result<Vec<Verdict>, FaultError> {
    let line = c.test_line.ok_or(FaultError::NoTestLine)?;
    Ok(t.output_bits(line).into_iter().map(|b| if b { Verdict::Fault } else { Verdict::NoFault }).collect())
}

/// Copy of `c` in which the given constant lines become primary inputs, as a test
/// harness driving normally-fixed control lines would see it.
pub fn free_lines(c: &Circuit, lines: &[usize]) -> Circuit {
    let mut out = c.clone();
    for &l in lines {
        if matches!(out.lines[l].input, InputRole::Constant(_)) {
            out.lines[l].input = InputRole::Primary;
        }
    }
    out
}
