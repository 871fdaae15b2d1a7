use std::collections::HashMap;
use std::io::{Read, Write};

use serde::Serialize;
use thiserror::Error;

use crate::fault::{FaultKind, FaultSpec, Side};
use crate::gatelib::BitVec;
use crate::netlist::{Circuit, GateInstance, InputRole, OutputRole};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("circuit `{0}` has feedback; break it or use sequential simulation")]
    Sequential(String),
    #[error("expected a vector of width {expected}, got {got}")]
    Width { expected: usize, got: usize },
    #[error("constant line `{line}` must be {expected}")]
    ConstantMismatch { line: String, expected: u8 },
    #[error("stimulus: {0}")]
    Stimulus(String),
    #[error("stimulus csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Applies one gate in place, overriding port values for any faults on this gate.
#[inline]
pub(crate) fn step_gate(gi: usize, g: &GateInstance, state: &mut [bool], faults: &[FaultSpec]) {
    let k = g.lines.len();
    let mut idx = 0usize;
    for (port, &l) in g.lines.iter().enumerate() {
        let mut v = state[l];
        for f in faults {
            if f.gate == gi && f.port == port && f.side == Side::Input {
                v = f.kind.apply(v);
            }
        }
        idx |= (v as usize) << (k - 1 - port);
    }
    let out = g.gate.kind().map_index(idx);
    for (port, &l) in g.lines.iter().enumerate() {
        let mut v = (out >> (k - 1 - port)) & 1 == 1;
        for f in faults {
            if f.gate == gi && f.port == port && f.side == Side::Output {
                v = f.kind.apply(v);
            }
        }
        state[l] = v;
    }
}

/// Runs the gate list in order over `state` without any role checks.
pub fn cascade(c: &Circuit, state: &mut [bool], faults: &[FaultSpec]) {
    for (gi, g) in c.gates.iter().enumerate() {
        step_gate(gi, g, state, faults);
    }
}

fn check_input(c: &Circuit, input: &BitVec) -> Result<(), SimError> {
    if input.width() != c.width() {
        return Err(SimError::Width { expected: c.width(), got: input.width() });
    }
    for (i, l) in c.lines.iter().enumerate() {
        if let InputRole::Constant(v) = l.input {
            if input.get(i) != v {
                return Err(SimError::ConstantMismatch { line: l.name.clone(), expected: v as u8 });
            }
        }
    }
    Ok(())
}

pub fn eval_combinational(c: &Circuit, input: &BitVec) -> Result<BitVec, SimError> {
    if !c.is_combinational() {
        return Err(SimError::Sequential(c.name.clone()));
    }
    check_input(c, input)?;
    let mut state = input.clone().into_bits();
    cascade(c, &mut state, &[]);
    Ok(BitVec::from_bits(state))
}

/// Every full-width input vector with constants at their declared values, enumerating
/// the remaining lines in ascending binary order (leftmost free line most significant).
pub fn input_space(c: &Circuit) -> Vec<BitVec> {
    let free: Vec<usize> = c.indices_not_constant();
    let mut base = BitVec::zeros(c.width());
    for (i, l) in c.lines.iter().enumerate() {
        if let InputRole::Constant(v) = l.input {
            base.set(i, v);
        }
    }
    (0..1u64 << free.len())
        .map(|n| {
            let mut v = base.clone();
            let bits = BitVec::from_index(free.len(), n);
            for (k, &line) in free.iter().enumerate() {
                v.set(line, bits.get(k));
            }
            v
        })
        .collect()
}

impl Circuit {
    pub(crate) fn indices_not_constant(&self) -> Vec<usize> {
        self.lines
            .iter()
            .enumerate()
            .filter(|(_, l)| !matches!(l.input, InputRole::Constant(_)))
            .map(|(i, _)| i)
            .collect()
    }
}

/// Per-cycle primary-input assignment; `lines` are primary-input line indices and each
/// row holds one bit per entry of `lines`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stimulus {
    pub lines: Vec<usize>,
    pub rows: Vec<Vec<bool>>,
}

impl Stimulus {
    /// Rows ordered like `c.primary_inputs()`.
    pub fn new(c: &Circuit, rows: Vec<Vec<bool>>) -> Result<Self, SimError> {
        let lines = c.primary_inputs();
        if let Some(r) = rows.iter().find(|r| r.len() != lines.len()) {
            return Err(SimError::Width { expected: lines.len(), got: r.len() });
        }
        Ok(Stimulus { lines, rows })
    }

    /// Rows given as maps from line name to bit.
    pub fn from_named(c: &Circuit, rows: &[&[(&str, bool)]]) -> Result<Self, SimError> {
        let pis = c.primary_inputs();
        let mut out = Vec::new();
        for row in rows {
            let map: HashMap<&str, bool> = row.iter().copied().collect();
            let r = pis
                .iter()
                .map(|&i| {
                    let name = c.lines[i].name.as_str();
                    map.get(name).copied().ok_or_else(|| SimError::Stimulus(format!("no value for input `{name}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            out.push(r);
        }
        Ok(Stimulus { lines: pis, rows: out })
    }

    pub fn from_csv(c: &Circuit, reader: impl Read) -> Result<Self, SimError> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let header = rdr.headers()?.clone();
        let pis = c.primary_inputs();
        let mut cols = Vec::with_capacity(pis.len());
        for &i in &pis {
            let name = &c.lines[i].name;
            let col = header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| SimError::Stimulus(format!("missing column for input `{name}`")))?;
            cols.push(col);
        }
        if let Some(extra) = header.iter().find(|h| !pis.iter().any(|&i| c.lines[i].name == *h)) {
            return Err(SimError::Stimulus(format!("column `{extra}` is not a primary input")));
        }
        let mut rows = Vec::new();
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = cols
                .iter()
                .map(|&col| match rec.get(col) {
                    Some("0") => Ok(false),
                    Some("1") => Ok(true),
                    other => Err(SimError::Stimulus(format!("row {}: bad cell {:?}", r + 1, other))),
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Ok(Stimulus { lines: pis, rows })
    }

    pub fn cycles(&self) -> usize {
        self.rows.len()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Cycle {
    pub input: String,
    pub output: String,
    /// Register contents after this cycle, in feedback-binding order.
    pub registers: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CycleState {
    pub input: BitVec,
    pub output: BitVec,
    pub registers: BitVec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub cycles: Vec<CycleState>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Output value of `line` at every cycle.
    pub fn output_bits(&self, line: usize) -> Vec<bool> {
        self.cycles.iter().map(|c| c.output.get(line)).collect()
    }

    pub fn write_csv(&self, c: &Circuit, w: impl Write) -> Result<(), SimError> {
        let mut wtr = csv::Writer::from_writer(w);
        let mut header = vec!["cycle".to_string()];
        header.extend(c.lines.iter().map(|l| format!("in.{}", l.name)));
        header.extend(c.lines.iter().map(|l| format!("out.{}", l.name)));
        wtr.write_record(&header)?;
        for (t, cy) in self.cycles.iter().enumerate() {
            let mut rec = vec![t.to_string()];
            rec.extend(cy.input.bits().iter().map(|&b| (b as u8).to_string()));
            rec.extend(cy.output.bits().iter().map(|&b| (b as u8).to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn summary(&self) -> Vec<Cycle> {
        self.cycles
            .iter()
            .map(|c| Cycle {
                input: c.input.to_string(),
                output: c.output.to_string(),
                registers: c.registers.to_string(),
            })
            .collect()
    }
}

pub fn run_sequential(c: &Circuit, s: &Stimulus) -> Result<Trace, SimError> {
    run_sequential_with(c, s, None, |_| Vec::new())
}

/// Sequential run with an optional register override and a per-cycle fault schedule.
pub fn run_sequential_with(
    c: &Circuit,
    s: &Stimulus,
    init: Option<&BitVec>,
    faults_at: impl Fn(usize) -> Vec<FaultSpec>,
) -> Result<Trace, SimError> {
    if s.lines != c.primary_inputs() {
        return Err(SimError::Stimulus("stimulus columns do not match the circuit's primary inputs".into()));
    }
    let mut regs = match init {
        Some(v) => v.clone(),
        None => c.init_state(),
    };
    if regs.width() != c.feedbacks.len() {
        return Err(SimError::Width { expected: c.feedbacks.len(), got: regs.width() });
    }
    let mut base = vec![false; c.width()];
    for (i, l) in c.lines.iter().enumerate() {
        if let InputRole::Constant(v) = l.input {
            base[i] = v;
        }
    }
    let mut cycles = Vec::with_capacity(s.rows.len());
    for (t, row) in s.rows.iter().enumerate() {
        let mut state = base.clone();
        for (&line, &v) in s.lines.iter().zip(row) {
            state[line] = v;
        }
        for (k, fb) in c.feedbacks.iter().enumerate() {
            state[fb.sink] = regs.get(k);
        }
        let input = BitVec::from_bits(state.clone());
        cascade(c, &mut state, &faults_at(t));
        for (k, fb) in c.feedbacks.iter().enumerate() {
            regs.set(k, state[fb.source]);
        }
        cycles.push(CycleState { input, output: BitVec::from_bits(state), registers: regs.clone() });
    }
    Ok(Trace { cycles })
}

/// Combinational view: every feedback sink becomes a primary input and every source a
/// primary output.
pub fn break_feedback(c: &Circuit) -> Circuit {
    let mut out = c.clone();
    for fb in &c.feedbacks {
        out.lines[fb.sink].input = InputRole::Primary;
        out.lines[fb.source].output = OutputRole::Primary;
    }
    out.feedbacks.clear();
    out.init = None;
    out
}

impl FaultKind {
    #[inline]
    pub fn apply(self, v: bool) -> bool {
        match self {
            FaultKind::StuckAt(p) => p,
            FaultKind::BitFlip => !v,
        }
    }
}
