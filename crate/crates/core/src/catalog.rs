//! Ready-made designs. Port wiring is chosen so each circuit satisfies its oracle; the
//! comments give the value each line carries after the cascade.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::gatelib::{BitVec, Builtin, HwComplexity};
use crate::metrics::{compute_metrics, divergences, Divergence, MetricsReport, ReferenceData};
use crate::netlist::{serialize, Circuit, InputRole, OutputRole};

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("unknown catalog entry `{0}`")]
    Unknown(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub const NAMES: [&str; 18] = [
    "d_ff_pos",
    "d_ff_neg",
    "d_ff_pos_qbar",
    "d_ff_neg_qbar",
    "rs_ff",
    "jk_ff",
    "t_ff",
    "ft_t_ff",
    "ft_jk_ff",
    "ft_rs_ff",
    "ms_d_ff",
    "det_d_ff",
    "sipo_4",
    "piso_4",
    "johnson_4",
    "offline_d_ff_pos",
    "offline_d_ff_neg",
    "online_d_ff_pos",
];

/// Behavioural reference each design is checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Q+ = D·CLK + CLK′·Q
    DPositive,
    /// Q+ = D·CLK′ + CLK·Q
    DNegative,
    /// Q+ = S·CLK + (R·CLK)′·Q, S=R=CLK=1 excluded
    Rs,
    /// Q+ = (J·Q′ + K′·Q)·CLK + CLK′·Q
    Jk,
    /// Q+ = (T⊕Q)·CLK + CLK′·Q
    T,
    /// Q+ = (T·CLK)⊕Q
    TXor,
    /// Master loads while CLK=1, slave copies master while CLK=0.
    MasterSlave,
    /// After every CLK level change the output equals D of the previous cycle.
    DoubleEdge,
    SerialInParallelOut,
    ParallelInSerialOut,
    JohnsonCounter,
}

#[derive(Clone, Debug, Serialize)]
pub struct CatalogEntry {
    pub name: &'static str,
    #[serde(skip)]
    pub circuit: Circuit,
    pub expected_metrics: MetricsReport,
    /// Reference-data keys whose proposed rows describe this design.
    pub tables: Vec<&'static str>,
    /// Differences between computed and expected metrics; non-empty means documented.
    pub divergences: Vec<Divergence>,
    pub oracle: Oracle,
    pub parity_preserving: bool,
}

const P: InputRole = InputRole::Primary;
const K0: InputRole = InputRole::Constant(false);
const K1: InputRole = InputRole::Constant(true);
const S: InputRole = InputRole::FeedbackSink;
const O: OutputRole = OutputRole::Primary;
const G: OutputRole = OutputRole::Garbage;
const F: OutputRole = OutputRole::FeedbackSource;

struct Build(Circuit);

impl Build {
    fn new(name: &str) -> Self {
        Build(Circuit::new(name))
    }

    fn line(&mut self, name: &str, i: InputRole, o: OutputRole) -> usize {
        self.0.add_line(name, i, o)
    }

    fn g(&mut self, gate: Builtin, lines: &[usize]) -> &mut Self {
        self.0.add_gate(gate, lines);
        self
    }

    fn fb(&mut self, source: usize, sink: usize) -> &mut Self {
        self.0.add_feedback(source, sink);
        self
    }
}

fn d_ff(name: &str, positive: bool, qbar: bool) -> Circuit {
    let mut b = Build::new(name);
    let clk = b.line("clk", P, G);
    // Positive: q carries Q+ out of the Pareek's Q port. Negative: data and state swap
    // ports, so Q+ appears on the data line.
    let q = b.line("q", S, if positive { O } else { G });
    let z = b.line("z", K0, F);
    let d = b.line("d", P, if positive { G } else { O });
    if positive {
        b.g(Builtin::Pareek, &[clk, q, z, d]);
    } else {
        b.g(Builtin::Pareek, &[clk, d, z, q]);
    }
    b.fb(z, q);
    if qbar {
        // z stays Q+, k becomes Q+′, the spare S output absorbs the third port.
        let k = b.line("k", K1, O);
        let spare = if positive { d } else { q };
        b.g(Builtin::F2g, &[z, k, spare]);
    }
    b.0
}

fn rs_ff() -> Circuit {
    let mut b = Build::new("rs_ff");
    let clk = b.line("clk", P, G);
    let s = b.line("s", P, O);
    let r = b.line("r", P, G);
    let q = b.line("q", S, G);
    let c1 = b.line("c1", K0, G);
    let c2 = b.line("c2", K0, F);
    // r = S⊕R; c1 = (CLK·(S⊕R))′ selects hold; s = Q+.
    b.g(Builtin::Cnot, &[s, r])
        .g(Builtin::Toffoli, &[clk, r, c1])
        .g(Builtin::Not, &[c1])
        .g(Builtin::Pareek, &[c1, s, c2, q])
        .fb(c2, q);
    b.0
}

fn jk_ff() -> Circuit {
    let mut b = Build::new("jk_ff");
    let clk = b.line("clk", P, G);
    let j = b.line("j", P, G);
    let k = b.line("k", P, G);
    let q = b.line("q", S, G);
    let c = b.line("c", K0, F);
    let out = b.line("out", K0, O);
    // k = K′; j = J·Q′ + K′·Q; q and c = Q+; out is the fan-out copy of Q+.
    b.g(Builtin::Not, &[k])
        .g(Builtin::Fredkin, &[q, j, k])
        .g(Builtin::Pareek, &[clk, q, c, j])
        .g(Builtin::Cnot, &[c, out])
        .fb(c, q);
    b.0
}

fn t_ff() -> Circuit {
    let mut b = Build::new("t_ff");
    let clk = b.line("clk", P, G);
    let t = b.line("t", P, G);
    let q = b.line("q", S, O);
    let c = b.line("c", K0, F);
    // t = T⊕Q; q and c = Q+.
    b.g(Builtin::Cnot, &[q, t]).g(Builtin::Pareek, &[clk, q, c, t]).fb(c, q);
    b.0
}

fn ft_t_ff() -> Circuit {
    let mut b = Build::new("ft_t_ff");
    let clk = b.line("clk", P, O);
    let t = b.line("t", P, G);
    let q = b.line("q", S, O);
    let c1 = b.line("c1", K0, G);
    let c2 = b.line("c2", K0, F);
    // c1 = CLK·T; q = CLK·T⊕Q = Q+; then c1 = Q (old) and c2 = Q+.
    b.g(Builtin::Pareek, &[clk, c1, q, t]).g(Builtin::F2g, &[q, c1, c2]).fb(c2, q);
    b.0
}

fn ft_jk_ff() -> Circuit {
    let mut b = Build::new("ft_jk_ff");
    let clk = b.line("clk", P, G);
    let j = b.line("j", P, G);
    let k = b.line("k", P, G);
    let q = b.line("q", S, G);
    let k1 = b.line("k1", K1, G);
    let k0 = b.line("k0", K0, G);
    let c = b.line("c", K0, F);
    let z1 = b.line("z1", K0, O);
    let z2 = b.line("z2", K1, O);
    // k1 = K′; j = J·Q′ + K′·Q; c = Q+; z1 = Q+, z2 = Q+′.
    b.g(Builtin::Fredkin, &[k, k1, k0])
        .g(Builtin::Fredkin, &[q, j, k1])
        .g(Builtin::Pareek, &[clk, q, c, j])
        .g(Builtin::F2g, &[c, z1, z2])
        .fb(c, q);
    b.0
}

fn ft_rs_ff() -> Circuit {
    let mut b = Build::new("ft_rs_ff");
    let clk = b.line("clk", P, G);
    let s = b.line("s", P, G);
    let r = b.line("r", P, G);
    let q1 = b.line("q1", S, G);
    let q2 = b.line("q2", S, O);
    let a = b.line("a", K0, G);
    let k = b.line("k", K1, G);
    let c = b.line("c", K0, F);
    let z1 = b.line("z1", K0, F);
    let z2 = b.line("z2", K1, O);
    // q1 = R′·Q, then S + R′·Q; q2 and c = Q+; z1 = Q+, z2 = Q+′. Two registers hold Q
    // because the Fredkins and the Pareek each consume a copy.
    b.g(Builtin::Fredkin, &[r, q1, a])
        .g(Builtin::Fredkin, &[s, q1, k])
        .g(Builtin::Pareek, &[clk, q2, c, q1])
        .g(Builtin::F2g, &[c, z1, z2])
        .fb(c, q1)
        .fb(z1, q2);
    b.0
}

fn ms_d_ff() -> Circuit {
    let mut b = Build::new("ms_d_ff");
    let clk = b.line("clk", P, G);
    let d = b.line("d", P, G);
    let qm = b.line("qm", S, F);
    let c1 = b.line("c1", K0, O);
    let qs = b.line("qs", S, G);
    let c2 = b.line("c2", K0, F);
    // qm = master+; c1 = CLK ? slave : master+ = slave+; c2 = slave+.
    b.g(Builtin::Pareek, &[clk, qm, c1, d]).g(Builtin::Pareek, &[clk, c1, c2, qs]).fb(qm, qm).fb(c2, qs);
    b.0
}

fn det_d_ff() -> Circuit {
    let mut b = Build::new("det_d_ff");
    let clk = b.line("clk", P, G);
    let d = b.line("d", P, F);
    let p = b.line("p", S, O);
    let n = b.line("n", S, G);
    let a = b.line("a", K0, G);
    let x = b.line("x", K0, F);
    let c = b.line("c", K0, G);
    let e = b.line("e", K0, G);
    // p = CLK′·P, x = CLK·N, then p = CLK ? N : P (the output); finally d = CLK ? N : D
    // and x = CLK ? D : P, the next N and P.
    b.g(Builtin::Fredkin, &[clk, p, a])
        .g(Builtin::Pareek, &[clk, x, c, n])
        .g(Builtin::Pareek, &[clk, p, e, x])
        .g(Builtin::Fredkin, &[clk, d, x])
        .fb(d, n)
        .fb(x, p);
    b.0
}

/// Shared body of the SIPO register and the Johnson counter: stage i is a Pareek
/// flip-flop on (q_i, c_i, d_i) and a CNOT copies Q_i+ towards stage i+1.
fn shift_chain(name: &str, ring: bool) -> Circuit {
    let mut b = Build::new(name);
    let clk = b.line("clk", P, G);
    let si = (!ring).then(|| b.line("si", P, G));
    let q: Vec<usize> = (1..=4).map(|i| b.line(&format!("q{i}"), S, O)).collect();
    let c: Vec<usize> = (1..=4).map(|i| b.line(&format!("c{i}"), K0, F)).collect();
    let copies = if ring { 4 } else { 3 };
    let k: Vec<usize> = (1..=copies).map(|i| b.line(&format!("k{i}"), if i == 4 { K1 } else { K0 }, F)).collect();
    let first = usize::from(!ring) + 1;
    let mut d: Vec<usize> = (first..=4).map(|i| b.line(&format!("d{i}"), S, G)).collect();
    if let Some(si) = si {
        d.insert(0, si);
    }
    for i in 0..4 {
        b.g(Builtin::Pareek, &[clk, q[i], c[i], d[i]]);
    }
    for i in 0..copies {
        b.g(Builtin::Cnot, &[c[i], k[i]]);
    }
    for i in 0..4 {
        b.fb(c[i], q[i]);
    }
    for i in 0..3 {
        b.fb(k[i], d[i + 1]);
    }
    if ring {
        // k4 = Q4+′ closes the ring; its register starts at 1 so the power-on state
        // reads 0000 consistently.
        b.fb(k[3], d[0]);
        let mut init = BitVec::zeros(8);
        init.set(7, true);
        b.0.init = Some(init);
    }
    b.0
}

fn piso_4() -> Circuit {
    let mut b = Build::new("piso_4");
    let clk = b.line("clk", P, G);
    let en = b.line("en", K1, G);
    let si = b.line("si", P, G);
    let prev: Vec<usize> = (2..=4).map(|i| b.line(&format!("p{i}"), S, G)).collect();
    let data: Vec<usize> = (1..=4).map(|i| b.line(&format!("i{i}"), P, if i == 4 { G } else { F })).collect();
    let out: Vec<usize> = (1..=4).map(|i| b.line(&format!("c{i}"), K0, O)).collect();
    let mut p = vec![si];
    p.extend(&prev);
    // Per stage: p_i = CLK ? I_i : Q_{i-1}, then an always-enabled Pareek latches it so
    // that i_i and c_i both carry Q_i+.
    for i in 0..4 {
        b.g(Builtin::Fredkin, &[clk, p[i], data[i]]);
        b.g(Builtin::Pareek, &[en, data[i], out[i], p[i]]);
    }
    for i in 0..3 {
        b.fb(data[i], prev[i]);
    }
    b.0
}

fn offline_d_ff(positive: bool) -> Circuit {
    let name = if positive { "offline_d_ff_pos" } else { "offline_d_ff_neg" };
    let mut b = Build::new(name);
    let clk = b.line("clk", P, G);
    let q = b.line("q", S, if positive { F } else { G });
    let c = b.line("c", K0, O);
    let d = b.line("d", P, if positive { G } else { F });
    let c1 = b.line("c1", K0, O);
    let c2 = b.line("c2", K1, G);
    if positive {
        b.g(Builtin::Pareek, &[clk, q, c, d]).fb(q, q);
    } else {
        b.g(Builtin::Pareek, &[clk, d, c, q]).fb(d, q);
    }
    // c keeps Q+; c1 = Q+′·C1 + Q+·C2, i.e. Q+ in normal mode (C1C2 = 01) and the
    // constant C1 when C1 = C2.
    b.g(Builtin::Fredkin, &[c, c1, c2]);
    b.0
}

fn online_d_ff_pos() -> Circuit {
    let mut b = Build::new("online_d_ff_pos");
    let clk = b.line("clk", P, G);
    let q = b.line("q", S, O);
    let z = b.line("z", K0, F);
    let t = b.line("t", P, O);
    let l = b.line("l", K0, G);
    // l = Q⊕R⊕S, then t = S⊕l, which is 0 unless one of Q, R was corrupted.
    b.g(Builtin::Pareek, &[clk, q, z, t])
        .g(Builtin::Cnot, &[q, l])
        .g(Builtin::Cnot, &[z, l])
        .g(Builtin::Cnot, &[t, l])
        .g(Builtin::Cnot, &[l, t])
        .fb(z, q);
    b.0.test_line = Some(t);
    b.0
}

fn circuit(name: &str) -> Option<Circuit> {
    Some(match name {
        "d_ff_pos" => d_ff(name, true, false),
        "d_ff_neg" => d_ff(name, false, false),
        "d_ff_pos_qbar" => d_ff(name, true, true),
        "d_ff_neg_qbar" => d_ff(name, false, true),
        "rs_ff" => rs_ff(),
        "jk_ff" => jk_ff(),
        "t_ff" => t_ff(),
        "ft_t_ff" => ft_t_ff(),
        "ft_jk_ff" => ft_jk_ff(),
        "ft_rs_ff" => ft_rs_ff(),
        "ms_d_ff" => ms_d_ff(),
        "det_d_ff" => det_d_ff(),
        "sipo_4" => shift_chain(name, false),
        "piso_4" => piso_4(),
        "johnson_4" => shift_chain(name, true),
        "offline_d_ff_pos" => offline_d_ff(true),
        "offline_d_ff_neg" => offline_d_ff(false),
        "online_d_ff_pos" => online_d_ff_pos(),
        _ => return None,
    })
}

fn tables(name: &str) -> Vec<&'static str> {
    match name {
        "d_ff_pos" => vec!["d_ff", "ft_d_ff_pos"],
        "d_ff_neg" => vec!["ft_d_ff_neg"],
        "rs_ff" => vec!["rs_ff"],
        "jk_ff" => vec!["jk_ff"],
        "t_ff" => vec!["t_ff"],
        "ft_t_ff" => vec!["ft_t_ff"],
        "ft_jk_ff" => vec!["ft_jk_ff"],
        "ft_rs_ff" => vec!["ft_rs_ff"],
        "ms_d_ff" => vec!["ms_d_ff"],
        "det_d_ff" => vec!["det_d_ff"],
        "sipo_4" => vec!["sipo_4"],
        "piso_4" => vec!["piso_4"],
        "johnson_4" => vec!["johnson_4"],
        "offline_d_ff_pos" => vec!["offline_d_ff_pos"],
        _ => vec![],
    }
}

/// Hand-counted metrics for designs without a published row.
fn unpublished(name: &str) -> Option<MetricsReport> {
    Some(match name {
        "d_ff_pos_qbar" | "d_ff_neg_qbar" => MetricsReport::new(2, 2, 2, 9, HwComplexity::new(5, 2, 1)),
        "offline_d_ff_neg" => MetricsReport::new(2, 3, 3, 12, HwComplexity::new(5, 6, 2)),
        "online_d_ff_pos" => MetricsReport::new(5, 2, 2, 11, HwComplexity::new(7, 2, 1)),
        _ => return None,
    })
}

fn oracle(name: &str) -> Oracle {
    match name {
        "d_ff_pos" | "d_ff_pos_qbar" | "offline_d_ff_pos" | "online_d_ff_pos" => Oracle::DPositive,
        "d_ff_neg" | "d_ff_neg_qbar" | "offline_d_ff_neg" => Oracle::DNegative,
        "rs_ff" | "ft_rs_ff" => Oracle::Rs,
        "jk_ff" | "ft_jk_ff" => Oracle::Jk,
        "t_ff" => Oracle::T,
        "ft_t_ff" => Oracle::TXor,
        "ms_d_ff" => Oracle::MasterSlave,
        "det_d_ff" => Oracle::DoubleEdge,
        "sipo_4" => Oracle::SerialInParallelOut,
        "piso_4" => Oracle::ParallelInSerialOut,
        _ => Oracle::JohnsonCounter,
    }
}

pub fn build(name: &str) -> Result<CatalogEntry, CatalogError> {
    let (name, circuit) = NAMES
        .iter()
        .find(|n| **n == name)
        .and_then(|n| circuit(n).map(|c| (*n, c)))
        .ok_or_else(|| CatalogError::Unknown(name.to_string()))?;
    let refs = ReferenceData::bundled();
    let tables = tables(name);
    let expected = tables
        .first()
        .and_then(|t| refs.proposed(t))
        .map(|r| r.metrics())
        .or_else(|| unpublished(name))
        .expect("every entry has expected metrics");
    let computed = compute_metrics(&circuit);
    Ok(CatalogEntry {
        name,
        divergences: divergences(&computed, &expected),
        parity_preserving: circuit.all_parity_preserving(),
        expected_metrics: expected,
        tables,
        oracle: oracle(name),
        circuit,
    })
}

pub fn all() -> Vec<CatalogEntry> {
    NAMES.iter().map(|n| build(n).expect("catalog names are buildable")).collect()
}

#[derive(Serialize)]
struct IndexEntry {
    file: String,
    expected_metrics: MetricsReport,
    oracle: Oracle,
    divergences: Vec<Divergence>,
}

/// Writes `<name>.rev` for every entry plus `index.json`; returns the circuit files.
pub fn emit_all(dir: &Path) -> Result<Vec<PathBuf>, CatalogError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    let mut index = BTreeMap::new();
    for e in all() {
        let file = format!("{}.rev", e.name);
        let path = dir.join(&file);
        fs::write(&path, serialize(&e.circuit))?;
        files.push(path);
        index.insert(
            e.name,
            IndexEntry { file, expected_metrics: e.expected_metrics, oracle: e.oracle, divergences: e.divergences },
        );
    }
    fs::write(dir.join("index.json"), serde_json::to_string_pretty(&index)? + "\n")?;
    Ok(files)
}
