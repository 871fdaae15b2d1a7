use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gatelib::HwComplexity;
use crate::netlist::{Circuit, InputRole, OutputRole};

pub const BUNDLED_REFERENCES: &str = include_str!("../data/reference.json");

/// Citation used for a table's own "Our Design" row in the reference data.
pub const PROPOSED: &str = "proposed";

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("improvement against an existing value of 0 is undefined")]
    UndefinedBaseline,
    #[error("reference data: {0}")]
    Data(#[from] serde_json::Error),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub gate_count: u32,
    pub garbage_outputs: u32,
    pub constant_inputs: u32,
    pub quantum_cost: u32,
    pub hw_complexity: HwComplexity,
}

impl MetricsReport {
    pub const fn new(gc: u32, go: u32, ci: u32, qc: u32, hc: HwComplexity) -> Self {
        MetricsReport { gate_count: gc, garbage_outputs: go, constant_inputs: ci, quantum_cost: qc, hw_complexity: hc }
    }
}

impl std::ops::Add for MetricsReport {
    type Output = MetricsReport;

    fn add(self, o: Self) -> Self {
        MetricsReport::new(
            self.gate_count + o.gate_count,
            self.garbage_outputs + o.garbage_outputs,
            self.constant_inputs + o.constant_inputs,
            self.quantum_cost + o.quantum_cost,
            self.hw_complexity + o.hw_complexity,
        )
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{{{}, {}, {}, {}, {}}}",
            self.gate_count, self.garbage_outputs, self.constant_inputs, self.quantum_cost, self.hw_complexity
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRow {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    pub citation: String,
    pub gc: u32,
    pub go: u32,
    pub ci: u32,
    pub qc: u32,
    pub hc: HwComplexity,
}

impl ReferenceRow {
    pub fn metrics(&self) -> MetricsReport {
        MetricsReport::new(self.gc, self.go, self.ci, self.qc, self.hc)
    }
}

/// Literature rows keyed by design name.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferenceData(pub BTreeMap<String, Vec<ReferenceRow>>);

impl ReferenceData {
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_REFERENCES).expect("bundled reference data is valid")
    }

    pub fn from_json(text: &str) -> Result<Self, MetricsError> {
        Ok(serde_json::from_str(text)?)
    }

    /// Rows for a design, excluding its own proposed row.
    pub fn literature(&self, design: &str) -> Vec<ReferenceRow> {
        self.0
            .get(design)
            .map(|rows| rows.iter().filter(|r| r.citation != PROPOSED).cloned().collect())
            .unwrap_or_default()
    }

    pub fn proposed(&self, design: &str) -> Option<&ReferenceRow> {
        self.0.get(design)?.iter().find(|r| r.citation == PROPOSED)
    }
}

pub fn compute_metrics(c: &Circuit) -> MetricsReport {
    MetricsReport {
        gate_count: c.gates.len() as u32,
        garbage_outputs: c.lines.iter().filter(|l| l.output == OutputRole::Garbage).count() as u32,
        constant_inputs: c.lines.iter().filter(|l| matches!(l.input, InputRole::Constant(_))).count() as u32,
        quantum_cost: c.gates.iter().map(|g| g.gate.quantum_cost()).sum(),
        hw_complexity: c.gates.iter().map(|g| g.gate.hw_complexity()).sum(),
    }
}

/// `100 - proposed/existing * 100`, kept as an exact fraction `num/den` of percent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Percent {
    num: i64,
    den: i64,
}

impl Percent {
    pub fn raw(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Half-up (towards +inf on ties) at `decimals` places, returned as scaled integer.
    pub fn round_half_up_scaled(self, decimals: u32) -> i64 {
        let scale = 10i64.pow(decimals);
        (2 * self.num * scale + self.den).div_euclid(2 * self.den)
    }

    pub fn truncate_scaled(self, decimals: u32) -> i64 {
        self.num * 10i64.pow(decimals) / self.den
    }

    pub fn round_half_up(self, decimals: u32) -> f64 {
        self.round_half_up_scaled(decimals) as f64 / 10f64.powi(decimals as i32)
    }

    /// True iff a printed cell like "91.6" or "85%" equals this value either rounded
    /// half-up or truncated at the printed number of decimals.
    pub fn matches_printed(self, printed: &str) -> bool {
        let s = printed.trim().trim_end_matches('%');
        let decimals = s.split_once('.').map_or(0, |(_, f)| f.len()) as u32;
        let Ok(scaled) = s.replace('.', "").parse::<i64>() else {
            return false;
        };
        scaled == self.round_half_up_scaled(decimals) || scaled == self.truncate_scaled(decimals)
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = self.round_half_up_scaled(1);
        if r % 10 == 0 {
            write!(f, "{}%", r / 10)
        } else {
            write!(f, "{:.1}%", self.round_half_up(1))
        }
    }
}

pub fn improvement(proposed: u32, existing: u32) -> Result<Percent, MetricsError> {
    if existing == 0 {
        return Err(MetricsError::UndefinedBaseline);
    }
    let e = existing as i64;
    Ok(Percent { num: 100 * (e - proposed as i64), den: e })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Improvement {
    pub raw: f64,
    /// Half-up at one decimal.
    pub rounded: f64,
}

impl From<Percent> for Improvement {
    fn from(p: Percent) -> Self {
        Improvement { raw: p.raw(), rounded: p.round_half_up(1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub citation: String,
    pub gate_count: Option<Improvement>,
    pub garbage_outputs: Option<Improvement>,
    pub constant_inputs: Option<Improvement>,
    pub quantum_cost: Option<Improvement>,
    pub hw_improved: bool,
}

pub fn compare(report: &MetricsReport, refs: &[ReferenceRow]) -> Vec<ComparisonRow> {
    let imp = |p: u32, e: u32| improvement(p, e).ok().map(Improvement::from);
    refs.iter()
        .map(|r| ComparisonRow {
            citation: r.citation.clone(),
            gate_count: imp(report.gate_count, r.gc),
            garbage_outputs: imp(report.garbage_outputs, r.go),
            constant_inputs: imp(report.constant_inputs, r.ci),
            quantum_cost: imp(report.quantum_cost, r.qc),
            hw_improved: report.hw_complexity.dominates(&r.hc),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Divergence {
    pub field: &'static str,
    pub computed: String,
    pub expected: String,
}

/// Fields where a computed report differs from a published one. HC differences are
/// reported per component.
pub fn divergences(computed: &MetricsReport, expected: &MetricsReport) -> Vec<Divergence> {
    let mut out = Vec::new();
    let mut check = |field: &'static str, c: u32, e: u32| {
        if c != e {
            out.push(Divergence { field, computed: c.to_string(), expected: e.to_string() });
        }
    };
    check("gate_count", computed.gate_count, expected.gate_count);
    check("garbage_outputs", computed.garbage_outputs, expected.garbage_outputs);
    check("constant_inputs", computed.constant_inputs, expected.constant_inputs);
    check("quantum_cost", computed.quantum_cost, expected.quantum_cost);
    let (c, e) = (computed.hw_complexity, expected.hw_complexity);
    check("hw_alpha", c.alpha, e.alpha);
    check("hw_beta", c.beta, e.beta);
    check("hw_delta", c.delta, e.delta);
    out
}

pub const TABLE_HEADER: [&str; 6] =
    ["Design", "Gate Count", "Garbage Output", "Constant Input", "Quantum Cost", "Hardware Complexity"];

fn cell(i: &Option<Improvement>) -> String {
    match i {
        Some(v) if v.rounded.fract() == 0.0 => format!("{}%", v.rounded as i64),
        Some(v) => format!("{:.1}%", v.rounded),
        None => "n/a".into(),
    }
}

/// Rows of a paper-style comparison table: literature rows, the design row, then one
/// improvement row per reference.
pub fn table_rows(name: &str, report: &MetricsReport, refs: &[ReferenceRow]) -> Vec<[String; 6]> {
    let metric_row = |label: String, m: &MetricsReport| {
        [
            label,
            m.gate_count.to_string(),
            m.garbage_outputs.to_string(),
            m.constant_inputs.to_string(),
            m.quantum_cost.to_string(),
            m.hw_complexity.to_string(),
        ]
    };
    let mut rows: Vec<[String; 6]> = refs.iter().map(|r| metric_row(r.citation.clone(), &r.metrics())).collect();
    rows.push(metric_row(name.to_string(), report));
    for c in compare(report, refs) {
        rows.push([
            format!("Improvement w.r.t. {}", c.citation),
            cell(&c.gate_count),
            cell(&c.garbage_outputs),
            cell(&c.constant_inputs),
            cell(&c.quantum_cost),
            if c.hw_improved { "Improved".into() } else { "Not improved".into() },
        ]);
    }
    rows
}

pub fn render_table(rows: &[[String; 6]]) -> String {
    let mut widths = TABLE_HEADER.map(str::len);
    for r in rows {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &[&str]| {
        let parts: Vec<String> = cells.iter().zip(widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&TABLE_HEADER);
    for r in rows {
        line(&r.iter().map(String::as_str).collect::<Vec<_>>());
    }
    out
}

pub fn table_csv(rows: &[[String; 6]]) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER)?;
    for r in rows {
        w.write_record(r)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
