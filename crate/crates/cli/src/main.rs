//! `revseq` command-line front end. Exit status: 0 success, 1 failing analysis verdict,
//! 2 usage, parse or I/O error. Diagnostics go to stderr; stdout is deterministic.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use revseq::catalog;
use revseq::fault::{
    self, enumerate_faults, evaluate_test_set, free_lines, minimal_complete_test_set, online_check, FaultModel,
    FaultSpec, MinimalTestSet, Verdict, EXHAUSTIVE_LIMIT,
};
use revseq::gatelib::BitVec;
use revseq::metrics::{self, compute_metrics, ReferenceData};
use revseq::netlist::{self, Circuit};
use revseq::qcost::{self, budget_from_env};
use revseq::sim::{self, break_feedback, Stimulus};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "revseq", version, about = "Reversible sequential logic workbench")]
struct Cli {
    /// Emit JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Reversibility, parity and conservativeness per gate and for the circuit.
    Check { file: PathBuf },
    /// Truth table over every non-constant input assignment.
    Truth {
        file: PathBuf,
        /// Treat feedback sinks as inputs and sources as outputs.
        #[arg(long)]
        break_feedback: bool,
    },
    /// Cycle-by-cycle sequential simulation.
    Sim {
        file: PathBuf,
        #[arg(long)]
        stimulus: PathBuf,
        /// Run only the first N stimulus rows.
        #[arg(long)]
        cycles: Option<usize>,
        /// Register contents at cycle 0, one bit per feedback binding.
        #[arg(long)]
        init: Option<String>,
        /// Write the full line trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Gate count, garbage, constants, quantum cost and hardware complexity.
    Metrics {
        file: PathBuf,
        /// Reference rows (JSON keyed by design); defaults to the bundled set.
        #[arg(long)]
        refs: Option<PathBuf>,
        /// Reference key to compare against; defaults to the catalog mapping or circuit name.
        #[arg(long)]
        design: Option<String>,
    },
    /// Primitive decomposition and optimized quantum cost.
    Qcost {
        file: PathBuf,
        #[arg(long)]
        optimize: bool,
        /// Search budget in expanded states; overrides REVSEQ_BUDGET.
        #[arg(long)]
        budget: Option<usize>,
        /// Also print the primitive sequence.
        #[arg(long)]
        sequence: bool,
        #[arg(long)]
        break_feedback: bool,
    },
    /// Fault campaigns: coverage of a test set, minimal test set, or online detection.
    Faults {
        file: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// One vector per line, full width, `#` comments allowed.
        #[arg(long, conflicts_with_all = ["minimal", "online"])]
        testset: Option<PathBuf>,
        #[arg(long, conflicts_with = "online")]
        minimal: bool,
        /// Per-cycle verdicts from the circuit's test line.
        #[arg(long, requires = "stimulus")]
        online: bool,
        #[arg(long)]
        stimulus: Option<PathBuf>,
        /// Single fault site `gate:port:in|out:sa0|sa1|flip`.
        #[arg(long)]
        inject: Option<String>,
        /// With --online and --inject, inject only in this cycle.
        #[arg(long, requires = "inject")]
        at_cycle: Option<usize>,
        /// Comma-separated constant lines to drive as inputs (test mode).
        #[arg(long, value_delimiter = ',')]
        free: Vec<String>,
        /// Write the fault-by-vector detection matrix as CSV.
        #[arg(long)]
        matrix: Option<PathBuf>,
        #[arg(long)]
        break_feedback: bool,
    },
    /// Bundled designs.
    Catalog {
        #[command(subcommand)]
        action: CatalogAction,
    },
}

#[derive(Subcommand)]
enum CatalogAction {
    List,
    Emit { dir: PathBuf },
    Show { name: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Stuck,
    Flip,
}

impl From<Model> for FaultModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Stuck => FaultModel::StuckAt,
            Model::Flip => FaultModel::BitFlip,
        }
    }
}

/// Rendered output plus whether the analysis verdict passed.
struct Report {
    text: String,
    json: Value,
    pass: bool,
}

impl Report {
    fn ok(text: String, json: Value) -> Self {
        Report { text, json, pass: true }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli.verb) {
        Ok(r) => {
            let out = if cli.json {
                serde_json::to_string_pretty(&r.json).expect("json values serialize") + "\n"
            } else {
                r.text
            };
            // A closed pipe (e.g. `| head`) is not an error worth reporting.
            let _ = io::stdout().lock().write_all(out.as_bytes());
            if r.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Circuit> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    netlist::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn combinational(c: Circuit, brk: bool) -> Result<Circuit> {
    match (c.is_combinational(), brk) {
        (true, _) => Ok(c),
        (false, true) => Ok(break_feedback(&c)),
        (false, false) => bail!("circuit `{}` has feedback; pass --break-feedback", c.name),
    }
}

fn run(verb: &Verb) -> Result<Report> {
    match verb {
        Verb::Check { file } => check(&load(file)?),
        Verb::Truth { file, break_feedback } => truth(&combinational(load(file)?, *break_feedback)?),
        Verb::Sim { file, stimulus, cycles, init, trace } => {
            simulate(&load(file)?, stimulus, *cycles, init.as_deref(), trace.as_deref())
        }
        Verb::Metrics { file, refs, design } => metrics_report(&load(file)?, refs.as_deref(), design.as_deref()),
        Verb::Qcost { file, optimize, budget, sequence, break_feedback } => {
            qcost_report(&combinational(load(file)?, *break_feedback)?, *optimize, *budget, *sequence)
        }
        Verb::Faults {
            file,
            model,
            testset,
            minimal,
            online,
            stimulus,
            inject,
            at_cycle,
            free,
            matrix,
            break_feedback,
        } => {
            let mut c = load(file)?;
            let site = inject.as_deref().map(|s| s.parse::<FaultSpec>().map_err(|e| anyhow!(e))).transpose()?;
            if *online {
                let stim = stimulus.as_deref().expect("clap enforces --stimulus");
                return online_report(&c, stim, site, *at_cycle);
            }
            c = combinational(c, *break_feedback)?;
            if !free.is_empty() {
                let lines = free
                    .iter()
                    .map(|n| c.line_index(n).ok_or_else(|| anyhow!("no line named `{n}`")))
                    .collect::<Result<Vec<_>>>()?;
                c = free_lines(&c, &lines);
            }
            let model = FaultModel::from(*model);
            if *minimal {
                minimal_report(&c, model)
            } else {
                coverage(&c, model, testset.as_deref(), site, matrix.as_deref())
            }
        }
        Verb::Catalog { action } => catalog_report(action),
    }
}

fn check(c: &Circuit) -> Result<Report> {
    let violations = c.validate();
    if !violations.is_empty() {
        bail!("invalid circuit: {}", violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "));
    }
    let mut text = String::new();
    let mut gates = Vec::new();
    for (i, g) in c.gates.iter().enumerate() {
        let k = g.gate.kind();
        let (r, p, cons) = (k.is_reversible(), k.is_parity_preserving(), k.is_conservative());
        let _ = writeln!(text, "gate {i} {} reversible={r} parity_preserving={p} conservative={cons}", g.gate.name());
        gates.push(
            json!({"index": i, "gate": g.gate.name(), "reversible": r, "parity_preserving": p, "conservative": cons}),
        );
    }
    let all = |f: fn(&revseq::gatelib::GateKind) -> bool| c.gates.iter().all(|g| f(g.gate.kind()));
    let (r, p, cons) = (all(|k| k.is_reversible()), all(|k| k.is_parity_preserving()), all(|k| k.is_conservative()));
    let _ = writeln!(text, "circuit {} reversible={r} parity_preserving={p} conservative={cons}", c.name);
    let json = json!({
        "verb": "check",
        "circuit": c.name,
        "gates": gates,
        "reversible": r,
        "parity_preserving": p,
        "conservative": cons,
    });
    Ok(Report::ok(text, json))
}

fn truth(c: &Circuit) -> Result<Report> {
    let free = c.width() - c.constant_lines().len();
    if free > EXHAUSTIVE_LIMIT {
        bail!("{free} free inputs exceed the truth-table limit of {EXHAUSTIVE_LIMIT}");
    }
    let names: Vec<&str> = c.lines.iter().map(|l| l.name.as_str()).collect();
    let mut text = format!("# {}\n", names.join(" "));
    let mut rows = Vec::new();
    for v in sim::input_space(c) {
        let out = sim::eval_combinational(c, &v)?;
        let _ = writeln!(text, "{v} -> {out}");
        rows.push(json!({"input": v.to_string(), "output": out.to_string()}));
    }
    Ok(Report::ok(text, json!({"verb": "truth", "circuit": c.name, "lines": names, "rows": rows})))
}

fn read_stimulus(c: &Circuit, path: &Path) -> Result<Stimulus> {
    let f = fs::File::open(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Stimulus::from_csv(c, f)?)
}

fn simulate(
    c: &Circuit,
    stim: &Path,
    cycles: Option<usize>,
    init: Option<&str>,
    trace: Option<&Path>,
) -> Result<Report> {
    let mut s = read_stimulus(c, stim)?;
    if let Some(n) = cycles {
        if n > s.cycles() {
            bail!("--cycles {n} exceeds the {} stimulus rows", s.cycles());
        }
        s.rows.truncate(n);
    }
    let init = init.map(|b| b.parse::<BitVec>().map_err(|e| anyhow!("--init: {e}"))).transpose()?;
    let t = sim::run_sequential_with(c, &s, init.as_ref(), |_| Vec::new())?;
    if let Some(path) = trace {
        let f = fs::File::create(path).with_context(|| format!("writing {}", path.display()))?;
        t.write_csv(c, f)?;
    }
    let summary = t.summary();
    let mut text = String::from("cycle input output registers\n");
    for (i, cy) in summary.iter().enumerate() {
        let _ = writeln!(
            text,
            "{i} {} {} {}",
            cy.input,
            cy.output,
            if cy.registers.is_empty() { "-" } else { &cy.registers }
        );
    }
    let lines: Vec<&str> = c.lines.iter().map(|l| l.name.as_str()).collect();
    Ok(Report::ok(text, json!({"verb": "sim", "circuit": c.name, "lines": lines, "cycles": summary})))
}

fn metrics_report(c: &Circuit, refs: Option<&Path>, design: Option<&str>) -> Result<Report> {
    let data = match refs {
        Some(p) => {
            ReferenceData::from_json(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)?
        }
        None => ReferenceData::bundled(),
    };
    let entry = catalog::build(&c.name).ok();
    let key = design
        .map(str::to_string)
        .or_else(|| entry.as_ref().and_then(|e| e.tables.first()).map(|t| t.to_string()))
        .unwrap_or_else(|| c.name.clone());
    let report = compute_metrics(c);
    let lit = data.literature(&key);
    let mut text = metrics::render_table(&metrics::table_rows(&c.name, &report, &lit));
    let expected = data.proposed(&key).map(|r| r.metrics()).or(entry.as_ref().map(|e| e.expected_metrics));
    let divergences = expected.map(|e| metrics::divergences(&report, &e)).unwrap_or_default();
    for d in &divergences {
        let _ = writeln!(text, "divergence {}: computed {} expected {}", d.field, d.computed, d.expected);
    }
    let json = json!({
        "verb": "metrics",
        "circuit": c.name,
        "reference": key,
        "metrics": report,
        "comparisons": metrics::compare(&report, &lit),
        "divergences": divergences,
    });
    Ok(Report::ok(text, json))
}

fn qcost_report(c: &Circuit, optimize: bool, budget: Option<usize>, sequence: bool) -> Result<Report> {
    let seq = qcost::decompose(c)?;
    let raw = seq.raw_cost();
    let mut json = json!({"verb": "qcost", "circuit": c.name, "raw": raw});
    let (mut text, shown) = if optimize {
        let budget = budget.unwrap_or_else(budget_from_env);
        if budget == 0 {
            bail!("--budget must be positive");
        }
        let o = qcost::optimize(&seq, budget);
        json["optimized"] = json!(o.cost);
        json["budget"] = json!(budget);
        json["explored"] = json!(o.explored);
        json["budget_exhausted"] = json!(o.budget_exhausted);
        let mut t = format!("raw={raw} optimized={}\n", o.cost);
        if o.budget_exhausted {
            t.push_str("budget exhausted; best found shown\n");
        }
        (t, o.seq)
    } else {
        (format!("raw={raw}\n"), seq)
    };
    json["sequence"] = json!(shown.ops.iter().map(|p| p.to_string()).collect::<Vec<_>>());
    if sequence {
        text.push_str(&shown.to_text());
    }
    Ok(Report::ok(text, json))
}

fn read_vectors(path: &Path, width: usize) -> Result<Vec<BitVec>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let v = line.split('#').next().unwrap_or("").trim();
        if v.is_empty() {
            continue;
        }
        let bits: BitVec = v.parse().map_err(|e| anyhow!("{}:{}: {e}", path.display(), i + 1))?;
        if bits.width() != width {
            bail!("{}:{}: vector has {} bits, circuit has {width} lines", path.display(), i + 1, bits.width());
        }
        out.push(bits);
    }
    Ok(out)
}

fn coverage(
    c: &Circuit,
    model: FaultModel,
    testset: Option<&Path>,
    site: Option<FaultSpec>,
    matrix: Option<&Path>,
) -> Result<Report> {
    let vectors = match testset {
        Some(p) => read_vectors(p, c.width())?,
        None => {
            let free = c.width() - c.constant_lines().len();
            if free > EXHAUSTIVE_LIMIT {
                bail!("{free} free inputs exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}; pass --testset");
            }
            sim::input_space(c)
        }
    };
    let faults = match site {
        Some(f) => vec![f],
        None => enumerate_faults(c, model),
    };
    let r = evaluate_test_set(c, &vectors, &faults)?;
    if let Some(p) = matrix {
        fs::write(p, r.matrix_csv()?).with_context(|| format!("writing {}", p.display()))?;
    }
    let mut text = format!("detected {}/{} faults with {} vectors\n", r.detected_count(), faults.len(), vectors.len());
    for f in r.undetected_faults() {
        let _ = writeln!(text, "undetected {f}");
    }
    if let Some(f) = site {
        for v in &vectors {
            let _ = writeln!(text, "{v} good={} faulty={}", sim::eval_combinational(c, v)?, fault::inject(c, &f, v)?);
        }
    }
    let pass = r.is_complete();
    let _ = writeln!(text, "verdict {}", if pass { "complete" } else { "incomplete" });
    let json = json!({
        "verb": "faults",
        "mode": "coverage",
        "circuit": c.name,
        "complete": pass,
        "detected": r.detected_count(),
        "total": faults.len(),
        "vectors": vectors.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
        "undetected": r.undetected_faults(),
    });
    Ok(Report { text, json, pass })
}

fn minimal_report(c: &Circuit, model: FaultModel) -> Result<Report> {
    let m = minimal_complete_test_set(c, model)?;
    let mut text = String::new();
    for v in m.vectors() {
        let _ = writeln!(text, "{v}");
    }
    if let MinimalTestSet::Incomplete { undetectable, .. } = &m {
        for f in undetectable {
            let _ = writeln!(text, "undetectable {f}");
        }
    }
    let pass = m.is_complete();
    let _ = writeln!(text, "verdict {} size={}", if pass { "complete" } else { "incomplete" }, m.vectors().len());
    let mut json = serde_json::to_value(&m)?;
    json["verb"] = json!("faults");
    json["mode"] = json!("minimal");
    json["circuit"] = json!(c.name);
    Ok(Report { text, json, pass })
}

fn online_report(c: &Circuit, stim: &Path, site: Option<FaultSpec>, at: Option<usize>) -> Result<Report> {
    let s = read_stimulus(c, stim)?;
    if let Some(f) = site {
        if !f.is_valid_for(c) {
            bail!("fault site {f} does not exist in this circuit");
        }
    }
    let t = sim::run_sequential_with(c, &s, None, |cy| match (site, at) {
        (Some(f), None) => vec![f],
        (Some(f), Some(k)) if k == cy => vec![f],
        _ => Vec::new(),
    })?;
    let verdicts = online_check(c, &t)?;
    let mut text = String::new();
    for (i, v) in verdicts.iter().enumerate() {
        let _ = writeln!(text, "{i} {v}");
    }
    let pass = verdicts.iter().all(|v| *v == Verdict::NoFault);
    let json = json!({"verb": "faults", "mode": "online", "circuit": c.name, "verdicts": verdicts});
    Ok(Report { text, json, pass })
}

fn catalog_report(action: &CatalogAction) -> Result<Report> {
    match action {
        CatalogAction::List => {
            let mut text = String::new();
            let mut entries = Vec::new();
            for e in catalog::all() {
                let _ = writeln!(text, "{:<18} {}", e.name, e.expected_metrics);
                entries.push(serde_json::to_value(&e)?);
            }
            Ok(Report::ok(text, json!({"verb": "catalog", "action": "list", "entries": entries})))
        }
        CatalogAction::Emit { dir } => {
            let files = catalog::emit_all(dir)?;
            let text: String = files.iter().map(|f| format!("{}\n", f.display())).collect();
            let names: Vec<String> = files.iter().map(|f| f.display().to_string()).collect();
            Ok(Report::ok(text, json!({"verb": "catalog", "action": "emit", "files": names})))
        }
        CatalogAction::Show { name } => {
            let e = catalog::build(name)?;
            let text = netlist::serialize(&e.circuit);
            let mut json = serde_json::to_value(&e)?;
            json["verb"] = json!("catalog");
            json["action"] = json!("show");
            json["netlist"] = json!(text);
            Ok(Report::ok(text, json))
        }
    }
}
