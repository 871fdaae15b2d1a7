use std::collections::{BTreeSet, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::gatelib::{BitVec, Builtin};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InputRole {
    Primary,
    Constant(bool),
    FeedbackSink,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputRole {
    Primary,
    Garbage,
    FeedbackSource,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Line {
    pub name: String,
    pub input: InputRole,
    pub output: OutputRole,
}

/// `lines[i]` is the circuit line wired to gate port `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateInstance {
    pub gate: Builtin,
    pub lines: Vec<usize>,
}

/// Unit-delay register: the value on `source` after cycle t drives `sink` in cycle t+1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FeedbackBinding {
    pub source: usize,
    pub sink: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Circuit {
    pub name: String,
    pub lines: Vec<Line>,
    pub gates: Vec<GateInstance>,
    pub feedbacks: Vec<FeedbackBinding>,
    /// One bit per feedback binding, in binding order.
    pub init: Option<BitVec>,
    /// Line whose output carries an online-test verdict (1 = fault).
    pub test_line: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    OutOfRange { gate: usize, line: usize },
    ArityMismatch { gate: usize, expected: usize, got: usize },
    DuplicateLine { gate: usize, line: usize },
    DuplicateName { line: usize, name: String },
    RoleConflict { line: usize, reason: String },
    DanglingFeedback { binding: usize, line: usize },
    SharedSink { line: usize },
    SharedSource { line: usize },
    InitWidth { expected: usize, got: usize },
    BadTestLine { line: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { gate, line } => write!(f, "gate {gate}: line index {line} out of range"),
            Violation::ArityMismatch { gate, expected, got } => {
                write!(f, "gate {gate}: expected {expected} lines, got {got}")
            }
            Violation::DuplicateLine { gate, line } => write!(f, "gate {gate}: line {line} used twice"),
            Violation::DuplicateName { line, name } => write!(f, "line {line}: duplicate name `{name}`"),
            Violation::RoleConflict { line, reason } => write!(f, "line {line}: role conflict: {reason}"),
            Violation::DanglingFeedback { binding, line } => {
                write!(f, "feedback {binding}: line {line} out of range")
            }
            Violation::SharedSink { line } => write!(f, "line {line}: sink of more than one feedback"),
            Violation::SharedSource { line } => write!(f, "line {line}: source of more than one feedback"),
            Violation::InitWidth { expected, got } => write!(f, ".init has {got} bits, expected {expected}"),
            Violation::BadTestLine { line } => write!(f, "test line {line} is not a primary output"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{line}: unknown gate token `{token}`")]
    UnknownGate { line: usize, token: String },
    #[error("invalid circuit: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

impl Circuit {
    pub fn new(name: impl Into<String>) -> Self {
        Circuit { name: name.into(), ..Default::default() }
    }

    pub fn add_line(&mut self, name: impl Into<String>, input: InputRole, output: OutputRole) -> usize {
        self.lines.push(Line { name: name.into(), input, output });
        self.lines.len() - 1
    }

    pub fn add_gate(&mut self, gate: Builtin, lines: &[usize]) -> &mut Self {
        self.gates.push(GateInstance { gate, lines: lines.to_vec() });
        self
    }

    pub fn add_feedback(&mut self, source: usize, sink: usize) -> &mut Self {
        self.feedbacks.push(FeedbackBinding { source, sink });
        self
    }

    pub fn width(&self) -> usize {
        self.lines.len()
    }

    pub fn is_combinational(&self) -> bool {
        self.feedbacks.is_empty()
    }

    pub fn line_index(&self, name: &str) -> Option<usize> {
        self.lines.iter().position(|l| l.name == name)
    }

    pub fn primary_inputs(&self) -> Vec<usize> {
        self.indices(|l| l.input == InputRole::Primary)
    }

    pub fn primary_outputs(&self) -> Vec<usize> {
        self.indices(|l| l.output == OutputRole::Primary)
    }

    pub fn constant_lines(&self) -> Vec<usize> {
        self.indices(|l| matches!(l.input, InputRole::Constant(_)))
    }

    fn indices(&self, pred: impl Fn(&Line) -> bool) -> Vec<usize> {
        self.lines.iter().enumerate().filter(|(_, l)| pred(l)).map(|(i, _)| i).collect()
    }

    pub fn all_parity_preserving(&self) -> bool {
        self.gates.iter().all(|g| g.gate.kind().is_parity_preserving())
    }

    /// Initial register values, defaulting to all zeros.
    pub fn init_state(&self) -> BitVec {
        self.init.clone().unwrap_or_else(|| BitVec::zeros(self.feedbacks.len()))
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let width = self.width();

        let mut names = HashMap::new();
        for (i, l) in self.lines.iter().enumerate() {
            if names.insert(l.name.as_str(), i).is_some() {
                out.push(Violation::DuplicateName { line: i, name: l.name.clone() });
            }
        }

        for (gi, g) in self.gates.iter().enumerate() {
            if g.lines.len() != g.gate.arity() {
                out.push(Violation::ArityMismatch { gate: gi, expected: g.gate.arity(), got: g.lines.len() });
            }
            let mut seen = BTreeSet::new();
            for &l in &g.lines {
                if l >= width {
                    out.push(Violation::OutOfRange { gate: gi, line: l });
                } else if !seen.insert(l) {
                    out.push(Violation::DuplicateLine { gate: gi, line: l });
                }
            }
        }

        let mut sinks = vec![0usize; width];
        let mut sources = vec![0usize; width];
        for (bi, fb) in self.feedbacks.iter().enumerate() {
            for l in [fb.source, fb.sink] {
                if l >= width {
                    out.push(Violation::DanglingFeedback { binding: bi, line: l });
                }
            }
            if fb.sink < width {
                sinks[fb.sink] += 1;
            }
            if fb.source < width {
                sources[fb.source] += 1;
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            if sinks[i] > 1 {
                out.push(Violation::SharedSink { line: i });
            }
            if sources[i] > 1 {
                out.push(Violation::SharedSource { line: i });
            }
            let conflict = |reason: &str| Violation::RoleConflict { line: i, reason: reason.into() };
            match (l.input, sinks[i] > 0) {
                (InputRole::FeedbackSink, false) => out.push(conflict("feedback sink without a binding")),
                (InputRole::Constant(_), true) => out.push(conflict("constant line used as feedback sink")),
                (InputRole::Primary, true) => out.push(conflict("primary input used as feedback sink")),
                _ => {}
            }
            match (l.output, sources[i] > 0) {
                (OutputRole::FeedbackSource, false) => out.push(conflict("feedback source without a binding")),
                (OutputRole::Primary, true) => out.push(conflict("primary output used as feedback source")),
                (OutputRole::Garbage, true) => out.push(conflict("garbage output used as feedback source")),
                _ => {}
            }
        }

        if let Some(init) = &self.init {
            if init.width() != self.feedbacks.len() {
                out.push(Violation::InitWidth { expected: self.feedbacks.len(), got: init.width() });
            }
        }
        if let Some(t) = self.test_line {
            if t >= width || self.lines[t].output != OutputRole::Primary {
                out.push(Violation::BadTestLine { line: t });
            }
        }
        out
    }
}

pub fn validate(c: &Circuit) -> Vec<Violation> {
    c.validate()
}

pub fn serialize(c: &Circuit) -> String {
    let mut s = String::new();
    let names: Vec<&str> = c.lines.iter().map(|l| l.name.as_str()).collect();
    let _ = writeln!(s, ".name {}", c.name);
    let _ = writeln!(s, ".lines {}", c.width());
    let _ = writeln!(s, ".vars {}", names.join(" "));
    let consts: String = c
        .lines
        .iter()
        .map(|l| match l.input {
            InputRole::Constant(false) => '0',
            InputRole::Constant(true) => '1',
            _ => '-',
        })
        .collect();
    let _ = writeln!(s, ".constants {consts}");
    let outs: String = c
        .lines
        .iter()
        .map(|l| match l.output {
            OutputRole::Primary => 'o',
            OutputRole::Garbage => 'g',
            OutputRole::FeedbackSource => '-',
        })
        .collect();
    let _ = writeln!(s, ".outputs {outs}");
    for fb in &c.feedbacks {
        let _ = writeln!(s, ".feedback {} -> {}", names[fb.source], names[fb.sink]);
    }
    if let Some(init) = &c.init {
        let _ = writeln!(s, ".init {init}");
    }
    if let Some(t) = c.test_line {
        let _ = writeln!(s, ".test {}", names[t]);
    }
    s.push_str(".begin\n");
    for g in &c.gates {
        s.push_str(g.gate.token());
        for &l in &g.lines {
            s.push(' ');
            s.push_str(names[l]);
        }
        s.push('\n');
    }
    s.push_str(".end\n");
    s
}

struct Parser {
    name: Option<String>,
    lines: Option<usize>,
    vars: Option<Vec<String>>,
    consts: Option<String>,
    outputs: Option<String>,
    feedbacks: Vec<(String, String, usize)>,
    init: Option<BitVec>,
    test: Option<(String, usize)>,
    gates: Vec<(Builtin, Vec<String>, usize)>,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column, message: message.into() }
}

pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut p = Parser {
        name: None,
        lines: None,
        vars: None,
        consts: None,
        outputs: None,
        feedbacks: Vec::new(),
        init: None,
        test: None,
        gates: Vec::new(),
    };
    #[derive(PartialEq)]
    enum Section {
        Header,
        Body,
        Done,
    }
    let mut section = Section::Header;

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let column = content.len() - content.trim_start().len() + 1;
        let mut words = trimmed.split_whitespace();
        let head = words.next().unwrap_or_default();
        let rest: Vec<&str> = words.collect();
        let one_arg = |what: &str| -> Result<&str, ParseError> {
            match rest.as_slice() {
                [a] => Ok(*a),
                _ => Err(syntax(ln, column, format!("{what} takes exactly one argument"))),
            }
        };

        match section {
            Section::Done => return Err(syntax(ln, column, "content after .end")),
            Section::Body => {
                if head == ".end" {
                    section = Section::Done;
                } else if head.starts_with('.') {
                    return Err(syntax(ln, column, format!("directive {head} inside gate section")));
                } else {
                    let gate = Builtin::from_token(head)
                        .ok_or_else(|| ParseError::UnknownGate { line: ln, token: head.to_string() })?;
                    p.gates.push((gate, rest.iter().map(|s| s.to_string()).collect(), ln));
                }
            }
            Section::Header => match head {
                ".name" => p.name = Some(one_arg(".name")?.to_string()),
                ".lines" => {
                    let n = one_arg(".lines")?
                        .parse()
                        .map_err(|_| syntax(ln, column, ".lines expects a non-negative integer"))?;
                    p.lines = Some(n);
                }
                ".vars" => p.vars = Some(rest.iter().map(|s| s.to_string()).collect()),
                ".inputs" | ".constants" => {
                    if p.consts.is_some() {
                        return Err(syntax(ln, column, "input mask given twice"));
                    }
                    let mask = one_arg(head)?;
                    if let Some(bad) = mask.chars().find(|c| !matches!(c, '0' | '1' | '-')) {
                        return Err(syntax(ln, column, format!("invalid input mask character `{bad}`")));
                    }
                    p.consts = Some(mask.to_string());
                }
                ".outputs" => {
                    let mask = one_arg(".outputs")?;
                    if let Some(bad) = mask.chars().find(|c| !matches!(c, 'o' | 'g' | '-')) {
                        return Err(syntax(ln, column, format!("invalid output mask character `{bad}`")));
                    }
                    p.outputs = Some(mask.to_string());
                }
                ".feedback" => match rest.as_slice() {
                    [src, "->", sink] => p.feedbacks.push((src.to_string(), sink.to_string(), ln)),
                    _ => return Err(syntax(ln, column, "expected `.feedback <src> -> <sink>`")),
                },
                ".init" => {
                    let bits = one_arg(".init")?.parse().map_err(|e: String| syntax(ln, column, e))?;
                    p.init = Some(bits);
                }
                ".test" => p.test = Some((one_arg(".test")?.to_string(), ln)),
                ".begin" => section = Section::Body,
                other => return Err(syntax(ln, column, format!("unknown directive `{other}`"))),
            },
        }
    }
    if section != Section::Done {
        return Err(syntax(text.lines().count().max(1), 1, "missing .begin/.end block"));
    }
    p.finish()
}

impl Parser {
    fn finish(self) -> Result<Circuit, ParseError> {
        let vars = match (self.vars, self.lines) {
            (Some(v), Some(n)) if v.len() != n => {
                return Err(syntax(0, 0, format!(".lines {n} but .vars lists {} symbols", v.len())))
            }
            (Some(v), _) => v,
            (None, Some(n)) => (0..n).map(|i| format!("x{i}")).collect(),
            (None, None) => return Err(syntax(0, 0, "missing .lines or .vars")),
        };
        let n = vars.len();
        let consts = self.consts.unwrap_or_else(|| "-".repeat(n));
        let outputs = self.outputs.unwrap_or_else(|| "o".repeat(n));
        if consts.len() != n || outputs.len() != n {
            return Err(syntax(0, 0, format!("masks must have length {n}")));
        }
        let index: HashMap<&str, usize> = vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        let resolve = |name: &str, ln: usize| {
            index.get(name).copied().ok_or_else(|| syntax(ln, 0, format!("undeclared line `{name}`")))
        };

        let mut c = Circuit::new(self.name.unwrap_or_default());
        for ((name, ic), oc) in vars.iter().zip(consts.chars()).zip(outputs.chars()) {
            let input = match ic {
                '0' => InputRole::Constant(false),
                '1' => InputRole::Constant(true),
                _ => InputRole::Primary,
            };
            let output = match oc {
                'o' => OutputRole::Primary,
                'g' => OutputRole::Garbage,
                _ => OutputRole::FeedbackSource,
            };
            c.add_line(name.clone(), input, output);
        }
        for (src, sink, ln) in &self.feedbacks {
            let (s, k) = (resolve(src, *ln)?, resolve(sink, *ln)?);
            c.add_feedback(s, k);
            // A sink declared `-` in the input mask becomes a register input; anything else
            // is left in place so validation reports the conflict.
            if c.lines[k].input == InputRole::Primary {
                c.lines[k].input = InputRole::FeedbackSink;
            }
        }
        for (gate, args, ln) in &self.gates {
            let lines = args.iter().map(|a| resolve(a, *ln)).collect::<Result<Vec<_>, _>>()?;
            c.add_gate(*gate, &lines);
        }
        c.init = self.init;
        if let Some((t, ln)) = &self.test {
            c.test_line = Some(resolve(t, *ln)?);
        }
        let violations = c.validate();
        if violations.is_empty() {
            Ok(c)
        } else {
            Err(ParseError::Invalid(violations))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DFF: &str = "\
.name d_ff_pos
.lines 4
.vars clk q z d
.constants --0-
.outputs go-g
.feedback z -> q
.begin
pk4 clk q z d   # control first
.end
";

    #[test]
    fn parses_and_round_trips() {
        let c = parse(DFF).unwrap();
        assert_eq!(c.width(), 4);
        assert_eq!(c.gates.len(), 1);
        assert_eq!(c.feedbacks, vec![FeedbackBinding { source: 2, sink: 1 }]);
        assert_eq!(c.lines[1].input, InputRole::FeedbackSink);
        assert_eq!(parse(&serialize(&c)).unwrap(), c);
    }

    #[test]
    fn duplicate_line_in_gate() {
        let text = ".lines 3\n.vars a b c\n.begin\nt3 a a b\n.end\n";
        match parse(text) {
            Err(ParseError::Invalid(v)) => {
                assert!(v.contains(&Violation::DuplicateLine { gate: 0, line: 0 }))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_gate_section_is_identity() {
        let c = parse(".lines 2\n.vars a b\n.begin\n.end\n").unwrap();
        assert!(c.gates.is_empty());
        assert!(c.is_combinational());
    }

    #[test]
    fn not_circuit_serialization_line_count() {
        let mut c = Circuit::new("inv");
        let a = c.add_line("a", InputRole::Primary, OutputRole::Primary);
        c.add_gate(Builtin::Not, &[a]);
        let text = serialize(&c);
        assert_eq!(text.lines().filter(|l| !l.trim().is_empty()).count(), 8);
        assert!(!text.contains('\r'));
    }

    #[test]
    fn unknown_gate_and_syntax_positions() {
        assert!(matches!(
            parse(".lines 1\n.vars a\n.begin\nzz a\n.end\n"),
            Err(ParseError::UnknownGate { line: 4, .. })
        ));
        match parse(".lines 1\n  .bogus\n") {
            Err(ParseError::Syntax { line, column, .. }) => assert_eq!((line, column), (2, 3)),
            other => panic!("{other:?}"),
        }
        assert!(parse(".lines 1\n.vars a\n.begin\nn1 b\n.end\n").is_err());
        assert!(parse(".lines 1\n.vars a\n.begin\nn1 a\n").is_err());
    }

    #[test]
    fn constant_feedback_sink_conflicts() {
        let text = ".lines 2\n.vars a b\n.constants -0\n.outputs -o\n.feedback a -> b\n.begin\n.end\n";
        match parse(text) {
            Err(ParseError::Invalid(v)) => {
                assert!(v.iter().any(|x| matches!(x, Violation::RoleConflict { line: 1, .. })))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn out_of_range_gate_reference() {
        let mut c = Circuit::new("bad");
        c.add_line("a", InputRole::Primary, OutputRole::Primary);
        c.add_gate(Builtin::Not, &[1]);
        assert_eq!(c.validate(), vec![Violation::OutOfRange { gate: 0, line: 1 }]);
    }

    #[test]
    fn feedback_source_cannot_be_primary_output() {
        let mut c = Circuit::new("bad");
        let a = c.add_line("a", InputRole::FeedbackSink, OutputRole::Primary);
        c.add_feedback(a, a);
        assert!(matches!(c.validate().as_slice(), [Violation::RoleConflict { line: 0, .. }]));
    }

    #[test]
    fn inputs_alias_and_init() {
        let text = ".lines 2\n.vars a b\n.inputs -0\n.outputs o-\n.feedback b -> a\n.init 1\n.begin\nc2 a b\n.end\n";
        let c = parse(text).unwrap();
        assert_eq!(c.init_state().to_string(), "1");
        // Sink `a` was declared `-`; it is now a register input.
        assert_eq!(c.lines[0].input, InputRole::FeedbackSink);
    }
}
