use std::fmt;
use std::ops::{Add, AddAssign};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_ARITY: usize = 8;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GateError {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("gate {gate} has arity {arity}, got input of width {width}")]
    Arity { gate: String, arity: usize, width: usize },
    #[error("arity {0} outside 1..={MAX_ARITY}")]
    ArityRange(usize),
    #[error("function output width {got} does not match arity {arity}")]
    OutputWidth { arity: usize, got: usize },
}

/// Fixed-width bit vector. Index 0 is the leftmost (most significant) bit when
/// rendered or converted to an integer, so `BitVec::from_index(4, 0b1001)` reads `1001`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVec {
    bits: Vec<bool>,
}

impl BitVec {
    pub fn zeros(width: usize) -> Self {
        BitVec { bits: vec![false; width] }
    }

    pub fn ones(width: usize) -> Self {
        BitVec { bits: vec![true; width] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitVec { bits }
    }

    pub fn from_index(width: usize, index: u64) -> Self {
        debug_assert!(width <= 64);
        let bits = (0..width).map(|i| (index >> (width - 1 - i)) & 1 == 1).collect();
        BitVec { bits }
    }

    pub fn to_index(&self) -> u64 {
        debug_assert!(self.bits.len() <= 64);
        self.bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn bits_mut(&mut self) -> &mut [bool] {
        &mut self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn parity(&self) -> bool {
        self.bits.iter().fold(false, |acc, &b| acc ^ b)
    }

    pub fn weight(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Every vector of the given width in ascending binary order.
    pub fn all(width: usize) -> impl Iterator<Item = BitVec> {
        (0..1u64 << width).map(move |i| BitVec::from_index(width, i))
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl FromStr for BitVec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(format!("invalid bit `{other}`")),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitVec::from_bits)
    }
}

/// Symbolic count of two-input XOR (alpha), two-input AND (beta) and NOT (delta) operations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HwComplexity {
    #[serde(rename = "a")]
    pub alpha: u32,
    #[serde(rename = "b")]
    pub beta: u32,
    #[serde(rename = "d")]
    pub delta: u32,
}

impl HwComplexity {
    pub const fn new(alpha: u32, beta: u32, delta: u32) -> Self {
        HwComplexity { alpha, beta, delta }
    }

    /// True iff no component is larger than in `other` and at least one is smaller.
    pub fn dominates(&self, other: &HwComplexity) -> bool {
        self.alpha <= other.alpha && self.beta <= other.beta && self.delta <= other.delta && self != other
    }
}

impl Add for HwComplexity {
    type Output = HwComplexity;

    fn add(self, rhs: Self) -> Self {
        HwComplexity::new(self.alpha + rhs.alpha, self.beta + rhs.beta, self.delta + rhs.delta)
    }
}

impl AddAssign for HwComplexity {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl std::iter::Sum for HwComplexity {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(HwComplexity::default(), Add::add)
    }
}

impl fmt::Display for HwComplexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}a+{}b+{}d", self.alpha, self.beta, self.delta)
    }
}

/// A named k-line gate: a total map on k-bit vectors stored as a lookup table
/// indexed by the input's integer value, plus cost attributes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateKind {
    name: String,
    arity: usize,
    table: Vec<u8>,
    quantum_cost: u32,
    hw: HwComplexity,
}

impl GateKind {
    /// Tabulates `f` over all inputs. `f` need not be a bijection; use the checkers.
    pub fn from_fn(
        name: impl Into<String>,
        arity: usize,
        quantum_cost: u32,
        hw: HwComplexity,
        f: impl Fn(&[bool]) -> Vec<bool>,
    ) -> Result<Self, GateError> {
        if arity == 0 || arity > MAX_ARITY {
            return Err(GateError::ArityRange(arity));
        }
        let mut table = Vec::with_capacity(1 << arity);
        for input in BitVec::all(arity) {
            let out = f(input.bits());
            if out.len() != arity {
                return Err(GateError::OutputWidth { arity, got: out.len() });
            }
            table.push(BitVec::from_bits(out).to_index() as u8);
        }
        Ok(GateKind { name: name.into(), arity, table, quantum_cost, hw })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn quantum_cost(&self) -> u32 {
        self.quantum_cost
    }

    pub fn hw_complexity(&self) -> HwComplexity {
        self.hw
    }

    /// Output index for an input index; both are `arity`-bit integers.
    #[inline]
    pub fn map_index(&self, index: usize) -> usize {
        self.table[index] as usize
    }

    pub fn eval(&self, input: &BitVec) -> Result<BitVec, GateError> {
        if input.width() != self.arity {
            return Err(GateError::Arity { gate: self.name.clone(), arity: self.arity, width: input.width() });
        }
        Ok(BitVec::from_index(self.arity, self.map_index(input.to_index() as usize) as u64))
    }

    pub fn is_reversible(&self) -> bool {
        let mut seen = vec![false; self.table.len()];
        self.table.iter().all(|&o| !std::mem::replace(&mut seen[o as usize], true))
    }

    pub fn is_parity_preserving(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &o)| (i as u32).count_ones() % 2 == (o as u32).count_ones() % 2)
    }

    pub fn is_conservative(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &o)| (i as u32).count_ones() == (o as u32).count_ones())
    }

    pub fn truth_table(&self) -> Vec<(BitVec, BitVec)> {
        (0..self.table.len())
            .map(|i| (BitVec::from_index(self.arity, i as u64), BitVec::from_index(self.arity, self.table[i] as u64)))
            .collect()
    }

    /// Inverse permutation; `None` when the gate is not reversible.
    pub fn inverse(&self) -> Option<GateKind> {
        if !self.is_reversible() {
            return None;
        }
        let mut table = vec![0u8; self.table.len()];
        for (i, &o) in self.table.iter().enumerate() {
            table[o as usize] = i as u8;
        }
        Some(GateKind { name: format!("{}^-1", self.name), table, ..self.clone() })
    }
}

/// The seven library gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Builtin {
    Not,
    Cnot,
    Toffoli,
    Fredkin,
    Peres,
    F2g,
    Pareek,
}

impl Builtin {
    pub const ALL: [Builtin; 7] = [
        Builtin::Not,
        Builtin::Cnot,
        Builtin::Toffoli,
        Builtin::Fredkin,
        Builtin::Peres,
        Builtin::F2g,
        Builtin::Pareek,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Not => "NOT",
            Builtin::Cnot => "CNOT",
            Builtin::Toffoli => "TOFFOLI",
            Builtin::Fredkin => "FREDKIN",
            Builtin::Peres => "PERES",
            Builtin::F2g => "F2G",
            Builtin::Pareek => "PAREEK",
        }
    }

    /// Netlist token, e.g. `pk4`.
    pub fn token(self) -> &'static str {
        match self {
            Builtin::Not => "n1",
            Builtin::Cnot => "c2",
            Builtin::Toffoli => "t3",
            Builtin::Fredkin => "fr3",
            Builtin::Peres => "pe3",
            Builtin::F2g => "f2g3",
            Builtin::Pareek => "pk4",
        }
    }

    pub fn from_token(token: &str) -> Option<Builtin> {
        Builtin::ALL.into_iter().find(|b| b.token() == token)
    }

    pub fn from_name(name: &str) -> Option<Builtin> {
        let upper = name.to_ascii_uppercase();
        Builtin::ALL.into_iter().find(|b| b.name() == upper)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Not => 1,
            Builtin::Cnot => 2,
            Builtin::Pareek => 4,
            _ => 3,
        }
    }

    pub fn quantum_cost(self) -> u32 {
        match self {
            Builtin::Not | Builtin::Cnot => 1,
            Builtin::Toffoli | Builtin::Fredkin => 5,
            Builtin::Peres => 4,
            Builtin::F2g => 2,
            Builtin::Pareek => 7,
        }
    }

    pub fn hw_complexity(self) -> HwComplexity {
        match self {
            Builtin::Not => HwComplexity::new(0, 0, 1),
            Builtin::Cnot => HwComplexity::new(1, 0, 0),
            Builtin::Toffoli => HwComplexity::new(1, 1, 0),
            Builtin::Fredkin => HwComplexity::new(2, 4, 1),
            Builtin::Peres => HwComplexity::new(2, 1, 0),
            Builtin::F2g => HwComplexity::new(2, 0, 0),
            Builtin::Pareek => HwComplexity::new(3, 2, 1),
        }
    }

    /// Functional form; the lookup table in `kind()` is built from this.
    pub fn apply(self, x: &[bool]) -> Vec<bool> {
        match self {
            Builtin::Not => vec![!x[0]],
            Builtin::Cnot => vec![x[0], x[0] ^ x[1]],
            Builtin::Toffoli => vec![x[0], x[1], (x[0] & x[1]) ^ x[2]],
            Builtin::Fredkin => {
                let (a, b, c) = (x[0], x[1], x[2]);
                vec![a, (!a & b) | (a & c), (a & b) | (!a & c)]
            }
            Builtin::Peres => vec![x[0], x[0] ^ x[1], (x[0] & x[1]) ^ x[2]],
            Builtin::F2g => vec![x[0], x[0] ^ x[1], x[0] ^ x[2]],
            Builtin::Pareek => {
                let (a, b, c, d) = (x[0], x[1], x[2], x[3]);
                let q = (!a & b) ^ (a & d);
                vec![a, q, q ^ c, b ^ d]
            }
        }
    }

    pub fn kind(self) -> &'static GateKind {
        static KINDS: OnceLock<Vec<GateKind>> = OnceLock::new();
        let kinds = KINDS.get_or_init(|| {
            Builtin::ALL
                .iter()
                .map(|&b| {
                    GateKind::from_fn(b.name(), b.arity(), b.quantum_cost(), b.hw_complexity(), |x| b.apply(x))
                        .expect("builtin arity in range")
                })
                .collect()
        });
        &kinds[self as usize]
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub fn builtin(name: &str) -> Result<GateKind, GateError> {
    Builtin::from_name(name).map(|b| b.kind().clone()).ok_or_else(|| GateError::UnknownGate(name.to_string()))
}

pub fn eval_gate(g: &GateKind, input: &BitVec) -> Result<BitVec, GateError> {
    g.eval(input)
}
