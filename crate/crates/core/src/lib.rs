//! Reversible sequential logic workbench.
//!
//! Gate permutations and cost attributes live in [`gatelib`]; circuits and their text
//! format in [`netlist`]; evaluation in [`sim`]; the five cost metrics in [`metrics`];
//! NCV decomposition in [`qcost`]; fault campaigns in [`fault`]; ready-made designs in
//! [`catalog`].

pub mod catalog;
pub mod fault;
pub mod gatelib;
pub mod metrics;
pub mod netlist;
pub mod qcost;
pub mod sim;

pub use gatelib::{BitVec, Builtin, GateKind, HwComplexity};
pub use netlist::{Circuit, InputRole, OutputRole};
