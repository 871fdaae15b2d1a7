//! Dense unitary semantics for primitive sequences, independent of the Z4 evaluator.
//! Basis index bit `n-1-line` holds `line`, matching BitVec's MSB-first order.
#![allow(clippy::needless_range_loop)]

use num_complex::Complex64 as C;
use revseq::qcost::{PrimKind, Primitive, PrimitiveSeq};

pub type Matrix = Vec<Vec<C>>;

fn identity(dim: usize) -> Matrix {
    (0..dim).map(|r| (0..dim).map(|c| if r == c { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) }).collect()).collect()
}

fn mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|r| (0..n).map(|c| (0..n).map(|k| a[r][k] * b[k][c]).sum()).collect()).collect()
}

pub fn approx_eq(a: &Matrix, b: &Matrix) -> bool {
    a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < 1e-9)
}

fn bit(x: usize, width: usize, line: usize) -> usize {
    (x >> (width - 1 - line)) & 1
}

/// 2x2 action on the target: X, V or V†.
fn single(kind: PrimKind) -> [[C; 2]; 2] {
    let h = 0.5;
    let p = C::new(h, h);
    let m = C::new(h, -h);
    match kind {
        PrimKind::Not | PrimKind::Cnot => [[C::new(0.0, 0.0), C::new(1.0, 0.0)], [C::new(1.0, 0.0), C::new(0.0, 0.0)]],
        PrimKind::Cv => [[p, m], [m, p]],
        PrimKind::Cvd => [[m, p], [p, m]],
        PrimKind::Box => unreachable!(),
    }
}

pub fn of_primitive(p: &Primitive, width: usize) -> Matrix {
    if p.kind == PrimKind::Box {
        return of_ops(&p.members, width);
    }
    let dim = 1 << width;
    let u = single(p.kind);
    let t = p.target;
    let tmask = 1 << (width - 1 - t);
    let mut m = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for col in 0..dim {
        let active = p.control.is_none_or(|c| bit(col, width, c) == 1);
        if !active {
            m[col][col] = C::new(1.0, 0.0);
            continue;
        }
        let tb = bit(col, width, t);
        for out in 0..2 {
            let row = (col & !tmask) | (out << (width - 1 - t));
            m[row][col] += u[out][tb];
        }
    }
    m
}

/// Matrix of applying `ops` left to right.
pub fn of_ops(ops: &[Primitive], width: usize) -> Matrix {
    ops.iter().fold(identity(1 << width), |acc, p| mul(&of_primitive(p, width), &acc))
}

pub fn of_seq(s: &PrimitiveSeq) -> Matrix {
    of_ops(&s.ops, s.width)
}

/// Permutation matrix sending basis `x` to `f(x)`.
pub fn permutation(width: usize, f: impl Fn(usize) -> usize) -> Matrix {
    let dim = 1 << width;
    let mut m = vec![vec![C::new(0.0, 0.0); dim]; dim];
    for x in 0..dim {
        m[f(x)][x] = C::new(1.0, 0.0);
    }
    m
}

pub fn commute(a: &Matrix, b: &Matrix) -> bool {
    approx_eq(&mul(a, b), &mul(b, a))
}

/// Every NOT, CNOT, CV and CVD on `width` lines.
pub fn all_elementary(width: usize) -> Vec<Primitive> {
    let mut v: Vec<Primitive> = (0..width).map(Primitive::not).collect();
    for c in 0..width {
        for t in 0..width {
            if c != t {
                v.extend([Primitive::cnot(c, t), Primitive::cv(c, t), Primitive::cvd(c, t)]);
            }
        }
    }
    v
}

/// Every two-member BOX the merge rule can form on `width` lines.
pub fn all_boxes(width: usize) -> Vec<Primitive> {
    let elem = all_elementary(width);
    let mut v = Vec::new();
    for a in &elem {
        for b in &elem {
            let same_pair = a.control.is_some() && b.control.is_some() && {
                let mut x = a.lines();
                let mut y = b.lines();
                x.sort();
                y.sort();
                x == y
            };
            let kinds = (a.kind == PrimKind::Cnot) != (b.kind == PrimKind::Cnot);
            if same_pair && kinds {
                v.push(Primitive::for_box(vec![a.clone(), b.clone()]));
            }
        }
    }
    v
}
