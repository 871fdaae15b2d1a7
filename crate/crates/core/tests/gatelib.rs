mod common;

use common::{bv, reference_gate, F2G_TABLE, FREDKIN_TABLE, PAREEK_TABLE};
use proptest::prelude::*;
use revseq::gatelib::{builtin, BitVec, Builtin, GateKind, HwComplexity};

#[test]
fn builtins_match_functional_forms() {
    for g in Builtin::ALL {
        for x in BitVec::all(g.arity()) {
            let got = g.kind().eval(&x).unwrap();
            assert_eq!(got.bits(), reference_gate(g, x.bits()).as_slice(), "{} on {x}", g.name());
            assert_eq!(g.apply(x.bits()), got.bits(), "{} apply", g.name());
        }
    }
}

#[test]
fn printed_truth_tables() {
    for (g, table) in
        [(Builtin::Pareek, &PAREEK_TABLE[..]), (Builtin::Fredkin, &FREDKIN_TABLE[..]), (Builtin::F2g, &F2G_TABLE[..])]
    {
        let tt = g.kind().truth_table();
        let expected: Vec<_> = table.iter().map(|(i, o)| (bv(i), bv(o))).collect();
        assert_eq!(tt, expected, "{}", g.name());
    }
}

#[test]
fn cost_attributes() {
    let hc = HwComplexity::new;
    let expected = [
        (Builtin::Not, 1, 1, hc(0, 0, 1)),
        (Builtin::Cnot, 2, 1, hc(1, 0, 0)),
        (Builtin::Toffoli, 3, 5, hc(1, 1, 0)),
        (Builtin::Fredkin, 3, 5, hc(2, 4, 1)),
        (Builtin::Peres, 3, 4, hc(2, 1, 0)),
        (Builtin::F2g, 3, 2, hc(2, 0, 0)),
        (Builtin::Pareek, 4, 7, hc(3, 2, 1)),
    ];
    for (g, arity, qc, h) in expected {
        assert_eq!((g.arity(), g.quantum_cost(), g.hw_complexity()), (arity, qc, h), "{}", g.name());
    }
}

#[test]
fn structural_properties() {
    for g in Builtin::ALL {
        let k = g.kind();
        assert!(k.is_reversible(), "{}", g.name());
        let pp = matches!(g, Builtin::Fredkin | Builtin::F2g | Builtin::Pareek);
        assert_eq!(k.is_parity_preserving(), pp, "{} parity", g.name());
        assert_eq!(k.is_conservative(), g == Builtin::Fredkin, "{} conservative", g.name());
    }
}

#[test]
fn inverse_composes_to_identity() {
    for g in Builtin::ALL {
        let k = g.kind();
        let inv = k.inverse().unwrap();
        for x in BitVec::all(g.arity()) {
            assert_eq!(inv.eval(&k.eval(&x).unwrap()).unwrap(), x);
        }
    }
}

#[test]
fn non_bijection_is_flagged() {
    let and = GateKind::from_fn("and", 2, 0, HwComplexity::default(), |x| vec![x[0], x[0] & x[1]]).unwrap();
    assert!(!and.is_reversible());
    assert!(and.inverse().is_none());
    assert!(GateKind::from_fn("bad", 2, 0, HwComplexity::default(), |x| vec![x[0]]).is_err());
    assert!(GateKind::from_fn("empty", 0, 0, HwComplexity::default(), |x| x.to_vec()).is_err());
}

#[test]
fn lookup_by_name_and_token() {
    for g in Builtin::ALL {
        assert_eq!(Builtin::from_token(g.token()), Some(g));
        assert_eq!(builtin(g.name()).unwrap(), *g.kind());
    }
    assert!(builtin("SWAP").is_err());
}

#[test]
fn eval_rejects_wrong_width() {
    assert!(Builtin::Pareek.kind().eval(&bv("101")).is_err());
}

proptest! {
    #[test]
    fn bitvec_index_round_trip(width in 1usize..=16, raw in any::<u64>()) {
        let n = raw & ((1u64 << width) - 1);
        let v = BitVec::from_index(width, n);
        prop_assert_eq!(v.to_index(), n);
        prop_assert_eq!(v.to_string().parse::<BitVec>().unwrap(), v.clone());
        prop_assert_eq!(v.weight() as u32, n.count_ones());
        prop_assert_eq!(v.parity(), n.count_ones() % 2 == 1);
    }

    #[test]
    fn parity_preserving_gates_keep_parity(x in any::<u8>()) {
        for g in [Builtin::Fredkin, Builtin::F2g, Builtin::Pareek] {
            let v = BitVec::from_index(g.arity(), u64::from(x) & ((1 << g.arity()) - 1));
            prop_assert_eq!(g.kind().eval(&v).unwrap().parity(), v.parity());
        }
    }

    #[test]
    fn hw_complexity_sums_componentwise(a in (0u32..50, 0u32..50, 0u32..50), b in (0u32..50, 0u32..50, 0u32..50)) {
        let x = HwComplexity::new(a.0, a.1, a.2);
        let y = HwComplexity::new(b.0, b.1, b.2);
        prop_assert_eq!(x + y, y + x);
        prop_assert_eq!([x, y].into_iter().sum::<HwComplexity>(), x + y);
        prop_assert!(!x.dominates(&x));
        if x != HwComplexity::default() {
            prop_assert!(HwComplexity::default().dominates(&x));
        }
    }
}
