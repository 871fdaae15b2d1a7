mod common;

use common::reference_gate;
use proptest::prelude::*;
use revseq::catalog;
use revseq::fault::{
    enumerate_faults, evaluate_test_set, free_lines, inject, minimal_complete_test_set, online_check, parity_detects,
    parity_detects_many, FaultError, FaultKind, FaultModel, FaultSpec, MinimalTestSet, Side, Verdict,
};
use revseq::gatelib::{BitVec, Builtin};
use revseq::netlist::{Circuit, InputRole, OutputRole};
use revseq::sim::{break_feedback, input_space, run_sequential, run_sequential_with, Stimulus};

/// Reference fault simulator over the functional gate forms.
fn faulty_eval(c: &Circuit, faults: &[FaultSpec], input: &BitVec) -> Vec<bool> {
    let mut s = input.bits().to_vec();
    let hit = |gi: usize, port: usize, side: Side, v: bool| {
        faults.iter().filter(|f| f.gate == gi && f.port == port && f.side == side).fold(v, |v, f| match f.kind {
            FaultKind::StuckAt(p) => p,
            FaultKind::BitFlip => !v,
        })
    };
    for (gi, g) in c.gates.iter().enumerate() {
        let ins: Vec<bool> = g.lines.iter().enumerate().map(|(p, &l)| hit(gi, p, Side::Input, s[l])).collect();
        let outs = reference_gate(g.gate, &ins);
        for (p, &l) in g.lines.iter().enumerate() {
            s[l] = hit(gi, p, Side::Output, outs[p]);
        }
    }
    s
}

fn arb_combinational(gates: Vec<Builtin>) -> impl Strategy<Value = Circuit> {
    (3usize..=6)
        .prop_flat_map(move |n| {
            let g = prop::collection::vec(
                (prop::sample::select(gates.clone()), Just((0..n).collect::<Vec<usize>>()).prop_shuffle()),
                1..6,
            );
            (Just(n), g, prop::collection::vec((0u8..3, any::<bool>()), n))
        })
        .prop_map(|(n, gates, roles)| {
            let mut c = Circuit::new("rand");
            for (i, &(inp, garbage)) in roles.iter().enumerate().take(n) {
                let input = match inp {
                    0 => InputRole::Constant(false),
                    1 => InputRole::Constant(true),
                    _ => InputRole::Primary,
                };
                c.add_line(format!("x{i}"), input, if garbage { OutputRole::Garbage } else { OutputRole::Primary });
            }
            for (g, lines) in gates {
                if g.arity() <= n {
                    c.add_gate(g, &lines[..g.arity()]);
                }
            }
            c
        })
}

fn pp_gates() -> Vec<Builtin> {
    vec![Builtin::Fredkin, Builtin::F2g, Builtin::Pareek]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parity_flags_odd_flip_counts(c in arb_combinational(pp_gates())) {
        let flips = enumerate_faults(&c, FaultModel::BitFlip);
        for v in BitVec::all(c.width()).filter(|v| input_space(&c).contains(v)) {
            for f in &flips {
                prop_assert!(parity_detects(&c, f, &v).unwrap());
                let oracle = faulty_eval(&c, &[*f], &v).iter().filter(|&&b| b).count() % 2 == 1;
                prop_assert_eq!(oracle, !v.parity());
            }
            for (i, f) in flips.iter().enumerate() {
                for g in &flips[i + 1..] {
                    if f.line(&c) != g.line(&c) {
                        prop_assert!(!parity_detects_many(&c, &[*f, *g], &v).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn coverage_matches_reference_simulator(c in arb_combinational(Builtin::ALL.to_vec())) {
        let vectors = input_space(&c);
        let faults = enumerate_faults(&c, FaultModel::StuckAt);
        let report = evaluate_test_set(&c, &vectors, &faults).unwrap();
        let pos = c.primary_outputs();
        for (fi, f) in faults.iter().enumerate() {
            let want: Vec<usize> = vectors
                .iter()
                .enumerate()
                .filter(|(_, v)| {
                    let good = faulty_eval(&c, &[], v);
                    let bad = faulty_eval(&c, &[*f], v);
                    pos.iter().any(|&p| good[p] != bad[p])
                })
                .map(|(i, _)| i)
                .collect();
            prop_assert_eq!(&report.detected[fi], &want, "{}", f);
            let injected = inject(&c, f, &vectors[0]).unwrap().into_bits();
            prop_assert_eq!(injected, faulty_eval(&c, &[*f], &vectors[0]));
        }
    }

    #[test]
    fn minimal_sets_are_minimum(c in arb_combinational(Builtin::ALL.to_vec())) {
        let m = minimal_complete_test_set(&c, FaultModel::StuckAt).unwrap();
        let vectors = input_space(&c);
        let faults = enumerate_faults(&c, FaultModel::StuckAt);
        let all = evaluate_test_set(&c, &vectors, &faults).unwrap();
        let chosen = evaluate_test_set(&c, m.vectors(), &faults).unwrap();
        prop_assert_eq!(chosen.undetected.clone(), all.undetected.clone());
        prop_assert_eq!(m.is_complete(), all.is_complete());
        // No smaller subset covers every detectable fault.
        let k = m.vectors().len();
        if k > 0 && vectors.len() <= 16 {
            for mask in 0u32..(1 << vectors.len()) {
                if (mask.count_ones() as usize) < k {
                    let sub: Vec<BitVec> = (0..vectors.len()).filter(|i| mask >> i & 1 == 1).map(|i| vectors[i].clone()).collect();
                    let r = evaluate_test_set(&c, &sub, &faults).unwrap();
                    prop_assert!(r.undetected.len() > all.undetected.len());
                }
            }
        }
    }

    #[test]
    fn fault_text_round_trips(gate in 0usize..100, port in 0usize..4, kind in 0u8..3, input in any::<bool>()) {
        let side = if input { Side::Input } else { Side::Output };
        let f = match kind {
            0 => FaultSpec::stuck_at(gate, port, side, false),
            1 => FaultSpec::stuck_at(gate, port, side, true),
            _ => FaultSpec { kind: FaultKind::BitFlip, gate, port, side },
        };
        prop_assert_eq!(f.to_string().parse::<FaultSpec>().unwrap(), f);
    }
}

#[test]
fn enumeration_counts() {
    for e in catalog::all() {
        let c = break_feedback(&e.circuit);
        let ports: usize = c.gates.iter().map(|g| g.lines.len()).sum();
        assert_eq!(enumerate_faults(&c, FaultModel::StuckAt).len(), 4 * ports);
        assert_eq!(enumerate_faults(&c, FaultModel::BitFlip).len(), ports);
    }
}

#[test]
fn fault_text_format() {
    assert_eq!(FaultSpec::bit_flip(0, 2).to_string(), "0:2:out:flip");
    assert_eq!("3:1:in:sa1".parse::<FaultSpec>().unwrap(), FaultSpec::stuck_at(3, 1, Side::Input, true));
    assert!("3:1:mid:sa1".parse::<FaultSpec>().is_err());
    assert!("3:1:in".parse::<FaultSpec>().is_err());
    assert_eq!("flip".parse::<FaultModel>().unwrap(), FaultModel::BitFlip);
}

#[test]
fn parity_check_needs_parity_preserving_gates() {
    let c = break_feedback(&catalog::build("t_ff").unwrap().circuit);
    let r = parity_detects(&c, &FaultSpec::bit_flip(0, 0), &BitVec::zeros(4));
    assert!(matches!(r, Err(FaultError::NotParityPreserving { gate: 0, .. })));
}

#[test]
fn invalid_sites_and_sequential_circuits_are_rejected() {
    let seq = catalog::build("d_ff_pos").unwrap().circuit;
    assert!(matches!(evaluate_test_set(&seq, &[], &[]), Err(FaultError::Sequential)));
    let c = break_feedback(&seq);
    let r = evaluate_test_set(&c, &[BitVec::zeros(4)], &[FaultSpec::bit_flip(1, 0)]);
    assert!(matches!(r, Err(FaultError::InvalidSite(_))));
}

#[test]
fn exhaustive_limit() {
    let mut c = Circuit::new("wide");
    for i in 0..17 {
        c.add_line(format!("x{i}"), InputRole::Primary, OutputRole::Primary);
    }
    c.add_gate(Builtin::Not, &[0]);
    assert!(matches!(
        minimal_complete_test_set(&c, FaultModel::StuckAt),
        Err(FaultError::ExhaustiveLimit { free: 17 })
    ));
}

fn offline_under_test(name: &str) -> Circuit {
    let base = break_feedback(&catalog::build(name).unwrap().circuit);
    let free = [base.line_index("c1").unwrap(), base.line_index("c2").unwrap()];
    free_lines(&base, &free)
}

#[test]
fn offline_designs_leave_garbage_port_faults_undetectable() {
    // Faults on ports that only drive garbage lines, plus the Pareek R input stuck at
    // its own constant value, cannot reach a primary output.
    let expected: Vec<FaultSpec> =
        ["0:0:out:sa0", "0:0:out:sa1", "0:2:in:sa0", "0:3:out:sa0", "0:3:out:sa1", "1:2:out:sa0", "1:2:out:sa1"]
            .iter()
            .map(|s| s.parse().unwrap())
            .collect();
    for name in ["offline_d_ff_pos", "offline_d_ff_neg"] {
        let c = offline_under_test(name);
        match minimal_complete_test_set(&c, FaultModel::StuckAt).unwrap() {
            MinimalTestSet::Incomplete { undetectable, vectors } => {
                assert_eq!(undetectable, expected, "{name}");
                assert_eq!(vectors.len(), 4, "{name}");
            }
            other => panic!("{name}: {other:?}"),
        }
    }
}

#[test]
fn offline_c1_follows_mode_lines() {
    let c = offline_under_test("offline_d_ff_pos");
    let (c1, c2) = (c.line_index("c1").unwrap(), c.line_index("c2").unwrap());
    for v in input_space(&c) {
        let o = revseq::sim::eval_combinational(&c, &v).unwrap();
        let q = o.get(c.line_index("c").unwrap());
        let want = match (v.get(c1), v.get(c2)) {
            (false, true) => q,
            (a, b) if a == b => a,
            _ => !q,
        };
        assert_eq!(o.get(c1), want, "{v}");
    }
}

#[test]
fn online_detector() {
    let c = catalog::build("online_d_ff_pos").unwrap().circuit;
    let s = Stimulus::new(&c, vec![vec![true, true], vec![false, false], vec![true, false]]).unwrap();
    let clean = online_check(&c, &run_sequential(&c, &s).unwrap()).unwrap();
    assert_eq!(clean, vec![Verdict::NoFault; 3]);
    // A flip on the S port cancels inside the checker, as T = S' xor S'.
    let t = run_sequential_with(&c, &s, None, |_| vec![FaultSpec::bit_flip(0, 3)]).unwrap();
    assert_eq!(online_check(&c, &t).unwrap(), vec![Verdict::NoFault; 3]);
    let t =
        run_sequential_with(&c, &s, None, |k| if k == 1 { vec![FaultSpec::bit_flip(0, 1)] } else { vec![] }).unwrap();
    assert_eq!(online_check(&c, &t).unwrap(), vec![Verdict::NoFault, Verdict::Fault, Verdict::NoFault]);
    let plain = catalog::build("d_ff_pos").unwrap().circuit;
    let s = Stimulus::new(&plain, vec![vec![true, true]]).unwrap();
    assert!(matches!(online_check(&plain, &run_sequential(&plain, &s).unwrap()), Err(FaultError::NoTestLine)));
}

#[test]
fn coverage_matrix_csv() {
    let c = break_feedback(&catalog::build("d_ff_pos").unwrap().circuit);
    let faults = enumerate_faults(&c, FaultModel::BitFlip);
    let r = evaluate_test_set(&c, &[BitVec::zeros(4), BitVec::from_index(4, 0b1001)], &faults).unwrap();
    let csv = r.matrix_csv().unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("fault,0000,1001"));
    assert_eq!(csv.lines().count(), 1 + faults.len());
    assert_eq!(r.detected_count() + r.undetected.len(), faults.len());
}
