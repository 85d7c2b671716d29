use sepconv::kraus::{self, BranchClass, SepMap, Which};
use sepconv::linalg::{self, re, CMat};
use sepconv::random;
use sepconv::sep::{self, Verdict};
use sepconv::stabilizer::{graph_state, Graph};
use sepconv::tensor;
use sepconv::Strategy;

fn grid() -> Vec<f64> {
    (1..=9).map(|k| 0.05 * k as f64).collect()
}

#[test]
fn both_examples_over_the_grid() {
    for which in [Which::FiveQubit, Which::ThreeQubit] {
        for report in kraus::sweep_examples(which, &grid(), 1e-9, Strategy::default()) {
            let report = report.unwrap();
            assert!(
                report.completeness_residual < 1e-9,
                "{which:?} a={}",
                report.a
            );
            assert!(report.deterministic, "{which:?} a={}", report.a);
            assert!(report.annihilator_norms.iter().all(|&n| n < 1e-11));
            assert!(report.witness_feasible);
            assert!(report.verified);
        }
    }
}

#[test]
fn sweep_strategies_agree() {
    let a = grid();
    let seq = kraus::sweep_examples(Which::FiveQubit, &a, 1e-9, Strategy::Sequential);
    let par = kraus::sweep_examples(Which::FiveQubit, &a, 1e-9, Strategy::Parallel);
    for (s, p) in seq.iter().zip(&par) {
        let (s, p) = (s.as_ref().unwrap(), p.as_ref().unwrap());
        assert_eq!(s.a, p.a);
        assert_eq!(s.completeness_residual, p.completeness_residual);
    }
}

#[test]
fn dropping_annihilators_breaks_completeness() {
    for which in [Which::FiveQubit, Which::ThreeQubit] {
        for a in grid() {
            let ex = kraus::build_example_for(which, a).unwrap();
            let rest =
                SepMap::new(ex.map.kraus[4..].to_vec(), ex.map.labels[4..].to_vec()).unwrap();
            let resid = rest.completeness_residual();
            // the missing weight is Σ_{j≤4} M_j†M_j, which grows like a³
            let d = ex.psi.total_dim();
            let missing = ex.map.kraus[..4]
                .iter()
                .fold(CMat::zeros(d, d), |acc, k| acc + k.gram().to_matrix());
            assert!((resid - linalg::max_norm(&missing)).abs() < 1e-12);
            assert!(resid > a.powi(3), "{which:?} a={a}: residual {resid}");
        }
    }
}

#[test]
fn branch_probabilities_at_quarter() {
    let ex = kraus::build_five_qubit_example(0.25).unwrap();
    let target = ex.final_state().normalized().unwrap();
    let v = kraus::verify_sep_map(&ex.map, &ex.psi, &target, 1e-10).unwrap();
    assert!(v.deterministic);
    for (k, b) in v.branches.iter().enumerate() {
        if k < 4 {
            assert_eq!(b.class, BranchClass::Annihilates);
        } else {
            assert_eq!(b.class, BranchClass::ReachesFinal);
            assert!((b.prob - 0.25).abs() < 1e-12, "{}: {}", b.label, b.prob);
        }
    }
    assert_eq!(v.branches[7].label, "M5*A1*A3");
}

#[test]
fn random_extra_branch_is_detected() {
    // scale the family by √(1−ε) and add √ε·V for a random local unitary V:
    // still complete, but V|ψ⟩ is not proportional to h|ψ⟩
    let ex = kraus::build_five_qubit_example(0.3).unwrap();
    let target = ex.final_state().normalized().unwrap();
    let eps: f64 = 0.1;
    for seed in 0..10 {
        let v = random::random_local_unitary(&[2; 5], &mut random::rng(seed));
        let mut kraus: Vec<_> = ex
            .map
            .kraus
            .iter()
            .map(|k| k.scaled(re((1.0 - eps).sqrt())))
            .collect();
        kraus.push(v.scaled(re(eps.sqrt())));
        let mut labels = ex.map.labels.clone();
        labels.push("V".into());
        let map = SepMap::new(kraus, labels).unwrap();
        let verdict = kraus::verify_sep_map(&map, &ex.psi, &target, 1e-9).unwrap();
        assert!(!verdict.deterministic);
        assert_eq!(verdict.branches.last().unwrap().class, BranchClass::Other);
    }
}

#[test]
fn witness_from_map_passes_check() {
    for which in [Which::FiveQubit, Which::ThreeQubit] {
        let ex = kraus::build_example_for(which, 0.2).unwrap();
        let (inst, w) = ex.witness().unwrap();
        let rep = sep::sep_witness_check(&inst, &w, 1e-9).unwrap();
        assert_eq!(rep.verdict, Verdict::Feasible, "{which:?}");
        assert!(rep.annihilator_weight.unwrap() > 0.0);
    }
}

#[test]
fn sep1_verdicts_for_the_examples() {
    let five = kraus::build_five_qubit_example(0.2)
        .unwrap()
        .conversion_instance()
        .unwrap();
    let rep = sep::sep1_feasible(&five, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::Infeasible);
    assert!(rep.farkas_check.unwrap().valid);
    let names: Vec<String> = rep
        .obstruction
        .unwrap()
        .iter()
        .map(|(p, _)| p.to_string())
        .collect();
    assert_eq!(names, vec!["+ZXZII".to_string()]);

    // the triangle state has symmetries outside its Pauli group
    let three = kraus::build_three_qubit_example(0.2)
        .unwrap()
        .conversion_instance()
        .unwrap();
    let rep = sep::sep1_feasible(&three, 1e-9).unwrap();
    assert_eq!(rep.verdict, Verdict::Inconclusive);
    assert!(!rep.obstruction.unwrap().is_empty());
}

#[test]
fn trace_monotone_on_the_examples() {
    // normalized tr H = 4/(1/8 + a³) and 1/(1/8 + a³) against tr G = 32 and 8
    for a in grid() {
        let n5 = kraus::build_five_qubit_example(a)
            .unwrap()
            .conversion_instance()
            .unwrap();
        let m = sep::trace_monotone_check(&n5, 1e-9).unwrap();
        assert!((m.trace_h - 4.0 / (0.125 + a.powi(3))).abs() < 1e-9);
        assert!((m.trace_g - 32.0).abs() < 1e-9);
        assert!(m.necessary_condition_holds && !m.equality_case);

        let n3 = kraus::build_three_qubit_example(a)
            .unwrap()
            .conversion_instance()
            .unwrap();
        let m = sep::trace_monotone_check(&n3, 1e-9).unwrap();
        assert!((m.trace_h - 1.0 / (0.125 + a.powi(3))).abs() < 1e-9);
        assert!((m.trace_g - 8.0).abs() < 1e-9);
    }
}

#[test]
fn h_is_the_positive_root() {
    let ex = kraus::build_five_qubit_example(0.35).unwrap();
    let big_h = kraus::target_gram(5, 0.35);
    for (h, target) in ex.h.factors().iter().zip(big_h.factors()) {
        assert!(linalg::hermitian_defect(h) < 1e-15);
        assert!(linalg::hermitian_eigenvalues(h)[0] > 0.0);
        assert!(linalg::max_abs_diff(&(h * h), target) < 1e-14);
    }
}

#[test]
fn projector_sum_is_a_rank_16_projector() {
    let sum = kraus::build_projectors_5q()
        .iter()
        .fold(CMat::zeros(32, 32), |acc, q| acc + q.to_matrix());
    let ev = linalg::hermitian_eigenvalues(&sum);
    assert_eq!(ev.iter().filter(|&&e| (e - 1.0).abs() < 1e-12).count(), 16);
    assert_eq!(ev.iter().filter(|&&e| e.abs() < 1e-12).count(), 16);
    let psi = graph_state(&Graph::ring(5).unwrap()).unwrap();
    assert!(
        tensor::apply_local(&kraus::build_projectors_5q()[0], &psi)
            .unwrap()
            .norm()
            < 1e-14
    );
}
