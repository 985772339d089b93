use jlo_core::acceptance::complex_identity_residual;
use jlo_core::cochain::*;
use jlo_core::error::CochainClass;
use jlo_core::fixtures::*;
use jlo_core::linalg::*;
use jlo_core::Error;
use proptest::prelude::*;

/// `f_n(a) = Tr(a_0 ⋯ a_n)`, a plain multilinear functional of class D.
fn trace_cochain(group: Vec<CMat>) -> Cochain {
    Cochain::new(group, None, Parity::Mixed, CochainClass::D, "tr", |_, a, _| {
        let mut p = a[0].clone();
        for x in &a[1..] {
            p = p * x;
        }
        Ok(trace(&p))
    })
}

#[test]
fn t_examples() {
    let t = random_triple(1, 3, 2);
    let f = random_normalized_cochain(&t, 2, 4).unwrap();
    let a = random_tuples(&t, 3, &[0, 1, 2], 1);
    // n = 0: (Tf)(a_0) = f(a_0^{g⁻¹})
    let moved = t.act_inverse(1, &a[0][0]).unwrap();
    let lhs = op_t(&f).eval(0, &a[0], 1).unwrap();
    assert!((lhs - f.eval(0, &[moved], 1).unwrap()).norm() < 1e-14);
    // n = 1, trivial group: (Tf)(a_0, a_1) = −f(a_1, a_0)
    let swapped = vec![a[1][1].clone(), a[1][0].clone()];
    let lhs = op_t(&f).eval(1, &a[1], 0).unwrap();
    assert!((lhs + f.eval(1, &swapped, 0).unwrap()).norm() < 1e-14);
    // T^{n+1} = I at n = 2
    let lhs = op_t_pow(&f, 3).eval(2, &a[2], 1).unwrap();
    assert!((lhs - f.eval(2, &a[2], 1).unwrap()).norm() < 1e-12);
}

#[test]
fn b_of_trace_vanishes() {
    let f = trace_cochain(vec![identity(3)]);
    let f0 = Cochain::new(vec![identity(3)], Some(0), Parity::Even, CochainClass::C, "tr0", move |n, a, g| f.eval(n, a, g));
    let b = op_b(&f0).unwrap();
    let mut r = rng(4);
    let args = vec![random_matrix(&mut r, 3, 1.0), random_matrix(&mut r, 3, 1.0)];
    assert!(b.eval(1, &args, 0).unwrap().norm() < 1e-13);
}

#[test]
fn boundary_operators_reject_class_d() {
    let f = trace_cochain(vec![identity(2)]);
    for r in [op_b(&f), op_big_b(&f), op_partial(&f), op_partial_bar(&f)] {
        assert!(matches!(r, Err(Error::ClassViolation { .. })));
    }
}

#[test]
fn random_cochain_examples() {
    let t = random_triple(5, 3, 2);
    let f = random_cochain(&t, 6, 4).unwrap();
    assert_eq!(f.class, CochainClass::C);
    // level 0 is the unprojected slot, so the identity does not annihilate it
    assert!(f.eval(0, &[identity(3)], 0).unwrap().norm() > 0.0);
    let mut tu = random_tuples(&t, 7, &[2], 1).remove(0);
    tu[2] = identity(3);
    assert_eq!(f.eval(2, &tu, 1).unwrap().norm(), 0.0);
    let tuples = random_tuples(&t, 8, &[0, 1, 2, 3], 2);
    assert!(diagonal_invariance_residual(&f, &tuples, 1).unwrap() < 1e-12);
    check_class(&f, &tuples, 1, 1e-14).unwrap();
    let g = random_normalized_cochain(&t, 9, 4).unwrap();
    check_class(&g, &tuples, 1, 1e-14).unwrap();
}

#[test]
fn class_check_reports_violation() {
    let t = random_triple(10, 3, 1);
    let mut f = trace_cochain(t.group.clone());
    f.class = CochainClass::C;
    let tuples = random_tuples(&t, 11, &[1], 1);
    assert!(matches!(check_class(&f, &tuples, 0, 1e-12), Err(Error::ClassViolation { .. })));
}

#[test]
fn eval_checks_arguments() {
    let t = random_triple(12, 3, 2);
    let f = random_cochain(&t, 13, 3).unwrap();
    assert!(matches!(f.eval(1, &[identity(3)], 0), Err(Error::DimensionMismatch { .. })));
    assert!(matches!(f.eval(0, &[identity(3)], 5), Err(Error::GroupIndex { .. })));
    // above max_level the cochain vanishes
    let tu = random_tuples(&t, 14, &[5], 1).remove(0);
    assert_eq!(f.eval(5, &tu, 0).unwrap(), C64::default());
}

#[test]
fn cocycle_residual_examples() {
    let t = random_triple(15, 3, 2);
    let g = random_cochain(&t, 16, 6).unwrap();
    assert!(cocycle_residual(&g, &t, 2, &[0, 1, 2], 17).unwrap() > 1e-6);
    let dg = op_partial(&g).unwrap();
    assert!(cocycle_residual(&dg, &t, 2, &[0, 1, 2, 3], 18).unwrap() < 1e-9);
}

#[test]
fn b_preserves_c_and_big_b_lands_in_n() {
    let t = random_triple(19, 3, 2);
    let f = random_cochain(&t, 20, 6).unwrap();
    let tuples = random_tuples(&t, 21, &[1, 2, 3], 2);
    let b = op_b(&f).unwrap();
    let bb = op_big_b(&f).unwrap();
    assert_eq!(b.class, CochainClass::C);
    assert_eq!(bb.class, CochainClass::N);
    for g in 0..2 {
        check_class(&b, &tuples, g, 1e-12).unwrap();
        check_class(&bb, &tuples, g, 1e-12).unwrap();
    }
}

#[test]
fn norm_profile_is_nonnegative() {
    let t = random_triple(22, 3, 1);
    let f = random_cochain(&t, 23, 5).unwrap();
    let p = norm_profile(&f, &t, &[0, 1, 2, 3], 3, 24).unwrap();
    assert_eq!(p.levels.len(), 4);
    assert!(p.levels.iter().all(|&(_, v)| v >= 0.0));
    assert_eq!(p.entire_indicator().len(), 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn complex_identities_hold(seed in any::<u64>(), dim in 2usize..4, order in 1usize..3, n in 0usize..4) {
        let t = random_triple(seed, dim, order);
        let f = random_cochain(&t, seed ^ 1, 6).unwrap();
        let tuple = random_tuples(&t, seed ^ 2, &[n], 1).remove(0);
        for g in 0..t.order() {
            prop_assert!(complex_identity_residual(&f, &tuple, g).unwrap() < 1e-10);
        }
    }

    #[test]
    fn partial_bar_squares_to_zero(seed in any::<u64>(), n in 0usize..3) {
        let t = random_triple(seed, 3, 2);
        let f = random_cochain(&t, seed ^ 3, 6).unwrap();
        let dd = op_partial_bar(&op_partial_bar(&f).unwrap()).unwrap();
        let tuple = random_tuples(&t, seed ^ 4, &[n], 1).remove(0);
        prop_assert!(dd.eval(n, &tuple, 1).unwrap().norm() < 1e-10);
    }

    #[test]
    fn random_cochains_are_diagonally_invariant(seed in any::<u64>(), order in 1usize..4) {
        let t = random_triple(seed, 3, order);
        let f = random_cochain(&t, seed ^ 5, 3).unwrap();
        let tuples = random_tuples(&t, seed ^ 6, &[0, 1, 2], 1);
        for g in 0..t.order() {
            prop_assert!(diagonal_invariance_residual(&f, &tuples, g).unwrap() < 1e-12);
        }
    }
}
