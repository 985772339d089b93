use jlo_core::cochain::random_tuples;
use jlo_core::fixtures::*;
use jlo_core::homotopy::*;
use jlo_core::jlo::{jlo_component, pair, PairingInput, PairingOptions};
use jlo_core::linalg::*;
use jlo_core::Error;
use proptest::prelude::*;

fn opts() -> PairingOptions {
    PairingOptions::default()
}

fn small_family(seed: u64, dim: usize, order: usize, size: f64) -> (DeformationFamily, PairingInput) {
    let t = random_triple(seed, dim, order);
    let mut r = rng(seed ^ 0xf);
    let q = random_odd_perturbation(&mut r, &t, 1.0);
    let q = &q * c(size / op_norm(&q), 0.0);
    let a = random_involution(&mut r, &t).unwrap();
    (DeformationFamily::linear(t, q, (-1.0, 1.0)), PairingInput::new(a, 1, order - 1))
}

#[test]
fn deform_examples() {
    let (f, _) = small_family(1, 4, 2, 0.3);
    let t0 = f.deform_triple(0.0).unwrap();
    assert!(op_norm(&(&t0.q - &f.base.q)) < 1e-15);
    let t1 = f.deform_triple(1.0).unwrap();
    assert!(op_norm(&(&t1.q - (&f.base.q + f.q(1.0)))) < 1e-15);
    assert!(t1.validate().unwrap().pass);
}

#[test]
fn deform_rejects_even_perturbations() {
    let t = random_triple(2, 4, 1);
    let bad = random_even_element(&mut rng(3), &t, 1.0);
    let bad = (&bad + bad.adjoint()) * c(0.5, 0.0);
    let f = DeformationFamily::linear(t, bad, (0.0, 1.0));
    assert!(matches!(f.deform_triple(1.0), Err(Error::ValidationFailure(_))));
}

#[test]
fn regularity_examples() {
    let (f, _) = small_family(4, 4, 1, 0.2);
    let grid = [-1.0, -0.5, 0.0, 0.5, 1.0];
    let rep = regularity_report(&f, &grid).unwrap();
    assert!(rep.iter().all(|r| r.a_below_one));
    assert!(rep.iter().all(|r| r.difference_quotient_residual < 1e-9));

    let t = random_triple(5, 4, 1);
    let scaling = DeformationFamily::linear(t.clone(), t.q.clone(), (-0.5, 0.5));
    for row in regularity_report(&scaling, &[-0.5, -0.25, 0.25, 0.5]).unwrap() {
        let a0 = row.kato.a_at(0.0).unwrap();
        assert!((a0 - row.lambda.abs()).abs() < 1e-6, "{a0} vs {}", row.lambda);
        assert!(row.a_below_one);
    }
}

#[test]
fn sweep_examples() {
    let t = random_triple(6, 4, 1);
    let a = random_involution(&mut rng(7), &t).unwrap();
    let input = PairingInput::new(a, 1, 0);
    let flat = DeformationFamily::linear(t.clone(), zeros(4), (0.0, 1.0));
    assert_eq!(sweep_invariant(&flat, &input, &[0.0, 0.5, 1.0], opts()).unwrap().spread, 0.0);

    let ex = exchange_triple();
    let q = from_real_rows(&[&[0.0, 0.4], &[0.4, 0.0]]);
    let f = DeformationFamily::linear(ex.clone(), q, (-1.0, 1.0));
    let grid: Vec<f64> = (0..9).map(|i| -1.0 + 0.25 * i as f64).collect();
    let s = sweep_invariant(&f, &PairingInput::new(ex.gamma.clone(), 1, 0), &grid, opts()).unwrap();
    assert!(s.spread < 1e-6);
    assert!((s.rows[0].value - c(2.0, 0.0)).norm() < 1e-8);

    let (f, _) = small_family(8, 5, 2, 0.4);
    let s = sweep_invariant(&f, &PairingInput::new(identity(5), 1, 1), &grid, opts()).unwrap();
    assert!(s.spread < 1e-8);
}

#[test]
fn sweep_aborts_on_non_invariant_input() {
    let sw = swapped_exchange_triple();
    let f = DeformationFamily::linear(sw, zeros(4), (0.0, 1.0));
    let moved = kron(&diag(&[1.0, -1.0]), &identity(2));
    let r = sweep_invariant(&f, &PairingInput::new(moved, 1, 0), &[0.0, 1.0], opts());
    assert!(matches!(r, Err(Error::NotInvariant(_))));
}

#[test]
fn sweep_csv_has_header_and_rows() {
    let (f, input) = small_family(9, 3, 1, 0.2);
    let s = sweep_invariant(&f, &input, &[0.0, 0.5], opts()).unwrap();
    let mut buf = Vec::new();
    s.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("lambda,eps,re,im"));
}

#[test]
fn transgression_examples() {
    let t = random_triple(10, 4, 1);
    let flat = DeformationFamily::linear(t.clone(), zeros(4), (0.0, 1.0));
    let tuples = random_tuples(&t, 11, &[0, 1, 2, 3], 2);
    let l = l_cochain(&flat, 0.5).unwrap();
    let h = h_cochain(&flat, 0.5).unwrap();
    for tu in &tuples {
        let n = tu.len() - 1;
        assert!(l.eval(n, tu, 0).unwrap().norm() < 1e-15);
        assert!(h.eval(n, tu, 0).unwrap().norm() < 1e-15);
    }
    assert!(coboundary_relation_residual(&flat, 0.5, &tuples).unwrap() < 1e-15);

    let (f, input) = small_family(12, 4, 1, 0.3);
    let tuples = random_tuples(&f.base, 13, &[0, 1, 2, 3, 4], 2);
    let h = h_cochain(&f, 0.2).unwrap();
    let l = l_cochain(&f, 0.2).unwrap();
    for tu in &tuples {
        let n = tu.len() - 1;
        if n % 2 == 0 {
            assert!(h.eval(n, tu, 0).unwrap().norm() < 1e-12);
        } else {
            assert!(l.eval(n, tu, 0).unwrap().norm() < 1e-12);
        }
    }
    assert!(derivative_residual(&f, 0.2, FD_STEP, &tuples).unwrap() < 1e-5);
    assert!(coboundary_relation_residual(&f, 0.2, &tuples).unwrap() < 1e-8);
    assert!(l_pairing(&f, 0.2, &input, 64).unwrap().norm() < 1e-8);
}

#[test]
fn integrated_transgression_matches_cochain_difference() {
    let (f, _) = small_family(14, 3, 1, 0.3);
    let grid: Vec<f64> = (0..=40).map(|i| -0.5 + 0.025 * i as f64).collect();
    let tuples = random_tuples(&f.base, 15, &[0, 1, 2], 2);
    assert!(integrated_coboundary_residual(&f, &grid, &tuples).unwrap() < 1e-5);
    // and the cochain really moves, so the check is not vacuous
    let a = &tuples[4];
    let t0 = f.deform_triple(-0.5).unwrap();
    let t1 = f.deform_triple(0.5).unwrap();
    let d = (jlo_component(&t1, a, 0, 1.0).unwrap() - jlo_component(&t0, a, 0, 1.0).unwrap()).norm();
    assert!(d > 1e-4);
}

#[test]
fn beta_independence_examples() {
    let ex = exchange_triple();
    let input = PairingInput::new(ex.gamma.clone(), 1, 0);
    let same = beta_independence(&ex, &input, &[1.0, 1.0], opts()).unwrap();
    assert_eq!(same.spread, 0.0);
    assert!(beta_independence(&ex, &input, &[0.5, 1.0, 2.0], opts()).unwrap().spread < 1e-6);
    let zm = zero_mode_triple();
    let s = beta_independence(&zm, &PairingInput::new(identity(3), 1, 0), &[0.5, 1.0, 2.0], opts()).unwrap();
    assert!(s.rows.iter().all(|r| (r.value - c(1.0, 0.0)).norm() < 1e-10));
}

#[test]
fn endpoint_examples() {
    let (f, input) = small_family(16, 3, 1, 0.3);
    let lambdas = [0.25, 0.5];
    let eps = [0.0, 0.1, 0.2, 0.4];
    let flat = endpoint_grid(&f, &eps, &lambdas, &input, 64).unwrap();
    for il in 0..2 {
        for ie in 1..eps.len() {
            assert!((flat.value(ie, il) - flat.value(0, il)).norm() < 1e-12);
        }
    }
    let mut r = rng(17);
    let z = random_invariant_element(&mut r, &f.base, 1.0);
    let zz = z.adjoint() * &z;
    let f = f.with_regularizer((&zz + zz.adjoint()) * c(0.5, 0.0));
    let g = endpoint_grid(&f, &eps, &lambdas, &input, 64).unwrap();
    let sweep = sweep_invariant(&f, &input, &lambdas, opts()).unwrap();
    for il in 0..2 {
        assert!((g.value(0, il) - sweep.rows[il].value).norm() < 1e-10);
    }
    assert!(g.monotone_in_eps.iter().all(|&m| m));
    assert_eq!(g.d_eps.len(), eps.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn regular_families_have_constant_pairing(seed in any::<u64>(), dim in 3usize..6, order in 1usize..3) {
        let (f, input) = small_family(seed, dim, order, 0.4);
        let grid: Vec<f64> = (0..5).map(|i| -1.0 + 0.5 * i as f64).collect();
        let rep = regularity_report(&f, &grid).unwrap();
        prop_assume!(rep.iter().all(|r| r.a_below_one));
        let s = sweep_invariant(&f, &input, &grid, opts()).unwrap();
        prop_assert!(s.spread < 1e-6);
    }

    #[test]
    fn coboundary_relation_holds(seed in any::<u64>(), lambda in -0.9f64..0.9) {
        let (f, _) = small_family(seed, 3, 2, 0.3);
        let tuples = random_tuples(&f.base, seed ^ 1, &[0, 1, 2, 3], 1);
        prop_assert!(coboundary_relation_residual(&f, lambda, &tuples).unwrap() < 1e-8);
    }

    #[test]
    fn pairing_is_beta_independent(seed in any::<u64>(), beta in 0.4f64..2.5) {
        let t = random_triple(seed, 4, 1);
        let a = random_involution(&mut rng(seed ^ 2), &t).unwrap();
        let input = PairingInput::new(a, 1, 0);
        let v1 = pair(&t, &input, opts()).unwrap().value;
        let vb = pair(&t, &input, PairingOptions { beta, ..opts() }).unwrap().value;
        prop_assert!((v1 - vb).norm() < 1e-6);
    }
}
