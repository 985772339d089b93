use jlo_core::cochain::{cocycle_residual, random_cochain, random_tuples, Cochain};
use jlo_core::expectations::{repeated_vertex_moments, HeatContext};
use jlo_core::fixtures::*;
use jlo_core::jlo::*;
use jlo_core::linalg::*;
use jlo_core::quadrature::gauss_hermite;
use jlo_core::triple::SpectralTriple;
use jlo_core::Error;
use proptest::prelude::*;

fn opts() -> PairingOptions {
    PairingOptions::default()
}

#[test]
fn component_examples() {
    let t = random_triple(1, 4, 2);
    for g in 0..2 {
        let v = jlo_component(&t, &[identity(4)], g, 1.0).unwrap();
        let direct = trace(&(&t.gamma * &t.group[g] * expm(&(-t.hamiltonian())).unwrap()));
        assert!((v - direct).norm() < 1e-12);
    }
    let zm = zero_mode_triple();
    assert!((jlo_component(&zm, &[identity(3)], 0, 1.0).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    let mut r = rng(2);
    for n in [1usize, 3] {
        let args: Vec<CMat> = (0..=n).map(|_| random_even_element(&mut r, &t, 1.0)).collect();
        assert!(jlo_component(&t, &args, 1, 1.0).unwrap().norm() < 1e-12);
    }
}

#[test]
fn cochain_examples() {
    let t = random_triple(3, 4, 2);
    let tau = jlo_cochain(&t, 1.0).unwrap();
    assert!(cocycle_residual(&tau, &t, 3, &[0, 1, 2, 3, 4], 4).unwrap() < 1e-8);
    let j = Jlo::new(&t, 1.0).unwrap();
    for tuple in random_tuples(&t, 5, &[1, 2, 3, 4], 2) {
        assert!(alternating_sum_residual(&j, &tuple, 1).unwrap() < 1e-9);
        let mut with_id = tuple.clone();
        with_id[1] = identity(4);
        assert!(tau.eval(with_id.len() - 1, &with_id, 0).unwrap().norm() < 1e-14);
    }
}

#[test]
fn generating_functional_examples() {
    let ex = exchange_triple();
    for tv in [0.0, 0.3, 1.0, 2.0] {
        let jv = generating_functional(&ex, &PairingInput::new(ex.gamma.clone(), 1, 0), c(tv, 0.0), 1.0).unwrap();
        let want = 2.0 * (-1.0f64).exp() * (2.0 * tv).cosh();
        assert!((jv - c(want, 0.0)).norm() < 1e-12 * want);
    }
    let t = random_triple(6, 4, 2);
    let j0 = generating_functional(&t, &PairingInput::new(identity(4), 1, 1), C64::default(), 1.0).unwrap();
    assert!((j0 - equivariant_index(&t, 1).unwrap()).norm() < 1e-12);
}

#[test]
fn generating_functional_matches_its_series() {
    let t = random_triple(7, 4, 1);
    let a = random_involution(&mut rng(8), &t).unwrap();
    let input = PairingInput::new(a.clone(), 1, 0);
    let ctx = HeatContext::from_triple(&t).unwrap();
    let da = t.derivative(&a).unwrap();
    let levels: Vec<usize> = (0..=40).map(|k| 2 * k).collect();
    let tau = repeated_vertex_moments(&ctx, &a, &da, 0, 1.0, &levels).unwrap();
    for tv in [0.5, 1.0, 2.0] {
        let series: C64 = tau.iter().enumerate().map(|(k, v)| v * (-tv * tv as f64).powi(k as i32)).sum();
        let jv = generating_functional(&t, &input, c(tv, 0.0), 1.0).unwrap();
        assert!((jv - series).norm() < 1e-8 * jv.norm().max(1.0));
    }
}

#[test]
fn series_examples() {
    let a = pairing_coefficients(3);
    assert_eq!(a, vec![1.0, -0.5, 0.75]);
    let t = random_triple(9, 4, 2);
    let r = pairing_series(&t, &PairingInput::new(identity(4), 1, 1), 40, 1e-14, 1.0).unwrap();
    assert!((r.value - equivariant_index(&t, 1).unwrap()).norm() < 1e-12);
    let ex = exchange_triple();
    let r = pairing_series(&ex, &PairingInput::new(ex.gamma.clone(), 1, 0), 160, 1e-14, 1.0).unwrap();
    assert!((r.value - c(2.0, 0.0)).norm() < 1e-10);
    assert!(r.tail_bound >= 0.0);
}

#[test]
fn series_reports_non_convergence() {
    let ex = exchange_triple();
    let r = pairing_series(&ex, &PairingInput::new(ex.gamma.clone(), 1, 0), 4, 1e-14, 1.0);
    assert!(matches!(r, Err(Error::NoConvergence { .. })));
}

#[test]
fn gaussian_examples() {
    let (x, w) = gauss_hermite(DEFAULT_QUAD_NODES);
    let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
    assert!((m2 - 0.5).abs() < 1e-14);
    let t = random_triple(10, 5, 3);
    for g in 0..3 {
        let r = pairing_gaussian(&t, &PairingInput::new(identity(5), 1, g), 64, 1.0).unwrap();
        assert!((r.value - equivariant_index(&t, g).unwrap()).norm() < 1e-12);
    }
    let ex = exchange_triple();
    let r = pairing_gaussian(&ex, &PairingInput::new(ex.gamma.clone(), 1, 0), 64, 1.0).unwrap();
    assert!((r.value - c(2.0, 0.0)).norm() < 1e-10);
}

#[test]
fn index_examples() {
    assert!(equivariant_index(&exchange_triple(), 0).unwrap().norm() < 1e-15);
    assert!((equivariant_index(&zero_mode_triple(), 0).unwrap() - c(1.0, 0.0)).norm() < 1e-14);
    let flat = SpectralTriple::new(zeros(2), diag(&[1.0, -1.0]), vec![]);
    assert!(equivariant_index(&flat, 0).unwrap().norm() < 1e-15);
    // the swap exchanges two copies: the twisted index sees only the fixed part
    let sw = swapped_exchange_triple();
    assert!(equivariant_index(&sw, 1).unwrap().norm() < 1e-15);
}

#[test]
fn coboundary_examples() {
    let t = random_triple(11, 3, 1);
    let a = random_involution(&mut rng(12), &t).unwrap();
    let input = PairingInput::new(a, 1, 0);
    let g = random_cochain(&t, 13, 7).unwrap();
    assert!(coboundary_pairing_residual(&g, &input, 40).unwrap() < 1e-8);
    assert_eq!(coboundary_pairing_residual(&Cochain::zero(t.group.clone()), &input, 40).unwrap(), 0.0);
    let tau = jlo_cochain(&t, 1.0).unwrap();
    assert!(coboundary_pairing_residual(&tau, &input, 40).unwrap() < 1e-8);
}

#[test]
fn input_validation() {
    let t = random_triple(14, 4, 2);
    let not_inv = random_even_element(&mut rng(15), &t, 1.0);
    assert!(matches!(PairingInput::new(not_inv, 1, 0).validate(&t), Err(Error::ValidationFailure(_))));
    assert!(matches!(PairingInput::new(t.gamma.clone() * &t.q, 1, 0).validate(&t), Err(Error::ValidationFailure(_))));
    let sw = swapped_exchange_triple();
    let moved = kron(&diag(&[1.0, -1.0]), &identity(2));
    assert!(matches!(PairingInput::new(moved, 1, 0).validate(&sw), Err(Error::NotInvariant(_))));
    assert!(matches!(PairingInput::new(identity(4), 1, 7).validate(&t), Err(Error::GroupIndex { .. })));
}

#[test]
fn block_pairing_is_additive_on_block_diagonals() {
    let t = random_triple(16, 3, 2);
    let mut r = rng(17);
    let a1 = random_involution(&mut r, &t).unwrap();
    let a2 = random_involution(&mut r, &t).unwrap();
    let mut a = zeros(6);
    a.view_mut((0, 0), (3, 3)).copy_from(&a1);
    a.view_mut((3, 3), (3, 3)).copy_from(&a2);
    let both = pair(&t, &PairingInput::new(a, 2, 1), opts()).unwrap();
    let p1 = pair(&t, &PairingInput::new(a1, 1, 1), opts()).unwrap();
    let p2 = pair(&t, &PairingInput::new(a2, 1, 1), opts()).unwrap();
    assert!((both.value - p1.value - p2.value).norm() < 1e-10);
    assert!((both.series_value - both.quadrature_value).norm() < 1e-8);
}

#[test]
fn block_pairing_sees_off_diagonal_involutions() {
    // a = [[0, u], [u*, 0]] with u = I is conjugate to diag(I, −I)
    let t = random_triple(18, 3, 1);
    let mut a = zeros(6);
    a.view_mut((0, 3), (3, 3)).copy_from(&identity(3));
    a.view_mut((3, 0), (3, 3)).copy_from(&identity(3));
    let r = pair(&t, &PairingInput::new(a, 2, 0), opts()).unwrap();
    assert!(r.value.norm() < 1e-10);
    assert!((r.series_value - r.quadrature_value).norm() < 1e-8);
}

#[test]
fn idempotent_form() {
    let ex = exchange_triple();
    let p = diag(&[1.0, 0.0]);
    let v = idempotent_pairing(&ex, &p, 1, 0, opts()).unwrap();
    // ½(2 + 0)
    assert!((v - c(1.0, 0.0)).norm() < 1e-10);
}

#[test]
fn entire_decay_is_monotone() {
    let t = random_triple(19, 4, 1);
    let a = random_involution(&mut rng(20), &t).unwrap();
    let levels: Vec<usize> = (1..=12).map(|k| 2 * k).collect();
    let d = entire_decay(&t, &a, 0, &levels).unwrap();
    assert!(d.windows(2).all(|w| w[1].1 <= w[0].1), "{d:?}");
}

#[test]
fn beta_plane_pairing_is_independent_of_beta() {
    let t = random_triple(21, 4, 2);
    let a = random_involution(&mut rng(22), &t).unwrap();
    let input = PairingInput::new(a, 1, 1);
    let base = pair(&t, &input, opts()).unwrap().value;
    for beta in [0.5, 2.0] {
        let o = PairingOptions { beta, ..opts() };
        assert!((pair(&t, &input, o).unwrap().value - base).norm() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn series_matches_gaussian(seed in any::<u64>(), dim in 2usize..6, order in 1usize..3) {
        let t = random_triple(seed, dim, order);
        let a = random_involution(&mut rng(seed ^ 1), &t).unwrap();
        for g in 0..t.order() {
            let r = pair(&t, &PairingInput::new(a.clone(), 1, g), opts()).unwrap();
            prop_assert!((r.series_value - r.quadrature_value).norm() < 1e-8);
        }
    }

    #[test]
    fn pairing_is_an_integer_for_trivial_group(seed in any::<u64>(), dim in 2usize..6) {
        let t = random_triple(seed, dim, 1);
        let a = random_involution(&mut rng(seed ^ 2), &t).unwrap();
        let v = pair(&t, &PairingInput::new(a, 1, 0), opts()).unwrap().value;
        prop_assert!((v.re - v.re.round()).abs() < 1e-8 && v.im.abs() < 1e-8);
    }

    #[test]
    fn jlo_is_a_cocycle(seed in any::<u64>(), dim in 2usize..5, beta in 0.5f64..2.0) {
        let t = random_triple(seed, dim, 2);
        let tau = jlo_cochain(&t, beta).unwrap();
        prop_assert!(cocycle_residual(&tau, &t, 1, &[0, 1, 2, 3], seed ^ 3).unwrap() < 1e-8);
    }
}
