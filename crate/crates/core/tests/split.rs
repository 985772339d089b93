use jlo_core::cochain::{cocycle_residual_on, random_tuples};
use jlo_core::fixtures::*;
use jlo_core::jlo::{equivariant_index, gaussian_average, PairingInput, PairingOptions};
use jlo_core::linalg::*;
use jlo_core::split::*;
use jlo_core::Error;
use proptest::prelude::*;

fn opts() -> PairingOptions {
    PairingOptions::default()
}

fn sz() -> CMat {
    diag(&[1.0, -1.0])
}

fn sx() -> CMat {
    from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

fn model() -> N2Model {
    build_n2_susy_example(&N2Params::default(), 4).unwrap()
}

#[test]
fn validation_examples() {
    let p = pauli_split();
    let r = p.validate().unwrap();
    assert!(r.pass);
    assert!(r.check("q1_q2_independent").unwrap().residual < 1e-15);

    let same = SplitTriple::new(p.q1.clone(), p.q1.clone(), p.gamma.clone(), vec![]);
    let r = same.validate().unwrap();
    let chk = r.check("q1_q2_independent").unwrap();
    assert!(!chk.pass);
    assert!((chk.residual - 2.0 * op_norm(&(&p.q1 * &p.q1))).abs() < 1e-14);

    let flat = SplitTriple::new(p.q1.clone(), zeros(4), p.gamma.clone(), vec![]);
    assert!(flat.validate().unwrap().pass);
    assert!(op_norm(&(flat.momentum() - &p.q1 * &p.q1 * c(0.5, 0.0))) < 1e-15);
    assert!(op_norm(&(flat.hamiltonian() - flat.momentum())) < 1e-15);
}

#[test]
fn d1_examples() {
    let s = model().split;
    assert!(op_norm(&s.d1(&identity(s.dim)).unwrap()) < 1e-15);
    let q1sq = &s.q1 * &s.q1;
    assert!(op_norm(&s.d1(&q1sq).unwrap()) < 1e-14);
    let mut r = rng(1);
    let a = random_matrix(&mut r, s.dim, 1.0);
    let a = (&a + &s.gamma * &a * &s.gamma) * c(0.5, 0.0);
    assert!(op_norm(&(s.d1(&a).unwrap() - commutator(&s.q1, &a))) < 1e-13);
}

#[test]
fn component_examples() {
    let m = model();
    let s = &m.split;
    for g in 0..s.group.len() {
        let v = split_jlo_component(s, &[identity(s.dim)], g).unwrap();
        let direct = trace(&(&s.gamma * &s.group[g] * expm(&(-s.hamiltonian())).unwrap()));
        assert!((v - direct).norm() < 1e-12);
    }
    let mut r = rng(2);
    for n in [1usize, 3] {
        let args: Vec<CMat> = (0..=n)
            .map(|_| {
                let x = random_matrix(&mut r, s.dim, 1.0);
                s.zero_momentum_part(&((&x + &s.gamma * &x * &s.gamma) * c(0.5, 0.0))).unwrap()
            })
            .collect();
        assert!(split_jlo_component(s, &args, 1).unwrap().norm() < 1e-12);
    }
}

#[test]
fn component_rejects_momentum_carrying_elements() {
    let m = model();
    let s = &m.split;
    // mixes modes with different momentum
    let hop = kron(&identity(4), &sx());
    let r = split_jlo_component(s, &[identity(s.dim), hop], 0);
    assert!(matches!(r, Err(Error::ZeroMomentumViolation { index: 1, .. })));
}

#[test]
fn split_cochain_is_a_cocycle() {
    let m = model();
    let s = &m.split;
    let tau = split_cochain(s).unwrap();
    let t = s.derived_triple();
    let tuples: Vec<Vec<CMat>> = random_tuples(&t, 3, &[0, 1, 2, 3, 4], 1)
        .into_iter()
        .map(|tu| tu.iter().map(|x| s.zero_momentum_part(x).unwrap()).collect())
        .collect();
    assert!(cocycle_residual_on(&tau, &tuples).unwrap() < 1e-8);
}

#[test]
fn pairing_examples() {
    let m = model();
    let s = &m.split;
    for g in 0..s.group.len() {
        let r = split_pairing(s, &PairingInput::new(identity(s.dim), 1, g), opts()).unwrap();
        let idx = equivariant_index(&s.derived_triple(), g).unwrap();
        assert!((r.value - idx).norm() < 1e-12);
    }
    let p = pauli_split();
    let a = kron(&identity(2), &sz());
    let r = split_pairing(&p, &PairingInput::new(a, 1, 0), opts()).unwrap();
    assert!((r.series_value - r.quadrature_value).norm() < 1e-8);
}

#[test]
fn degenerate_split_matches_direct_formula() {
    // Q₂ = 0 on the exchange pair: H = ½, d₁γ = [σ_x, σ_z], J(t) = 2e^{-1/2}cosh 2t
    let s = SplitTriple::new(sx(), zeros(2), sz(), vec![]);
    let r = split_pairing(&s, &PairingInput::new(sz(), 1, 0), opts()).unwrap();
    assert!((r.value - c(2.0 * 0.5f64.exp(), 0.0)).norm() < 1e-10);
    assert!((r.series_value - r.quadrature_value).norm() < 1e-8);

    let t = random_triple(4, 4, 1);
    let s = SplitTriple::new(t.q.clone(), zeros(4), t.gamma.clone(), t.group.clone());
    // γ commutes with Q₁², so it carries zero momentum
    let a = t.gamma.clone();
    let h = s.hamiltonian();
    let d1a = s.d1(&a).unwrap();
    let direct = gaussian_average(64, |x| {
        let e = expm(&(-&h + &d1a * c(0.0, x)))?;
        Ok(trace(&(&s.gamma * &a * e)))
    })
    .unwrap();
    let r = split_pairing(&s, &PairingInput::new(a, 1, 0), opts()).unwrap();
    assert!((r.value - direct.value).norm() < 1e-10);
}

#[test]
fn coupling_examples() {
    let m = model();
    let input = PairingInput::new(kron(&kron(&identity(2), &from_real_rows(&[&[1.0, 0.0], &[0.0, 1.0]])), &identity(2)), 1, 1);
    let flat = coupling_sweep(|_| m.split.clone(), &input, &[0.0, 0.5, 1.0], CouplingMode::MomentumFixed, opts()).unwrap();
    assert_eq!(flat.spread, 0.0);
    let grid: Vec<f64> = (0..7).map(|i| i as f64 * std::f64::consts::PI / 6.0).collect();
    let rot = coupling_sweep(|th| m.rotated(th), &input, &grid, CouplingMode::MomentumFixed, opts()).unwrap();
    assert!(rot.spread < 1e-6);
    let scaled = |l: f64| {
        let mut s = m.split.clone();
        s.q2 = &s.q2 * c(1.0 + l, 0.0);
        s
    };
    let r = coupling_sweep(scaled, &input, &[0.0, 0.5], CouplingMode::MomentumFixed, opts());
    assert!(matches!(r, Err(Error::PNotFixed { .. })));
}

#[test]
fn q1_commutes_mode() {
    // Q₁(λ) = (1+λ)Q₁ changes P, so only the Q1Commutes hypotheses apply;
    // a = I commutes with every Q₁(λ)
    let p = pauli_split();
    let fam = |l: f64| {
        let mut s = p.clone();
        s.q1 = &p.q1 * c(1.0 + l, 0.0);
        s
    };
    let input = PairingInput::new(identity(4), 1, 0);
    let s = coupling_sweep(fam, &input, &[0.0, 0.2, 0.4], CouplingMode::Q1Commutes, opts()).unwrap();
    assert!(s.spread < 1e-6);
    let bad = kron(&identity(2), &sz());
    let moved = |l: f64| {
        let mut s = p.clone();
        s.q1 = &p.q1 + kron(&sx(), &sx()) * c(l, 0.0);
        s
    };
    let r = coupling_sweep(moved, &PairingInput::new(bad, 1, 0), &[0.0, 0.3], CouplingMode::Q1Commutes, opts());
    assert!(matches!(r, Err(Error::ValidationFailure(_))));
}

#[test]
fn n2_model_examples() {
    let m = model();
    assert!(m.split.validate().unwrap().pass);
    assert_eq!(m.split.dim, 8);
    assert!(m.j_commutation_residuals().iter().all(|&r| r < 1e-12));
    assert!(op_norm(&(m.unitary(0.0, 0.0).unwrap() - identity(8))) < 1e-15);
    let table = m.index_table(&[0.0, 0.5, 1.0], &[0.0, 1.0]).unwrap();
    assert_eq!(table.len(), 6);
    assert!(table.iter().all(|(_, _, v)| v.re.is_finite() && v.im.is_finite()));
    let minimal = build_n2_susy_example(&N2Params { d1: vec![1.0], p: vec![0.2] }, 2).unwrap();
    assert_eq!(minimal.split.dim, 4);
    assert!(build_n2_susy_example(&N2Params { d1: vec![0.1], p: vec![1.0] }, 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn momentum_commutes_with_heat_and_zero_momentum_elements(seed in any::<u64>()) {
        let m = model();
        let s = &m.split;
        let x = random_matrix(&mut rng(seed), s.dim, 1.0);
        let b = s.zero_momentum_part(&((&x + &s.gamma * &x * &s.gamma) * c(0.5, 0.0))).unwrap();
        let p = s.momentum();
        prop_assert!(op_norm(&commutator(&p, &b)) < 1e-12);
        let heat = expm(&(-s.hamiltonian() * c(0.7, 0.0))).unwrap();
        prop_assert!(op_norm(&commutator(&p, &heat)) < 1e-12);
        prop_assert!(s.d1_squared_residual(&b).unwrap() < 1e-10);
    }

    #[test]
    fn model_pairings_are_coherent(g in 0usize..4, theta in 0.0f64..3.2) {
        let m = model();
        let s = m.rotated(theta);
        let mut s2 = CMat::zeros(2, 2);
        s2[(0, 1)] = c(0.0, -1.0);
        s2[(1, 0)] = c(0.0, 1.0);
        let a = kron(&kron(&identity(2), &s2), &identity(2));
        let r = split_pairing(&s, &PairingInput::new(a, 1, g), opts()).unwrap();
        prop_assert!((r.series_value - r.quadrature_value).norm() < 1e-8);
    }
}
