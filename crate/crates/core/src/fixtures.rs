//! Seeded random and canonical test objects.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{c, diag, eig_hermitian, from_real_rows, identity, CMat, C64};
use crate::triple::SpectralTriple;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Entries i.i.d. complex Gaussian with variance `scale²`.
pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> CMat {
    let s = scale / 2f64.sqrt();
    CMat::from_fn(d, d, |_, _| c(s * normal(rng), s * normal(rng)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> CMat {
    let m = random_matrix(rng, d, scale);
    (&m + m.adjoint()) * c(0.5, 0.0)
}

/// Haar-ish unitary from the QR factor of a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let m = random_matrix(rng, d, 1.0);
    let qr = m.qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMat::from_fn(d, d, |i, j| {
        if i == j {
            let v = r[(i, i)];
            if v.norm() > 0.0 {
                v / v.norm()
            } else {
                c(1.0, 0.0)
            }
        } else {
            C64::default()
        }
    });
    q * phases
}

/// Random triple of dimension `dim` with a cyclic group of order `order`.
///
/// Built in a basis where `γ = diag(±1)` and basis vectors carry a flavor
/// `f ∈ ℤ_order`; `Q` couples even to odd vectors of equal flavor and
/// `U(g) = diag(e^{2πi g f / order})`. The whole structure is then
/// conjugated by a random unitary.
pub fn random_triple(seed: u64, dim: usize, order: usize) -> SpectralTriple {
    assert!(dim >= 2 && order >= 1);
    let mut r = rng(seed);
    // one more even than odd vector, so the index is generically nonzero
    let ne = (dim / 2 + 1).min(dim - 1);
    let flavor = |i: usize| if i < ne { i % order } else { (i - ne) % order };
    let scale = 1.0 / (dim as f64).sqrt();
    let mut q = CMat::zeros(dim, dim);
    for i in 0..ne {
        for j in ne..dim {
            if flavor(i) == flavor(j) {
                let v = c(scale * normal(&mut r), scale * normal(&mut r));
                q[(i, j)] = v;
                q[(j, i)] = v.conj();
            }
        }
    }
    let gamma = diag(&(0..dim).map(|i| if i < ne { 1.0 } else { -1.0 }).collect::<Vec<_>>());
    let group: Vec<CMat> = (0..order)
        .map(|g| {
            CMat::from_fn(dim, dim, |i, j| {
                if i == j {
                    C64::from_polar(1.0, 2.0 * PI * (g * flavor(i)) as f64 / order as f64)
                } else {
                    C64::default()
                }
            })
        })
        .collect();
    let w = random_unitary(&mut r, dim);
    let conj = |m: &CMat| &w * m * w.adjoint();
    SpectralTriple::new(conj(&q), conj(&gamma), group.iter().map(conj).collect())
}

/// `(x + γxγ)/2`.
pub fn even_part(t: &SpectralTriple, x: &CMat) -> CMat {
    (x + t.grade(x)) * c(0.5, 0.0)
}

/// `(x − γxγ)/2`.
pub fn odd_part(t: &SpectralTriple, x: &CMat) -> CMat {
    (x - t.grade(x)) * c(0.5, 0.0)
}

/// Average of `U x U*` over the group.
pub fn group_average(t: &SpectralTriple, x: &CMat) -> CMat {
    let mut acc = CMat::zeros(t.dim, t.dim);
    for u in &t.group {
        acc += u * x * u.adjoint();
    }
    acc / c(t.group.len() as f64, 0.0)
}

/// Random γ-even element (not group averaged).
pub fn random_even_element(rng: &mut ChaCha8Rng, t: &SpectralTriple, scale: f64) -> CMat {
    even_part(t, &random_matrix(rng, t.dim, scale))
}

/// Random γ-even element commuting with every group unitary.
pub fn random_invariant_element(rng: &mut ChaCha8Rng, t: &SpectralTriple, scale: f64) -> CMat {
    group_average(t, &random_even_element(rng, t, scale))
}

/// Random Hermitian, γ-odd, group-commuting perturbation.
pub fn random_odd_perturbation(rng: &mut ChaCha8Rng, t: &SpectralTriple, scale: f64) -> CMat {
    let h = random_hermitian(rng, t.dim, scale);
    group_average(t, &odd_part(t, &h))
}

/// `sign(h)` for a random Hermitian, γ-even, group-averaged `h`: an
/// involution in the invariant even algebra.
pub fn random_involution(rng: &mut ChaCha8Rng, t: &SpectralTriple) -> Result<CMat> {
    loop {
        let h = random_hermitian(rng, t.dim, 1.0);
        let h = group_average(t, &even_part(t, &h));
        let h = (&h + h.adjoint()) * c(0.5, 0.0);
        let e = eig_hermitian(&h)?;
        if e.eigenvalues.iter().all(|l| l.abs() > 1e-3) {
            return Ok(e.apply_fn(|l| c(l.signum(), 0.0)));
        }
    }
}

/// `Q = σ_x`, `γ = σ_z`, trivial group.
pub fn exchange_triple() -> SpectralTriple {
    SpectralTriple::new(
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        diag(&[1.0, -1.0]),
        vec![],
    )
}

/// `γ = diag(1,1,−1)`, `Q` coupling the last two basis vectors: one even
/// zero mode, so the index is 1.
pub fn zero_mode_triple() -> SpectralTriple {
    SpectralTriple::new(
        from_real_rows(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0], &[0.0, 1.0, 0.0]]),
        diag(&[1.0, 1.0, -1.0]),
        vec![],
    )
}

/// Two copies of the exchange triple swapped by a `ℤ₂` action.
pub fn swapped_exchange_triple() -> SpectralTriple {
    let t = exchange_triple();
    let i2 = identity(2);
    let swap = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let q = crate::linalg::kron(&i2, &t.q);
    let gamma = crate::linalg::kron(&i2, &t.gamma);
    let u = crate::linalg::kron(&swap, &i2);
    SpectralTriple::new(q, gamma, vec![identity(4), u])
}
