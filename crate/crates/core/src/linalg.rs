//! Dense complex kernels: Hermitian eigensystems, the matrix exponential and
//! its Fréchet derivative, Schatten norms, and divided differences of the
//! exponential (simplex integrals of `exp`).

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

/// Relative tolerance of the Hermitian check in [`eig_hermitian`].
pub const HERMITIAN_RTOL: f64 = 1e-10;

/// Default 1-norm cap for [`expm`].
pub const EXPM_NORM_CAP: f64 = 1e3;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Real diagonal matrix.
pub fn diag(d: &[f64]) -> CMat {
    let n = d.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(d[i], 0.0) } else { C64::default() })
}

/// Builds a matrix from real row-major rows.
pub fn from_real_rows(rows: &[&[f64]]) -> CMat {
    let n = rows.len();
    CMat::from_fn(n, rows[0].len(), |i, j| c(rows[i][j], 0.0))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn anticommutator(a: &CMat, b: &CMat) -> CMat {
    a * b + b * a
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// `Tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::default();
    for i in 0..n {
        for k in 0..n {
            s += a[(i, k)] * b[(k, i)];
        }
    }
    s
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn check_square_finite(a: &CMat, what: &str) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            what: format!("{what} (not square)"),
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !is_finite(a) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

pub fn check_dim(a: &CMat, dim: usize, what: &str) -> Result<()> {
    if a.nrows() != dim || a.ncols() != dim {
        return Err(Error::DimensionMismatch {
            what: what.to_string(),
            expected: dim,
            found: if a.nrows() != dim { a.nrows() } else { a.ncols() },
        });
    }
    if !is_finite(a) {
        return Err(Error::NonFinite(what.to_string()));
    }
    Ok(())
}

/// Largest singular value.
pub fn op_norm(a: &CMat) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Maximum absolute column sum.
pub fn norm1(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest `|M[i,j] - conj(M[j,i])|` with its location.
pub fn hermitian_deviation(a: &CMat) -> (f64, usize, usize) {
    let n = a.nrows();
    let mut worst = (0.0, 0, 0);
    for i in 0..n {
        for j in i..n {
            let d = (a[(i, j)] - a[(j, i)].conj()).norm();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

/// Eigenvalues ascending, eigenvectors as the columns of a unitary matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMat,
}

impl HermitianEigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V diag(f(λ)) V*`.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMat {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (j, &l) in self.eigenvalues.iter().enumerate() {
            let fl = f(l);
            for i in 0..v.nrows() {
                scaled[(i, j)] *= fl;
            }
        }
        scaled * v.adjoint()
    }

    /// `V* x V`.
    pub fn to_eigenbasis(&self, x: &CMat) -> CMat {
        self.eigenvectors.adjoint() * x * &self.eigenvectors
    }

    /// `V x V*`.
    pub fn from_eigenbasis(&self, x: &CMat) -> CMat {
        &self.eigenvectors * x * self.eigenvectors.adjoint()
    }

    pub fn reconstruct(&self) -> CMat {
        self.apply_fn(|l| c(l, 0.0))
    }
}

/// Eigendecomposition of a Hermitian matrix.
///
/// The input must be Hermitian to within `1e-10 · ‖M‖`; it is symmetrized
/// before the decomposition.
pub fn eig_hermitian(m: &CMat) -> Result<HermitianEigenSystem> {
    check_square_finite(m, "eig_hermitian input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(HermitianEigenSystem {
            eigenvalues: vec![],
            eigenvectors: CMat::zeros(0, 0),
        });
    }
    let (dev, row, col) = hermitian_deviation(m);
    let scale = op_norm(m);
    if dev > HERMITIAN_RTOL * scale {
        return Err(Error::NotHermitian {
            deviation: dev,
            row,
            col,
        });
    }
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermitianEigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
// 1-norm thresholds for degrees 3, 5, 7, 9, 13 (double precision).
const THETA: [f64; 5] = [
    1.495585217958292e-2,
    2.539398330063230e-1,
    9.504178996162932e-1,
    2.097847961257068e0,
    5.371920351148152e0,
];

/// Matrix exponential by scaling and squaring with a diagonal Padé core.
pub fn expm(m: &CMat) -> Result<CMat> {
    expm_capped(m, EXPM_NORM_CAP)
}

/// [`expm`] with an explicit 1-norm cap.
pub fn expm_capped(m: &CMat, cap: f64) -> Result<CMat> {
    check_square_finite(m, "expm input")?;
    let n = m.nrows();
    if n == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let nrm = norm1(m);
    if nrm > cap {
        return Err(Error::Overflow { norm: nrm, cap });
    }
    if n == 1 {
        return Ok(CMat::from_element(1, 1, m[(0, 0)].exp()));
    }
    let id = identity(n);
    let (u, v, s) = if nrm <= THETA[3] {
        let a2 = m * m;
        let (u, v) = if nrm <= THETA[0] {
            pade_low(m, &a2, &PADE3, &id)
        } else if nrm <= THETA[1] {
            pade_low(m, &a2, &PADE5, &id)
        } else if nrm <= THETA[2] {
            pade_low(m, &a2, &PADE7, &id)
        } else {
            pade_low(m, &a2, &PADE9, &id)
        };
        (u, v, 0)
    } else {
        let s = if nrm > THETA[4] {
            (nrm / THETA[4]).log2().ceil().max(0.0) as i32
        } else {
            0
        };
        let a = m * c(2f64.powi(-s), 0.0);
        let (u, v) = pade13(&a, &id);
        (u, v, s)
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::NoConvergence {
            what: "expm".into(),
            detail: "singular Padé denominator".into(),
        })?;
    for _ in 0..s {
        r = &r * &r;
    }
    if !is_finite(&r) {
        return Err(Error::Overflow { norm: nrm, cap });
    }
    Ok(r)
}

fn pade_low(a: &CMat, a2: &CMat, b: &[f64], id: &CMat) -> (CMat, CMat) {
    let mut u = id * c(b[1], 0.0);
    let mut v = id * c(b[0], 0.0);
    let mut pow = id.clone();
    let mut k = 2;
    while k < b.len() {
        pow = &pow * a2;
        v += &pow * c(b[k], 0.0);
        if k + 1 < b.len() {
            u += &pow * c(b[k + 1], 0.0);
        }
        k += 2;
    }
    (a * u, v)
}

fn pade13(a: &CMat, id: &CMat) -> (CMat, CMat) {
    let b = &PADE13;
    let r = |x: f64| c(x, 0.0);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * r(b[13]) + &a4 * r(b[11]) + &a2 * r(b[9]));
    let u = a * (inner_u + &a6 * r(b[7]) + &a4 * r(b[5]) + &a2 * r(b[3]) + id * r(b[1]));
    let inner_v = &a6 * (&a6 * r(b[12]) + &a4 * r(b[10]) + &a2 * r(b[8]));
    let v = inner_v + &a6 * r(b[6]) + &a4 * r(b[4]) + &a2 * r(b[2]) + id * r(b[0]);
    (u, v)
}

/// `(exp A, L(A, E))` where `L` is the Fréchet derivative of the
/// exponential at `A` in direction `E`, read off the block exponential of
/// `[[A, E], [0, A]]`.
pub fn expm_frechet(a: &CMat, e: &CMat) -> Result<(CMat, CMat)> {
    let n = a.nrows();
    check_dim(e, n, "expm_frechet direction")?;
    let mut big = CMat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    big.view_mut((n, n), (n, n)).copy_from(a);
    big.view_mut((0, n), (n, n)).copy_from(e);
    let x = expm_capped(&big, 2.0 * EXPM_NORM_CAP)?;
    Ok((
        x.view((0, 0), (n, n)).into_owned(),
        x.view((0, n), (n, n)).into_owned(),
    ))
}

/// Divided difference `exp[y_0, …, y_n]` for `y_j ≤ 0`, from the
/// bidiagonal exponential with `y` on the diagonal and ones above it.
///
/// Every entry of that exponential is a divided difference of `exp`, hence
/// positive, so the squaring phase has no cancellation. The Taylor phase
/// runs on a matrix with diagonal in `[-1/2, 0]`.
fn exp_divided_difference_nonpos(y: &[f64]) -> f64 {
    let m = y.len();
    let w = y.iter().fold(0.0f64, |acc, &v| acc.max(-v));
    let s = if w > 0.5 {
        (w / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let h = 2f64.powi(-s);
    let z: Vec<f64> = y.iter().map(|v| v * h).collect();

    // Upper-triangular storage, row-major, full square for simplicity.
    let idx = |i: usize, j: usize| i * m + j;
    let mut f = vec![0.0f64; m * m];
    let mut term = vec![0.0f64; m * m];
    for i in 0..m {
        f[idx(i, i)] = 1.0;
        term[idx(i, i)] = 1.0;
    }
    // term_k = term_{k-1} · Z / k, Z = diag(z) + h·superdiag.
    let kmax = m + 24;
    let mut next = vec![0.0f64; m * m];
    for k in 1..=kmax {
        let inv = 1.0 / k as f64;
        for i in 0..m {
            for j in i..m {
                let mut v = term[idx(i, j)] * z[j];
                if j > i {
                    v += term[idx(i, j - 1)] * h;
                }
                next[idx(i, j)] = v * inv;
            }
        }
        std::mem::swap(&mut term, &mut next);
        for i in 0..m {
            for j in i..m {
                f[idx(i, j)] += term[idx(i, j)];
            }
        }
    }
    for _ in 0..s {
        let mut sq = vec![0.0f64; m * m];
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for k in i..=j {
                    acc += f[idx(i, k)] * f[idx(k, j)];
                }
                sq[idx(i, j)] = acc;
            }
        }
        f = sq;
    }
    f[idx(0, m - 1)]
}

/// Simplex integral `E(λ_0, …, λ_n; β) = ∫_{βσ_n} exp(-Σ s_j λ_j) d^n s`.
///
/// Equals `β^n` times the `(0, n)` entry of the exponential of the upper
/// bidiagonal matrix with `-βλ_j` on the diagonal and ones above it. The
/// computation shifts by the smallest point, so only divided differences of
/// `exp` on nonpositive arguments are formed.
pub fn simplex_exp(points: &[f64], beta: f64) -> f64 {
    assert!(!points.is_empty(), "simplex_exp needs at least one point");
    assert!(beta > 0.0 && beta.is_finite(), "beta must be positive");
    let n = points.len() - 1;
    let lmin = points.iter().cloned().fold(f64::INFINITY, f64::min);
    if n == 0 {
        return (-beta * points[0]).exp();
    }
    let y: Vec<f64> = points.iter().map(|&l| -beta * (l - lmin)).collect();
    beta.powi(n as i32) * (-beta * lmin).exp() * exp_divided_difference_nonpos(&y)
}

/// Exponent `p` of a Schatten norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchattenP {
    Finite(f64),
    Infinity,
}

impl From<f64> for SchattenP {
    fn from(p: f64) -> Self {
        if p.is_infinite() && p > 0.0 {
            SchattenP::Infinity
        } else {
            SchattenP::Finite(p)
        }
    }
}

/// `(Σ σ_i^p)^{1/p}` over singular values; `p = ∞` is the operator norm.
pub fn schatten_norm(m: &CMat, p: impl Into<SchattenP>) -> Result<f64> {
    if !is_finite(m) {
        return Err(Error::NonFinite("schatten_norm input".into()));
    }
    let sv = if m.is_empty() {
        Default::default()
    } else {
        m.singular_values()
    };
    match p.into() {
        SchattenP::Infinity => Ok(sv.iter().cloned().fold(0.0, f64::max)),
        SchattenP::Finite(p) => {
            if !(p >= 1.0) {
                return Err(Error::BadExponent(format!(
                    "Schatten exponent {p} is below 1"
                )));
            }
            let top = sv.iter().cloned().fold(0.0, f64::max);
            if top == 0.0 {
                return Ok(0.0);
            }
            let s: f64 = sv.iter().map(|x| (x / top).powf(p)).sum();
            Ok(top * s.powf(1.0 / p))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_scalar_and_diagonal() {
        let d = diag(&[-1.0, 0.5, 3.0]);
        let e = expm(&d).unwrap();
        for (i, v) in [-1.0f64, 0.5, 3.0].iter().enumerate() {
            assert!((e[(i, i)].re - v.exp()).abs() < 1e-14 * v.exp());
        }
    }

    #[test]
    fn expm_cap() {
        let m = diag(&[2000.0, 0.0]);
        assert!(matches!(expm(&m), Err(Error::Overflow { .. })));
    }

    #[test]
    fn divided_difference_two_points() {
        let v = simplex_exp(&[0.0, 1.0], 1.0);
        assert!((v - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
    }

    #[test]
    fn divided_difference_far_apart() {
        // (1 - e^{-100}) / 100
        let v = simplex_exp(&[0.0, 100.0], 1.0);
        assert!((v - 0.01).abs() < 1e-16);
    }

    #[test]
    fn schatten_rejects_small_p() {
        assert!(schatten_norm(&identity(2), 0.5).is_err());
    }
}
