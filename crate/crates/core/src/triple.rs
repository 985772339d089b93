//! Finite-dimensional spectral triples `(Q, γ, {U(g)})`: validation, the
//! graded derivation, Sobolev and interpolation norms, regularity
//! exponents, and Kato constants of perturbations.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    anticommutator, c, check_dim, check_square_finite, commutator, eig_hermitian, identity,
    op_norm, CMat,
};
use crate::quadrature::{golden_max, integrate_half_line_log};

pub const DEFAULT_TOL: f64 = 1e-10;

/// `{Q, γ, U(g)}` on `C^dim`. Group element 0 is the identity.
#[derive(Debug, Clone)]
pub struct SpectralTriple {
    pub dim: usize,
    pub q: CMat,
    pub gamma: CMat,
    pub group: Vec<CMat>,
    pub tol: f64,
}

/// One named invariant with its residual.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn new() -> Self {
        ValidationReport {
            checks: Vec::new(),
            pass: true,
            notes: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, residual: f64, tol: f64) {
        let pass = residual <= tol;
        self.pass &= pass;
        self.checks.push(Check {
            name: name.into(),
            residual,
            tol,
            pass,
        });
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.pass).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn into_result(self) -> Result<Self> {
        if self.pass {
            Ok(self)
        } else {
            let msg = self
                .failures()
                .iter()
                .map(|c| format!("{} (residual {:e})", c.name, c.residual))
                .collect::<Vec<_>>()
                .join(", ");
            Err(Error::ValidationFailure(msg))
        }
    }
}

impl Default for ValidationReport {
    fn default() -> Self {
        Self::new()
    }
}

impl SpectralTriple {
    /// Builds a triple without validating it. An empty group becomes `{I}`.
    pub fn new(q: CMat, gamma: CMat, group: Vec<CMat>) -> Self {
        let dim = q.nrows();
        let group = if group.is_empty() {
            vec![identity(dim)]
        } else {
            group
        };
        SpectralTriple {
            dim,
            q,
            gamma,
            group,
            tol: DEFAULT_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    /// Builds and validates.
    pub fn validated(q: CMat, gamma: CMat, group: Vec<CMat>) -> Result<Self> {
        let t = Self::new(q, gamma, group);
        t.validate()?.into_result()?;
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.group.len()
    }

    pub fn unitary(&self, g: usize) -> Result<&CMat> {
        self.group.get(g).ok_or(Error::GroupIndex {
            index: g,
            order: self.group.len(),
        })
    }

    /// `H = Q²`.
    pub fn hamiltonian(&self) -> CMat {
        let h = &self.q * &self.q;
        (&h + h.adjoint()) * c(0.5, 0.0)
    }

    fn check_shapes(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        check_dim(&self.q, self.dim, "Q")?;
        check_dim(&self.gamma, self.dim, "gamma")?;
        for (i, u) in self.group.iter().enumerate() {
            check_dim(u, self.dim, &format!("group[{i}]"))?;
        }
        Ok(())
    }

    /// Residual of every structural invariant, in operator norm.
    pub fn validate(&self) -> Result<ValidationReport> {
        self.check_shapes()?;
        let tol = self.tol;
        let id = identity(self.dim);
        let mut r = ValidationReport::new();
        r.push("gamma_hermitian", op_norm(&(&self.gamma - self.gamma.adjoint())), tol);
        r.push("gamma_squared_identity", op_norm(&(&self.gamma * &self.gamma - &id)), tol);
        r.push("q_hermitian", op_norm(&(&self.q - self.q.adjoint())), tol);
        r.push(
            "q_gamma_anticommute",
            op_norm(&anticommutator(&self.q, &self.gamma)),
            tol,
        );
        r.push("group_identity_first", op_norm(&(&self.group[0] - &id)), tol);
        for (i, u) in self.group.iter().enumerate() {
            r.push(
                format!("group[{i}]_unitary"),
                op_norm(&(u.adjoint() * u - &id)),
                tol,
            );
            r.push(
                format!("group[{i}]_commutes_gamma"),
                op_norm(&commutator(u, &self.gamma)),
                tol,
            );
            r.push(
                format!("group[{i}]_commutes_q"),
                op_norm(&commutator(u, &self.q)),
                tol,
            );
        }
        r.notes
            .push("theta-summability holds automatically in finite dimension".into());
        Ok(r)
    }

    /// Graded derivation `db = Qb − γbγQ`; `[Q, a]` on γ-even `a`.
    pub fn derivative(&self, b: &CMat) -> Result<CMat> {
        check_dim(b, self.dim, "derivative argument")?;
        Ok(&self.q * b - &self.gamma * b * &self.gamma * &self.q)
    }

    /// `x^γ = γ x γ`.
    pub fn grade(&self, x: &CMat) -> CMat {
        &self.gamma * x * &self.gamma
    }

    /// `x^g = U(g) x U(g)*`.
    pub fn act(&self, g: usize, x: &CMat) -> Result<CMat> {
        let u = self.unitary(g)?;
        Ok(u * x * u.adjoint())
    }

    /// `x^{g⁻¹} = U(g)* x U(g)`.
    pub fn act_inverse(&self, g: usize, x: &CMat) -> Result<CMat> {
        let u = self.unitary(g)?;
        Ok(u.adjoint() * x * u)
    }

    /// `‖(Q²+I)^{p2/2} x (Q²+I)^{-p1/2}‖`.
    pub fn sobolev_norm(&self, x: &CMat, p2: f64, p1: f64) -> Result<f64> {
        check_dim(x, self.dim, "sobolev_norm argument")?;
        let eig = eig_hermitian(&self.q)?;
        let xt = eig.to_eigenbasis(x);
        let w: Vec<f64> = eig.eigenvalues.iter().map(|l| 1.0 + l * l).collect();
        let m = CMat::from_fn(self.dim, self.dim, |i, j| {
            xt[(i, j)] * c(w[i].powf(0.5 * p2) * w[j].powf(-0.5 * p1), 0.0)
        });
        Ok(op_norm(&m))
    }

    /// `‖a‖ + c_{α+β} ‖R^β (da) R^α‖` with `R = (Q²+I)^{-1/2}`.
    pub fn interpolation_norm(&self, a: &AlgebraElement, vt: VertexType) -> Result<f64> {
        let mu = vt.alpha + vt.beta;
        if mu >= 1.0 {
            return Err(Error::BadExponents { sum: mu });
        }
        let da = self.derivative(&a.matrix)?;
        let d_part = self.sobolev_norm(&da, -vt.beta, vt.alpha)?;
        let base = op_norm(&a.matrix);
        if d_part == 0.0 {
            return Ok(base);
        }
        Ok(base + numeric_c_mu(mu)? * d_part)
    }

    /// Minimal `a(M)` with `q² ≤ a²Q² + M²` on the grid `M = 0, ¼, …, 4‖q‖`.
    pub fn kato_constants(&self, q: &CMat) -> Result<KatoCurve> {
        check_dim(q, self.dim, "perturbation")?;
        let scale = op_norm(q).max(op_norm(&self.q)).max(1.0);
        let (dev, row, col) = crate::linalg::hermitian_deviation(q);
        if dev > self.tol * scale {
            return Err(Error::NotHermitian {
                deviation: dev,
                row,
                col,
            });
        }
        // q·q is Hermitian only up to rounding; tiny q would trip the check
        let q2 = q * q;
        let q2 = (&q2 + q2.adjoint()) * c(0.5, 0.0);
        let big_q2 = self.hamiltonian();
        let qn = op_norm(q);
        let mut grid = vec![0.0];
        let mut m = 0.25;
        while m <= 4.0 * qn + 1e-12 {
            grid.push(m);
            m += 0.25;
        }
        let etol = self.tol * scale * scale;
        let lmax = |a: f64, m: f64| -> Result<f64> {
            let x = &q2 - &big_q2 * c(a * a, 0.0) - identity(self.dim) * c(m * m, 0.0);
            Ok(*eig_hermitian(&x)?.eigenvalues.last().unwrap_or(&0.0))
        };
        let mut points = Vec::with_capacity(grid.len());
        for &m in &grid {
            let a = if lmax(0.0, m)? <= etol {
                0.0
            } else {
                let mut hi = 1.0;
                while lmax(hi, m)? > etol && hi < 1e6 {
                    hi *= 2.0;
                }
                if lmax(hi, m)? > etol {
                    f64::INFINITY
                } else {
                    let mut lo = 0.0;
                    while hi - lo > 1e-8 {
                        let mid = 0.5 * (lo + hi);
                        if lmax(mid, m)? <= etol {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    hi
                }
            };
            points.push(KatoPoint { m, a });
        }
        let a_below_one = points.iter().any(|p| p.a < 1.0);
        Ok(KatoCurve {
            points,
            a_below_one,
        })
    }
}

/// Element of the algebra: a γ-even matrix with a label.
#[derive(Debug, Clone)]
pub struct AlgebraElement {
    pub matrix: CMat,
    pub label: String,
}

impl AlgebraElement {
    pub fn new(matrix: CMat, label: impl Into<String>) -> Self {
        AlgebraElement {
            matrix,
            label: label.into(),
        }
    }

    /// Checks `γaγ = a` against the triple.
    pub fn checked(t: &SpectralTriple, matrix: CMat, label: impl Into<String>) -> Result<Self> {
        check_dim(&matrix, t.dim, "algebra element")?;
        let r = op_norm(&commutator(&t.gamma, &matrix));
        if r > t.tol * op_norm(&matrix).max(1.0) {
            return Err(Error::ValidationFailure(format!(
                "algebra element is not gamma-even (residual {r:e})"
            )));
        }
        Ok(Self::new(matrix, label))
    }
}

/// Sobolev type `(β, α)` of a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct VertexType {
    pub beta: f64,
    pub alpha: f64,
}

impl VertexType {
    pub fn new(beta: f64, alpha: f64) -> Self {
        assert!(beta >= 0.0 && alpha >= 0.0, "vertex types are nonnegative");
        VertexType { beta, alpha }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub etas: Vec<f64>,
    pub eta_local: f64,
    pub eta_global: f64,
    pub regular: bool,
}

/// `η_j = 1 − (α_j + β_{j+1})/2` with `β_{n+1} = β_0`.
pub fn regularity_exponents(types: &[VertexType]) -> Result<RegularityReport> {
    if types.is_empty() {
        return Err(Error::InvalidInput("empty vertex type list".into()));
    }
    let n1 = types.len();
    let etas: Vec<f64> = (0..n1)
        .map(|j| 1.0 - 0.5 * (types[j].alpha + types[(j + 1) % n1].beta))
        .collect();
    let eta_local = etas.iter().cloned().fold(f64::INFINITY, f64::min);
    let eta_global = etas.iter().sum::<f64>() / n1 as f64;
    Ok(RegularityReport {
        regular: etas.iter().all(|&e| e > 0.0),
        etas,
        eta_local,
        eta_global,
    })
}

/// `∫_0^∞ (1 + 1/t)^{δ/2} (1 + t)^{-1-(1-μ)/2} dt`.
fn c_mu_inner(delta: f64, mu: f64) -> Result<f64> {
    let p = 1.0 + 0.5 * (1.0 - mu);
    integrate_half_line_log(
        |x| (0.5 * delta * softplus(-x) - p * softplus(x) + x).exp(),
        1e-13,
    )
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `c_μ = sup_{δ∈[0,1]} 2δ ∫_0^∞ (1+1/t)^{δ/2} (1+t)^{-1-(1-μ)/2} dt`.
pub fn numeric_c_mu(mu: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mu) {
        return Err(Error::BadExponent(format!("mu = {mu} must lie in [0, 1)")));
    }
    let objective = |d: f64| -> Result<f64> { Ok(2.0 * d * c_mu_inner(d, mu)?) };
    let steps = 20;
    let mut best = (0.0, 0.0);
    for k in 0..=steps {
        let d = k as f64 / steps as f64;
        let v = objective(d)?;
        if v > best.1 {
            best = (d, v);
        }
    }
    let h = 1.0 / steps as f64;
    let lo = (best.0 - h).max(0.0);
    let hi = (best.0 + h).min(1.0);
    let (_, v) = golden_max(|d| objective(d).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-9);
    Ok(v.max(best.1))
}

/// `2∫_0^∞ t^{-1/2} (1+t)^{-1} dt`, whose exact value is `2π`; exercises
/// the same half-line rule as [`numeric_c_mu`].
pub fn c_mu_companion_integral() -> Result<f64> {
    Ok(2.0 * integrate_half_line_log(|x| (0.5 * x - softplus(x)).exp(), 1e-13)?)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct KatoPoint {
    pub m: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KatoCurve {
    pub points: Vec<KatoPoint>,
    pub a_below_one: bool,
}

impl KatoCurve {
    pub fn a_at(&self, m: f64) -> Option<f64> {
        self.points
            .iter()
            .find(|p| (p.m - m).abs() < 1e-12)
            .map(|p| p.a)
    }

    pub fn min_a(&self) -> f64 {
        self.points.iter().map(|p| p.a).fold(f64::INFINITY, f64::min)
    }
}

/// Checks that `x` commutes with every group unitary.
pub fn group_invariance_residual(t: &SpectralTriple, x: &CMat) -> Result<f64> {
    check_square_finite(x, "element")?;
    Ok(t.group
        .iter()
        .map(|u| op_norm(&commutator(u, x)))
        .fold(0.0, f64::max))
}
