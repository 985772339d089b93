//! Split structures `Q = (Q₁ + Q₂)/√2` with `Q₁Q₂ + Q₂Q₁ = 0`.
//!
//! `H = Q² = (Q₁² + Q₂²)/2` and `P = (Q₁² − Q₂²)/2`. On the zero-momentum
//! algebra (`[P, a] = 0`) the derivation `d₁ = [Q₁, ·]` squares to
//! `[H, ·]`, so `⟨a_0, d₁a_1, …, d₁a_n⟩` with heat kernels `e^{-sH}` is a
//! cocycle. Its pairing uses `J(t) = Tr(γUa e^{-H + it d₁a})`.

use std::sync::Arc;

use serde::Serialize;

use crate::cochain::{Cochain, Parity};
use crate::error::{CochainClass, Error, Result};
use crate::exec;
use crate::expectations::{expect, HeatContext};
use crate::homotopy::{SweepRow, SweepTable};
use crate::jlo::{
    block_triple, gaussian_average, series_from_moments, GeneratingFunctional, PairingInput,
    PairingOptions, PairingResult,
};
use crate::linalg::{
    anticommutator, c, check_dim, commutator, eig_hermitian, expm, from_real_rows, identity, kron,
    op_norm, trace_of_product, CMat, C64,
};
use crate::triple::{SpectralTriple, ValidationReport, DEFAULT_TOL};

#[derive(Debug, Clone)]
pub struct SplitTriple {
    pub dim: usize,
    pub q1: CMat,
    pub q2: CMat,
    pub gamma: CMat,
    pub group: Vec<CMat>,
    pub tol: f64,
}

impl SplitTriple {
    pub fn new(q1: CMat, q2: CMat, gamma: CMat, group: Vec<CMat>) -> Self {
        let dim = q1.nrows();
        let group = if group.is_empty() {
            vec![identity(dim)]
        } else {
            group
        };
        SplitTriple {
            dim,
            q1,
            q2,
            gamma,
            group,
            tol: DEFAULT_TOL,
        }
    }

    /// `(Q₁ + Q₂)/√2`.
    pub fn q(&self) -> CMat {
        (&self.q1 + &self.q2) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }

    /// `(Q₁² + Q₂²)/2`.
    pub fn hamiltonian(&self) -> CMat {
        (&self.q1 * &self.q1 + &self.q2 * &self.q2) * c(0.5, 0.0)
    }

    /// `(Q₁² − Q₂²)/2`.
    pub fn momentum(&self) -> CMat {
        (&self.q1 * &self.q1 - &self.q2 * &self.q2) * c(0.5, 0.0)
    }

    /// The triple with `Q = (Q₁ + Q₂)/√2`. Not validated: the group need
    /// only commute with `Q₁` and `Q₂²`.
    pub fn derived_triple(&self) -> SpectralTriple {
        SpectralTriple {
            dim: self.dim,
            q: self.q(),
            gamma: self.gamma.clone(),
            group: self.group.clone(),
            tol: self.tol,
        }
    }

    pub fn heat_context(&self) -> Result<HeatContext> {
        HeatContext::new(self.hamiltonian(), self.gamma.clone(), self.group.clone())
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        if self.dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        check_dim(&self.q1, self.dim, "Q1")?;
        check_dim(&self.q2, self.dim, "Q2")?;
        check_dim(&self.gamma, self.dim, "gamma")?;
        for (i, u) in self.group.iter().enumerate() {
            check_dim(u, self.dim, &format!("group[{i}]"))?;
        }
        let tol = self.tol;
        let id = identity(self.dim);
        let mut r = ValidationReport::new();
        r.push("gamma_hermitian", op_norm(&(&self.gamma - self.gamma.adjoint())), tol);
        r.push("gamma_squared_identity", op_norm(&(&self.gamma * &self.gamma - &id)), tol);
        r.push("q1_hermitian", op_norm(&(&self.q1 - self.q1.adjoint())), tol);
        r.push("q2_hermitian", op_norm(&(&self.q2 - self.q2.adjoint())), tol);
        r.push("q1_q2_independent", op_norm(&anticommutator(&self.q1, &self.q2)), tol);
        r.push("q1_gamma_anticommute", op_norm(&anticommutator(&self.q1, &self.gamma)), tol);
        r.push("q2_gamma_anticommute", op_norm(&anticommutator(&self.q2, &self.gamma)), tol);
        let q = self.q();
        let h = self.hamiltonian();
        r.push("q_squared_split", op_norm(&(&q * &q - &h)), tol);
        let p = self.momentum();
        let scale = op_norm(&h).max(1.0);
        let lo_plus = eig_hermitian(&(&h + &p))?.eigenvalues[0];
        let lo_minus = eig_hermitian(&(&h - &p))?.eigenvalues[0];
        r.push("cone_h_plus_p", (-lo_plus).max(0.0), tol * scale);
        r.push("cone_h_minus_p", (-lo_minus).max(0.0), tol * scale);
        r.push("group_identity_first", op_norm(&(&self.group[0] - &id)), tol);
        let q2sq = &self.q2 * &self.q2;
        for (i, u) in self.group.iter().enumerate() {
            r.push(format!("group[{i}]_unitary"), op_norm(&(u.adjoint() * u - &id)), tol);
            r.push(format!("group[{i}]_commutes_gamma"), op_norm(&commutator(u, &self.gamma)), tol);
            r.push(format!("group[{i}]_commutes_q1"), op_norm(&commutator(u, &self.q1)), tol);
            r.push(format!("group[{i}]_commutes_q2_squared"), op_norm(&commutator(u, &q2sq)), tol);
        }
        Ok(r)
    }

    /// `d₁b = Q₁b − γbγQ₁`, which is `[Q₁, b]` on even `b`.
    pub fn d1(&self, b: &CMat) -> Result<CMat> {
        check_dim(b, self.dim, "d1 argument")?;
        Ok(&self.q1 * b - &self.gamma * b * &self.gamma * &self.q1)
    }

    /// `‖[P, a]‖`.
    pub fn momentum_residual(&self, a: &CMat) -> Result<f64> {
        check_dim(a, self.dim, "element")?;
        Ok(op_norm(&commutator(&self.momentum(), a)))
    }

    /// Projection of `x` onto the commutant of `P`.
    pub fn zero_momentum_part(&self, x: &CMat) -> Result<CMat> {
        let e = eig_hermitian(&self.momentum())?;
        let xt = e.to_eigenbasis(x);
        let p = &e.eigenvalues;
        let scale = p.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let kept = CMat::from_fn(self.dim, self.dim, |i, j| {
            if (p[i] - p[j]).abs() <= self.tol * scale {
                xt[(i, j)]
            } else {
                C64::default()
            }
        });
        Ok(e.from_eigenbasis(&kept))
    }

    /// `‖[H, b] − (Q₁ d₁b + d₁b Q₁)‖`, zero on even zero-momentum `b`.
    pub fn d1_squared_residual(&self, b: &CMat) -> Result<f64> {
        let db = self.d1(b)?;
        let lhs = commutator(&self.hamiltonian(), b);
        Ok(op_norm(&(lhs - anticommutator(&self.q1, &db))))
    }

    fn require_zero_momentum(&self, args: &[CMat]) -> Result<()> {
        let p = self.momentum();
        for (i, a) in args.iter().enumerate() {
            let r = op_norm(&commutator(&p, a));
            if r > self.tol * op_norm(a).max(1.0) * op_norm(&p).max(1.0) {
                return Err(Error::ZeroMomentumViolation { index: i, residual: r });
            }
        }
        Ok(())
    }
}

/// Split JLO evaluator.
#[derive(Debug, Clone)]
pub struct SplitJlo {
    pub split: SplitTriple,
    pub ctx: HeatContext,
}

impl SplitJlo {
    pub fn new(s: &SplitTriple) -> Result<Self> {
        Ok(SplitJlo {
            split: s.clone(),
            ctx: s.heat_context()?,
        })
    }

    /// `⟨a_0, d₁a_1, …, d₁a_n; g⟩`.
    pub fn component(&self, args: &[CMat], g: usize) -> Result<C64> {
        if args.is_empty() {
            return Err(Error::InvalidInput("empty argument list".into()));
        }
        self.split.require_zero_momentum(args)?;
        let mut v = Vec::with_capacity(args.len());
        v.push(args[0].clone());
        for a in &args[1..] {
            v.push(self.split.d1(a)?);
        }
        expect(&self.ctx, &v, g, 1.0)
    }
}

pub fn split_jlo_component(s: &SplitTriple, args: &[CMat], g: usize) -> Result<C64> {
    SplitJlo::new(s)?.component(args, g)
}

/// The split JLO cochain.
pub fn split_cochain(s: &SplitTriple) -> Result<Cochain> {
    let j = Arc::new(SplitJlo::new(s)?);
    Ok(Cochain::new(
        s.group.clone(),
        None,
        Parity::Even,
        CochainClass::C,
        "split-JLO",
        move |_, a, g| j.component(a, g),
    ))
}

fn blocked_parts(s: &SplitTriple, input: &PairingInput) -> Result<(SpectralTriple, CMat, CMat)> {
    let t = s.derived_triple();
    let bt = block_triple(&t, input.m);
    check_dim(&input.a, bt.dim, "pairing input")?;
    let im = identity(input.m);
    let q1 = kron(&im, &s.q1);
    let h = kron(&im, &s.hamiltonian());
    let d1a = &q1 * &input.a - &bt.gamma * &input.a * &bt.gamma * &q1;
    Ok((t, h, d1a))
}

/// Checks `a² = I`, evenness, group invariance and zero momentum.
pub fn validate_split_input(s: &SplitTriple, input: &PairingInput) -> Result<()> {
    let t = s.derived_triple();
    input.validate(&t)?;
    let im = identity(input.m);
    let p = kron(&im, &s.momentum());
    let r = op_norm(&commutator(&p, &input.a));
    if r > s.tol * op_norm(&p).max(1.0) * op_norm(&input.a).max(1.0) {
        return Err(Error::ZeroMomentumViolation { index: 0, residual: r });
    }
    Ok(())
}

/// `π^{-1/2} ∫ e^{-t²} Tr(γUa e^{-H + it d₁a}) dt`, with the series in
/// split JLO components as cross-check.
pub fn split_pairing(s: &SplitTriple, input: &PairingInput, opts: PairingOptions) -> Result<PairingResult> {
    validate_split_input(s, input)?;
    let (t, h, d1a) = blocked_parts(s, input)?;
    let gf = GeneratingFunctional::from_parts(&t, input, 1.0, Some((h.clone(), d1a.clone())))?;
    let q = gaussian_average(opts.quad_nodes, |x| gf.eval(c(x, 0.0)))?;
    let bt = block_triple(&t, input.m);
    let ctx = HeatContext::new(h, bt.gamma.clone(), bt.group.clone())?;
    let series = series_from_moments(&ctx, &input.a, &d1a, input.g, 1.0, opts.max_level, opts.tol)?;
    Ok(PairingResult {
        value: q.value,
        series_value: series.value,
        quadrature_value: q.value,
        truncation_level: series.truncation_level,
        tail_bound: series.tail_bound,
        quad_nodes: q.nodes,
    })
}

/// Hypothesis set checked along a coupling sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// `P(λ) = P(λ₀)`.
    MomentumFixed,
    /// `Q₂(λ) = Q₂(λ₀)` and `[Q₁(λ) − Q₁(λ₀), a] = 0`.
    Q1Commutes,
}

/// Split pairing along `λ ↦ family(λ)`, guarded by the chosen hypotheses
/// relative to the first grid point.
pub fn coupling_sweep<F>(family: F, input: &PairingInput, grid: &[f64], mode: CouplingMode, opts: PairingOptions) -> Result<SweepTable>
where
    F: Fn(f64) -> SplitTriple + Send + Sync,
{
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    let s0 = family(grid[0]);
    let p0 = s0.momentum();
    let rows = exec::try_map_indexed(grid.len(), |i| -> Result<SweepRow> {
        let l = grid[i];
        let s = family(l);
        s.validate()?.into_result()?;
        let tol = s.tol * op_norm(&p0).max(1.0);
        let diag = match mode {
            CouplingMode::MomentumFixed => {
                let r = op_norm(&(s.momentum() - &p0));
                if r > tol {
                    return Err(Error::PNotFixed { lambda: l, residual: r });
                }
                format!("p_residual={r:.3e}")
            }
            CouplingMode::Q1Commutes => {
                let r2 = op_norm(&(&s.q2 - &s0.q2));
                if r2 > s.tol * op_norm(&s0.q2).max(1.0) {
                    return Err(Error::ValidationFailure(format!(
                        "Q2 changes along the family at lambda = {l} (residual {r2:e})"
                    )));
                }
                let im = identity(input.m);
                let dq = kron(&im, &(&s.q1 - &s0.q1));
                let r = op_norm(&commutator(&dq, &input.a));
                if r > s.tol * op_norm(&input.a).max(1.0) {
                    return Err(Error::ValidationFailure(format!(
                        "Q1 variation does not commute with a at lambda = {l} (residual {r:e})"
                    )));
                }
                format!("commutator_residual={r:.3e}")
            }
        };
        let kato = s0.derived_triple().kato_constants(&(s.q() - s0.q()))?;
        let r = split_pairing(&s, input, opts)?;
        Ok(SweepRow {
            lambda: l,
            eps: None,
            value: r.value,
            diagnostics: format!(
                "{diag} kato_a_below_one={} series_diff={:.3e}",
                kato.a_below_one,
                (r.series_value - r.quadrature_value).norm()
            ),
        })
    })?;
    Ok(SweepTable::new(rows))
}

/// Parameters of the Clifford model: `D₁` and momentum spectra per mode.
#[derive(Debug, Clone, Serialize)]
pub struct N2Params {
    pub d1: Vec<f64>,
    pub p: Vec<f64>,
}

impl Default for N2Params {
    fn default() -> Self {
        N2Params {
            d1: vec![1.0, 1.5],
            p: vec![0.3, 0.1],
        }
    }
}

/// Finite model of four anticommuting charges on `C⁴ ⊗ C^k`.
#[derive(Debug, Clone)]
pub struct N2Model {
    pub split: SplitTriple,
    pub q1_tilde: CMat,
    pub q2_tilde: CMat,
    /// Generator rotating `Q₂` into `Q̃₂`.
    pub j: CMat,
    pub p: CMat,
}

fn pauli() -> [CMat; 4] {
    let i = c(0.0, 1.0);
    let z = C64::default();
    let o = c(1.0, 0.0);
    [
        identity(2),
        from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
        CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Builds the model with `Q₁ = Γ₁⊗D₁`, `Q₂ = Γ₂⊗D₂`, `Q̃₁ = Γ₃⊗D₁`,
/// `Q̃₂ = Γ₄⊗D₂`, `γ = σ₃⊗I`, `D₂ = (D₁² − 2p)^{1/2}`, so that `P = I⊗p`.
/// The group is `{e^{iθJ}}` for `θ ∈ 4πℤ/order`.
pub fn build_n2_susy_example(params: &N2Params, order: usize) -> Result<N2Model> {
    if params.d1.len() != params.p.len() || params.d1.is_empty() {
        return Err(Error::InvalidInput("d1 and p must have equal nonzero length".into()));
    }
    let mut d2 = Vec::with_capacity(params.d1.len());
    for (&a, &p) in params.d1.iter().zip(&params.p) {
        let v = a * a - 2.0 * p;
        if v < 0.0 {
            return Err(Error::InvalidInput(format!("d1^2 - 2p = {v} must be nonnegative")));
        }
        d2.push(v.sqrt());
    }
    let s = pauli();
    let g1 = kron(&s[1], &s[1]);
    let g2 = kron(&s[1], &s[2]);
    let g3 = kron(&s[1], &s[3]);
    let g4 = kron(&s[2], &s[0]);
    let gamma = kron(&s[3], &s[0]);
    let dd1 = crate::linalg::diag(&params.d1);
    let dd2 = crate::linalg::diag(&d2);
    let k = params.d1.len();
    let ik = identity(k);
    let q1 = kron(&g1, &dd1);
    let q2 = kron(&g2, &dd2);
    let j = kron(&(&g2 * &g4 * c(0.0, 0.5)), &ik);
    let p = kron(&identity(4), &crate::linalg::diag(&params.p));
    let group = (0..order.max(1))
        .map(|m| {
            let th = 4.0 * std::f64::consts::PI * m as f64 / order.max(1) as f64;
            expm(&(&j * c(0.0, th)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut group = group;
    group[0] = identity(4 * k);
    let split = SplitTriple::new(q1, q2, kron(&gamma, &ik), group);
    let model = N2Model {
        q1_tilde: kron(&g3, &dd1),
        q2_tilde: kron(&g4, &dd2),
        j,
        p,
        split,
    };
    model.split.validate()?.into_result()?;
    Ok(model)
}

impl N2Model {
    /// `e^{iτP + iθJ}`.
    pub fn unitary(&self, tau: f64, theta: f64) -> Result<CMat> {
        expm(&((&self.p * c(0.0, tau)) + (&self.j * c(0.0, theta))))
    }

    /// The model with `Q₂` replaced by `Q₂ cos θ + Q̃₂ sin θ`.
    pub fn rotated(&self, theta: f64) -> SplitTriple {
        let mut s = self.split.clone();
        s.q2 = &self.split.q2 * c(theta.cos(), 0.0) + &self.q2_tilde * c(theta.sin(), 0.0);
        s
    }

    /// `Tr(γ U(τ, θ) e^{-H})` over the grid, ordered by `(τ, θ)`.
    pub fn index_table(&self, taus: &[f64], thetas: &[f64]) -> Result<Vec<(f64, f64, C64)>> {
        let heat = expm(&(self.split.hamiltonian() * c(-1.0, 0.0)))?;
        let nt = thetas.len();
        exec::try_map_indexed(taus.len() * nt, |k| {
            let (tau, th) = (taus[k / nt], thetas[k % nt]);
            let u = self.unitary(tau, th)?;
            Ok((tau, th, trace_of_product(&(&self.split.gamma * u), &heat)))
        })
    }

    /// Residuals of `[J, γ]`, `[J, H]`, `[J, P]`, `[J, Q₁]`.
    pub fn j_commutation_residuals(&self) -> [f64; 4] {
        let s = &self.split;
        [
            op_norm(&commutator(&self.j, &s.gamma)),
            op_norm(&commutator(&self.j, &s.hamiltonian())),
            op_norm(&commutator(&self.j, &self.p)),
            op_norm(&commutator(&self.j, &s.q1)),
        ]
    }
}

/// `Q₁ = σ_x⊗I`, `Q₂ = σ_y⊗I`, `γ = σ_z⊗I` on `C⁴`.
pub fn pauli_split() -> SplitTriple {
    let s = pauli();
    let i2 = identity(2);
    SplitTriple::new(kron(&s[1], &i2), kron(&s[2], &i2), kron(&s[3], &i2), vec![])
}
