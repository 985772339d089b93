//! Deformation families `Q(λ) = Q + q(λ)` and the invariance of the pairing
//! along them: regularity reports, pairing sweeps, the transgression
//! cochains `L(λ)` and `h(λ)` with `dτ/dλ = L = ∂h`, plane independence,
//! and grids for the regularized energy `Q(λ)² + ε² Z*Z`.

use std::io::Write;
use std::sync::Arc;

use serde::Serialize;

use crate::cochain::{op_partial, Cochain, Parity};
use crate::error::{CochainClass, Error, Result};
use crate::exec;
use crate::expectations::{expect, HeatContext};
use crate::jlo::{
    block_triple, gaussian_average, jlo_cochain, pair, GeneratingFunctional, PairingInput,
    PairingOptions,
};
use crate::linalg::{
    anticommutator, c, check_dim, commutator, eig_hermitian, expm_frechet, hermitian_deviation,
    identity, kron, op_norm, trace_of_product, CMat, C64,
};
use crate::triple::{KatoCurve, SpectralTriple};

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-4;

pub type MatrixPath = Arc<dyn Fn(f64) -> CMat + Send + Sync>;

/// `Q(λ) = Q + q(λ)` with optional analytic `q̇` and regularizer `Z*Z`.
#[derive(Clone)]
pub struct DeformationFamily {
    pub base: SpectralTriple,
    q: MatrixPath,
    q_dot: Option<MatrixPath>,
    pub fd_step: f64,
    pub interval: (f64, f64),
    pub regularizer: Option<CMat>,
}

impl std::fmt::Debug for DeformationFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DeformationFamily")
            .field("dim", &self.base.dim)
            .field("interval", &self.interval)
            .field("analytic_q_dot", &self.q_dot.is_some())
            .field("regularized", &self.regularizer.is_some())
            .finish()
    }
}

impl DeformationFamily {
    pub fn new<F>(base: SpectralTriple, q: F, interval: (f64, f64)) -> Self
    where
        F: Fn(f64) -> CMat + Send + Sync + 'static,
    {
        DeformationFamily {
            base,
            q: Arc::new(q),
            q_dot: None,
            fd_step: FD_STEP,
            interval,
            regularizer: None,
        }
    }

    /// `q(λ) = λ q` with `q̇ = q`.
    pub fn linear(base: SpectralTriple, q: CMat, interval: (f64, f64)) -> Self {
        let q1 = q.clone();
        let mut f = Self::new(base, move |l| &q1 * c(l, 0.0), interval);
        f.q_dot = Some(Arc::new(move |_| q.clone()));
        f
    }

    pub fn with_q_dot<F>(mut self, q_dot: F) -> Self
    where
        F: Fn(f64) -> CMat + Send + Sync + 'static,
    {
        self.q_dot = Some(Arc::new(q_dot));
        self
    }

    pub fn with_regularizer(mut self, z_star_z: CMat) -> Self {
        self.regularizer = Some(z_star_z);
        self
    }

    pub fn q(&self, lambda: f64) -> CMat {
        (self.q)(lambda)
    }

    /// Analytic `q̇(λ)` if supplied, else a central difference.
    pub fn q_dot(&self, lambda: f64) -> CMat {
        match &self.q_dot {
            Some(f) => f(lambda),
            None => self.difference_quotient(lambda, self.fd_step),
        }
    }

    /// `(q(λ + h) − q(λ − h)) / 2h`.
    pub fn difference_quotient(&self, lambda: f64, h: f64) -> CMat {
        (self.q(lambda + h) - self.q(lambda - h)) * c(0.5 / h, 0.0)
    }

    /// `Q + q(λ)`, unvalidated.
    pub fn q_total(&self, lambda: f64) -> CMat {
        &self.base.q + self.q(lambda)
    }

    /// Residuals of the perturbation invariants at `λ`: Hermitian, γ-odd,
    /// group commuting; and positivity of the regularizer.
    pub fn invariant_residuals(&self, lambda: f64) -> Result<Vec<(String, f64)>> {
        let q = self.q(lambda);
        check_dim(&q, self.base.dim, "perturbation")?;
        let mut out = vec![
            ("q_hermitian".to_string(), hermitian_deviation(&q).0),
            ("q_gamma_odd".to_string(), op_norm(&anticommutator(&q, &self.base.gamma))),
        ];
        let worst = self
            .base
            .group
            .iter()
            .map(|u| op_norm(&commutator(u, &q)))
            .fold(0.0, f64::max);
        out.push(("q_group_commutes".to_string(), worst));
        if let Some(z) = &self.regularizer {
            let e = eig_hermitian(z)?;
            out.push(("regularizer_psd".to_string(), (-e.eigenvalues[0]).max(0.0)));
            out.push(("regularizer_gamma_even".to_string(), op_norm(&commutator(z, &self.base.gamma))));
        }
        Ok(out)
    }

    /// The triple with `Q` replaced by `Q + q(λ)`, validated.
    pub fn deform_triple(&self, lambda: f64) -> Result<SpectralTriple> {
        let t = SpectralTriple {
            dim: self.base.dim,
            q: self.q_total(lambda),
            gamma: self.base.gamma.clone(),
            group: self.base.group.clone(),
            tol: self.base.tol,
        };
        t.validate()?.into_result()?;
        Ok(t)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityRow {
    pub lambda: f64,
    pub kato: KatoCurve,
    pub a_below_one: bool,
    pub q_norm: f64,
    pub q_dot_norm: f64,
    /// `‖(q(λ+h) − q(λ−h))/2h − q̇(λ)‖` at the family step.
    pub difference_quotient_residual: f64,
    /// `‖q(λ)‖_{(0, 1)}` relative to the base `Q`.
    pub relative_norm: f64,
}

/// Kato curve and norm diagnostics per `λ`.
pub fn regularity_report(f: &DeformationFamily, grid: &[f64]) -> Result<Vec<RegularityRow>> {
    exec::try_map_indexed(grid.len(), |i| {
        let l = grid[i];
        let q = f.q(l);
        let kato = f.base.kato_constants(&q)?;
        let qd = f.q_dot(l);
        Ok(RegularityRow {
            lambda: l,
            a_below_one: kato.a_below_one,
            kato,
            q_norm: op_norm(&q),
            q_dot_norm: op_norm(&qd),
            difference_quotient_residual: op_norm(&(f.difference_quotient(l, f.fd_step) - &qd)),
            relative_norm: f.base.sobolev_norm(&q, 0.0, 1.0)?,
        })
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub eps: Option<f64>,
    pub value: C64,
    pub diagnostics: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub spread: f64,
}

impl SweepTable {
    pub fn new(rows: Vec<SweepRow>) -> Self {
        let mut spread = 0.0f64;
        for a in &rows {
            for b in &rows {
                spread = spread.max((a.value - b.value).norm());
            }
        }
        SweepTable { rows, spread }
    }

    /// CSV with columns `lambda, eps, re, im, diagnostics`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lambda", "eps", "re", "im", "diagnostics"])?;
        for r in &self.rows {
            wr.write_record([
                format!("{:.16e}", r.lambda),
                r.eps.map(|e| format!("{e:.16e}")).unwrap_or_default(),
                format!("{:.16e}", r.value.re),
                format!("{:.16e}", r.value.im),
                r.diagnostics.clone(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Gaussian pairing of `input` against `τ(Q(λ))` on each grid point.
/// Aborts with `NotInvariant` if the input leaves the invariant algebra of
/// a deformed triple.
pub fn sweep_invariant(f: &DeformationFamily, input: &PairingInput, grid: &[f64], opts: PairingOptions) -> Result<SweepTable> {
    let rows = exec::try_map_indexed(grid.len(), |i| -> Result<SweepRow> {
        let l = grid[i];
        let t = f.deform_triple(l)?;
        input.validate(&t).map_err(|e| match e {
            Error::NotInvariant(s) | Error::ValidationFailure(s) => {
                Error::NotInvariant(format!("at lambda = {l}: {s}"))
            }
            other => other,
        })?;
        let r = pair(&t, input, opts)?;
        Ok(SweepRow {
            lambda: l,
            eps: None,
            value: r.value,
            diagnostics: format!(
                "nodes={} series_diff={:.3e} level={}",
                r.quad_nodes,
                (r.series_value - r.quadrature_value).norm(),
                r.truncation_level
            ),
        })
    })?;
    Ok(SweepTable::new(rows))
}

/// Evaluation data shared by `L(λ)` and `h(λ)`.
struct Transgression {
    triple: SpectralTriple,
    ctx: HeatContext,
    q_dot: CMat,
    d_q_dot: CMat,
}

impl Transgression {
    fn new(f: &DeformationFamily, lambda: f64) -> Result<Self> {
        let triple = f.deform_triple(lambda)?;
        let ctx = HeatContext::from_triple(&triple)?;
        let q_dot = f.q_dot(lambda);
        let d_q_dot = triple.derivative(&q_dot)?;
        Ok(Transgression {
            triple,
            ctx,
            q_dot,
            d_q_dot,
        })
    }

    fn derivatives(&self, a: &[CMat]) -> Result<Vec<CMat>> {
        a.iter().map(|x| self.triple.derivative(x)).collect()
    }

    /// `Σ_{j≥1} ⟨a_0, …, [q̇, a_j], …⟩_n − Σ_{j≥0} ⟨a_0, da_1..da_j, dq̇, da_{j+1}..⟩_{n+1}`.
    fn l(&self, a: &[CMat], g: usize) -> Result<C64> {
        let n = a.len() - 1;
        let da = self.derivatives(a)?;
        let mut acc = C64::default();
        for j in 1..=n {
            let mut v: Vec<CMat> = Vec::with_capacity(n + 1);
            v.push(a[0].clone());
            v.extend_from_slice(&da[1..]);
            v[j] = commutator(&self.q_dot, &a[j]);
            acc += expect(&self.ctx, &v, g, 1.0)?;
        }
        for j in 0..=n {
            let mut v: Vec<CMat> = Vec::with_capacity(n + 2);
            v.push(a[0].clone());
            v.extend_from_slice(&da[1..=j]);
            v.push(self.d_q_dot.clone());
            v.extend_from_slice(&da[j + 1..]);
            acc -= expect(&self.ctx, &v, g, 1.0)?;
        }
        Ok(acc)
    }

    /// `−Σ_k (−1)^k ⟨a_0, da_1..da_k, q̇, da_{k+1}..da_n⟩_{n+1}`; this sign
    /// makes `∂h = L` with the operator conventions of the cochain module.
    fn h(&self, a: &[CMat], g: usize) -> Result<C64> {
        let n = a.len() - 1;
        let da = self.derivatives(a)?;
        let mut acc = C64::default();
        for k in 0..=n {
            let mut v: Vec<CMat> = Vec::with_capacity(n + 2);
            v.push(a[0].clone());
            v.extend_from_slice(&da[1..=k]);
            v.push(self.q_dot.clone());
            v.extend_from_slice(&da[k + 1..]);
            let s = if k % 2 == 0 { 1.0 } else { -1.0 };
            acc -= expect(&self.ctx, &v, g, 1.0)? * s;
        }
        Ok(acc)
    }
}

/// `L(λ)`, the derivative of the JLO cochain along the family.
pub fn l_cochain(f: &DeformationFamily, lambda: f64) -> Result<Cochain> {
    let tr = Arc::new(Transgression::new(f, lambda)?);
    Ok(Cochain::new(
        f.base.group.clone(),
        None,
        Parity::Even,
        CochainClass::C,
        format!("L[{lambda}]"),
        move |_, a, g| tr.l(a, g),
    ))
}

/// `h(λ)`, with `∂h(λ) = L(λ)`.
pub fn h_cochain(f: &DeformationFamily, lambda: f64) -> Result<Cochain> {
    let tr = Arc::new(Transgression::new(f, lambda)?);
    Ok(Cochain::new(
        f.base.group.clone(),
        None,
        Parity::Odd,
        CochainClass::C,
        format!("h[{lambda}]"),
        move |_, a, g| tr.h(a, g),
    ))
}

/// `max |L_n(λ)(a) − (∂h(λ))_n(a)|` over tuples and group elements.
pub fn coboundary_relation_residual(f: &DeformationFamily, lambda: f64, tuples: &[Vec<CMat>]) -> Result<f64> {
    let l = l_cochain(f, lambda)?;
    let dh = op_partial(&h_cochain(f, lambda)?)?;
    let mut worst = 0.0f64;
    for g in 0..f.base.order() {
        for tu in tuples {
            let n = tu.len() - 1;
            worst = worst.max((l.eval(n, tu, g)? - dh.eval(n, tu, g)?).norm());
        }
    }
    Ok(worst)
}

/// `max |(τ(λ+h) − τ(λ−h))/2h − L(λ)|` pointwise.
pub fn derivative_residual(f: &DeformationFamily, lambda: f64, h: f64, tuples: &[Vec<CMat>]) -> Result<f64> {
    let tp = jlo_cochain(&f.deform_triple(lambda + h)?, 1.0)?;
    let tm = jlo_cochain(&f.deform_triple(lambda - h)?, 1.0)?;
    let l = l_cochain(f, lambda)?;
    let mut worst = 0.0f64;
    for g in 0..f.base.order() {
        for tu in tuples {
            let n = tu.len() - 1;
            let fd = (tp.eval(n, tu, g)? - tm.eval(n, tu, g)?) / (2.0 * h);
            worst = worst.max((fd - l.eval(n, tu, g)?).norm());
        }
    }
    Ok(worst)
}

/// `max |τ(λ_last) − τ(λ_first) − ∫ ∂h dλ|` pointwise, the integral by the
/// composite trapezoid rule on `grid`.
pub fn integrated_coboundary_residual(f: &DeformationFamily, grid: &[f64], tuples: &[Vec<CMat>]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::InvalidInput("grid needs at least two points".into()));
    }
    let dhs: Vec<Cochain> = grid
        .iter()
        .map(|&l| op_partial(&h_cochain(f, l)?))
        .collect::<Result<_>>()?;
    let t0 = jlo_cochain(&f.deform_triple(grid[0])?, 1.0)?;
    let t1 = jlo_cochain(&f.deform_triple(*grid.last().unwrap())?, 1.0)?;
    let mut worst = 0.0f64;
    for g in 0..f.base.order() {
        for tu in tuples {
            let n = tu.len() - 1;
            let vals: Vec<C64> = dhs.iter().map(|d| d.eval(n, tu, g)).collect::<Result<_>>()?;
            let mut integral = C64::default();
            for k in 1..grid.len() {
                integral += (vals[k] + vals[k - 1]) * (0.5 * (grid[k] - grid[k - 1]));
            }
            let diff = t1.eval(n, tu, g)? - t0.eval(n, tu, g)?;
            worst = worst.max((diff - integral).norm());
        }
    }
    Ok(worst)
}

/// `⟨L(λ), a⟩ = d/dλ ⟨τ(λ), a⟩`, computed as the Gaussian average of
/// `Tr(γUa · D exp(A)[E])` with `A = −Q(λ)² + it d_λa` and
/// `E = −dq̇ + it[q̇, a]`.
pub fn l_pairing(f: &DeformationFamily, lambda: f64, input: &PairingInput, quad_nodes: usize) -> Result<C64> {
    let t = f.deform_triple(lambda)?;
    let bt = block_triple(&t, input.m);
    let im = identity(input.m);
    let q_dot = kron(&im, &f.q_dot(lambda));
    let left = &bt.gamma * bt.unitary(input.g)? * &input.a;
    let h = bt.hamiltonian();
    let da = bt.derivative(&input.a)?;
    let dqd = bt.derivative(&q_dot)?;
    let qa = commutator(&q_dot, &input.a);
    Ok(gaussian_average(quad_nodes, |x| {
        let it = c(0.0, x);
        let a = -&h + &da * it;
        let e = -&dqd + &qa * it;
        let (_, l) = expm_frechet(&a, &e)?;
        Ok(trace_of_product(&left, &l))
    })?
    .value)
}

/// Pairing per plane `β` with the spread across planes.
pub fn beta_independence(t: &SpectralTriple, input: &PairingInput, betas: &[f64], opts: PairingOptions) -> Result<SweepTable> {
    let rows = exec::try_map_indexed(betas.len(), |i| -> Result<SweepRow> {
        let b = betas[i];
        let r = pair(t, input, PairingOptions { beta: b, ..opts })?;
        Ok(SweepRow {
            lambda: b,
            eps: None,
            value: r.value,
            diagnostics: format!(
                "nodes={} series_diff={:.3e}",
                r.quad_nodes,
                (r.series_value - r.quadrature_value).norm()
            ),
        })
    })?;
    Ok(SweepTable::new(rows))
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointGrid {
    /// Rows sorted by `(eps, lambda)`.
    pub table: SweepTable,
    pub eps: Vec<f64>,
    pub lambda: Vec<f64>,
    /// Central differences `∂Z/∂ε` on interior ε points, indexed `[ε][λ]`.
    pub d_eps: Vec<Vec<C64>>,
    /// Central differences `∂Z/∂λ` on interior λ points, indexed `[ε][λ]`.
    pub d_lambda: Vec<Vec<C64>>,
    /// Per `λ`: `|Z(ε, λ) − Z(ε_min, λ)|` is nondecreasing in `ε`.
    pub monotone_in_eps: Vec<bool>,
}

impl EndpointGrid {
    pub fn value(&self, ie: usize, il: usize) -> C64 {
        self.table.rows[ie * self.lambda.len() + il].value
    }
}

/// `Z` with energy `H(ε, λ) = Q(λ)² + ε² Z*Z` and derivative `d_λ a`.
pub fn endpoint_grid(f: &DeformationFamily, eps_grid: &[f64], lambda_grid: &[f64], input: &PairingInput, quad_nodes: usize) -> Result<EndpointGrid> {
    let zz = f
        .regularizer
        .clone()
        .unwrap_or_else(|| CMat::zeros(f.base.dim, f.base.dim));
    let (ne, nl) = (eps_grid.len(), lambda_grid.len());
    let im = identity(input.m);
    let rows = exec::try_map_indexed(ne * nl, |k| -> Result<SweepRow> {
        let (eps, l) = (eps_grid[k / nl], lambda_grid[k % nl]);
        let t = f.deform_triple(l)?;
        input.validate(&t)?;
        let bt = block_triple(&t, input.m);
        let h = bt.hamiltonian() + kron(&im, &zz) * c(eps * eps, 0.0);
        let da = bt.derivative(&input.a)?;
        let gf = GeneratingFunctional::from_parts(&t, input, 1.0, Some((h, da)))?;
        let r = gaussian_average(quad_nodes, |x| gf.eval(c(x, 0.0)))?;
        Ok(SweepRow {
            lambda: l,
            eps: Some(eps),
            value: r.value,
            diagnostics: format!("nodes={}", r.nodes),
        })
    })?;
    let table = SweepTable::new(rows);
    let at = |ie: usize, il: usize| table.rows[ie * nl + il].value;
    let d_eps = (0..ne)
        .map(|ie| {
            (0..nl)
                .map(|il| {
                    if ie == 0 || ie + 1 == ne {
                        C64::default()
                    } else {
                        (at(ie + 1, il) - at(ie - 1, il)) / (eps_grid[ie + 1] - eps_grid[ie - 1])
                    }
                })
                .collect()
        })
        .collect();
    let d_lambda = (0..ne)
        .map(|ie| {
            (0..nl)
                .map(|il| {
                    if il == 0 || il + 1 == nl {
                        C64::default()
                    } else {
                        (at(ie, il + 1) - at(ie, il - 1)) / (lambda_grid[il + 1] - lambda_grid[il - 1])
                    }
                })
                .collect()
        })
        .collect();
    let monotone_in_eps = (0..nl)
        .map(|il| {
            let dist: Vec<f64> = (0..ne).map(|ie| (at(ie, il) - at(0, il)).norm()).collect();
            dist.windows(2).all(|w| w[1] + 1e-14 >= w[0])
        })
        .collect();
    Ok(EndpointGrid {
        table,
        eps: eps_grid.to_vec(),
        lambda: lambda_grid.to_vec(),
        d_eps,
        d_lambda,
        monotone_in_eps,
    })
}
