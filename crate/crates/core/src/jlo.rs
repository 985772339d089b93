//! The JLO cochain `τ_n(a_0, …, a_n; g) = ⟨a_0, da_1, …, da_n; g⟩`, its
//! generating functional, and its pairing with involutions `a² = I`.
//!
//! On the plane `β` the cochain is `β^{-n/2} ⟨a_0, da_1, …⟩_{βσ_n}`, which
//! is the unit-plane cochain of the rescaled operator `√β Q`. The pairing
//! is `Σ_n α_{2n} tr τ_{2n}(a, …, a)` with `α_{2n} = (−¼)^n (2n)!/n!`, and
//! equals the Gaussian average `π^{-1/2} ∫ e^{-t²} J(t; a) dt` of
//! `J(z; a) = Tr(γ U(g) a e^{-βQ² + iz√β da})`.

use std::ops::Range;
use std::sync::Arc;

use serde::Serialize;

use crate::cochain::{op_partial, Cochain, Parity};
use crate::error::{CochainClass, Error, Result};
use crate::exec;
use crate::expectations::{expect, repeated_vertex_moments, HeatContext};
use crate::linalg::{c, check_dim, expm, identity, kron, op_norm, trace_of_product, CMat, C64};
use crate::quadrature::gauss_hermite;
use crate::triple::SpectralTriple;

pub const DEFAULT_QUAD_NODES: usize = 64;
pub const MAX_QUAD_NODES: usize = 512;
pub const QUAD_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_LEVEL: usize = 160;
pub const DEFAULT_SERIES_TOL: f64 = 1e-14;

/// JLO evaluator bound to one triple and one plane.
#[derive(Debug, Clone)]
pub struct Jlo {
    pub triple: SpectralTriple,
    pub ctx: HeatContext,
    pub beta: f64,
}

impl Jlo {
    pub fn new(t: &SpectralTriple, beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidInput(format!("beta = {beta} must be positive")));
        }
        Ok(Jlo {
            triple: t.clone(),
            ctx: HeatContext::from_triple(t)?,
            beta,
        })
    }

    /// `τ_n(a_0, …, a_n; g)` with `n = args.len() − 1`. The derivation is
    /// the graded one, so odd arguments are allowed.
    pub fn component(&self, args: &[CMat], g: usize) -> Result<C64> {
        if args.is_empty() {
            return Err(Error::InvalidInput("empty argument list".into()));
        }
        let n = args.len() - 1;
        let mut v = Vec::with_capacity(n + 1);
        v.push(args[0].clone());
        for a in &args[1..] {
            v.push(self.triple.derivative(a)?);
        }
        let val = expect(&self.ctx, &v, g, self.beta)?;
        Ok(val * self.beta.powf(-0.5 * n as f64))
    }
}

/// `τ_n(a_0, …, a_n; g)` on the plane `β`.
pub fn jlo_component(t: &SpectralTriple, args: &[CMat], g: usize, beta: f64) -> Result<C64> {
    Jlo::new(t, beta)?.component(args, g)
}

/// The JLO cochain as a class-C even cochain.
pub fn jlo_cochain(t: &SpectralTriple, beta: f64) -> Result<Cochain> {
    let j = Arc::new(Jlo::new(t, beta)?);
    Ok(Cochain::new(
        t.group.clone(),
        None,
        Parity::Even,
        CochainClass::C,
        format!("JLO[beta={beta}]"),
        move |_, a, g| j.component(a, g),
    ))
}

/// `Tr(γ U(g) e^{-Q²})`.
pub fn equivariant_index(t: &SpectralTriple, g: usize) -> Result<C64> {
    equivariant_index_beta(t, g, 1.0)
}

pub fn equivariant_index_beta(t: &SpectralTriple, g: usize, beta: f64) -> Result<C64> {
    let ctx = HeatContext::from_triple(t)?;
    ctx.traced_heat(&identity(t.dim), g, beta)
}

/// `|τ_n(da_0, a_1, …) − Σ_{j≥1} (−1)^j τ_n(a_0, …, da_j, …)|`, zero on
/// even inputs by d-invariance of the expectations.
pub fn alternating_sum_residual(j: &Jlo, args: &[CMat], g: usize) -> Result<f64> {
    let mut acc = C64::default();
    for k in 0..args.len() {
        let mut v = args.to_vec();
        v[k] = j.triple.derivative(&args[k])?;
        let s = if k == 0 || k % 2 == 1 { 1.0 } else { -1.0 };
        acc += j.component(&v, g)? * s;
    }
    Ok(acc.norm())
}

/// `m` copies of the triple: `Q̃ = I_m ⊗ Q`, so block `(i, j)` of a
/// blocked matrix is its `(i, j)` entry over the algebra.
pub fn block_triple(t: &SpectralTriple, m: usize) -> SpectralTriple {
    if m == 1 {
        return t.clone();
    }
    let im = identity(m);
    SpectralTriple {
        dim: m * t.dim,
        q: kron(&im, &t.q),
        gamma: kron(&im, &t.gamma),
        group: t.group.iter().map(|u| kron(&im, u)).collect(),
        tol: t.tol,
    }
}

/// Block `(i, j)` of an `(m·d)`-dimensional matrix.
pub fn block(a: &CMat, d: usize, i: usize, j: usize) -> CMat {
    a.view((i * d, j * d), (d, d)).into_owned()
}

/// Involution in `Mat_m` over the invariant even algebra.
#[derive(Debug, Clone)]
pub struct PairingInput {
    pub a: CMat,
    pub m: usize,
    pub g: usize,
}

impl PairingInput {
    pub fn new(a: CMat, m: usize, g: usize) -> Self {
        PairingInput { a, m, g }
    }

    /// Residuals of `a² = I`, `γ̃aγ̃ = a` and `Ũ a Ũ* = a`; errors if any
    /// exceeds the triple tolerance scaled by `‖a‖`.
    pub fn validate(&self, t: &SpectralTriple) -> Result<()> {
        let bt = block_triple(t, self.m);
        check_dim(&self.a, bt.dim, "pairing input")?;
        if self.g >= t.order() {
            return Err(Error::GroupIndex {
                index: self.g,
                order: t.order(),
            });
        }
        let scale = op_norm(&self.a).max(1.0);
        let tol = t.tol * scale * scale;
        let sq = op_norm(&(&self.a * &self.a - identity(bt.dim)));
        if sq > tol {
            return Err(Error::ValidationFailure(format!("a^2 = I fails (residual {sq:e})")));
        }
        let ev = op_norm(&(bt.grade(&self.a) - &self.a));
        if ev > tol {
            return Err(Error::ValidationFailure(format!("a is not gamma-even (residual {ev:e})")));
        }
        for (k, u) in bt.group.iter().enumerate() {
            let r = op_norm(&(u * &self.a * u.adjoint() - &self.a));
            if r > tol {
                return Err(Error::NotInvariant(format!(
                    "a does not commute with group element {k} (residual {r:e})"
                )));
            }
        }
        Ok(())
    }
}

/// `α_{2n}` for `n = 0..count`.
pub fn pairing_coefficients(count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let mut a = 1.0;
    for n in 0..count {
        out.push(a);
        a *= -(2.0 * n as f64 + 1.0) / 2.0;
    }
    out
}

/// `J(z; a) = Tr(γ̃ Ũ(g) a e^{-βQ̃² + iz√β d̃a})` on the blocked space.
pub fn generating_functional(t: &SpectralTriple, input: &PairingInput, z: C64, beta: f64) -> Result<C64> {
    GeneratingFunctional::new(t, input, beta)?.eval(z)
}

/// Precomputed pieces of `J(z; a)`.
pub struct GeneratingFunctional {
    left: CMat,
    base: CMat,
    da: CMat,
    scale: f64,
}

impl GeneratingFunctional {
    pub fn new(t: &SpectralTriple, input: &PairingInput, beta: f64) -> Result<Self> {
        Self::from_parts(t, input, beta, None)
    }

    /// General form `Tr(γ̃Ũa e^{-βH + iz√β x})`; `heat` overrides `Q̃²` and
    /// `da` overrides `d̃a`.
    pub fn from_parts(
        t: &SpectralTriple,
        input: &PairingInput,
        beta: f64,
        overrides: Option<(CMat, CMat)>,
    ) -> Result<Self> {
        let bt = block_triple(t, input.m);
        check_dim(&input.a, bt.dim, "pairing input")?;
        let u = bt.unitary(input.g)?;
        let (h, da) = match overrides {
            Some((h, x)) => (h, x),
            None => (bt.hamiltonian(), bt.derivative(&input.a)?),
        };
        Ok(GeneratingFunctional {
            left: &bt.gamma * u * &input.a,
            base: h * c(-beta, 0.0),
            da,
            scale: beta.sqrt(),
        })
    }

    pub fn eval(&self, z: C64) -> Result<C64> {
        let m = &self.base + &self.da * (C64::i() * z * self.scale);
        Ok(trace_of_product(&self.left, &expm(&m)?))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeriesResult {
    pub value: C64,
    pub truncation_level: usize,
    pub tail_bound: f64,
    pub terms: Vec<C64>,
}

fn accumulate_series<F>(max_level: usize, tol: f64, top: Option<usize>, step: usize, mut batch: F) -> Result<SeriesResult>
where
    F: FnMut(Range<usize>) -> Result<Vec<C64>>,
{
    if let Some(top) = top {
        let terms = batch(0..top.min(max_level) / 2 + 1)?;
        let mut r = finish(terms);
        r.tail_bound = 0.0;
        return Ok(r);
    }
    let last = max_level / 2;
    let mut terms: Vec<C64> = Vec::new();
    let mut n = 0;
    while n <= last {
        let hi = (n + step).min(last + 1);
        for v in batch(n..hi)? {
            terms.push(v);
            let k = terms.len() - 1;
            let scale = terms[0].norm().max(1.0);
            if k >= 2 && terms[k].norm() < tol * scale && terms[k - 1].norm() < tol * scale {
                return Ok(finish(terms));
            }
        }
        n = hi;
    }
    Err(Error::NoConvergence {
        what: "pairing series".into(),
        detail: format!(
            "terms still above {tol:e} at level {max_level} (last {:e})",
            terms.last().map(|t| t.norm()).unwrap_or(f64::NAN)
        ),
    })
}

fn finish(terms: Vec<C64>) -> SeriesResult {
    let k = terms.len() - 1;
    let last = terms[k].norm();
    let prev = if k > 0 { terms[k - 1].norm() } else { 0.0 };
    let tail_bound = if prev > 0.0 && last < prev {
        let r = last / prev;
        last * r / (1.0 - r)
    } else {
        last
    };
    SeriesResult {
        value: terms.iter().sum(),
        truncation_level: 2 * k,
        tail_bound,
        terms,
    }
}

/// `Σ_n α_{2n} tr τ_{2n}(a, …, a)` for the JLO cochain on the plane `β`.
///
/// The repeated-vertex expectations come from contour integrals of the
/// exponential of `-βQ̃² + βw d̃a`, so high levels cost the same as low ones.
pub fn pairing_series(t: &SpectralTriple, input: &PairingInput, max_level: usize, tol: f64, beta: f64) -> Result<SeriesResult> {
    let bt = block_triple(t, input.m);
    check_dim(&input.a, bt.dim, "pairing input")?;
    let ctx = HeatContext::from_triple(&bt)?;
    let da = bt.derivative(&input.a)?;
    series_from_moments(&ctx, &input.a, &da, input.g, beta, max_level, tol)
}

/// Series from moments `⟨x_0, x, …, x⟩_{2n}` on a heat context.
pub fn series_from_moments(
    ctx: &HeatContext,
    x0: &CMat,
    x: &CMat,
    g: usize,
    beta: f64,
    max_level: usize,
    tol: f64,
) -> Result<SeriesResult> {
    accumulate_series(max_level, tol, None, 8, |ns| {
        let alpha = pairing_coefficients(ns.end);
        let levels: Vec<usize> = ns.clone().map(|n| 2 * n).collect();
        let moments = repeated_vertex_moments(ctx, x0, x, g, beta, &levels)?;
        Ok(ns
            .zip(moments)
            .map(|(n, m)| m * (alpha[n] * beta.powi(-(n as i32))))
            .collect())
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GaussianResult {
    pub value: C64,
    pub nodes: usize,
    pub change: f64,
}

/// `π^{-1/2} ∫ e^{-t²} J(t) dt` by Gauss–Hermite, doubling the node count
/// from `quad_nodes` until two rules agree to `1e-10`.
pub fn gaussian_average<F>(quad_nodes: usize, j: F) -> Result<GaussianResult>
where
    F: Fn(f64) -> Result<C64> + Send + Sync,
{
    let cap = MAX_QUAD_NODES.max(quad_nodes);
    let rule = |n: usize| -> Result<C64> {
        let (x, w) = gauss_hermite(n);
        let vals = exec::try_map_indexed(n, |k| j(x[k]))?;
        Ok(vals.iter().zip(&w).map(|(v, &wk)| v * wk).sum())
    };
    let mut n = quad_nodes.max(2);
    let mut prev = rule(n)?;
    loop {
        let m = 2 * n;
        if m > cap {
            return Err(Error::NoConvergence {
                what: "Gauss-Hermite pairing".into(),
                detail: format!("node cap {cap} reached"),
            });
        }
        let cur = rule(m)?;
        let change = (cur - prev).norm();
        if change < QUAD_TOL * cur.norm().max(1.0) {
            return Ok(GaussianResult {
                value: cur,
                nodes: m,
                change,
            });
        }
        prev = cur;
        n = m;
    }
}

/// Gaussian-transform pairing on the plane `β`.
pub fn pairing_gaussian(t: &SpectralTriple, input: &PairingInput, quad_nodes: usize, beta: f64) -> Result<GaussianResult> {
    let gf = GeneratingFunctional::new(t, input, beta)?;
    gaussian_average(quad_nodes, |x| gf.eval(c(x, 0.0)))
}

#[derive(Debug, Clone, Copy)]
pub struct PairingOptions {
    pub quad_nodes: usize,
    pub max_level: usize,
    pub tol: f64,
    pub beta: f64,
}

impl Default for PairingOptions {
    fn default() -> Self {
        PairingOptions {
            quad_nodes: DEFAULT_QUAD_NODES,
            max_level: DEFAULT_MAX_LEVEL,
            tol: DEFAULT_SERIES_TOL,
            beta: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairingResult {
    /// The Gauss–Hermite value, taken as the reference.
    pub value: C64,
    pub series_value: C64,
    pub quadrature_value: C64,
    pub truncation_level: usize,
    pub tail_bound: f64,
    pub quad_nodes: usize,
}

/// Both pairing forms after validating the input.
pub fn pair(t: &SpectralTriple, input: &PairingInput, opts: PairingOptions) -> Result<PairingResult> {
    input.validate(t)?;
    let q = pairing_gaussian(t, input, opts.quad_nodes, opts.beta)?;
    let s = pairing_series(t, input, opts.max_level, opts.tol, opts.beta)?;
    Ok(PairingResult {
        value: q.value,
        series_value: s.value,
        quadrature_value: q.value,
        truncation_level: s.truncation_level,
        tail_bound: s.tail_bound,
        quad_nodes: q.nodes,
    })
}

/// `a = 2p − I`.
pub fn involution_from_projection(p: &CMat) -> CMat {
    p * c(2.0, 0.0) - identity(p.nrows())
}

/// Idempotent-form pairing `½⟨τ, 2p − I⟩ + ½⟨τ, I⟩`.
pub fn idempotent_pairing(t: &SpectralTriple, p: &CMat, m: usize, g: usize, opts: PairingOptions) -> Result<C64> {
    let a = involution_from_projection(p);
    let r = pair(t, &PairingInput::new(a, m, g), opts)?;
    let id = pair(t, &PairingInput::new(identity(m * t.dim), m, g), opts)?;
    Ok((r.value + id.value) * 0.5)
}

/// `Σ_n α_{2n} tr f_{2n}(a, …, a)` for an arbitrary cochain, with `tr`
/// summing over block index cycles. Cochains with a finite top level are
/// summed through it exactly.
pub fn pairing_cochain(f: &Cochain, input: &PairingInput, max_level: usize, tol: f64) -> Result<SeriesResult> {
    let d = f.group[0].nrows();
    let m = input.m;
    check_dim(&input.a, m * d, "pairing input")?;
    let blocks: Vec<Vec<CMat>> = (0..m)
        .map(|i| (0..m).map(|j| block(&input.a, d, i, j)).collect())
        .collect();
    let top = f.max_level.map(|l| l - l % 2);
    // generic cochains cost grows steeply with level: one level per batch
    accumulate_series(max_level, tol, top, 1, |ns| {
        let alpha = pairing_coefficients(ns.end);
        let mut out = Vec::with_capacity(ns.len());
        for n in ns {
            let level = 2 * n;
            let cycles = m.pow(level as u32 + 1);
            let vals = exec::try_map_indexed(cycles, |mut code| -> Result<C64> {
                let mut idx = vec![0usize; level + 1];
                for slot in idx.iter_mut() {
                    *slot = code % m;
                    code /= m;
                }
                let args: Vec<CMat> = (0..=level)
                    .map(|k| blocks[idx[k]][idx[(k + 1) % (level + 1)]].clone())
                    .collect();
                f.eval(level, &args, input.g)
            })?;
            out.push(vals.iter().sum::<C64>() * alpha[n]);
        }
        Ok(out)
    })
}

/// `|⟨∂G, a⟩|`.
pub fn coboundary_pairing_residual(g_cochain: &Cochain, input: &PairingInput, max_level: usize) -> Result<f64> {
    let dg = op_partial(g_cochain)?;
    Ok(pairing_cochain(&dg, input, max_level, DEFAULT_SERIES_TOL)?.value.norm())
}

/// `n^{1/2} |τ_n(a, …, a)|^{1/n}` at the requested even levels.
pub fn entire_decay(t: &SpectralTriple, a: &CMat, g: usize, levels: &[usize]) -> Result<Vec<(usize, f64)>> {
    let ctx = HeatContext::from_triple(t)?;
    let da = t.derivative(a)?;
    let moments = repeated_vertex_moments(&ctx, a, &da, g, 1.0, levels)?;
    Ok(levels
        .iter()
        .zip(moments)
        .filter(|(n, _)| **n > 0)
        .map(|(&n, v)| (n, (n as f64).sqrt() * v.norm().powf(1.0 / n as f64)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_follow_recursion() {
        let a = pairing_coefficients(4);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[1], -0.5);
        assert_eq!(a[2], 0.75);
    }
}
