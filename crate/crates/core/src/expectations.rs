//! Heat-kernel simplex expectations
//! `⟨x_0, …, x_n; g⟩ = ∫_{βσ_n} Tr(γ U(g) x_0 e^{-s_0 H} x_1 ⋯ x_n e^{-s_n H}) d^n s`
//! and the identities they satisfy.
//!
//! Three evaluation routes are available. The tuple sum diagonalizes `H`
//! and weights each index cycle by a divided difference of `exp`; it is the
//! reference. The block route reads the same integral off one exponential
//! of a block-bidiagonal matrix. The Monte-Carlo route samples the simplex
//! and reports three standard errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::exec;
use crate::linalg::{
    c, check_dim, eig_hermitian, expm, identity, op_norm, simplex_exp, CMat,
    HermitianEigenSystem, C64,
};
use crate::triple::{regularity_exponents, SpectralTriple, VertexType};

/// Default budget for `dim^{n+1}` in the tuple sum.
pub const DEFAULT_COMPLEXITY_CAP: f64 = 1e8;

/// Default Monte-Carlo sample count.
pub const DEFAULT_SAMPLES: usize = 200_000;

const MC_CHUNK: usize = 4096;

/// Eigen-system of a heat generator `H` together with the grading and the
/// group. Works for `H = Q²` of a triple and for split generators alike.
#[derive(Debug, Clone)]
pub struct HeatContext {
    pub dim: usize,
    pub h: CMat,
    pub eig: HermitianEigenSystem,
    pub gamma: CMat,
    pub group: Vec<CMat>,
    pub cap: f64,
}

impl HeatContext {
    pub fn new(h: CMat, gamma: CMat, group: Vec<CMat>) -> Result<Self> {
        let dim = h.nrows();
        check_dim(&gamma, dim, "gamma")?;
        for (i, u) in group.iter().enumerate() {
            check_dim(u, dim, &format!("group[{i}]"))?;
        }
        let eig = eig_hermitian(&h)?;
        let group = if group.is_empty() {
            vec![identity(dim)]
        } else {
            group
        };
        Ok(HeatContext {
            dim,
            h,
            eig,
            gamma,
            group,
            cap: DEFAULT_COMPLEXITY_CAP,
        })
    }

    /// `H = Q²`, diagonalized through `Q` so that the spectrum is exactly
    /// the squares of the eigenvalues of `Q`.
    pub fn from_triple(t: &SpectralTriple) -> Result<Self> {
        let qe = eig_hermitian(&t.q)?;
        let n = t.dim;
        let mut order: Vec<usize> = (0..n).collect();
        let sq: Vec<f64> = qe.eigenvalues.iter().map(|l| l * l).collect();
        order.sort_by(|&a, &b| sq[a].total_cmp(&sq[b]));
        let eig = HermitianEigenSystem {
            eigenvalues: order.iter().map(|&k| sq[k]).collect(),
            eigenvectors: CMat::from_fn(n, n, |i, j| qe.eigenvectors[(i, order[j])]),
        };
        Ok(HeatContext {
            dim: n,
            h: t.hamiltonian(),
            eig,
            gamma: t.gamma.clone(),
            group: t.group.clone(),
            cap: DEFAULT_COMPLEXITY_CAP,
        })
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = cap;
        self
    }

    pub fn unitary(&self, g: usize) -> Result<&CMat> {
        self.group.get(g).ok_or(Error::GroupIndex {
            index: g,
            order: self.group.len(),
        })
    }

    /// `e^{-βH}`.
    pub fn heat(&self, beta: f64) -> CMat {
        self.eig.apply_fn(|l| c((-beta * l).exp(), 0.0))
    }

    /// `Tr(γ U(g) x e^{-βH})`.
    pub fn traced_heat(&self, x: &CMat, g: usize, beta: f64) -> Result<C64> {
        let u = self.unitary(g)?;
        Ok(crate::linalg::trace_of_product(
            &(&self.gamma * u * x),
            &self.heat(beta),
        ))
    }
}

/// Ordered vertices with optional Sobolev types and the hyperplane `β`.
#[derive(Debug, Clone)]
pub struct VertexSet {
    pub vertices: Vec<CMat>,
    pub types: Option<Vec<VertexType>>,
    pub beta_plane: f64,
}

impl VertexSet {
    pub fn new(vertices: Vec<CMat>) -> Self {
        VertexSet {
            vertices,
            types: None,
            beta_plane: 1.0,
        }
    }

    pub fn with_types(mut self, types: Vec<VertexType>) -> Self {
        self.types = Some(types);
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta_plane = beta;
        self
    }

    /// Number of vertices minus one.
    pub fn level(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }

    /// Declared types, defaulting to bounded `(0, 0)`.
    pub fn types_or_default(&self) -> Vec<VertexType> {
        self.types
            .clone()
            .unwrap_or_else(|| vec![VertexType::default(); self.vertices.len()])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Exact,
    Quadrature,
}

/// Evaluation route for [`heat_expectation`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Exact,
    Quadrature { samples: usize, seed: u64 },
}

impl Method {
    pub fn quadrature(seed: u64) -> Self {
        Method::Quadrature {
            samples: DEFAULT_SAMPLES,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ExpectationValue {
    pub value: C64,
    pub method: MethodKind,
    pub estimated_error: f64,
}

/// `∏Γ(η_j) / Γ(Ση_j)`, through log-Gamma.
pub fn beta_fn(etas: &[f64]) -> Result<f64> {
    if etas.is_empty() {
        return Err(Error::BadExponent("empty exponent list".into()));
    }
    if let Some(e) = etas.iter().find(|&&e| !(e > 0.0) || !e.is_finite()) {
        return Err(Error::BadExponent(format!("eta = {e} must be positive")));
    }
    let num: f64 = etas.iter().map(|&e| ln_gamma(e)).sum();
    let den = ln_gamma(etas.iter().sum());
    Ok((num - den).exp())
}

/// Monte-Carlo estimate of `∫_{σ_n} ∏ s_j^{η_j − 1} d^n s`.
///
/// Samples a Dirichlet(`5η/4`) proposal, which keeps the weights square
/// integrable even at `η_j = ½`. Returns `(estimate, 3 standard errors)`.
pub fn beta_fn_monte_carlo(etas: &[f64], samples: usize, seed: u64) -> Result<(f64, f64)> {
    beta_fn(etas)?;
    let prop: Vec<f64> = etas.iter().map(|e| 1.25 * e).collect();
    let log_norm = beta_fn(&prop)?.ln();
    let dists: Vec<Gamma<f64>> = prop
        .iter()
        .map(|&a| Gamma::new(a, 1.0).expect("positive shape"))
        .collect();
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = exec::map_indexed(chunks, |ci| {
        let mut rng = chunk_rng(seed, ci);
        let count = MC_CHUNK.min(samples - ci * MC_CHUNK);
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        let mut g = vec![0.0; etas.len()];
        for _ in 0..count {
            let mut tot = 0.0;
            for (gj, d) in g.iter_mut().zip(&dists) {
                *gj = d.sample(&mut rng).max(f64::MIN_POSITIVE);
                tot += *gj;
            }
            // weight = B(η') ∏ t_j^{η_j − η'_j}
            let mut lw = log_norm;
            for ((gj, e), p) in g.iter().zip(etas).zip(&prop) {
                lw += (e - p) * (gj / tot).ln();
            }
            let w = lw.exp();
            s1 += w;
            s2 += w * w;
        }
        (s1, s2)
    });
    let (s1, s2) = parts
        .into_iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = samples as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    Ok((mean, 3.0 * (var / nf).sqrt()))
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64 + 1);
    rng
}

/// Fills `t` with a uniform point of the unit simplex (normalized
/// exponential spacings).
fn sample_simplex(rng: &mut ChaCha8Rng, t: &mut [f64]) {
    let mut tot = 0.0;
    for v in t.iter_mut() {
        let u: f64 = rng.random();
        *v = -(1.0 - u).ln();
        tot += *v;
    }
    for v in t.iter_mut() {
        *v /= tot;
    }
}

/// Monte-Carlo estimate of `∫_{βσ_n} f(s) d^n s`; `f` receives `s` on the
/// scaled simplex. Returns `(estimate, 3 standard errors)`.
pub fn simplex_monte_carlo<F>(n: usize, beta: f64, samples: usize, seed: u64, f: F) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = exec::map_indexed(chunks, |ci| {
        let mut rng = chunk_rng(seed, ci);
        let count = MC_CHUNK.min(samples - ci * MC_CHUNK);
        let mut t = vec![0.0; n + 1];
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            sample_simplex(&mut rng, &mut t);
            for v in t.iter_mut() {
                *v *= beta;
            }
            let y = f(&t);
            s1 += y;
            s2 += y * y;
        }
        (s1, s2)
    });
    let (s1, s2) = parts
        .into_iter()
        .fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = samples as f64;
    let vol = beta.powi(n as i32) / factorial(n);
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean).max(0.0);
    (vol * mean, 3.0 * vol * (var / nf).sqrt())
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Ranks nondecreasing index tuples (multisets) densely.
struct MultisetIndex {
    binom: Vec<Vec<usize>>,
    len: usize,
}

impl MultisetIndex {
    fn new(dim: usize, len: usize) -> Self {
        let top = dim + len;
        let mut binom = vec![vec![0usize; len + 2]; top + 1];
        for (n, row) in binom.iter_mut().enumerate() {
            row[0] = 1;
            for k in 1..=len + 1 {
                row[k] = if k > n {
                    0
                } else if k == n {
                    1
                } else {
                    0
                };
            }
        }
        for n in 1..=top {
            for k in 1..=len + 1 {
                binom[n][k] = binom[n - 1][k - 1] + binom[n - 1][k];
            }
        }
        MultisetIndex { binom, len }
    }

    fn count(&self, dim: usize) -> usize {
        self.binom[dim + self.len - 1][self.len]
    }

    /// Colex rank of a sorted tuple.
    fn rank(&self, sorted: &[usize]) -> usize {
        sorted
            .iter()
            .enumerate()
            .map(|(k, &x)| self.binom[x + k][k + 1])
            .sum()
    }
}

/// All nondecreasing tuples of length `len` over `0..dim`.
fn multisets(dim: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    loop {
        out.push(cur.clone());
        let mut k = len;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            if cur[k] + 1 < dim {
                let v = cur[k] + 1;
                for slot in cur.iter_mut().skip(k) {
                    *slot = v;
                }
                break;
            }
        }
    }
}

/// `⟨x_0, …, x_n; g⟩` on the plane `β` by the tuple sum. Returns the value
/// and the sum of absolute term values (for error estimates).
pub fn expectation_tuple_sum(
    ctx: &HeatContext,
    vertices: &[CMat],
    g: usize,
    beta: f64,
) -> Result<(C64, f64)> {
    if vertices.is_empty() {
        return Err(Error::InvalidInput("empty vertex list".into()));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidInput(format!("beta = {beta} must be positive")));
    }
    let d = ctx.dim;
    for (j, x) in vertices.iter().enumerate() {
        check_dim(x, d, &format!("vertex {j}"))?;
    }
    let n = vertices.len() - 1;
    let terms = (d as f64).powi(n as i32 + 1);
    if terms > ctx.cap {
        return Err(Error::ComplexityCap {
            terms,
            cap: ctx.cap,
        });
    }
    let u = ctx.unitary(g)?;
    let mut xs: Vec<CMat> = Vec::with_capacity(n + 1);
    xs.push(ctx.eig.to_eigenbasis(&(&ctx.gamma * u * &vertices[0])));
    for x in &vertices[1..] {
        xs.push(ctx.eig.to_eigenbasis(x));
    }
    let lam = &ctx.eig.eigenvalues;

    if n == 0 {
        let mut s = C64::default();
        let mut a = 0.0;
        for i in 0..d {
            let t = xs[0][(i, i)] * (-beta * lam[i]).exp();
            s += t;
            a += t.norm();
        }
        return Ok((s, a));
    }

    let index = MultisetIndex::new(d, n + 1);
    let sets = multisets(d, n + 1);
    debug_assert_eq!(sets.len(), index.count(d));
    let values = exec::map_slice(&sets, |set| {
        let pts: Vec<f64> = set.iter().map(|&i| lam[i]).collect();
        simplex_exp(&pts, beta)
    });
    let mut table = vec![0.0; sets.len()];
    for (set, v) in sets.iter().zip(values) {
        table[index.rank(set)] = v;
    }

    let parts = exec::map_indexed(d * d, |p| {
        let (i0, i1) = (p / d, p % d);
        let head = xs[0][(i0, i1)];
        let mut acc = (C64::default(), 0.0);
        if head == C64::default() {
            return acc;
        }
        let mut idx = vec![0usize; n + 1];
        idx[0] = i0;
        idx[1] = i1;
        let mut scratch = vec![0usize; n + 1];
        descend(
            &xs, &index, &table, d, n, 2, head, &mut idx, &mut scratch, &mut acc,
        );
        acc
    });
    let mut s = C64::default();
    let mut a = 0.0;
    for (v, w) in parts {
        s += v;
        a += w;
    }
    Ok((s, a))
}

#[allow(clippy::too_many_arguments)]
fn descend(
    xs: &[CMat],
    index: &MultisetIndex,
    table: &[f64],
    d: usize,
    n: usize,
    depth: usize,
    prefix: C64,
    idx: &mut [usize],
    scratch: &mut [usize],
    acc: &mut (C64, f64),
) {
    if depth == n + 1 {
        let close = xs[n][(idx[n], idx[0])];
        if close == C64::default() {
            return;
        }
        scratch.copy_from_slice(idx);
        scratch.sort_unstable();
        let e = table[index.rank(scratch)];
        let t = prefix * close * e;
        acc.0 += t;
        acc.1 += t.norm();
        return;
    }
    let prev = idx[depth - 1];
    let x = &xs[depth - 1];
    for i in 0..d {
        let v = x[(prev, i)];
        if v == C64::default() {
            continue;
        }
        idx[depth] = i;
        descend(xs, index, table, d, n, depth + 1, prefix * v, idx, scratch, acc);
    }
}

/// Block-bidiagonal route: `Tr(γ U x_0 [exp M]_{0,n})` with `-βH` on the
/// diagonal blocks and `β x_j` above them.
pub fn expectation_block(ctx: &HeatContext, vertices: &[CMat], g: usize, beta: f64) -> Result<C64> {
    let d = ctx.dim;
    let n = vertices.len() - 1;
    let u = ctx.unitary(g)?;
    let mut m = CMat::zeros((n + 1) * d, (n + 1) * d);
    let mh = &ctx.h * c(-beta, 0.0);
    for k in 0..=n {
        m.view_mut((k * d, k * d), (d, d)).copy_from(&mh);
        if k < n {
            m.view_mut((k * d, (k + 1) * d), (d, d))
                .copy_from(&(&vertices[k + 1] * c(beta, 0.0)));
        }
    }
    let e = expm(&m)?;
    let corner = e.view((0, n * d), (d, d)).into_owned();
    Ok(crate::linalg::trace_of_product(
        &(&ctx.gamma * u * &vertices[0]),
        &corner,
    ))
}

/// Monte-Carlo route. Returns value and three standard errors.
pub fn expectation_monte_carlo(
    ctx: &HeatContext,
    vertices: &[CMat],
    g: usize,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<(C64, f64)> {
    let d = ctx.dim;
    let n = vertices.len() - 1;
    let u = ctx.unitary(g)?;
    let mut xs: Vec<CMat> = Vec::with_capacity(n + 1);
    xs.push(ctx.eig.to_eigenbasis(&(&ctx.gamma * u * &vertices[0])));
    for x in &vertices[1..] {
        xs.push(ctx.eig.to_eigenbasis(x));
    }
    let lam = &ctx.eig.eigenvalues;
    let chunks = samples.div_ceil(MC_CHUNK);
    let parts = exec::map_indexed(chunks, |ci| {
        let mut rng = chunk_rng(seed, ci);
        let count = MC_CHUNK.min(samples - ci * MC_CHUNK);
        let mut t = vec![0.0; n + 1];
        let mut s1 = C64::default();
        let mut s2 = 0.0;
        for _ in 0..count {
            sample_simplex(&mut rng, &mut t);
            // X = x0 D0 x1 D1 ⋯ xn Dn with D_j = e^{-β t_j Λ}
            let mut prod = xs[0].clone();
            for j in 0..=n {
                for col in 0..d {
                    let f = (-beta * t[j] * lam[col]).exp();
                    for row in 0..d {
                        prod[(row, col)] *= f;
                    }
                }
                if j < n {
                    prod = &prod * &xs[j + 1];
                }
            }
            let tr: C64 = prod.diagonal().iter().sum();
            s1 += tr;
            s2 += tr.norm_sqr();
        }
        (s1, s2)
    });
    let (s1, s2) = parts
        .into_iter()
        .fold((C64::default(), 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
    let nf = samples as f64;
    let vol = beta.powi(n as i32) / factorial(n);
    let mean = s1 / nf;
    let var = (s2 / nf - mean.norm_sqr()).max(0.0);
    Ok((mean * vol, 3.0 * vol * (var / nf).sqrt()))
}

/// `⟨X; g⟩` by the requested method.
pub fn heat_expectation(
    ctx: &HeatContext,
    x: &VertexSet,
    g: usize,
    method: Method,
) -> Result<ExpectationValue> {
    match method {
        Method::Exact => {
            let (v, abs) = expectation_tuple_sum(ctx, &x.vertices, g, x.beta_plane)?;
            let n = x.vertices.len() as f64;
            Ok(ExpectationValue {
                value: v,
                method: MethodKind::Exact,
                estimated_error: 8.0 * f64::EPSILON * (n + ctx.dim as f64) * abs,
            })
        }
        Method::Quadrature { samples, seed } => {
            let (v, err) =
                expectation_monte_carlo(ctx, &x.vertices, g, x.beta_plane, samples, seed)?;
            Ok(ExpectationValue {
                value: v,
                method: MethodKind::Quadrature,
                estimated_error: err,
            })
        }
    }
}

/// Exact value, discarding the error estimate.
pub fn expect(ctx: &HeatContext, vertices: &[CMat], g: usize, beta: f64) -> Result<C64> {
    Ok(expectation_tuple_sum(ctx, vertices, g, beta)?.0)
}

/// `|⟨x_0..x_n⟩ − β^{-1} Σ_j ⟨x_0..x_{j-1}, I, x_j..x_n⟩|`.
///
/// On the plane `β` inserting the identity in every gap sums to `β` times
/// the original expectation; at `β = 1` this is the plain insertion rule.
pub fn check_insert_identity(
    t: &SpectralTriple,
    x: &VertexSet,
    g: usize,
    method: Method,
) -> Result<f64> {
    let ctx = HeatContext::from_triple(t)?;
    let lhs = heat_expectation(&ctx, x, g, method)?.value;
    let n = x.level();
    let id = identity(t.dim);
    let mut rhs = C64::default();
    for j in 1..=n + 1 {
        let mut v = x.vertices.clone();
        v.insert(j, id.clone());
        let xs = VertexSet {
            vertices: v,
            types: None,
            beta_plane: x.beta_plane,
        };
        let m = match method {
            Method::Exact => Method::Exact,
            Method::Quadrature { samples, seed } => Method::Quadrature {
                samples,
                seed: seed.wrapping_add(j as u64),
            },
        };
        rhs += heat_expectation(&ctx, &xs, g, m)?.value;
    }
    Ok((lhs - rhs / x.beta_plane).norm())
}

/// `|⟨x_0..x_n⟩ − ⟨(x_n^{g⁻¹})^γ, x_0, …, x_{n-1}⟩|`.
pub fn check_cyclic(t: &SpectralTriple, x: &VertexSet, g: usize) -> Result<f64> {
    let ctx = HeatContext::from_triple(t)?;
    let lhs = expect(&ctx, &x.vertices, g, x.beta_plane)?;
    let n = x.level();
    let moved = t.grade(&t.act_inverse(g, &x.vertices[n])?);
    let mut v = vec![moved];
    v.extend_from_slice(&x.vertices[..n]);
    let rhs = expect(&ctx, &v, g, x.beta_plane)?;
    Ok((lhs - rhs).norm())
}

/// `|Σ_j ⟨x_0^γ, …, x_{j-1}^γ, dx_j, x_{j+1}, …, x_n⟩|`.
pub fn check_d_invariance(t: &SpectralTriple, x: &VertexSet, g: usize) -> Result<f64> {
    let ctx = HeatContext::from_triple(t)?;
    let n = x.level();
    let mut sum = C64::default();
    for j in 0..=n {
        let mut v = Vec::with_capacity(n + 1);
        for k in 0..j {
            v.push(t.grade(&x.vertices[k]));
        }
        v.push(t.derivative(&x.vertices[j])?);
        v.extend_from_slice(&x.vertices[j + 1..]);
        sum += expect(&ctx, &v, g, x.beta_plane)?;
    }
    Ok(sum.norm())
}

/// `max(|⟨X^γ⟩ − ⟨X⟩|, |⟨X^g⟩ − ⟨X⟩|)`.
pub fn check_covariance(t: &SpectralTriple, x: &VertexSet, g: usize) -> Result<f64> {
    let ctx = HeatContext::from_triple(t)?;
    let base = expect(&ctx, &x.vertices, g, x.beta_plane)?;
    let graded: Vec<CMat> = x.vertices.iter().map(|v| t.grade(v)).collect();
    let acted: Vec<CMat> = x
        .vertices
        .iter()
        .map(|v| t.act(g, v))
        .collect::<Result<_>>()?;
    let a = (expect(&ctx, &graded, g, x.beta_plane)? - base).norm();
    let b = (expect(&ctx, &acted, g, x.beta_plane)? - base).norm();
    Ok(a.max(b))
}

/// `‖[b, e^{-sH}] − ∫_0^s e^{-tH} [H, b] e^{-(s-t)H} dt‖`, the integral
/// taken entrywise in the eigenbasis of `H = Q²`.
pub fn duhamel_commutator(t: &SpectralTriple, b: &CMat, s: f64) -> Result<f64> {
    check_dim(b, t.dim, "duhamel argument")?;
    if !(s > 0.0) {
        return Err(Error::InvalidInput(format!("s = {s} must be positive")));
    }
    let ctx = HeatContext::from_triple(t)?;
    let heat = ctx.heat(s);
    let lhs = b * &heat - &heat * b;
    let d2b = crate::linalg::commutator(&ctx.h, b);
    let dt = ctx.eig.to_eigenbasis(&d2b);
    let lam = &ctx.eig.eigenvalues;
    let kernel = CMat::from_fn(t.dim, t.dim, |i, j| {
        dt[(i, j)] * simplex_exp(&[lam[i], lam[j]], s)
    });
    let rhs = ctx.eig.from_eigenbasis(&kernel);
    Ok(op_norm(&(lhs - rhs)))
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub value: f64,
    pub bound: f64,
    pub satisfied: bool,
    /// `Tr(e^{-Q²}) ∏‖x_j‖ / n!` when every vertex is bounded.
    pub bounded_vertex_bound: Option<f64>,
}

/// Compares `|⟨X; g⟩|` with `m_1 m_2^{n+1} Γ((n+1)η_global)^{-1} ∏‖x_j‖_{(-β_j, α_j)}`,
/// where `m_1 = Tr e^{-(1-μ)Q²}` and `m_2 = 2Γ(η_local) μ^{-(1-η_global)}`.
/// Evaluated on the unit plane.
pub fn bound_expectation(t: &SpectralTriple, x: &VertexSet, g: usize, mu: f64) -> Result<BoundReport> {
    if !(mu > 0.0 && mu < 1.0) {
        return Err(Error::BadExponent(format!("mu = {mu} must lie in (0, 1)")));
    }
    if x.beta_plane != 1.0 {
        return Err(Error::InvalidInput(
            "bounds are stated on the unit plane".into(),
        ));
    }
    let ctx = HeatContext::from_triple(t)?;
    let value = expect(&ctx, &x.vertices, g, 1.0)?.norm();
    let types = x.types_or_default();
    let reg = regularity_exponents(&types)?;
    if !reg.regular {
        return Err(Error::InvalidInput("vertex set is not regular".into()));
    }
    let n = x.level();
    let lam = &ctx.eig.eigenvalues;
    let m1: f64 = lam.iter().map(|l| (-(1.0 - mu) * l).exp()).sum();
    let m2 = 2.0 * gamma(reg.eta_local) * mu.powf(-(1.0 - reg.eta_global));
    let mut prod = 1.0;
    for (v, ty) in x.vertices.iter().zip(&types) {
        prod *= t.sobolev_norm(v, -ty.beta, ty.alpha)?;
    }
    let bound = m1 * m2.powi(n as i32 + 1) / gamma((n as f64 + 1.0) * reg.eta_global) * prod;
    let bounded = types.iter().all(|ty| ty.alpha == 0.0 && ty.beta == 0.0);
    let bounded_vertex_bound = if bounded {
        let tr: f64 = lam.iter().map(|l| (-l).exp()).sum();
        let p: f64 = x.vertices.iter().map(op_norm).product();
        Some(tr * p / factorial(n))
    } else {
        None
    };
    let slack = 1e-12 * bound.max(1.0);
    let satisfied = value <= bound + slack
        && bounded_vertex_bound.is_none_or(|b| value <= b + 1e-12 * b.max(1.0));
    Ok(BoundReport {
        value,
        bound,
        satisfied,
        bounded_vertex_bound,
    })
}

/// Coefficients `c_k = ⟨x_0, x, …, x; g⟩_k` (k copies of `x`) on the plane
/// `β`, for each requested `k`.
///
/// They are the Taylor coefficients of `F(w) = Tr(γ U x_0 e^{-βH + βw x})`,
/// extracted by the trapezoid rule on a circle of radius `k / (β‖x‖)`,
/// where `|F| r^{-k}` is smallest. This keeps near-relative accuracy at
/// levels far beyond the reach of the tuple sum.
pub fn repeated_vertex_moments(
    ctx: &HeatContext,
    x0: &CMat,
    x: &CMat,
    g: usize,
    beta: f64,
    levels: &[usize],
) -> Result<Vec<C64>> {
    let d = ctx.dim;
    check_dim(x0, d, "x0")?;
    check_dim(x, d, "repeated vertex")?;
    let u = ctx.unitary(g)?;
    let left = &ctx.gamma * u * x0;
    let xn = op_norm(x);
    let base = &ctx.h * c(-beta, 0.0);
    let f0 = ctx.traced_heat(x0, g, beta)?;
    let eval = |w: C64| -> Result<C64> {
        let m = &base + x * (w * beta);
        Ok(crate::linalg::trace_of_product(&left, &expm(&m)?))
    };
    let out = exec::map_slice(levels, |&k| -> Result<C64> {
        if k == 0 {
            return Ok(f0);
        }
        if xn == 0.0 {
            return Ok(C64::default());
        }
        let r = (k as f64) / (beta * xn);
        let nodes = 64 + 2 * k;
        let mut acc = C64::default();
        for j in 0..nodes {
            let th = 2.0 * std::f64::consts::PI * j as f64 / nodes as f64;
            let w = C64::from_polar(r, th);
            acc += eval(w)? * C64::from_polar(1.0, -(k as f64) * th);
        }
        Ok(acc / (nodes as f64) * r.powi(-(k as i32)))
    });
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multiset_ranks_are_dense() {
        for (d, len) in [(1, 3), (3, 1), (3, 3), (4, 5)] {
            let idx = MultisetIndex::new(d, len);
            let sets = multisets(d, len);
            assert_eq!(sets.len(), idx.count(d));
            let mut seen = vec![false; sets.len()];
            for s in &sets {
                let r = idx.rank(s);
                assert!(!seen[r]);
                seen[r] = true;
            }
        }
    }

    #[test]
    fn beta_fn_rejects_nonpositive() {
        assert!(beta_fn(&[1.0, 0.0]).is_err());
    }
}
