//! Lazily evaluated cochains `{f_n}` and the operators `T, A, U, V(r), b, B, ∂`.
//!
//! A cochain is a closure `(n, (a_0, …, a_n), g) ↦ f_n(a_0, …, a_n; g)`
//! plus the group it lives over. Operators wrap closures; nothing is
//! tabulated.

use std::fmt;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CochainClass, Error, Result};
use crate::expectations::{expect, HeatContext};
use crate::fixtures;
use crate::linalg::{c, identity, op_norm, trace, CMat, C64};
use crate::triple::SpectralTriple;

pub type Evaluator = Arc<dyn Fn(usize, &[CMat], usize) -> Result<C64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
    Mixed,
}

impl Parity {
    fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
            Parity::Mixed => Parity::Mixed,
        }
    }
}

#[derive(Clone)]
pub struct Cochain {
    eval: Evaluator,
    pub group: Arc<Vec<CMat>>,
    /// Levels above this vanish; `None` means unbounded.
    pub max_level: Option<usize>,
    pub parity: Parity,
    pub class: CochainClass,
    pub label: String,
}

impl fmt::Debug for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cochain")
            .field("label", &self.label)
            .field("max_level", &self.max_level)
            .field("parity", &self.parity)
            .field("class", &self.class)
            .finish()
    }
}

impl Cochain {
    pub fn new<F>(
        group: Vec<CMat>,
        max_level: Option<usize>,
        parity: Parity,
        class: CochainClass,
        label: impl Into<String>,
        f: F,
    ) -> Self
    where
        F: Fn(usize, &[CMat], usize) -> Result<C64> + Send + Sync + 'static,
    {
        Cochain {
            eval: Arc::new(f),
            group: Arc::new(group),
            max_level,
            parity,
            class,
            label: label.into(),
        }
    }

    /// The zero cochain.
    pub fn zero(group: Vec<CMat>) -> Self {
        Cochain::new(group, Some(0), Parity::Even, CochainClass::N, "0", |_, _, _| {
            Ok(C64::default())
        })
    }

    /// `f_n(a_0, …, a_n; g)`; `args` must hold `n + 1` matrices.
    pub fn eval(&self, n: usize, args: &[CMat], g: usize) -> Result<C64> {
        if args.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                what: format!("level-{n} argument list"),
                expected: n + 1,
                found: args.len(),
            });
        }
        if g >= self.group.len() {
            return Err(Error::GroupIndex {
                index: g,
                order: self.group.len(),
            });
        }
        if self.max_level.is_some_and(|m| n > m) {
            return Ok(C64::default());
        }
        (self.eval)(n, args, g)
    }

    fn derived<F>(&self, max_level: Option<usize>, parity: Parity, class: CochainClass, label: String, f: F) -> Cochain
    where
        F: Fn(usize, &[CMat], usize) -> Result<C64> + Send + Sync + 'static,
    {
        Cochain {
            eval: Arc::new(f),
            group: self.group.clone(),
            max_level,
            parity,
            class,
            label,
        }
    }

    fn require_c(&self, op: &str) -> Result<()> {
        if self.class == CochainClass::D {
            return Err(Error::ClassViolation {
                declared: self.class,
                detail: format!("{op} requires a cochain of class C, got '{}'", self.label),
            });
        }
        Ok(())
    }

    fn dim(&self) -> usize {
        self.group[0].nrows()
    }

    /// Sum of two cochains over the same group.
    pub fn add(&self, other: &Cochain, scale: C64) -> Cochain {
        let (f, h) = (self.clone(), other.clone());
        let max = match (self.max_level, other.max_level) {
            (Some(a), Some(b)) => Some(a.max(b)),
            _ => None,
        };
        let parity = if self.parity == other.parity {
            self.parity
        } else {
            Parity::Mixed
        };
        let class = weakest(self.class, other.class);
        self.derived(max, parity, class, format!("{} + {}", self.label, other.label), move |n, a, g| {
            Ok(f.eval(n, a, g)? + scale * h.eval(n, a, g)?)
        })
    }
}

fn weakest(a: CochainClass, b: CochainClass) -> CochainClass {
    use CochainClass::*;
    match (a, b) {
        (D, _) | (_, D) => D,
        (C, _) | (_, C) => C,
        _ => N,
    }
}

/// `a^{g⁻¹} = U(g)* a U(g)`.
fn act_inv(group: &[CMat], g: usize, a: &CMat) -> CMat {
    let u = &group[g];
    u.adjoint() * a * u
}

/// `j` cyclic rotations `(a_0..a_n) ↦ (a_n^{g⁻¹}, a_0, …, a_{n-1})`.
fn rotate(group: &[CMat], g: usize, args: &[CMat], j: usize) -> Vec<CMat> {
    let mut v = args.to_vec();
    for _ in 0..j {
        let last = v.pop().expect("nonempty");
        v.insert(0, act_inv(group, g, &last));
    }
    v
}

fn sign(k: usize) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `(Tf)_n(a) = (−1)^n f_n(a_n^{g⁻¹}, a_0, …, a_{n-1})`.
pub fn op_t(f: &Cochain) -> Cochain {
    op_t_pow(f, 1)
}

/// `T^j`.
pub fn op_t_pow(f: &Cochain, j: usize) -> Cochain {
    let h = f.clone();
    let class = if f.class == CochainClass::N {
        CochainClass::N
    } else {
        CochainClass::D
    };
    f.derived(f.max_level, f.parity, class, format!("T^{j}({})", f.label), move |n, a, g| {
        let s = sign(n * j);
        Ok(h.eval(n, &rotate(&h.group, g, a, j % (n + 1)), g)? * s)
    })
}

/// `(Af)_n = Σ_{j=0}^n (T^j f)_n`.
pub fn op_a(f: &Cochain) -> Cochain {
    let h = f.clone();
    let class = if f.class == CochainClass::N {
        CochainClass::N
    } else {
        CochainClass::D
    };
    f.derived(f.max_level, f.parity, class, format!("A({})", f.label), move |n, a, g| {
        let mut acc = C64::default();
        let mut v = a.to_vec();
        for j in 0..=n {
            if j > 0 {
                v = rotate(&h.group, g, &v, 1);
            }
            acc += h.eval(n, &v, g)? * sign(n * j);
        }
        Ok(acc)
    })
}

/// `(Uf)_n(a_0..a_n) = f_{n+1}(I, a_0, …, a_n)`.
pub fn op_u(f: &Cochain) -> Cochain {
    let h = f.clone();
    let class = if f.class == CochainClass::C {
        CochainClass::N
    } else {
        CochainClass::D
    };
    let id = identity(f.dim());
    f.derived(
        f.max_level.map(|m| m.saturating_sub(1)),
        f.parity.flip(),
        class,
        format!("U({})", f.label),
        move |n, a, g| {
            let mut v = Vec::with_capacity(n + 2);
            v.push(id.clone());
            v.extend_from_slice(a);
            h.eval(n + 1, &v, g)
        },
    )
}

/// `V(r)` acting on `f_{n-1}` to give level `n`:
/// `(−1)^r f(…, a_r a_{r+1}, …)` for `r ≤ n−1`,
/// `(−1)^n f(a_n^{g⁻¹} a_0, a_1, …, a_{n-1})` for `r = n`, zero beyond.
fn v_r_eval(h: &Cochain, r: usize, n: usize, a: &[CMat], g: usize) -> Result<C64> {
    if n == 0 || r > n {
        return Ok(C64::default());
    }
    let mut v = Vec::with_capacity(n);
    if r < n {
        v.extend_from_slice(&a[..r]);
        v.push(&a[r] * &a[r + 1]);
        v.extend_from_slice(&a[r + 2..]);
        Ok(h.eval(n - 1, &v, g)? * sign(r))
    } else {
        v.push(act_inv(&h.group, g, &a[n]) * &a[0]);
        v.extend_from_slice(&a[1..n]);
        Ok(h.eval(n - 1, &v, g)? * sign(n))
    }
}

pub fn op_v(r: usize, f: &Cochain) -> Cochain {
    let h = f.clone();
    f.derived(
        f.max_level.map(|m| m + 1),
        f.parity.flip(),
        CochainClass::D,
        format!("V({r})({})", f.label),
        move |n, a, g| v_r_eval(&h, r, n, a, g),
    )
}

/// Hochschild coboundary `b = Σ_r V(r)`.
pub fn op_b(f: &Cochain) -> Result<Cochain> {
    f.require_c("b")?;
    let h = f.clone();
    Ok(f.derived(
        f.max_level.map(|m| m + 1),
        f.parity.flip(),
        CochainClass::C,
        format!("b({})", f.label),
        move |n, a, g| {
            let mut acc = C64::default();
            for r in 0..=n {
                acc += v_r_eval(&h, r, n, a, g)?;
            }
            Ok(acc)
        },
    ))
}

fn connes_eval(h: &Cochain, id: &CMat, n: usize, a: &[CMat], g: usize) -> Result<C64> {
    let mut acc = C64::default();
    let mut v = a.to_vec();
    let mut args = Vec::with_capacity(n + 2);
    for j in 0..=n {
        if j > 0 {
            v = rotate(&h.group, g, &v, 1);
        }
        args.clear();
        args.push(id.clone());
        args.extend_from_slice(&v);
        acc += h.eval(n + 1, &args, g)? * sign(n * j);
    }
    Ok(acc)
}

/// Connes coboundary `B = AU`.
pub fn op_big_b(f: &Cochain) -> Result<Cochain> {
    f.require_c("B")?;
    let h = f.clone();
    let id = identity(f.dim());
    Ok(f.derived(
        f.max_level.map(|m| m.saturating_sub(1)),
        f.parity.flip(),
        CochainClass::N,
        format!("B({})", f.label),
        move |n, a, g| connes_eval(&h, &id, n, a, g),
    ))
}

fn boundary(f: &Cochain, sign_b: f64, name: &str) -> Result<Cochain> {
    f.require_c(name)?;
    let h = f.clone();
    let id = identity(f.dim());
    Ok(f.derived(
        f.max_level.map(|m| m + 1),
        f.parity.flip(),
        CochainClass::C,
        format!("{name}({})", f.label),
        move |n, a, g| {
            let mut acc = C64::default();
            for r in 0..=n {
                acc += v_r_eval(&h, r, n, a, g)?;
            }
            Ok(acc + connes_eval(&h, &id, n, a, g)? * sign_b)
        },
    ))
}

/// `∂ = b + B`.
pub fn op_partial(f: &Cochain) -> Result<Cochain> {
    boundary(f, 1.0, "∂")
}

/// `∂̄ = b − B`, also nilpotent.
pub fn op_partial_bar(f: &Cochain) -> Result<Cochain> {
    boundary(f, -1.0, "∂̄")
}

/// Spot-checks the declared class on the given tuples: for class C the
/// value must vanish with `I` in any slot `j ≥ 1`; for class N also at
/// `j = 0`. Returns the first witness as a `ClassViolation`.
pub fn check_class(f: &Cochain, tuples: &[Vec<CMat>], g: usize, tol: f64) -> Result<()> {
    let first_slot = match f.class {
        CochainClass::D => return Ok(()),
        CochainClass::C => 1,
        CochainClass::N => 0,
    };
    let id = identity(f.dim());
    for tuple in tuples {
        let n = tuple.len() - 1;
        for j in first_slot..=n {
            let mut v = tuple.clone();
            v[j] = id.clone();
            let val = f.eval(n, &v, g)?;
            if val.norm() > tol {
                return Err(Error::ClassViolation {
                    declared: f.class,
                    detail: format!(
                        "'{}' is {:e} at level {n} with identity in slot {j}",
                        f.label,
                        val.norm()
                    ),
                });
            }
        }
    }
    Ok(())
}

/// `max |f_n(a^{g⁻¹}…) − f_n(a…)|` over the tuples.
pub fn diagonal_invariance_residual(f: &Cochain, tuples: &[Vec<CMat>], g: usize) -> Result<f64> {
    let mut worst = 0.0f64;
    for tuple in tuples {
        let n = tuple.len() - 1;
        let moved: Vec<CMat> = tuple.iter().map(|a| act_inv(&f.group, g, a)).collect();
        let d = (f.eval(n, &moved, g)? - f.eval(n, tuple, g)?).norm();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// `a − (Tr a / dim) I`.
pub fn traceless(a: &CMat) -> CMat {
    let d = a.nrows();
    a - identity(d) * (trace(a) / c(d as f64, 0.0))
}

/// Seeded class-C cochain
/// `G_n(a; g) = ⟨c_{n,0} a_0, c_{n,1} π(a_1), …, c_{n,n} π(a_n); g⟩`
/// with `π` the traceless projection and `c_{n,j}` γ-even and group
/// invariant. Levels above `max_level` vanish.
pub fn random_cochain(t: &SpectralTriple, seed: u64, max_level: usize) -> Result<Cochain> {
    random_cochain_impl(t, seed, max_level, false)
}

/// Variant of [`random_cochain`] that also projects `a_0`, landing in N.
pub fn random_normalized_cochain(t: &SpectralTriple, seed: u64, max_level: usize) -> Result<Cochain> {
    random_cochain_impl(t, seed, max_level, true)
}

fn random_cochain_impl(t: &SpectralTriple, seed: u64, max_level: usize, normalized: bool) -> Result<Cochain> {
    let ctx = Arc::new(HeatContext::from_triple(t)?);
    let mut rng: ChaCha8Rng = fixtures::rng(seed);
    let interleavers: Vec<Vec<CMat>> = (0..=max_level)
        .map(|n| {
            (0..=n)
                .map(|_| {
                    let x = fixtures::random_invariant_element(&mut rng, t, 1.0);
                    let s = op_norm(&x).max(1e-300);
                    x * c(1.0 / s, 0.0)
                })
                .collect()
        })
        .collect();
    let class = if normalized {
        CochainClass::N
    } else {
        CochainClass::C
    };
    let label = format!("G[seed={seed}]");
    Ok(Cochain::new(t.group.clone(), Some(max_level), Parity::Mixed, class, label, move |n, a, g| {
        let cs = &interleavers[n];
        let v: Vec<CMat> = a
            .iter()
            .enumerate()
            .map(|(j, x)| {
                if j == 0 && !normalized {
                    &cs[0] * x
                } else {
                    &cs[j] * traceless(x)
                }
            })
            .collect();
        expect(&ctx, &v, g, 1.0)
    }))
}

/// Random tuples of γ-even elements for each level, unit operator norm.
pub fn random_tuples(t: &SpectralTriple, seed: u64, levels: &[usize], per_level: usize) -> Vec<Vec<CMat>> {
    let mut rng = fixtures::rng(seed);
    let mut out = Vec::new();
    for &n in levels {
        for _ in 0..per_level {
            out.push(
                (0..=n)
                    .map(|_| {
                        let x = fixtures::random_even_element(&mut rng, t, 1.0);
                        let s = op_norm(&x).max(1e-300);
                        x * c(1.0 / s, 0.0)
                    })
                    .collect(),
            );
        }
    }
    out
}

/// `max |(∂f)_n(tuple; g)|` over the tuples and every group element.
pub fn cocycle_residual_on(f: &Cochain, tuples: &[Vec<CMat>]) -> Result<f64> {
    let df = op_partial(f)?;
    let mut worst = 0.0f64;
    for g in 0..f.group.len() {
        for tuple in tuples {
            let n = tuple.len() - 1;
            worst = worst.max(df.eval(n, tuple, g)?.norm());
        }
    }
    Ok(worst)
}

/// [`cocycle_residual_on`] with `samples` seeded random tuples per level.
pub fn cocycle_residual(f: &Cochain, t: &SpectralTriple, samples: usize, levels: &[usize], seed: u64) -> Result<f64> {
    cocycle_residual_on(f, &random_tuples(t, seed, levels, samples))
}

#[derive(Debug, Clone, Serialize)]
pub struct CochainNormProfile {
    pub levels: Vec<(usize, f64)>,
}

impl CochainNormProfile {
    /// `n^{1/2} ‖f_n‖^{1/n}` for `n ≥ 1`.
    pub fn entire_indicator(&self) -> Vec<(usize, f64)> {
        self.levels
            .iter()
            .filter(|(n, _)| *n > 0)
            .map(|&(n, v)| (n, (n as f64).sqrt() * v.powf(1.0 / n as f64)))
            .collect()
    }
}

/// Sampled lower bounds `max |f_n(a)|` over unit-norm random tuples.
pub fn norm_profile(f: &Cochain, t: &SpectralTriple, levels: &[usize], samples: usize, seed: u64) -> Result<CochainNormProfile> {
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let tuples = random_tuples(t, seed.wrapping_add(n as u64), &[n], samples);
        let mut best = 0.0f64;
        for tuple in &tuples {
            for g in 0..f.group.len() {
                best = best.max(f.eval(n, tuple, g)?.norm());
            }
        }
        out.push((n, best));
    }
    Ok(CochainNormProfile { levels: out })
}
