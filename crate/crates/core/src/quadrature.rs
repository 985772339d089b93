//! One-dimensional quadrature: Gauss–Hermite rules, a double-exponential
//! rule on `(0, ∞)`, and golden-section maximization.

use crate::error::{Error, Result};

/// Gauss–Hermite rule for the probability weight `e^{-t²}/√π`.
///
/// Nodes ascend; weights sum to one. Uses Newton iteration on normalized
/// Hermite functions, which stays finite for several hundred nodes.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let quarter_pi = std::f64::consts::PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut dpsi = 0.0;
        for _ in 0..200 {
            let (psi_n, psi_nm1) = hermite_functions(n, z, quarter_pi);
            dpsi = (2.0 * nf).sqrt() * psi_nm1 - z * psi_n;
            let step = psi_n / dpsi;
            z -= step;
            if step.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        let (_, psi_nm1) = hermite_functions(n, z, quarter_pi);
        let deriv = (2.0 * nf).sqrt() * psi_nm1;
        let _ = dpsi;
        let wi = 2.0 * (-z * z).exp() / (deriv * deriv) / std::f64::consts::PI.sqrt();
        x[i] = z;
        w[i] = wi;
        x[n - 1 - i] = -z;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(w).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// `(ψ_n(z), ψ_{n-1}(z))` for orthonormal Hermite functions.
fn hermite_functions(n: usize, z: f64, quarter_pi: f64) -> (f64, f64) {
    let mut p_prev = 0.0;
    let mut p = quarter_pi * (-0.5 * z * z).exp();
    for k in 0..n {
        let kf = k as f64;
        let next = z * (2.0 / (kf + 1.0)).sqrt() * p - (kf / (kf + 1.0)).sqrt() * p_prev;
        p_prev = p;
        p = next;
    }
    (p, p_prev)
}

/// `∫_0^∞ f(t) dt` for integrands given through `g(x) = f(e^x) e^x`.
///
/// Trapezoid rule in `u` after `x = (π/2) sinh u`, halving the step until
/// two successive estimates agree to `rtol`.
pub fn integrate_half_line_log(g: impl Fn(f64) -> f64, rtol: f64) -> Result<f64> {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let term = |u: f64| {
        let x = half_pi * u.sinh();
        let v = g(x) * half_pi * u.cosh();
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let mut h = 0.5;
    let mut prev: Option<f64> = None;
    for _ in 0..12 {
        let mut sum = term(0.0);
        let mut k = 1usize;
        loop {
            let u = k as f64 * h;
            let a = term(u);
            let b = term(-u);
            sum += a + b;
            if (a.abs() + b.abs()) <= 1e-18 * sum.abs() && u > 3.0 {
                break;
            }
            if u > 12.0 {
                break;
            }
            k += 1;
        }
        let est = sum * h;
        if let Some(p) = prev {
            if (est - p).abs() <= rtol * est.abs() {
                return Ok(est);
            }
        }
        prev = Some(est);
        h *= 0.5;
    }
    Err(Error::NoConvergence {
        what: "double-exponential quadrature".into(),
        detail: format!("last estimate {:?}", prev),
    })
}

/// Maximizes a unimodal `f` on `[a, b]` by golden-section search.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (b - a) > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    let fa = f(a);
    let fb = f(b);
    let mut best = if f1 > f2 { (x1, f1) } else { (x2, f2) };
    if fa > best.1 {
        best = (a, fa);
    }
    if fb > best.1 {
        best = (b, fb);
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_weights_sum_to_one() {
        for n in [1, 2, 5, 20, 64, 128, 256] {
            let (_, w) = gauss_hermite(n);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-13, "n={n} sum={s}");
        }
    }

    #[test]
    fn two_point_rule() {
        let (x, w) = gauss_hermite(2);
        assert!((x[1] - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((w[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, _) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
