//! One-dimensional quadrature used to build grid weights.

use std::f64::consts::PI;
use std::sync::OnceLock;

const GL_ORDER: usize = 16;
const GL_PANELS: usize = 4;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(GL_ORDER))
}

/// Composite Gauss–Legendre integral of a smooth integrand.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64) -> f64 {
    let (x, w) = rule();
    let h = (hi - lo) / GL_PANELS as f64;
    let mut acc = 0.0;
    for p in 0..GL_PANELS {
        let a = lo + p as f64 * h;
        for (xi, wi) in x.iter().zip(w) {
            acc += wi * f(a + 0.5 * h * (xi + 1.0));
        }
    }
    acc * 0.5 * h
}

/// ∫_lo^hi sin(θ)^p g(θ) dθ for 0 ≤ lo < hi ≤ π/2 and p > −1.
///
/// When lo = 0 the endpoint singularity θ^p is absorbed by θ = hi·w^{1/(p+1)}.
pub fn integrate_sin_power<G: Fn(f64) -> f64>(p: f64, g: G, lo: f64, hi: f64) -> f64 {
    assert!(p > -1.0 && lo >= 0.0 && hi >= lo);
    if hi == lo {
        return 0.0;
    }
    if lo > 0.0 || p == 0.0 {
        return integrate(|t| t.sin().powf(p) * g(t), lo, hi);
    }
    let e = 1.0 / (p + 1.0);
    let scale = hi.powf(p + 1.0) / (p + 1.0);
    scale
        * integrate(
            |w| {
                let t = hi * w.powf(e);
                let ratio = if t > 0.0 { t.sin() / t } else { 1.0 };
                ratio.powf(p) * g(t)
            },
            0.0,
            1.0,
        )
}
