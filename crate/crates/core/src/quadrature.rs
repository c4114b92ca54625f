//! One-dimensional quadrature rules.

use std::sync::OnceLock;

use crate::numeric::CompensatedSum;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn gl16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(16))
}

/// Composite 16-point Gauss–Legendre over `panels` equal subintervals.
pub fn composite_gauss(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let (nodes, weights) = gl16();
    let h = (b - a) / panels as f64;
    let mut acc = CompensatedSum::new();
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        for (t, w) in nodes.iter().zip(weights) {
            acc.add(w * f(mid + 0.5 * h * t));
        }
    }
    acc.value() * 0.5 * h
}

/// Adaptive bisection with 16-point Gauss–Legendre panels; a panel is
/// accepted when it agrees with the sum over its two halves to `tol`
/// relative to the running magnitude.
pub fn adaptive_gauss(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32, acc: &mut CompensatedSum) {
        let m = 0.5 * (a + b);
        let left = composite_gauss(f, a, m, 1);
        let right = composite_gauss(f, m, b, 1);
        let split = left + right;
        if depth == 0 || (split - whole).abs() <= tol * split.abs().max(1e-300) || (b - a).abs() < 1e-14 * a.abs().max(1.0) {
            acc.add(split);
        } else {
            rec(f, a, m, left, tol, depth - 1, acc);
            rec(f, m, b, right, tol, depth - 1, acc);
        }
    }
    if a == b {
        return 0.0;
    }
    let mut acc = CompensatedSum::new();
    let whole = composite_gauss(f, a, b, 1);
    rec(f, a, b, whole, tol, 40, &mut acc);
    acc.value()
}
