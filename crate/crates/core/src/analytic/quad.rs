//! Gauss–Legendre rules and a small adaptive integrator.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on [-1, 1], computed by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

type Rule = &'static (Vec<f64>, Vec<f64>);

/// Cached rule of order `n`.
pub fn rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    *guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(gauss_legendre(n))))
}

/// ∫_a^b f with a fixed rule.
pub fn gl_fixed<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = rule(n);
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (xi, wi) in x.iter().zip(w) {
        s += wi * f(mid + h * xi);
    }
    s * h
}

/// Adaptive bisection comparing 10- and 20-point rules until |diff| ≤ tol.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    fn go<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> (f64, f64) {
        let coarse = gl_fixed(f, a, b, 10);
        let fine = gl_fixed(f, a, b, 20);
        let err = (fine - coarse).abs();
        if err <= tol || depth >= 40 {
            return (fine, err);
        }
        let m = 0.5 * (a + b);
        let (l, el) = go(f, a, m, 0.5 * tol, depth + 1);
        let (r, er) = go(f, m, b, 0.5 * tol, depth + 1);
        (l + r, el + er)
    }
    go(f, a, b, tol, 0)
}
