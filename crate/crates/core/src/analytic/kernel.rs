//! The kernel h(x, y) = Σ_j (xj)^{-1} (ω(xj) − ω(|y|/(xj))).

use std::cmp::Ordering;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::quad;
use super::weights::omega;
use crate::error::{Error, Result};

fn rat(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite")
}

/// Exact comparison of x·j against v.
fn cmp_xj(x: f64, j: u64, v: f64) -> Ordering {
    (rat(x) * BigRational::from_integer(BigInt::from(j))).cmp(&rat(v))
}

/// Smallest j ≥ 1 with x·j > v (x > 0, v ≥ 0).
fn first_above(x: f64, v: f64) -> u64 {
    let mut j = ((v / x).floor().max(0.0) as u64).max(1);
    while j > 1 && cmp_xj(x, j - 1, v) == Ordering::Greater {
        j -= 1;
    }
    while cmp_xj(x, j, v) != Ordering::Greater {
        j += 1;
    }
    j
}

/// Largest j ≥ 0 with x·j < v (0 when none).
fn last_below(x: f64, v: f64) -> u64 {
    let mut j = (v / x).ceil().max(0.0) as u64;
    while j > 0 && cmp_xj(x, j, v) != Ordering::Less {
        j -= 1;
    }
    while cmp_xj(x, j + 1, v) == Ordering::Less {
        j += 1;
    }
    j
}

/// Index window of the two sums: first sum over j with xj ∈ (1/2, 1),
/// second over j with xj ∈ (|y|, 2|y|). Decided in exact rational arithmetic.
pub fn j_windows(x: f64, y: f64) -> ((u64, u64), (u64, u64)) {
    let ay = y.abs();
    let first = (first_above(x, 0.5), last_below(x, 1.0));
    let second = if ay == 0.0 {
        (1, 0)
    } else {
        (first_above(x, ay), last_below(x, 2.0 * ay))
    };
    (first, second)
}

pub fn h_eval(x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() || !y.is_finite() {
        return Err(Error::InvalidArgument(format!("h needs x > 0, got x={x}")));
    }
    let ((a0, a1), (b0, b1)) = j_windows(x, y);
    let ay = y.abs();
    let mut s = 0.0;
    for j in a0..=a1 {
        let t = x * j as f64;
        s += omega(t) / t;
    }
    for j in b0..=b1 {
        let t = x * j as f64;
        s -= omega(ay / t) / t;
    }
    Ok(s)
}

/// L = ∫ ω(t)/t dt.
pub fn omega_log_mass() -> f64 {
    static L: OnceLock<f64> = OnceLock::new();
    *L.get_or_init(|| quad::adaptive(&|t: f64| omega(t) / t, 0.5, 1.0, 1e-15).0)
}

/// C_x − L/x where C_x = Σ_j ω(xj)/(xj): the value h(x, y) tends to for
/// |y| ≫ x. It vanishes only asymptotically as x → 0.
pub fn far_offset(x: f64) -> f64 {
    let (a0, a1) = j_windows(x, 0.0).0;
    let c: f64 = (a0..=a1)
        .map(|j| {
            let t = x * j as f64;
            omega(t) / t
        })
        .sum();
    c - omega_log_mass() / x
}
