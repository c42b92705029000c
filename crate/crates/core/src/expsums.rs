//! Complete exponential sums
//! S_q(c) = Σ_{a mod q, (a,q)=1} Σ_{b mod q} e_q(a Q(b) + b·c).

use std::collections::HashMap;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::qform::DiagonalForm;
use crate::summation::ComplexSum;

pub const DEFAULT_CAP: u64 = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpSumValue {
    pub value: f64,
    /// Imaginary part left over by the accumulation; zero in exact arithmetic.
    pub imag: f64,
    pub err: f64,
    pub rounded: i128,
}

impl ExpSumValue {
    pub fn exact(v: i128) -> Self {
        ExpSumValue {
            value: v as f64,
            imag: 0.0,
            err: 0.0,
            rounded: v,
        }
    }

    fn from_parts(value: f64, imag: f64, err: f64) -> Self {
        ExpSumValue {
            value,
            imag,
            err,
            rounded: value.round() as i128,
        }
    }

    /// Product with error propagation.
    pub fn mul(&self, o: &ExpSumValue) -> ExpSumValue {
        let value = self.value * o.value;
        let err = self.value.abs() * o.err + o.value.abs() * self.err + self.err * o.err
            + 2.0 * f64::EPSILON * value.abs();
        ExpSumValue::from_parts(value, self.imag.abs().max(o.imag.abs()), err)
    }

    pub fn is_integral(&self) -> bool {
        (self.value - self.rounded as f64).abs() <= self.err.max(1e-6)
    }
}

fn roots(q: u64) -> Vec<Complex64> {
    (0..q)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / q as f64;
            Complex64::new(t.cos(), t.sin())
        })
        .collect()
}

/// S_q(c) at the modulus itself: exact integers when at most a few cᵢ are
/// nonzero mod q, otherwise Gauss-sum products in floating point.
pub fn sq_direct(q: &DiagonalForm, modulus: u64, c: &[i64], cap: u64) -> Result<ExpSumValue> {
    if c.len() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: c.len(),
        });
    }
    if modulus == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    if modulus > cap {
        return Err(Error::BudgetExceeded {
            what: "direct exponential sum (modulus)",
            required: modulus as u128,
            budget: cap as u128,
        });
    }
    if modulus == 1 {
        return Ok(ExpSumValue::exact(1));
    }
    let m = modulus;
    if let Some(v) = sq_exact(q, m, c) {
        return Ok(ExpSumValue::exact(v));
    }
    Ok(sq_gauss(q, m, c))
}

/// Σ_a Π_i G(aAᵢ, cᵢ) with the one-dimensional sums G tabulated in floating point.
fn sq_gauss(q: &DiagonalForm, m: u64, c: &[i64]) -> ExpSumValue {
    let root = roots(m);
    let sq: Vec<u64> = (0..m).map(|b| (b as u128 * b as u128 % m as u128) as u64).collect();
    let coeff: Vec<u64> = q.coeffs().iter().map(|&a| a.rem_euclid(m as i64) as u64).collect();
    let lin: Vec<u64> = c.iter().map(|&ci| ci.rem_euclid(m as i64) as u64).collect();

    // One-dimensional sums G(k, l) = Σ_b e_m(k b^2 + l b), tabulated in k for
    // each distinct l that occurs.
    let mut tables: HashMap<u64, Vec<Complex64>> = HashMap::new();
    for &l in &lin {
        tables.entry(l).or_insert_with(|| {
            (0..m)
                .into_par_iter()
                .map(|k| {
                    let mut s = ComplexSum::new();
                    for b in 0..m {
                        let idx = ((k as u128 * sq[b as usize] as u128 + l as u128 * b as u128)
                            % m as u128) as usize;
                        s.add(root[idx]);
                    }
                    s.value()
                })
                .collect()
        });
    }
    let g_err = 4.0 * f64::EPSILON * m as f64;
    let units: Vec<u64> = (1..m).filter(|&a| arith::gcd(a, m) == 1).collect();
    let block = 256;
    let partials: Vec<(ComplexSum, f64, f64)> = units
        .par_chunks(block)
        .map(|chunk| {
            let mut s = ComplexSum::new();
            let mut err = 0.0;
            let mut mass = 0.0;
            for &a in chunk {
                let mut term = Complex64::new(1.0, 0.0);
                let mut bound = 1.0;
                let mut mag = 1.0;
                for (i, &ai) in coeff.iter().enumerate() {
                    let k = (a as u128 * ai as u128 % m as u128) as usize;
                    let g = tables[&lin[i]][k];
                    term *= g;
                    bound *= g.norm() + g_err;
                    mag *= g.norm();
                }
                err += bound - mag;
                mass += mag;
                s.add(term);
            }
            (s, err, mass)
        })
        .collect();
    let mut total = ComplexSum::new();
    let mut err = 0.0;
    let mut mass = 0.0;
    for (s, e, ms) in &partials {
        total.merge(s);
        err += e;
        mass += ms;
    }
    let v = total.value();
    let err = err + 4.0 * f64::EPSILON * units.len() as f64 * mass + total.error_bound();
    ExpSumValue::from_parts(v.re, v.im, err)
}

/// Ramanujan sum c_m(t) = Σ_{d | (t, m)} μ(m/d) d.
fn ramanujan(m: u64, t: u64) -> i128 {
    let g = arith::gcd(t, m);
    let mut s = 0i128;
    for d in 1..=g {
        if g % d == 0 {
            s += arith::mobius(m / d) as i128 * d as i128;
        }
    }
    s
}

/// Largest m^k enumerated over the coordinates with cᵢ ≢ 0 in the exact path.
const EXACT_ENUM_LIMIT: u128 = 10_000_000;

/// S_m(c) in exact integers. S_m(c) is rational, so it equals the average of
/// its Galois conjugates: S_m(c) = φ(m)⁻¹ Σ_b c_m(Q(b)) c_m(b·c). Coordinates
/// with cᵢ ≡ 0 enter through the distribution of Σ Aᵢbᵢ² (convolution); the
/// others are enumerated. None when that enumeration is too large or i128
/// overflows.
fn sq_exact(q: &DiagonalForm, m: u64, c: &[i64]) -> Option<i128> {
    let mu = m as usize;
    let mm = m as i64;
    let (zero, live): (Vec<usize>, Vec<usize>) = (0..q.dim()).partition(|&i| c[i].rem_euclid(mm) == 0);
    if (m as u128).checked_pow(live.len() as u32)? > EXACT_ENUM_LIMIT {
        return None;
    }
    let mut by_gcd: HashMap<u64, i128> = HashMap::new();
    let ram: Vec<i128> = (0..m)
        .map(|t| *by_gcd.entry(arith::gcd(t, m)).or_insert_with(|| ramanujan(m, t)))
        .collect();
    let a: Vec<u128> = q.coeffs().iter().map(|&x| x.rem_euclid(mm) as u128).collect();
    let sq: Vec<u128> = (0..m as u128).map(|x| x * x % m as u128).collect();

    // Distribution of Σ_{cᵢ ≡ 0} Aᵢbᵢ² mod m.
    let mut dist = vec![0i128; mu];
    dist[0] = 1;
    for &i in &zero {
        let mut h = vec![0i128; mu];
        for x in 0..mu {
            h[(a[i] * sq[x] % m as u128) as usize] += 1;
        }
        let nz: Vec<(usize, i128)> = h.into_iter().enumerate().filter(|e| e.1 != 0).collect();
        let next: Option<Vec<i128>> = (0..mu)
            .into_par_iter()
            .map(|u| {
                nz.iter().try_fold(0i128, |acc, &(v, cnt)| {
                    acc.checked_add(cnt.checked_mul(dist[(u + mu - v) % mu])?)
                })
            })
            .collect();
        dist = next?;
    }

    // E(t) = Σ over the live coordinates with Σ Aᵢbᵢ² ≡ t of c_m(Σ cᵢbᵢ).
    let lin: Vec<u128> = live.iter().map(|&i| c[i].rem_euclid(mm) as u128).collect();
    let mut e = vec![0i128; mu];
    let mut idx = vec![0usize; live.len()];
    loop {
        let mut t = 0u128;
        let mut s = 0u128;
        for (j, &i) in live.iter().enumerate() {
            t += a[i] * sq[idx[j]];
            s += lin[j] * idx[j] as u128;
        }
        let k = (t % m as u128) as usize;
        e[k] = e[k].checked_add(ram[(s % m as u128) as usize])?;
        let mut j = 0;
        while j < idx.len() {
            idx[j] += 1;
            if idx[j] < mu {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == idx.len() {
            break;
        }
    }

    let ez: Vec<(usize, i128)> = e.into_iter().enumerate().filter(|x| x.1 != 0).collect();
    let mut total = 0i128;
    for (t1, &d) in dist.iter().enumerate() {
        if d == 0 {
            continue;
        }
        let mut inner = 0i128;
        for &(t2, ev) in &ez {
            inner = inner.checked_add(ev.checked_mul(ram[(t1 + t2) % mu])?)?;
        }
        total = total.checked_add(d.checked_mul(inner)?)?;
    }
    let phi = arith::euler_phi(m) as i128;
    debug_assert_eq!(total % phi, 0, "Galois average not integral");
    (total % phi == 0).then_some(total / phi)
}

/// S_q(c) as the product of S_{p^t}(c) over the prime powers of q.
pub fn sq_multiplicative(
    q: &DiagonalForm,
    modulus: u64,
    c: &[i64],
    cap: u64,
) -> Result<ExpSumValue> {
    if modulus == 0 {
        return Err(Error::InvalidArgument("q must be at least 1".into()));
    }
    let mut acc = ExpSumValue::exact(1);
    for (p, t) in arith::factorize(modulus) {
        acc = acc.mul(&sq_direct(q, p.pow(t), c, cap)?);
    }
    Ok(acc)
}

/// Closed form at an odd prime p ∤ Δ_Q for n = 4.
pub fn sp_closed(q: &DiagonalForm, p: u64, c: &[i64]) -> Result<i128> {
    if q.dim() != 4 {
        return Err(Error::Precondition(format!(
            "closed form needs n = 4, got n = {}",
            q.dim()
        )));
    }
    if p % 2 == 0 || !arith::is_prime(p) {
        return Err(Error::Precondition(format!("{p} is not an odd prime")));
    }
    let disc = q.discriminant();
    if (&disc % BigInt::from(p)).is_zero() {
        return Err(Error::Precondition(format!(
            "{p} divides the discriminant; only a bound is available"
        )));
    }
    let chi = arith::legendre(&disc, p) as i128;
    let dual = q.q_inverse_scaled(c)?;
    let p2 = (p as i128) * (p as i128);
    if (&dual % BigInt::from(p)).is_zero() {
        Ok(chi * p2 * (p as i128 - 1))
    } else {
        Ok(-chi * p2)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SqBoundReport {
    pub q: u64,
    pub value: f64,
    /// |S_q(c)| / (q^3 Π gcd(q, A_i)^{1/2}).
    pub ratio_general: f64,
    /// |S_q(c)| / (q^{5/2} gcd(q, Δ Q^{-1}(c))^{1/2} Π gcd(q, A_i)^{1/2}), square-free q only.
    pub ratio_squarefree: Option<f64>,
}

pub fn sq_bound_check(q: &DiagonalForm, modulus: u64, c: &[i64], cap: u64) -> Result<SqBoundReport> {
    if q.dim() != 4 {
        return Err(Error::Precondition("bound check needs n = 4".into()));
    }
    let s = sq_multiplicative(q, modulus, c, cap)?;
    let gprod: f64 = q
        .coeffs()
        .iter()
        .map(|&a| (arith::gcd(modulus, a.unsigned_abs()) as f64).sqrt())
        .product();
    let qf = modulus as f64;
    let ratio_general = s.value.abs() / (qf.powi(3) * gprod);
    let ratio_squarefree = if arith::is_squarefree(modulus) {
        let dual = q.q_inverse_scaled(c)?.abs();
        let g = gcd_big(modulus, &dual);
        Some(s.value.abs() / (qf.powf(2.5) * (g as f64).sqrt() * gprod))
    } else {
        None
    };
    Ok(SqBoundReport {
        q: modulus,
        value: s.value,
        ratio_general,
        ratio_squarefree,
    })
}

fn gcd_big(m: u64, v: &BigInt) -> u64 {
    if v.is_zero() {
        return m;
    }
    let r = v % BigInt::from(m);
    let r: u64 = r.try_into().unwrap_or(0);
    arith::gcd(m, r)
}

/// S_q(c) for every q ≤ Y, built from cached prime-power values.
pub fn sq_all(q: &DiagonalForm, c: &[i64], y: u64, cap: u64) -> Result<Vec<ExpSumValue>> {
    let mut pp: HashMap<u64, ExpSumValue> = HashMap::new();
    let mut out = Vec::with_capacity(y as usize + 1);
    out.push(ExpSumValue::exact(0));
    for m in 1..=y {
        let mut acc = ExpSumValue::exact(1);
        for (p, t) in arith::factorize(m) {
            let pt = p.pow(t);
            let v = match pp.get(&pt) {
                Some(v) => *v,
                None => {
                    let v = sq_direct(q, pt, c, cap)?;
                    pp.insert(pt, v);
                    v
                }
            };
            acc = acc.mul(&v);
        }
        out.push(acc);
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialSums {
    pub y: u64,
    pub abs_sum: f64,
    pub signed_sum: f64,
}

/// Σ_{q≤Y} |S_q(c)| and Σ_{q≤Y} S_q(c).
pub fn partial_sum_abs(q: &DiagonalForm, y: u64, c: &[i64], cap: u64) -> Result<PartialSums> {
    let all = sq_all(q, c, y, cap)?;
    Ok(partial_from(&all, y))
}

pub fn partial_from(all: &[ExpSumValue], y: u64) -> PartialSums {
    let abs_sum = all[1..=y as usize].iter().map(|v| v.value.abs()).sum();
    let signed_sum = all[1..=y as usize].iter().map(|v| v.value).sum();
    PartialSums {
        y,
        abs_sum,
        signed_sum,
    }
}

/// Least-squares slope of log(sum) against log(Y).
pub fn growth_fit(samples: &[(u64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.1 > 0.0)
        .map(|&(y, s)| ((y as f64).ln(), s.ln()))
        .collect();
    arith::ls_slope(&pts)
}

/// Σ_{q≤Y} q^{-n} S_q(0).
pub fn singular_partial(q: &DiagonalForm, y: u64, cap: u64) -> Result<f64> {
    if q.dim() < 4 {
        return Err(Error::Precondition("singular series needs n ≥ 4".into()));
    }
    let zero = vec![0i64; q.dim()];
    let all = sq_all(q, &zero, y, cap)?;
    let n = q.dim() as i32;
    Ok((1..=y as usize)
        .map(|m| all[m].value / (m as f64).powi(n))
        .sum())
}
