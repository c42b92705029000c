//! Local densities σ_p, the stag bound, and the singular series 𝔖.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::expsums;
use crate::lseries::{self, CharacterQ};
use crate::qform::DiagonalForm;

pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Constant in the |σ_p − (local factor)| ≤ C p^{-3/2} tail model.
pub const TAIL_CONSTANT: f64 = 5.0;
const RATIO_AGREEMENT: f64 = 1e-3;

fn check_prime_power(p: u64, k: u32, budget: u64) -> Result<u64> {
    if !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be positive".into()));
    }
    let m = p.checked_pow(k);
    match m.and_then(|m| m.checked_mul(m)) {
        Some(sq) if sq <= budget => Ok(m.unwrap()),
        _ => Err(Error::BudgetExceeded {
            what: "p^{2k} for N_k(p)",
            required: (p as u128).saturating_pow(2 * k),
            budget: budget as u128,
        }),
    }
}

/// r(v) = #{b mod M : a b² ≡ v mod M}, as a sparse list.
fn square_counts(a: i64, m: u64) -> Vec<(u64, u128)> {
    let mut dense = vec![0u128; m as usize];
    let ar = a.rem_euclid(m as i64) as u128;
    for b in 0..m as u128 {
        let v = ar * (b * b % m as u128) % m as u128;
        dense[v as usize] += 1;
    }
    dense
        .into_iter()
        .enumerate()
        .filter(|(_, c)| *c > 0)
        .map(|(v, c)| (v as u64, c))
        .collect()
}

/// N_k(p) = #{x mod p^k : Q(x) ≡ 0}.
pub fn nk_count(q: &DiagonalForm, p: u64, k: u32, budget: u64) -> Result<BigInt> {
    let m = check_prime_power(p, k, budget)?;
    let overflow = || Error::InvalidArgument("N_k(p) exceeds 128 bits".into());
    let coeffs = q.coeffs();
    let mut dist = vec![0u128; m as usize];
    for (v, c) in square_counts(coeffs[0], m) {
        dist[v as usize] = c;
    }
    let n = coeffs.len();
    for &a in &coeffs[1..n - 1] {
        let r = square_counts(a, m);
        let next: Option<Vec<u128>> = (0..m)
            .into_par_iter()
            .map(|u| {
                r.iter().try_fold(0u128, |acc, &(v, c)| {
                    let w = dist[((u + m - v) % m) as usize];
                    acc.checked_add(c.checked_mul(w)?)
                })
            })
            .collect();
        dist = next.ok_or_else(overflow)?;
    }
    let last = square_counts(coeffs[n - 1], m);
    let total = last
        .iter()
        .try_fold(0u128, |acc, &(v, c)| {
            acc.checked_add(c.checked_mul(dist[((m - v) % m) as usize])?)
        })
        .ok_or_else(overflow)?;
    Ok(BigInt::from(total))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityMethod {
    /// The last three increments vanish exactly.
    ExactStable,
    /// Geometric tail from three agreeing increment ratios.
    Extrapolated,
    /// No stable ratio within budget; value is the last partial.
    Unstable,
}

#[derive(Debug, Clone, Serialize)]
pub struct LocalDensity {
    pub p: u64,
    /// p^{-k(n-1)} N_k(p) for k = 1..k_used, as "num/den".
    #[serde(serialize_with = "ser_rationals")]
    pub partials: Vec<BigRational>,
    pub value: f64,
    pub tail_ratio: Option<f64>,
    pub err: f64,
    pub method: DensityMethod,
}

fn ser_rationals<S: serde::Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|r| r.to_string()))
}

fn ratf(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn density_partial(q: &DiagonalForm, p: u64, k: u32, budget: u64) -> Result<BigRational> {
    let nk = nk_count(q, p, k, budget)?;
    let den = BigInt::from(p).pow(k * (q.dim() as u32 - 1));
    Ok(BigRational::new(nk, den))
}

pub fn sigma_p(q: &DiagonalForm, p: u64, budget: u64) -> Result<LocalDensity> {
    if q.dim() < 4 {
        return Err(Error::TooFewVariables(q.dim()));
    }
    check_prime_power(p, 1, budget)?;
    let mut partials = Vec::new();
    let mut k = 1;
    while check_prime_power(p, k, budget).is_ok() {
        partials.push(density_partial(q, p, k, budget)?);
        k += 1;
    }
    Ok(extrapolate(p, partials))
}

fn extrapolate(p: u64, partials: Vec<BigRational>) -> LocalDensity {
    let mut prev = BigRational::one();
    let diffs: Vec<BigRational> = partials
        .iter()
        .map(|x| {
            let d = x - &prev;
            prev = x.clone();
            d
        })
        .collect();
    let last = ratf(partials.last().expect("at least k = 1"));
    if diffs.len() >= 3 && diffs[diffs.len() - 3..].iter().all(|d| d.is_zero()) {
        return LocalDensity {
            p,
            partials,
            value: last,
            tail_ratio: Some(0.0),
            err: 0.0,
            method: DensityMethod::ExactStable,
        };
    }
    let nz: Vec<(usize, f64)> = diffs
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.is_zero())
        .map(|(i, d)| (i, ratf(d)))
        .collect();
    let last_diff = nz.last().map(|x| x.1.abs()).unwrap_or(0.0);
    if nz.len() >= 4 {
        let w = &nz[nz.len() - 4..];
        let step = w[1].0 - w[0].0;
        let evenly = w.windows(2).all(|x| x[1].0 - x[0].0 == step);
        let ratios: Vec<f64> = w.windows(2).map(|x| x[1].1 / x[0].1).collect();
        let spread = ratios
            .iter()
            .flat_map(|a| ratios.iter().map(move |b| (a - b).abs()))
            .fold(0.0, f64::max);
        let rho = ratios[2];
        // Pending zero increments after the last nonzero one must fit the step.
        let pending = diffs.len() - 1 - w[3].0;
        if evenly && spread <= RATIO_AGREEMENT && rho.abs() < 1.0 && pending < step {
            let d = w[3].1;
            let tail = d * rho / (1.0 - rho);
            return LocalDensity {
                p,
                partials,
                // σ_p is a limit of nonnegative partials.
                value: (last + tail).max(0.0),
                tail_ratio: Some(rho),
                err: d.abs() * spread / (1.0 - rho.abs()).powi(2) + 4.0 * f64::EPSILON * last.abs(),
                method: DensityMethod::Extrapolated,
            };
        }
    }
    LocalDensity {
        p,
        partials,
        value: last,
        tail_ratio: None,
        err: last_diff * p as f64,
        method: DensityMethod::Unstable,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub p: u64,
    pub k: u32,
    #[serde(serialize_with = "ser_rational")]
    pub counted: BigRational,
    #[serde(serialize_with = "ser_rational")]
    pub from_sums: BigRational,
    pub holds: bool,
}

fn ser_rational<S: serde::Serializer>(v: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// p^{-k(n-1)} N_k(p) against Σ_{t≤k} p^{-tn} S_{p^t}(0), with rounded sums.
pub fn partial_identity(q: &DiagonalForm, p: u64, k: u32, budget: u64, cap: u64) -> Result<IdentityCheck> {
    let counted = density_partial(q, p, k, budget)?;
    let n = q.dim() as u32;
    let zero = vec![0i64; q.dim()];
    let mut from_sums = BigRational::one();
    for t in 1..=k {
        let s = expsums::sq_direct(q, p.pow(t), &zero, cap)?;
        if !s.is_integral() {
            return Err(Error::Precondition(format!("S_{}(0) not integral within tolerance", p.pow(t))));
        }
        from_sums += BigRational::new(BigInt::from(s.rounded), BigInt::from(p).pow(t * n));
    }
    let holds = counted == from_sums;
    Ok(IdentityCheck {
        p,
        k,
        counted,
        from_sums,
        holds,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct StagEntry {
    pub p: u64,
    pub k: u32,
    pub nk: String,
    pub bound: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StagReport {
    pub entries: Vec<StagEntry>,
    /// Odd primes dividing Δ_Q with p² beyond the budget.
    pub skipped: Vec<u64>,
    pub violations: usize,
}

pub fn stag_check(q: &DiagonalForm, budget: u64) -> Result<StagReport> {
    let n = q.dim() as u32;
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (p, _) in q.disc_factorization() {
        if p == 2 {
            continue;
        }
        let mut k = 1;
        if check_prime_power(p, 1, budget).is_err() {
            skipped.push(p);
            continue;
        }
        while check_prime_power(p, k, budget).is_ok() {
            let nk = nk_count(q, p, k, budget)?;
            let bound = BigInt::from(4) * BigInt::from(p).pow(k * (n - 1));
            entries.push(StagEntry {
                p,
                k,
                holds: nk <= bound,
                nk: nk.to_string(),
                bound: bound.to_string(),
            });
            k += 1;
        }
    }
    let violations = entries.iter().filter(|e| !e.holds).count();
    Ok(StagReport {
        entries,
        skipped,
        violations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SingularSeries {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub cutoff: u64,
    pub local: Vec<LocalDensity>,
    /// Product of the exactly treated factors.
    pub finite_product: f64,
    pub tail_factor: f64,
    pub tail_log_halfwidth: f64,
}

pub const DEFAULT_L_TERMS: u64 = 2_000_000;
/// Primes up to this cutoff get exact local factors in 𝔖.
pub const DEFAULT_CUTOFF: u64 = 50;

/// Σ_{p > P0} p^{-3/2}, summed to 10⁶ with an integral bound beyond.
fn prime_tail_sum(p0: u64) -> f64 {
    const LIMIT: u64 = 1_000_000;
    let s: f64 = arith::primes_up_to(LIMIT)
        .into_iter()
        .filter(|&p| p > p0)
        .map(|p| (p as f64).powf(-1.5))
        .sum();
    s + 2.0 / (LIMIT as f64).sqrt()
}

/// 𝔖 = Π_p σ_p: exact factors for p ≤ P0 and p | 2Δ_Q, times a tail.
/// n = 4: tail from L(1, χ_Q) with the Euler factors p ≤ P0 divided out.
/// n ≥ 5: tail centred at 1. Both carry the interval exp(±C Σ_{p>P0} p^{-3/2}).
pub fn singular_series(q: &DiagonalForm, p0: u64, budget: u64, l_terms: u64) -> Result<SingularSeries> {
    let n = q.dim();
    if n < 4 {
        return Err(Error::TooFewVariables(n));
    }
    if n == 4 && q.disc_is_square() {
        return Err(Error::SquareDiscriminant);
    }
    let mut primes = arith::primes_up_to(p0.max(2));
    for (p, _) in q.disc_factorization() {
        if !primes.contains(&p) {
            primes.push(p);
        }
    }
    primes.sort_unstable();
    let local: Vec<LocalDensity> = primes
        .par_iter()
        .map(|&p| sigma_p(q, p, budget))
        .collect::<Result<_>>()?;
    let finite_product: f64 = local.iter().map(|d| d.value).product();
    let local_err: f64 = local
        .iter()
        .map(|d| if d.value > 0.0 { d.err / d.value } else { 0.0 })
        .sum();
    let mut log_half = TAIL_CONSTANT * prime_tail_sum(p0) + local_err;
    let tail_factor = if n == 4 {
        let chi = CharacterQ::of_form(q);
        let l = lseries::l_partial(&chi, Complex64::new(1.0, 0.0), l_terms)?;
        let head: f64 = arith::primes_up_to(p0.max(2))
            .into_iter()
            .map(|p| 1.0 / (1.0 - chi.eval(p) as f64 / p as f64))
            .product();
        log_half += l.tail_bound / l.re.abs();
        l.re / head
    } else {
        1.0
    };
    let value = finite_product * tail_factor;
    Ok(SingularSeries {
        value,
        lower: value * (-log_half).exp(),
        upper: value * log_half.exp(),
        cutoff: p0,
        local,
        finite_product,
        tail_factor,
        tail_log_halfwidth: log_half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn f(v: &[i64]) -> DiagonalForm {
        DiagonalForm::new(v.to_vec()).unwrap()
    }

    fn brute_nk(q: &DiagonalForm, m: u64) -> u64 {
        let n = q.dim();
        let mut count = 0;
        let total = m.pow(n as u32);
        for idx in 0..total {
            let mut r = idx;
            let mut s: i128 = 0;
            for &a in q.coeffs() {
                let x = (r % m) as i128;
                r /= m;
                s += a as i128 * x * x;
            }
            if s.rem_euclid(m as i128) == 0 {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn nk_examples() {
        let q = f(&[1, 1, 1, -1]);
        assert_eq!(nk_count(&q, 3, 1, DEFAULT_BUDGET).unwrap(), BigInt::from(21));
        assert_eq!(
            density_partial(&q, 3, 1, DEFAULT_BUDGET).unwrap(),
            BigRational::new(7.into(), 9.into())
        );
        assert!(nk_count(&q, 3, 8, DEFAULT_BUDGET).is_err());
        assert!(nk_count(&q, 4, 1, DEFAULT_BUDGET).is_err());
    }

    #[test]
    fn nk_matches_enumeration() {
        for coeffs in [[1, 1, 1, -1], [3, 1, 1, -1], [2, 5, -7, 1], [9, 5, -1, -1]] {
            let q = f(&coeffs);
            for (p, k) in [(2, 1), (2, 2), (2, 3), (3, 1), (3, 2), (5, 1), (7, 1)] {
                let got = nk_count(&q, p, k, DEFAULT_BUDGET).unwrap();
                assert_eq!(got, BigInt::from(brute_nk(&q, (p as u64).pow(k))), "{q} p={p} k={k}");
            }
        }
        let q = f(&[1, 2, -3, 1, -1]);
        assert_eq!(nk_count(&q, 3, 2, DEFAULT_BUDGET).unwrap(), BigInt::from(brute_nk(&q, 9)));
    }

    #[test]
    fn sigma_three_anchor() {
        let d = sigma_p(&f(&[1, 1, 1, -1]), 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(d.method, DensityMethod::Extrapolated);
        assert!((d.value - 5.0 / 6.0).abs() < 1e-12, "{}", d.value);
        assert!((d.tail_ratio.unwrap() + 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(d.partials[0], BigRational::new(7.into(), 9.into()));
        assert_eq!(d.partials[1], BigRational::new(23.into(), 27.into()));
    }

    #[test]
    fn unramified_factor_shape() {
        // For p ∤ 2Δ and n = 4, σ_p = 1 + χ(p)/p.
        let q = f(&[1, 2, 3, -5]);
        let chi = CharacterQ::of_form(&q);
        for p in [7u64, 11, 13] {
            let d = sigma_p(&q, p, DEFAULT_BUDGET).unwrap();
            let shape = d.value * (1.0 - chi.eval(p) as f64 / p as f64);
            assert!((shape - 1.0).abs() <= 5.0 * (p as f64).powf(-1.5), "p={p}");
        }
    }

    #[test]
    fn identity_exact() {
        for coeffs in [vec![1, 1, 1, -1], vec![3, 1, 1, -1], vec![2, 3, -6, 5, 1]] {
            let q = f(&coeffs);
            for (p, k) in [(3, 1), (3, 2), (3, 3), (5, 2), (7, 1)] {
                let r = partial_identity(&q, p, k, 1_000_000, expsums::DEFAULT_CAP).unwrap();
                assert!(r.holds, "{q} p={p} k={k}");
            }
        }
    }

    #[test]
    fn stag_examples() {
        let r = stag_check(&f(&[1, 1, 1, -1]), DEFAULT_BUDGET).unwrap();
        assert!(r.entries.is_empty());
        let r = stag_check(&f(&[3, 1, 1, -1]), DEFAULT_BUDGET).unwrap();
        assert!(r.entries.iter().any(|e| e.p == 3 && e.k == 2));
        assert_eq!(r.violations, 0);
        let r = stag_check(&f(&[9, 5, -1, -1]), DEFAULT_BUDGET).unwrap();
        assert!(r.entries.iter().any(|e| e.p == 5));
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn singular_series_positive() {
        let s = singular_series(&f(&[1, 1, 1, -1]), 30, 1_000_000, 200_000).unwrap();
        assert!(s.value > 0.0);
        assert!(s.lower <= s.value && s.value <= s.upper);
        assert_eq!(
            singular_series(&f(&[1, 1, -1, -1]), 30, 1_000_000, 1000).unwrap_err(),
            Error::SquareDiscriminant
        );
        let s5 = singular_series(&f(&[1, 1, 1, 1, -1]), 30, 1_000_000, 0).unwrap();
        assert!(s5.value > 0.0 && s5.tail_factor == 1.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn sigma_permutation_invariant(
            a in prop::collection::vec(prop_oneof![-9i64..=-1, 1i64..=9], 4..=5),
            p in prop_oneof![Just(2u64), Just(3), Just(5)],
        ) {
            let Ok(q) = DiagonalForm::new(a.clone()) else { return Ok(()); };
            let mut b = a.clone();
            b.reverse();
            let r = f(&b);
            let x = sigma_p(&q, p, 100_000).unwrap();
            let y = sigma_p(&r, p, 100_000).unwrap();
            prop_assert_eq!(x.partials, y.partials);
            prop_assert!(x.value >= 0.0);
        }
    }
}
