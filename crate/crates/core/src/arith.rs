//! Elementary number theory on machine integers.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

pub fn gcd(a: u64, b: u64) -> u64 {
    a.gcd(&b)
}

pub fn gcd_i64(a: i64, b: i64) -> u64 {
    gcd(a.unsigned_abs(), b.unsigned_abs())
}

/// Prime factorization by trial division, primes ascending.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    for p in [2u64, 3] {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    let mut p = 5u64;
    let mut step = 2;
    while p.saturating_mul(p) <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += step;
        step = 6 - step;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let f = factorize(n);
    f.len() == 1 && f[0].1 == 1
}

pub fn primes_up_to(n: u64) -> Vec<u64> {
    if n < 2 {
        return Vec::new();
    }
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(k, &p)| p.then_some(k as u64))
        .collect()
}

pub fn mobius(n: u64) -> i64 {
    assert!(n >= 1);
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

pub fn euler_phi(n: u64) -> u64 {
    factorize(n)
        .iter()
        .fold(n, |acc, &(p, _)| acc / p * (p - 1))
}

pub fn is_squarefree(n: u64) -> bool {
    factorize(n).iter().all(|&(_, e)| e == 1)
}

/// Floor of the square root.
pub fn isqrt(n: u64) -> u64 {
    if n == 0 {
        return 0;
    }
    let mut x = (n as f64).sqrt() as u64;
    while x.checked_mul(x).is_none_or(|v| v > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|v| v <= n) {
        x += 1;
    }
    x
}

pub fn pow_mod(mut a: u64, mut e: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut r = 1u128;
    let mut b = (a % m) as u128;
    let m128 = m as u128;
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % m128;
        }
        b = b * b % m128;
        e >>= 1;
    }
    a = r as u64;
    a
}

/// Jacobi symbol (a/n) for odd positive n.
pub fn jacobi(a: i64, n: u64) -> i8 {
    assert!(n % 2 == 1, "jacobi needs an odd modulus");
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut n = n;
    let mut t = 1i8;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                t = -t;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            t = -t;
        }
        a %= n;
    }
    if n == 1 {
        t
    } else {
        0
    }
}

/// Kronecker symbol (a | n) for n >= 1; `a` may be arbitrarily large.
pub fn kronecker(a: &BigInt, n: u64) -> i8 {
    assert!(n >= 1);
    if n == 1 {
        return 1;
    }
    let modulus = BigInt::from(n) * 8u32;
    let r = a.mod_floor(&modulus).to_u64().expect("reduced residue fits");
    kronecker_small(r, n)
}

/// Kronecker symbol with `a` already reduced modulo 8n.
fn kronecker_small(a: u64, n: u64) -> i8 {
    let twos = n.trailing_zeros();
    let odd = n >> twos;
    let mut sign = 1i8;
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        if twos % 2 == 1 && (a % 8 == 3 || a % 8 == 5) {
            sign = -1;
        }
    }
    if odd == 1 {
        return sign;
    }
    sign * jacobi((a % odd) as i64, odd)
}

/// Legendre symbol (a / p), p an odd prime.
pub fn legendre(a: &BigInt, p: u64) -> i8 {
    let r = a.mod_floor(&BigInt::from(p)).to_i64().expect("fits");
    jacobi(r, p)
}

/// Fundamental discriminant attached to a nonzero integer given by its sign
/// and prime factorization: strip square factors, then multiply by 4 unless
/// the squarefree part is 1 mod 4.
pub fn fundamental_discriminant(negative: bool, factors: &[(u64, u32)]) -> BigInt {
    let mut core = BigInt::from(1);
    for &(p, e) in factors {
        if e % 2 == 1 {
            core *= p;
        }
    }
    if negative {
        core = -core;
    }
    let r = core.mod_floor(&BigInt::from(4));
    if r == BigInt::from(1) {
        core
    } else {
        core * 4
    }
}

pub fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    if n.is_zero() {
        return true;
    }
    let r = n.sqrt();
    &(&r * &r) == n
}

/// Least-squares slope of y against x.
pub fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factorization_round_trip() {
        for n in 1..5000u64 {
            let f = factorize(n);
            let back: u64 = f.iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(back, n);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
    }

    #[test]
    fn sieve_matches_trial_division() {
        let ps = primes_up_to(1000);
        let trial: Vec<u64> = (2..=1000).filter(|&n| is_prime(n)).collect();
        assert_eq!(ps, trial);
    }

    #[test]
    fn mobius_and_phi_small() {
        let mu: Vec<i64> = (1..=10).map(mobius).collect();
        assert_eq!(mu, vec![1, -1, -1, 0, -1, 1, -1, 0, 0, 1]);
        assert_eq!(euler_phi(36), 12);
        assert_eq!(euler_phi(1), 1);
    }

    #[test]
    fn jacobi_against_euler_criterion() {
        for p in primes_up_to(200).into_iter().skip(1) {
            for a in -50i64..50 {
                let e = pow_mod(a.rem_euclid(p as i64) as u64, (p - 1) / 2, p);
                let want = match e {
                    0 => 0,
                    1 => 1,
                    _ => -1,
                };
                assert_eq!(jacobi(a, p), want, "a={a} p={p}");
            }
        }
    }

    #[test]
    fn kronecker_at_two() {
        let k = |a: i64| kronecker(&BigInt::from(a), 2);
        assert_eq!(k(1), 1);
        assert_eq!(k(7), 1);
        assert_eq!(k(3), -1);
        assert_eq!(k(5), -1);
        assert_eq!(k(-1), 1);
        assert_eq!(k(4), 0);
        assert_eq!(kronecker(&BigInt::from(-1), 3), -1);
        assert_eq!(kronecker(&BigInt::from(-1), 5), 1);
    }

    #[test]
    fn fundamental_discriminants() {
        let fd = |n: i64| fundamental_discriminant(n < 0, &factorize(n.unsigned_abs()));
        assert_eq!(fd(-1), BigInt::from(-4));
        assert_eq!(fd(5), BigInt::from(5));
        assert_eq!(fd(2), BigInt::from(8));
        assert_eq!(fd(-3), BigInt::from(-3));
        assert_eq!(fd(12), BigInt::from(12));
        assert_eq!(fd(9), BigInt::from(1));
    }

    #[test]
    fn integer_square_roots() {
        for n in 0..10_000u64 {
            let r = isqrt(n);
            assert!(r * r <= n && (r + 1) * (r + 1) > n);
        }
        assert_eq!(isqrt(u64::MAX), 4294967295);
    }
}
