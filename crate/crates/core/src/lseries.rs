//! The character χ_Q = (Δ_Q | ·), its L-series, and D(s; c) = Σ q^{-s} S_q(c).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::arith;
use crate::error::{Error, Result};
use crate::expsums::{self, ExpSumValue};
use crate::qform::DiagonalForm;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CharacterQ {
    pub disc: BigInt,
    /// Fundamental discriminant with the same Kronecker values off Δ_Q.
    pub fundamental: BigInt,
    pub conductor: u64,
}

impl CharacterQ {
    pub fn of_form(q: &DiagonalForm) -> Self {
        let disc = q.discriminant();
        let fundamental = arith::fundamental_discriminant(disc.is_negative(), &q.disc_factorization());
        let conductor = fundamental.abs().to_u64().expect("conductor fits in 64 bits");
        CharacterQ {
            disc,
            fundamental,
            conductor,
        }
    }

    /// (D | m) for the fundamental discriminant D of Q(√Δ_Q), set to zero
    /// when gcd(m, Δ_Q) > 1.
    pub fn eval(&self, m: u64) -> i8 {
        if m == 0 || !self.disc.gcd(&BigInt::from(m)).is_one() {
            return 0;
        }
        arith::kronecker(&self.fundamental, m)
    }

    pub fn is_principal(&self) -> bool {
        self.conductor == 1
    }
}

pub fn chi_q(q: &DiagonalForm, m: u64) -> Result<i8> {
    if m == 0 {
        return Err(Error::InvalidArgument("m must be at least 1".into()));
    }
    Ok(CharacterQ::of_form(q).eval(m))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SeriesValue {
    pub re: f64,
    pub im: f64,
    pub terms: u64,
    pub tail_bound: f64,
}

impl SeriesValue {
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

fn pow_neg(m: f64, s: Complex64) -> Complex64 {
    (-s * m.ln()).exp()
}

/// Σ_{m≤N} χ(m) m^{-s}. The tail bound uses |Σ_{m≤x} χ(m)| ≤ √k log k by
/// partial summation: M N^{-σ}(1 + |s|/σ).
pub fn l_partial(chi: &CharacterQ, s: Complex64, n_terms: u64) -> Result<SeriesValue> {
    let sigma = s.re;
    if sigma <= 0.5 {
        return Err(Error::Precondition("L-series partial sums need Re s > 1/2".into()));
    }
    if chi.is_principal() && sigma <= 1.0 {
        return Err(Error::Divergent(
            "principal character (square discriminant) with Re s ≤ 1".into(),
        ));
    }
    if n_terms == 0 {
        return Err(Error::InvalidArgument("need at least one term".into()));
    }
    let mut re = crate::summation::NeumaierSum::new();
    let mut im = crate::summation::NeumaierSum::new();
    // χ is periodic modulo lcm(conductor, rad Δ), which divides 4|Δ|.
    let period = (BigInt::from(4) * chi.disc.abs()).to_u64();
    let residues: Option<Vec<i8>> = period
        .filter(|&p| p <= 1 << 22)
        .map(|p| (0..p).map(|r| chi.eval(if r == 0 { p } else { r })).collect());
    for m in 1..=n_terms {
        let c = match (&residues, period) {
            (Some(t), Some(p)) => t[(m % p) as usize],
            _ => chi.eval(m),
        };
        if c == 0 {
            continue;
        }
        let t = pow_neg(m as f64, s) * c as f64;
        re.add(t.re);
        im.add(t.im);
    }
    let nf = n_terms as f64;
    let tail_bound = if chi.is_principal() {
        nf.powf(1.0 - sigma) / (sigma - 1.0)
    } else {
        let k = chi.conductor.max(3) as f64;
        let m = k.sqrt() * k.ln();
        m * nf.powf(-sigma) * (1.0 + s.norm() / sigma)
    };
    Ok(SeriesValue {
        re: re.value(),
        im: im.value(),
        terms: n_terms,
        tail_bound,
    })
}

fn abscissa(q: &DiagonalForm) -> f64 {
    let n = q.dim() as f64;
    4.0f64.max((n + 3.0 + q.delta_n() as f64) / 2.0)
}

fn dyadic_tail(terms: &[Complex64], y: u64) -> f64 {
    let lo = (y / 2).max(1) as usize;
    terms[lo..=y as usize]
        .iter()
        .fold(Complex64::zero(), |a, b| a + b)
        .norm()
}

/// Σ_{q≤Y} q^{-s} S_q(c); tail estimated by the size of the last dyadic block.
pub fn dirichlet_d(
    q: &DiagonalForm,
    c: &[i64],
    s: Complex64,
    y: u64,
    cap: u64,
) -> Result<SeriesValue> {
    if s.re <= abscissa(q) {
        return Err(Error::Precondition(format!(
            "D(s; c) is summed only for Re s > {}",
            abscissa(q)
        )));
    }
    let all = expsums::sq_all(q, c, y, cap)?;
    Ok(series_from(&all, s, y))
}

pub fn series_from(all: &[ExpSumValue], s: Complex64, y: u64) -> SeriesValue {
    let terms: Vec<Complex64> = (0..=y as usize)
        .map(|m| {
            if m == 0 {
                Complex64::zero()
            } else {
                pow_neg(m as f64, s) * all[m].value
            }
        })
        .collect();
    let mut re = crate::summation::NeumaierSum::new();
    let mut im = crate::summation::NeumaierSum::new();
    for t in &terms[1..] {
        re.add(t.re);
        im.add(t.im);
    }
    SeriesValue {
        re: re.value(),
        im: im.value(),
        terms: y,
        tail_bound: dyadic_tail(&terms, y),
    }
}

/// D_p(s; c) truncated at p^{tmax}.
pub fn euler_factor(
    q: &DiagonalForm,
    c: &[i64],
    p: u64,
    s: Complex64,
    tmax: u32,
    cap: u64,
) -> Result<SeriesValue> {
    if !arith::is_prime(p) {
        return Err(Error::InvalidArgument(format!("{p} is not prime")));
    }
    let mut acc = Complex64::new(1.0, 0.0);
    let mut last = 0.0;
    for k in 1..=tmax {
        let pk = p.checked_pow(k).filter(|&v| v <= cap).ok_or(Error::BudgetExceeded {
            what: "Euler factor prime power",
            required: (p as u128).saturating_pow(k),
            budget: cap as u128,
        })?;
        let v = expsums::sq_direct(q, pk, c, cap)?;
        let t = pow_neg(pk as f64, s) * v.value;
        acc += t;
        last = t.norm();
    }
    Ok(SeriesValue {
        re: acc.re,
        im: acc.im,
        terms: tmax as u64 + 1,
        tail_bound: last,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FactorizationReport {
    pub d: SeriesValue,
    pub l: SeriesValue,
    /// |D(s; c) / L(s - 3, χ_Q)|, the empirical |E(s; c)|.
    pub e_abs: f64,
}

pub fn factorization_check(
    q: &DiagonalForm,
    c: &[i64],
    s: Complex64,
    y: u64,
    l_terms: u64,
    cap: u64,
) -> Result<FactorizationReport> {
    if q.dim() != 4 {
        return Err(Error::Precondition("factorization check needs n = 4".into()));
    }
    if q.disc_is_square() {
        return Err(Error::SquareDiscriminant);
    }
    if !q.q_inverse_scaled(c)?.is_zero() {
        return Err(Error::Precondition("needs Q^{-1}(c) = 0".into()));
    }
    if s.re < 4.0 {
        return Err(Error::Precondition("needs Re s ≥ 4".into()));
    }
    let all = expsums::sq_all(q, c, y, cap)?;
    let d = series_from(&all, s, y);
    let chi = CharacterQ::of_form(q);
    let l = l_partial(&chi, s - 3.0, l_terms)?;
    let e_abs = d.value().norm() / l.value().norm();
    Ok(FactorizationReport { d, l, e_abs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expsums::DEFAULT_CAP;

    fn f(v: &[i64]) -> DiagonalForm {
        DiagonalForm::new(v.to_vec()).unwrap()
    }

    #[test]
    fn character_examples() {
        let q = f(&[1, 1, 1, -1]);
        assert_eq!(chi_q(&q, 3).unwrap(), -1);
        assert_eq!(chi_q(&q, 5).unwrap(), 1);
        assert_eq!(chi_q(&q, 1).unwrap(), 1);
        let chi = CharacterQ::of_form(&q);
        assert_eq!(chi.conductor, 4);
        let chi = CharacterQ::of_form(&f(&[2, 3, 5, -1]));
        assert_eq!(chi.fundamental, BigInt::from(-120));
    }

    #[test]
    fn complete_multiplicativity() {
        let chi = CharacterQ::of_form(&f(&[2, 3, -7, 5]));
        let mut x: u64 = 12345;
        for _ in 0..10_000 {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let a = (x >> 33) % 5000 + 1;
            let b = (x >> 13) % 5000 + 1;
            assert_eq!(chi.eval(a * b), chi.eval(a) * chi.eval(b));
        }
    }

    #[test]
    fn leibniz_limit() {
        let chi = CharacterQ::of_form(&f(&[1, 1, 1, -1]));
        let v = l_partial(&chi, Complex64::new(1.0, 0.0), 1_000_000).unwrap();
        // Oracle: averaged consecutive partial sums of 1 - 1/3 + 1/5 - ...
        let mut s = 0.0;
        let mut prev = 0.0;
        for k in 0..500_000u64 {
            prev = s;
            s += if k % 2 == 0 { 1.0 } else { -1.0 } / (2 * k + 1) as f64;
        }
        let averaged = 0.5 * (s + prev);
        assert!((averaged - std::f64::consts::FRAC_PI_4).abs() < 1e-11);
        assert!((v.re - std::f64::consts::FRAC_PI_4).abs() <= v.tail_bound, "{v:?}");
        assert!((v.re - std::f64::consts::FRAC_PI_4).abs() < 1e-6);
        let one = l_partial(&chi, Complex64::new(1.0, 0.0), 1).unwrap();
        assert_eq!(one.re, 1.0);
    }

    #[test]
    fn dominated_at_two() {
        let chi = CharacterQ::of_form(&f(&[2, 3, -7, 5]));
        let v = l_partial(&chi, Complex64::new(2.0, 0.0), 1000).unwrap();
        let zeta: f64 = (1..=1000).map(|m| 1.0 / (m * m) as f64).sum();
        assert!(v.value().norm() <= zeta);
    }

    #[test]
    fn principal_character_diverges() {
        let chi = CharacterQ::of_form(&f(&[1, 1, -1, -1]));
        assert!(matches!(
            l_partial(&chi, Complex64::new(1.0, 0.0), 10),
            Err(Error::Divergent(_))
        ));
    }

    #[test]
    fn d_series_examples() {
        let q = f(&[1, 1, 1, -1]);
        let z = [0i64; 4];
        let d1 = dirichlet_d(&q, &z, Complex64::new(6.0, 0.0), 1, DEFAULT_CAP).unwrap();
        assert_eq!(d1.re, 1.0);
        let d3 = dirichlet_d(&q, &z, Complex64::new(6.0, 0.0), 3, DEFAULT_CAP).unwrap();
        assert!((d3.re - (1.0 - 18.0 / 729.0)).abs() < 1e-14);
        assert!(dirichlet_d(&q, &z, Complex64::new(3.9, 0.0), 3, DEFAULT_CAP).is_err());
    }

    #[test]
    fn euler_factor_examples() {
        let q = f(&[1, 1, 1, -1]);
        let z = [0i64; 4];
        let s = Complex64::new(4.0, 0.0);
        assert_eq!(euler_factor(&q, &z, 3, s, 0, DEFAULT_CAP).unwrap().re, 1.0);
        let e1 = euler_factor(&q, &z, 3, s, 1, DEFAULT_CAP).unwrap();
        assert!((e1.re - 7.0 / 9.0).abs() < 1e-14);
        let e6 = euler_factor(&q, &z, 3, s, 6, DEFAULT_CAP).unwrap();
        assert!((e6.re - 5.0 / 6.0).abs() < 1e-3);
    }

    #[test]
    fn euler_factor_matches_l_factor() {
        // For p ∤ 2Δ and Q^{-1}(c) = 0: D_p(s; c)(1 - χ(p) p^{3-s}) = 1 + O(p^{-1}).
        let q = f(&[1, 2, 3, -5]);
        let chi = CharacterQ::of_form(&q);
        let s = Complex64::new(4.5, 0.0);
        for p in [7u64, 11, 13, 17] {
            let d = euler_factor(&q, &[0; 4], p, s, 2, DEFAULT_CAP).unwrap();
            let l = 1.0 - chi.eval(p) as f64 * (p as f64).powf(3.0 - 4.5);
            let dev = (d.re * l - 1.0).abs();
            assert!(dev <= 2.0 / p as f64, "p={p} dev={dev}");
        }
    }

    #[test]
    fn factorization_preconditions() {
        let s = Complex64::new(4.5, 0.0);
        assert_eq!(
            factorization_check(&f(&[1, 1, -1, -1]), &[0; 4], s, 20, 1000, DEFAULT_CAP).unwrap_err(),
            Error::SquareDiscriminant
        );
        let r = factorization_check(&f(&[1, 1, 1, -1]), &[0; 4], s, 60, 100_000, DEFAULT_CAP).unwrap();
        assert!(r.e_abs.is_finite() && r.e_abs > 0.0);
        assert!(factorization_check(&f(&[1, 1, 1, -1]), &[1, 0, 0, 0], s, 20, 100, DEFAULT_CAP).is_err());
    }
}
