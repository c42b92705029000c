//! Diagonal quadratic forms `A_1 x_1^2 + ... + A_n x_n^2`.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};
use serde::{Deserialize, Serialize};

use crate::arith;
use crate::error::{Error, Result};

/// Largest admissible |A_i|. Keeps every kernel inside 64-bit arithmetic.
pub const COEFF_LIMIT: i64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct DiagonalForm {
    coeffs: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FormInvariants {
    #[serde(serialize_with = "crate::emit::ser_bigint")]
    pub disc: BigInt,
    pub min_coeff: u64,
    pub height: u64,
    pub delta_n: u8,
}

/// `perm[i]` is the index in the original form of the new `i`-th coefficient.
pub type Permutation = Vec<usize>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Orientation {
    pub perm: Permutation,
    /// +1 or -1; the oriented form is `sign * Q` with coordinates permuted.
    pub sign: i64,
    pub form: DiagonalForm,
}

impl DiagonalForm {
    /// Validates an indefinite form with nonzero coefficients.
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        make_form(&coeffs, false)
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn discriminant(&self) -> BigInt {
        self.coeffs.iter().map(|&a| BigInt::from(a)).product()
    }

    pub fn min_coeff(&self) -> u64 {
        self.coeffs.iter().map(|a| a.unsigned_abs()).min().unwrap()
    }

    pub fn height(&self) -> u64 {
        self.coeffs.iter().map(|a| a.unsigned_abs()).max().unwrap()
    }

    pub fn delta_n(&self) -> u8 {
        delta_n(self.dim())
    }

    pub fn invariants(&self) -> FormInvariants {
        FormInvariants {
            disc: self.discriminant(),
            min_coeff: self.min_coeff(),
            height: self.height(),
            delta_n: self.delta_n(),
        }
    }

    pub fn is_primitive(&self) -> bool {
        self.content() == 1
    }

    pub fn content(&self) -> u64 {
        self.coeffs
            .iter()
            .fold(0u64, |g, &a| arith::gcd(g, a.unsigned_abs()))
    }

    /// Prime factorization of |Δ_Q| assembled from the coefficients.
    pub fn disc_factorization(&self) -> Vec<(u64, u32)> {
        let mut acc: Vec<(u64, u32)> = Vec::new();
        for &a in &self.coeffs {
            for (p, e) in arith::factorize(a.unsigned_abs()) {
                match acc.iter_mut().find(|(q, _)| *q == p) {
                    Some(slot) => slot.1 += e,
                    None => acc.push((p, e)),
                }
            }
        }
        acc.sort_unstable();
        acc
    }

    pub fn disc_is_square(&self) -> bool {
        arith::is_perfect_square(&self.discriminant())
    }

    /// Σ A_i x_i^2 exactly.
    pub fn evaluate(&self, x: &[i64]) -> Result<BigInt> {
        self.check_dim(x.len())?;
        Ok(self
            .coeffs
            .iter()
            .zip(x)
            .map(|(&a, &xi)| BigInt::from(a) * BigInt::from(xi) * BigInt::from(xi))
            .sum())
    }

    /// Fast path for small arguments; `None` on overflow.
    pub fn evaluate_i128(&self, x: &[i64]) -> Option<i128> {
        let mut s: i128 = 0;
        for (&a, &xi) in self.coeffs.iter().zip(x) {
            let t = (xi as i128).checked_mul(xi as i128)?.checked_mul(a as i128)?;
            s = s.checked_add(t)?;
        }
        Some(s)
    }

    /// Δ_Q · Q^{-1}(c) = Σ (Δ_Q / A_i) c_i^2.
    pub fn q_inverse_scaled(&self, c: &[i64]) -> Result<BigInt> {
        self.check_dim(c.len())?;
        let disc = self.discriminant();
        Ok(self
            .coeffs
            .iter()
            .zip(c)
            .map(|(&a, &ci)| {
                let cofactor = &disc / BigInt::from(a);
                cofactor * BigInt::from(ci) * BigInt::from(ci)
            })
            .sum())
    }

    /// Moves the first positive coefficient to the front, keeping the rest in order.
    pub fn normalize_for_delta(&self) -> (Permutation, DiagonalForm) {
        let j = self
            .coeffs
            .iter()
            .position(|&a| a > 0)
            .expect("indefinite form has a positive coefficient");
        let perm = front_permutation(self.dim(), j);
        let form = self.permuted(&perm);
        (perm, form)
    }

    /// Chooses sign and leading coordinate so that the leading coefficient is
    /// positive and the cone `A_1 x_1^2 = -Σ A_i x_i^2` meets `|x_i| < x_1`
    /// as widely as possible: maximizes Σ_{sA_i<0}|A_i| − sA_j.
    pub fn orient_for_delta(&self) -> Orientation {
        let mut best: Option<(i64, i64, usize)> = None;
        for sign in [1i64, -1] {
            let neg_mass: i64 = self
                .coeffs
                .iter()
                .filter(|&&a| sign * a < 0)
                .map(|a| a.abs())
                .sum();
            for (j, &a) in self.coeffs.iter().enumerate() {
                if sign * a <= 0 {
                    continue;
                }
                let score = neg_mass - sign * a;
                if best.is_none_or(|(s, _, _)| score > s) {
                    best = Some((score, sign, j));
                }
            }
        }
        let (_, sign, j) = best.expect("indefinite form");
        let perm = front_permutation(self.dim(), j);
        let coeffs = perm.iter().map(|&k| sign * self.coeffs[k]).collect();
        Orientation {
            perm,
            sign,
            form: DiagonalForm { coeffs },
        }
    }

    /// The form with coefficients reordered: new `i` is old `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> DiagonalForm {
        DiagonalForm {
            coeffs: perm.iter().map(|&k| self.coeffs[k]).collect(),
        }
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got,
            });
        }
        Ok(())
    }
}

fn front_permutation(n: usize, j: usize) -> Permutation {
    let mut perm = Vec::with_capacity(n);
    perm.push(j);
    perm.extend((0..n).filter(|&k| k != j));
    perm
}

/// Applies the permutation convention of [`DiagonalForm::permuted`] to a vector.
pub fn permute_vector(v: &[i64], perm: &[usize]) -> Vec<i64> {
    perm.iter().map(|&k| v[k]).collect()
}

pub fn delta_n(n: usize) -> u8 {
    u8::from(n % 2 == 0 && n >= 6)
}

pub fn make_form(coeffs: &[i64], primitive: bool) -> Result<DiagonalForm> {
    if coeffs.len() < 3 {
        return Err(Error::TooFewVariables(coeffs.len()));
    }
    for (index, &a) in coeffs.iter().enumerate() {
        if a == 0 {
            return Err(Error::ZeroCoefficient { index });
        }
        if a.unsigned_abs() >= COEFF_LIMIT as u64 {
            return Err(Error::CoefficientTooLarge { index, value: a });
        }
    }
    if coeffs.iter().all(|&a| a > 0) || coeffs.iter().all(|&a| a < 0) {
        return Err(Error::Definite);
    }
    let form = DiagonalForm {
        coeffs: coeffs.to_vec(),
    };
    if primitive {
        let g = form.content();
        if g != 1 {
            return Err(Error::NotPrimitive(g));
        }
    }
    Ok(form)
}

pub fn invariants_of(q: &DiagonalForm) -> FormInvariants {
    q.invariants()
}

impl TryFrom<Vec<i64>> for DiagonalForm {
    type Error = Error;
    fn try_from(v: Vec<i64>) -> Result<Self> {
        DiagonalForm::new(v)
    }
}

impl From<DiagonalForm> for Vec<i64> {
    fn from(q: DiagonalForm) -> Self {
        q.coeffs
    }
}

impl fmt::Display for DiagonalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coeffs.iter().map(|a| a.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl FromStr for DiagonalForm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        DiagonalForm::new(parse_int_list(s)?)
    }
}

/// Parses `"1, -2,3"` style lists. Errors carry the byte offset.
pub fn parse_int_list(s: &str) -> Result<Vec<i64>> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
            *i += 1;
        }
    };
    loop {
        skip_ws(&mut i);
        let start = i;
        if i < bytes.len() && (bytes[i] == b'-' || bytes[i] == b'+') {
            i += 1;
        }
        let digits = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        if i == digits {
            let message = match bytes.get(i) {
                None => "expected an integer, found end of input".to_string(),
                Some(&b) => format!("expected an integer, found '{}'", b as char),
            };
            return Err(Error::Parse {
                position: i,
                message,
            });
        }
        let value: i64 = s[start..i].parse().map_err(|_| Error::Parse {
            position: start,
            message: "integer out of range".into(),
        })?;
        out.push(value);
        skip_ws(&mut i);
        match bytes.get(i) {
            None => return Ok(out),
            Some(b',') => i += 1,
            Some(&b) => {
                return Err(Error::Parse {
                    position: i,
                    message: format!("expected ',' or end of input, found '{}'", b as char),
                })
            }
        }
    }
}

/// Exact check of (mH)^{n-1} ≥ |Δ|, the squared-out form of
/// m^{1/2} H^{1/2} ≥ |Δ|^{1/(2(n-1))}.
pub fn min_height_dominates_disc(q: &DiagonalForm) -> bool {
    let mh = BigInt::from(q.min_coeff()) * BigInt::from(q.height());
    num_traits::pow(mh, q.dim() - 1) >= q.discriminant().abs()
}

pub(crate) fn bigint_to_f64(x: &BigInt) -> f64 {
    x.to_f64().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    })
}
