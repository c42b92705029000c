//! Seeded corpora of diagonal forms.
//!
//! The generator is SplitMix64 (state += 0x9E3779B97F4A7C15, output mixed
//! with multipliers 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB), seeded with
//! `seed` directly. Each draw picks |Aᵢ| uniformly in the magnitude range and
//! a sign from one more bit; rejected draws are retried.

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qform::{make_form, DiagonalForm};

pub const MAX_REJECTIONS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Constraints {
    pub primitive: bool,
    pub nonsquare_disc: bool,
    /// max |Aᵢ| ≤ 4 min |Aᵢ|.
    pub same_order: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub seed: u64,
    pub n_values: Vec<usize>,
    /// Inclusive range of |Aᵢ|.
    pub coeff_range: (u64, u64),
    pub count: usize,
    #[serde(default)]
    pub constraints: Constraints,
}

/// Forms cycle through `n_values` in order.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<DiagonalForm>> {
    if spec.count == 0 {
        return Err(Error::InvalidArgument("corpus count must be at least 1".into()));
    }
    if spec.n_values.is_empty() {
        return Err(Error::InvalidArgument("no dimensions given".into()));
    }
    let (lo, hi) = spec.coeff_range;
    if lo == 0 || lo > hi || hi >= crate::qform::COEFF_LIMIT as u64 {
        return Err(Error::InvalidArgument(format!("bad coefficient range {lo}..={hi}")));
    }
    let mut rng = SplitMix64::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.count);
    for i in 0..spec.count {
        let n = spec.n_values[i % spec.n_values.len()];
        let mut rejected = 0u64;
        loop {
            let coeffs: Vec<i64> = (0..n)
                .map(|_| {
                    let m = rng.random_range(lo..=hi) as i64;
                    if rng.random::<bool>() {
                        -m
                    } else {
                        m
                    }
                })
                .collect();
            if let Some(q) = accept(&coeffs, &spec.constraints) {
                out.push(q);
                break;
            }
            rejected += 1;
            if rejected >= MAX_REJECTIONS {
                return Err(Error::Precondition(format!(
                    "no form with n = {n} met the constraints after {MAX_REJECTIONS} draws"
                )));
            }
        }
    }
    Ok(out)
}

fn accept(coeffs: &[i64], c: &Constraints) -> Option<DiagonalForm> {
    let q = make_form(coeffs, c.primitive).ok()?;
    if c.nonsquare_disc && q.disc_is_square() {
        return None;
    }
    if c.same_order && q.height() > 4 * q.min_coeff() {
        return None;
    }
    Some(q)
}
