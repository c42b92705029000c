//! Circle-method computations for diagonal quadratic forms: exact zero counts,
//! complete exponential sums, local densities, the singular series and
//! integral, and a truncated delta-method reconstruction of weighted counts.

pub mod analytic;
pub mod arith;
pub mod corpus;
pub mod counting;
pub mod deltamethod;
pub mod densities;
pub mod emit;
pub mod error;
pub mod expsums;
pub mod lseries;
pub mod qform;
pub mod selftest;
pub mod summation;

pub use error::{Error, Result};
pub use qform::DiagonalForm;
