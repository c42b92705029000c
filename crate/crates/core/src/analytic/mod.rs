//! Smooth weights, the kernel h, the integrals I_q(c) and the singular integral.

pub mod integral;
pub mod kernel;
pub mod quad;
pub mod weights;

pub use integral::{
    decay_check, iq_integral, sigma_infinity, sigma_infinity_to, CSet, IntegralOptions, IntegralValue, SigmaInfinity,
    DEFAULT_EVAL_BUDGET,
};
pub use kernel::h_eval;
pub use weights::{c0, weight_eval, WeightDescriptor};
