//! The bump w0, its normalized primitive Φ, and the weights built from them.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::quad;
use crate::error::{Error, Result};
use crate::qform::DiagonalForm;

/// e^{-1/(1-x^2)} on |x| < 1, zero elsewhere.
#[inline]
pub fn w0(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp()
    }
}

#[inline]
pub fn w0_deriv(x: f64) -> f64 {
    let s = 1.0 - x * x;
    if s <= 0.0 {
        0.0
    } else {
        (-1.0 / s).exp() * (-2.0 * x / (s * s))
    }
}

/// ∫ w0 over R, to 1e-12 absolute.
pub fn c0() -> f64 {
    static C0: OnceLock<f64> = OnceLock::new();
    *C0.get_or_init(|| quad::adaptive(&w0, -1.0, 1.0, 1e-15).0)
}

const PHI_INTERVALS: usize = 4096;

struct PhiTable {
    h: f64,
    f: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn phi_table() -> &'static PhiTable {
    static T: OnceLock<PhiTable> = OnceLock::new();
    T.get_or_init(|| {
        let n = PHI_INTERVALS;
        let h = 2.0 / n as f64;
        let c = c0();
        let mut f = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        let mut comp = 0.0;
        f.push(0.0);
        for k in 0..n {
            let a = -1.0 + k as f64 * h;
            let piece = quad::gl_fixed(&w0, a, a + h, 16) / c;
            // Kahan accumulation along the table.
            let y = piece - comp;
            let t = acc + y;
            comp = (t - acc) - y;
            acc = t;
            f.push(acc);
        }
        let scale = 1.0 / acc;
        for v in f.iter_mut() {
            *v *= scale;
        }
        let d1 = (0..=n)
            .map(|k| w0(-1.0 + k as f64 * h) / c)
            .collect();
        let d2 = (0..=n)
            .map(|k| w0_deriv(-1.0 + k as f64 * h) / c)
            .collect();
        PhiTable { h, f, d1, d2 }
    })
}

/// Φ(t) = c0^{-1} ∫_{-1}^t w0, by quintic Hermite interpolation of a table of
/// Φ, Φ' and Φ''.
pub fn phi(t: f64) -> f64 {
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let tab = phi_table();
    let pos = (t + 1.0) / tab.h;
    let k = (pos.floor() as usize).min(PHI_INTERVALS - 1);
    let s = pos - k as f64;
    let h = tab.h;
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let s5 = s4 * s;
    let h00 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
    let h10 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
    let h20 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
    let h01 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
    let h11 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
    let h21 = 0.5 * (s3 - 2.0 * s4 + s5);
    let v = tab.f[k] * h00
        + h * tab.d1[k] * h10
        + h * h * tab.d2[k] * h20
        + tab.f[k + 1] * h01
        + h * tab.d1[k + 1] * h11
        + h * h * tab.d2[k + 1] * h21;
    v.clamp(0.0, 1.0)
}

/// Smooth step: 0 for x ≤ 0, 1 for x ≥ 2ε.
#[inline]
pub fn omega_eps(eps: f64, x: f64) -> f64 {
    phi(x / eps - 1.0)
}

/// ω(x) = 4 c0^{-1} w0(4x - 3), supported in (1/2, 1), total mass 1.
#[inline]
pub fn omega(x: f64) -> f64 {
    4.0 / c0() * w0(4.0 * x - 3.0)
}

/// w0(x1 - 2) Π_{i≥2} ω_{1/2}(1 - |x_i|/x1).
pub fn wdag(x: &[f64]) -> f64 {
    let x1 = x[0];
    let f1 = w0(x1 - 2.0);
    if f1 == 0.0 {
        return 0.0;
    }
    x[1..]
        .iter()
        .fold(f1, |acc, &xi| acc * phi(1.0 - 2.0 * xi.abs() / x1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag", rename_all = "snake_case")]
pub enum WeightDescriptor {
    /// Π w0(scale_i x_i + shift_i).
    W0Product { shifts: Vec<f64>, scales: Vec<f64> },
    Wdag { dim: usize },
    /// w0(2|A_1|^{1/2} x_1 - 2) Π_{i≥2} w0(|A_i|^{1/2} x_i); stored as a shifted product.
    Wq { shifts: Vec<f64>, scales: Vec<f64> },
    /// Π ω_ε(x_i); a step, not compactly supported.
    OmegaEps { eps: f64, dim: usize },
}

impl WeightDescriptor {
    pub fn wdag(dim: usize) -> Self {
        WeightDescriptor::Wdag { dim }
    }

    pub fn wq(q: &DiagonalForm) -> Self {
        let a = q.coeffs();
        let mut shifts = vec![0.0; a.len()];
        shifts[0] = -2.0;
        let scales = a
            .iter()
            .enumerate()
            .map(|(i, &ai)| {
                let s = (ai.unsigned_abs() as f64).sqrt();
                if i == 0 {
                    2.0 * s
                } else {
                    s
                }
            })
            .collect();
        WeightDescriptor::Wq { shifts, scales }
    }

    pub fn w0_product(dim: usize) -> Self {
        WeightDescriptor::W0Product {
            shifts: vec![0.0; dim],
            scales: vec![1.0; dim],
        }
    }

    /// Builds a descriptor from a CLI tag.
    pub fn from_tag(tag: &str, q: &DiagonalForm) -> Result<Self> {
        match tag {
            "wdag" => Ok(Self::wdag(q.dim())),
            "wq" => Ok(Self::wq(q)),
            "w0" | "w0_product" => Ok(Self::w0_product(q.dim())),
            other => Err(Error::UnsupportedWeight(other.to_string())),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            WeightDescriptor::W0Product { .. } => "w0_product",
            WeightDescriptor::Wdag { .. } => "wdag",
            WeightDescriptor::Wq { .. } => "wq",
            WeightDescriptor::OmegaEps { .. } => "omega_eps",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            WeightDescriptor::W0Product { scales, .. } | WeightDescriptor::Wq { scales, .. } => {
                scales.len()
            }
            WeightDescriptor::Wdag { dim } | WeightDescriptor::OmegaEps { dim, .. } => *dim,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(match self {
            WeightDescriptor::W0Product { shifts, scales }
            | WeightDescriptor::Wq { shifts, scales } => x
                .iter()
                .zip(shifts.iter().zip(scales))
                .map(|(&xi, (&t, &s))| w0(s * xi + t))
                .product(),
            WeightDescriptor::Wdag { .. } => wdag(x),
            WeightDescriptor::OmegaEps { eps, .. } => {
                x.iter().map(|&xi| omega_eps(*eps, xi)).product()
            }
        })
    }

    /// Open interval containing the x1-support, for compactly supported weights.
    pub fn x1_support(&self) -> Result<(f64, f64)> {
        match self {
            WeightDescriptor::W0Product { shifts, scales }
            | WeightDescriptor::Wq { shifts, scales } => {
                Ok(shifted_support(shifts[0], scales[0]))
            }
            WeightDescriptor::Wdag { .. } => Ok((1.0, 3.0)),
            WeightDescriptor::OmegaEps { .. } => Err(Error::UnsupportedWeight(
                "omega_eps is not compactly supported".into(),
            )),
        }
    }

    /// The x1 factor.
    pub fn factor1(&self, u1: f64) -> f64 {
        match self {
            WeightDescriptor::W0Product { shifts, scales }
            | WeightDescriptor::Wq { shifts, scales } => w0(scales[0] * u1 + shifts[0]),
            WeightDescriptor::Wdag { .. } => w0(u1 - 2.0),
            WeightDescriptor::OmegaEps { eps, .. } => omega_eps(*eps, u1),
        }
    }

    /// Open interval outside which the i-th factor (i ≥ 1) vanishes, given x1.
    pub fn tail_support(&self, i: usize, u1: f64) -> (f64, f64) {
        match self {
            WeightDescriptor::W0Product { shifts, scales }
            | WeightDescriptor::Wq { shifts, scales } => shifted_support(shifts[i], scales[i]),
            WeightDescriptor::Wdag { .. } => (-u1, u1),
            WeightDescriptor::OmegaEps { .. } => (0.0, f64::INFINITY),
        }
    }

    /// The i-th factor (i ≥ 1) given x1.
    #[inline]
    pub fn tail_factor(&self, i: usize, ui: f64, u1: f64) -> f64 {
        match self {
            WeightDescriptor::W0Product { shifts, scales }
            | WeightDescriptor::Wq { shifts, scales } => w0(scales[i] * ui + shifts[i]),
            WeightDescriptor::Wdag { .. } => phi(1.0 - 2.0 * ui.abs() / u1),
            WeightDescriptor::OmegaEps { eps, .. } => omega_eps(*eps, ui),
        }
    }

    /// True when every factor with i ≥ 1 is even in its variable.
    pub fn tail_is_even(&self) -> bool {
        match self {
            WeightDescriptor::W0Product { shifts, .. } | WeightDescriptor::Wq { shifts, .. } => {
                shifts[1..].iter().all(|&t| t == 0.0)
            }
            WeightDescriptor::Wdag { .. } => true,
            WeightDescriptor::OmegaEps { .. } => false,
        }
    }

    /// Largest |x_i| (i ≥ 1) on the support, over all admissible x1.
    pub fn tail_halfwidth(&self, i: usize) -> f64 {
        match self {
            WeightDescriptor::Wdag { .. } => 3.0,
            _ => {
                let (lo, hi) = self.tail_support(i, 0.0);
                lo.abs().max(hi.abs())
            }
        }
    }
}

fn shifted_support(shift: f64, scale: f64) -> (f64, f64) {
    let a = (-1.0 - shift) / scale;
    let b = (1.0 - shift) / scale;
    (a.min(b), a.max(b))
}

/// Evaluates `w` at `x`.
pub fn weight_eval(w: &WeightDescriptor, x: &[f64]) -> Result<f64> {
    w.eval(x)
}
