//! Truncated delta-method identity, main-term predictor, bound envelopes and
//! corpus sweeps.
//!
//! Everything analytic runs on the oriented form (see
//! [`DiagonalForm::orient_for_delta`]); zero counts do not depend on the
//! orientation.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::integral::{
    estimate_evals, iq_block, iq_vanishes, iq_zero_many, sigma_infinity, sigma_infinity_to, CSet, IntegralOptions,
    IntegralValue,
};
use crate::analytic::kernel::h_eval;
use crate::analytic::weights::WeightDescriptor;
use crate::arith;
use crate::counting::{self, CountOptions};
use crate::densities::{self, SingularSeries};
use crate::error::{Error, Result};
use crate::expsums::{self, ExpSumValue};
use crate::qform::{bigint_to_f64, DiagonalForm};

pub const DEFAULT_C_MAX: u64 = 2;
pub const DEFAULT_EPSILON: f64 = 0.05;
/// Blocks whose a-priori evaluation estimate exceeds this multiple of the
/// budget are not attempted. Pruning keeps the real count at 0.27–0.29 of
/// the estimate on the reference form.
pub const ESTIMATE_SLACK: f64 = 3.3;
/// Relative target for σ_∞ in sweep rows.
pub const SWEEP_SIGMA_TARGET: f64 = 1e-5;

#[derive(Debug, Clone, Copy)]
pub struct ReconstructOptions {
    /// Defaults to ⌈2BH/√A₁⌉.
    pub q_max: Option<u64>,
    pub c_max: u64,
    /// Per-block evaluation budget and resolution.
    pub integral: IntegralOptions,
    pub exp_cap: u64,
    pub count: CountOptions,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            q_max: None,
            c_max: DEFAULT_C_MAX,
            integral: IntegralOptions::default(),
            exp_cap: expsums::DEFAULT_CAP,
            count: CountOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub q: u64,
    /// |c|_∞ of the block.
    pub shell: u64,
    pub contribution: f64,
    pub abs_err: f64,
    /// Number of c in the shell with S_q(c) ≠ 0.
    pub nonzero_terms: u64,
    pub resolved: bool,
    pub evals: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionReport {
    pub form: Vec<i64>,
    pub oriented: Vec<i64>,
    pub b: u64,
    pub x: f64,
    pub q_max: u64,
    pub c_max: u64,
    pub reconstructed: f64,
    pub abs_err: f64,
    pub exact_weighted: f64,
    pub main_term: f64,
    pub rel_err_vs_exact: f64,
    /// Σ over the ledger by shell.
    pub shell_totals: Vec<f64>,
    /// Σ |contribution| over the outermost shell.
    pub tail_abs: f64,
    /// X⁻² Σ_q φ(q) h(q/X, 0), the normalising constant taken to be 1.
    pub c_x_measured: f64,
    pub unresolved: Vec<u64>,
    pub complete: bool,
    pub evals: u64,
    pub seconds: f64,
    pub ledger: Vec<LedgerEntry>,
}

/// S_q(c) is a rational integer; use the rounded value once it is certified.
fn sum_value(s: &ExpSumValue) -> (f64, f64) {
    if s.is_integral() {
        (s.rounded as f64, 0.0)
    } else {
        (s.value, s.err)
    }
}

fn check_delta_form(q: &DiagonalForm) -> Result<()> {
    let n = q.dim();
    if !(4..=6).contains(&n) {
        return Err(Error::Precondition(format!("delta method needs n in 4..=6, got {n}")));
    }
    if n == 4 && q.disc_is_square() {
        return Err(Error::SquareDiscriminant);
    }
    Ok(())
}

pub fn default_q_max(q: &DiagonalForm, b: u64) -> u64 {
    let a1 = q.orient_for_delta().form.coeffs()[0] as f64;
    (2.0 * b as f64 * q.height() as f64 / a1.sqrt()).ceil() as u64
}

pub fn measured_c_x(x: f64) -> Result<f64> {
    let mut s = 0.0;
    for m in 1..=x.floor() as u64 {
        s += arith::euler_phi(m) as f64 * h_eval(m as f64 / x, 0.0)?;
    }
    Ok(s / (x * x))
}

/// Canonical frequency vectors: c₁ ≥ 0, cᵢ ≥ 0, with the number of
/// sign images of the tail.
fn canonical(c_max: u64, n: usize) -> CSet {
    CSet {
        c1: (0..=c_max as i64).collect(),
        rest: vec![(0..=c_max).collect(); n - 1],
    }
}

/// N_{w†}(Q; B) ≈ X⁻² Σ_{q ≤ q_max} Σ_{|c|_∞ ≤ c_max} q⁻ⁿ S_q(c) I_q(c), X = √A₁ B.
///
/// S_q(c) depends only on |cᵢ| and I_q(−c₁, c') = conj I_q(c₁, c'), so each
/// canonical c stands for its sign orbit and contributes a real number.
/// Blocks the integrator cannot afford are left out and listed in `unresolved`.
pub fn reconstruct(q: &DiagonalForm, b: u64, opts: &ReconstructOptions) -> Result<ReconstructionReport> {
    check_delta_form(q)?;
    if b == 0 {
        return Err(Error::InvalidArgument("B must be at least 1".into()));
    }
    let start = Instant::now();
    let o = q.orient_for_delta();
    let form = &o.form;
    let n = form.dim();
    let w = WeightDescriptor::wdag(n);
    let a1 = form.coeffs()[0] as f64;
    let x = a1.sqrt() * b as f64;
    let q_max = opts.q_max.unwrap_or_else(|| default_q_max(q, b));
    if q_max == 0 {
        return Err(Error::InvalidArgument("q_max must be positive".into()));
    }
    if q_max > opts.exp_cap {
        return Err(Error::BudgetExceeded {
            what: "exponential sums (modulus)",
            required: q_max as u128,
            budget: opts.exp_cap as u128,
        });
    }
    let norm = 1.0 / (x * x);
    let qn = |m: u64| (m as f64).powi(n as i32);

    let exact = counting::count_weighted(form, b, &w, &opts.count)?;

    let cset = canonical(opts.c_max, n);
    let sums: Vec<Vec<ExpSumValue>> = (0..cset.len())
        .into_par_iter()
        .map(|k| expsums::sq_all(form, &cset.vector(k), q_max, opts.exp_cap))
        .collect::<Result<_>>()?;

    let moduli: Vec<u64> = (1..=q_max).collect();
    let zero = iq_zero_many(form, b, &moduli, &w, &opts.integral)?;

    let mut ledger = Vec::new();
    let mut unresolved = Vec::new();
    let mut evals = 0u64;
    for m in 1..=q_max {
        let i0 = zero[(m - 1) as usize];
        let (s0, s0_err) = sum_value(&sums[0][m as usize]);
        evals += i0.evals;
        ledger.push(LedgerEntry {
            q: m,
            shell: 0,
            contribution: s0 * i0.re * norm / qn(m),
            abs_err: (s0.abs() * i0.abs_err + s0_err * i0.re.abs()) * norm / qn(m),
            nonzero_terms: (s0 != 0.0) as u64,
            resolved: true,
            evals: i0.evals,
        });
        if opts.c_max == 0 {
            continue;
        }
        let live = (1..cset.len()).any(|k| sums[k][m as usize].rounded != 0);
        let block: Option<Vec<IntegralValue>> = if !live || iq_vanishes(form, b, m, &w)? {
            Some(vec![IntegralValue::zero(); cset.len()])
        } else {
            let est = estimate_evals(form, b, m, &cset, &w, opts.integral.resolution)?;
            if est > ESTIMATE_SLACK * opts.integral.budget as f64 {
                None
            } else {
                match iq_block(form, b, m, &cset, &w, &opts.integral) {
                    Ok(v) => Some(v),
                    Err(Error::BudgetExceeded { .. }) => None,
                    Err(e) => return Err(e),
                }
            }
        };
        let block_evals = block.as_ref().map_or(0, |v| v.first().map_or(0, |x| x.evals));
        evals += block_evals;
        if block.is_none() {
            unresolved.push(m);
        }
        for shell in 1..=opts.c_max {
            let mut entry = LedgerEntry {
                q: m,
                shell,
                contribution: 0.0,
                abs_err: 0.0,
                nonzero_terms: 0,
                resolved: block.is_some(),
                evals: if shell == 1 { block_evals } else { 0 },
            };
            for k in 1..cset.len() {
                let c = cset.vector(k);
                if c.iter().map(|v| v.unsigned_abs()).max() != Some(shell) {
                    continue;
                }
                let (s, s_err) = sum_value(&sums[k][m as usize]);
                if s == 0.0 {
                    continue;
                }
                let tail_images = 1u64 << c[1..].iter().filter(|&&v| v != 0).count();
                let c1_images = if c[0] == 0 { 1 } else { 2 };
                entry.nonzero_terms += tail_images * c1_images;
                if let Some(vals) = &block {
                    let i = vals[k];
                    let mult = (tail_images * c1_images) as f64;
                    entry.contribution += mult * s * i.re * norm / qn(m);
                    entry.abs_err += mult * (s.abs() * i.abs_err + s_err * i.re.abs()) * norm / qn(m);
                }
            }
            ledger.push(entry);
        }
    }

    let reconstructed = ledger_total(&ledger);
    let abs_err = ledger.iter().map(|e| e.abs_err).sum();
    let mut shell_totals = vec![0.0; opts.c_max as usize + 1];
    for e in &ledger {
        shell_totals[e.shell as usize] += e.contribution;
    }
    let tail_abs = ledger
        .iter()
        .filter(|e| e.shell == opts.c_max)
        .map(|e| e.contribution.abs())
        .sum();
    let mt = main_term(q, b)?;
    Ok(ReconstructionReport {
        form: q.coeffs().to_vec(),
        oriented: form.coeffs().to_vec(),
        b,
        x,
        q_max,
        c_max: opts.c_max,
        reconstructed,
        abs_err,
        exact_weighted: exact.value,
        main_term: mt.value,
        rel_err_vs_exact: (reconstructed - exact.value).abs() / exact.value.abs(),
        shell_totals,
        tail_abs,
        c_x_measured: measured_c_x(x)?,
        complete: unresolved.is_empty(),
        unresolved,
        evals,
        seconds: start.elapsed().as_secs_f64(),
        ledger,
    })
}

/// Fixed-order sum of the ledger, (q, shell) ascending.
pub fn ledger_total(ledger: &[LedgerEntry]) -> f64 {
    ledger.iter().fold(0.0, |acc, e| acc + e.contribution)
}

#[derive(Debug, Clone, Serialize)]
pub struct MainTerm {
    pub oriented: Vec<i64>,
    pub b: u64,
    pub sigma_infinity: f64,
    pub singular_series: f64,
    pub singular_lower: f64,
    pub singular_upper: f64,
    pub value: f64,
}

/// σ_∞(Q)·𝔖·B^{n−2}, σ_∞ for w† on the oriented form.
pub fn main_term(q: &DiagonalForm, b: u64) -> Result<MainTerm> {
    check_delta_form(q)?;
    let o = q.orient_for_delta();
    let n = q.dim();
    let sig = sigma_infinity(&o.form, &WeightDescriptor::wdag(n), &IntegralOptions::default())?;
    let ss = singular(q)?;
    main_term_from(&o.form, b, sig.value, &ss)
}

fn singular(q: &DiagonalForm) -> Result<SingularSeries> {
    densities::singular_series(
        q,
        densities::DEFAULT_CUTOFF,
        densities::DEFAULT_BUDGET,
        densities::DEFAULT_L_TERMS,
    )
}

fn main_term_from(oriented: &DiagonalForm, b: u64, sigma: f64, ss: &SingularSeries) -> Result<MainTerm> {
    let scale = (b as f64).powi(oriented.dim() as i32 - 2);
    Ok(MainTerm {
        oriented: oriented.coeffs().to_vec(),
        b,
        sigma_infinity: sigma,
        singular_series: ss.value,
        singular_lower: ss.lower,
        singular_upper: ss.upper,
        value: sigma * ss.value * scale,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    Thm1,
    Thm2,
    Corollary,
    HbN2,
}

impl Theorem {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "thm1" => Ok(Theorem::Thm1),
            "thm2" => Ok(Theorem::Thm2),
            "corollary" => Ok(Theorem::Corollary),
            "hb_n2" | "hb-n2" => Ok(Theorem::HbN2),
            _ => Err(Error::InvalidArgument(format!("unknown envelope {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnvelopeValue {
    pub theorem: Theorem,
    pub value: f64,
    pub epsilon_used: f64,
}

/// Coefficients within a factor 4 of each other.
pub fn same_order(q: &DiagonalForm) -> bool {
    q.height() <= 4 * q.min_coeff()
}

/// Bound expressions with implied constant 1. `t` is B for thm1, the
/// corollary and hb_n2, and X for thm2.
pub fn envelope(q: &DiagonalForm, t: f64, which: Theorem, epsilon: f64) -> Result<EnvelopeValue> {
    if !(epsilon > 0.0) || !(t >= 1.0) {
        return Err(Error::InvalidArgument("need ε > 0 and B, X ≥ 1".into()));
    }
    let n = q.dim() as f64;
    let m = q.min_coeff() as f64;
    let h = q.height() as f64;
    let d = bigint_to_f64(&q.discriminant()).abs();
    let dn = q.delta_n() as f64;
    let low_exp = (n - 1.0 + dn) / 2.0 + epsilon;
    let de = d.powf(epsilon);
    let value = match which {
        Theorem::Thm1 => {
            if q.dim() < 4 {
                return Err(Error::Precondition("thm1 needs n ≥ 4".into()));
            }
            if q.dim() == 4 && q.disc_is_square() {
                return Err(Error::SquareDiscriminant);
            }
            let main = t.powf(n - 2.0) / (m * h).sqrt();
            let err = h.powf(2.0 * n + 3.0) / (m.powf(0.75 * n + 3.0) * d.sqrt()) * t.powf(low_exp);
            (main + err) * de
        }
        Theorem::Thm2 => {
            if q.dim() < 5 {
                return Err(Error::Precondition("thm2 needs n ≥ 5".into()));
            }
            let main = t.powf((n - 2.0) / 2.0) / d.sqrt();
            let err = h.powf(n / 2.0 + epsilon) * t.powf((n - 1.0 + dn) / 4.0 + epsilon);
            (main + err) * de
        }
        Theorem::Corollary => {
            if q.dim() < 4 {
                return Err(Error::Precondition("corollary needs n ≥ 4".into()));
            }
            if q.dim() == 4 && q.disc_is_square() {
                return Err(Error::SquareDiscriminant);
            }
            if !same_order(q) {
                return Err(Error::Precondition(
                    "corollary needs coefficients within a factor 4 of each other".into(),
                ));
            }
            let main = t.powf(n - 2.0) / d.powf(1.0 / n);
            let err = d.powf(0.75) * t.powf(low_exp);
            (main + err) * de
        }
        Theorem::HbN2 => {
            if q.dim() < 5 {
                return Err(Error::Precondition("hb_n2 needs n ≥ 5".into()));
            }
            t.powf(n - 2.0 + epsilon)
        }
    };
    Ok(EnvelopeValue {
        theorem: which,
        value,
        epsilon_used: epsilon,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub epsilon: f64,
    /// σ_∞ and 𝔖 columns.
    pub densities: bool,
    /// Permutation-dyadic majorant column.
    pub majorant: bool,
    pub count: CountOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            epsilon: DEFAULT_EPSILON,
            densities: true,
            majorant: true,
            count: CountOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepRow {
    pub form: Vec<i64>,
    pub n: usize,
    pub b: u64,
    pub count: Option<u64>,
    /// Energy bound X = B².
    pub x: u64,
    pub energy_count: Option<u64>,
    pub env_thm1: Option<f64>,
    pub ratio_thm1: Option<f64>,
    pub env_thm2: Option<f64>,
    pub ratio_thm2: Option<f64>,
    pub env_corollary: Option<f64>,
    pub ratio_corollary: Option<f64>,
    pub env_hb_n2: Option<f64>,
    pub ratio_hb_n2: Option<f64>,
    pub singular_series: Option<f64>,
    pub sigma_infinity: Option<f64>,
    /// Σ_{leading i} Σ_{j ≤ log₂B} N_{w†}(Q^{(i)}; ⌊B/2^j⌋).
    pub majorant_sum: Option<f64>,
    /// C with N(Q;B) = 1 + C·Σ_{σ∈S_n} Σ_j N_{w†}(Q^σ; B/2^j); None if the
    /// right side vanishes while N > 1.
    pub majorant_constant: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub epsilon: f64,
    pub rows: Vec<SweepRow>,
    pub max_ratio_thm1: Option<f64>,
    pub max_ratio_thm2: Option<f64>,
    pub max_majorant_constant: Option<f64>,
    pub failed_rows: usize,
}

fn fold_max(it: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    it.flatten().fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))))
}

/// N(Q;B), M(Q;B²), envelopes and their ratios, and optional density and
/// majorant columns for every form and B. Row failures are recorded, not raised.
pub fn sweep(forms: &[DiagonalForm], bs: &[u64], opts: &SweepOptions) -> SweepReport {
    let rows: Vec<SweepRow> = forms
        .par_iter()
        .flat_map_iter(|q| {
            let dens = if opts.densities { Some(form_densities(q)) } else { None };
            bs.iter()
                .map(|&b| {
                    let mut row = SweepRow {
                        form: q.coeffs().to_vec(),
                        n: q.dim(),
                        b,
                        x: b * b,
                        ..Default::default()
                    };
                    match &dens {
                        Some(Ok((s, ss))) => {
                            row.sigma_infinity = Some(*s);
                            row.singular_series = Some(*ss);
                        }
                        Some(Err(e)) => row.error = Some(e.to_string()),
                        None => {}
                    }
                    if let Err(e) = fill_row(q, b, opts, &mut row) {
                        row.error = Some(e.to_string());
                    }
                    row
                })
                .collect::<Vec<_>>()
        })
        .collect();
    SweepReport {
        epsilon: opts.epsilon,
        max_ratio_thm1: fold_max(rows.iter().map(|r| r.ratio_thm1)),
        max_ratio_thm2: fold_max(rows.iter().map(|r| r.ratio_thm2)),
        max_majorant_constant: fold_max(rows.iter().map(|r| r.majorant_constant)),
        failed_rows: rows.iter().filter(|r| r.error.is_some()).count(),
        rows,
    }
}

fn form_densities(q: &DiagonalForm) -> Result<(f64, f64)> {
    let o = q.orient_for_delta();
    let w = WeightDescriptor::wdag(q.dim());
    let s = sigma_infinity_to(&o.form, &w, &IntegralOptions::default(), SWEEP_SIGMA_TARGET)?;
    let ss = singular(q)?;
    Ok((s.value, ss.value))
}

fn fill_row(q: &DiagonalForm, b: u64, opts: &SweepOptions, row: &mut SweepRow) -> Result<()> {
    let nb = counting::count_box(q, b, &opts.count)?.count;
    row.count = Some(nb);
    let me = counting::count_energy(q, row.x, &opts.count)?.count;
    row.energy_count = Some(me);
    let bf = b as f64;
    let ratio = |num: u64, env: &Option<f64>| env.map(|e| num as f64 / e);
    row.env_thm1 = envelope(q, bf, Theorem::Thm1, opts.epsilon).ok().map(|e| e.value);
    row.ratio_thm1 = ratio(nb, &row.env_thm1);
    row.env_thm2 = envelope(q, row.x as f64, Theorem::Thm2, opts.epsilon).ok().map(|e| e.value);
    row.ratio_thm2 = ratio(me, &row.env_thm2);
    row.env_corollary = envelope(q, bf, Theorem::Corollary, opts.epsilon).ok().map(|e| e.value);
    row.ratio_corollary = ratio(nb, &row.env_corollary);
    row.env_hb_n2 = envelope(q, bf, Theorem::HbN2, opts.epsilon).ok().map(|e| e.value);
    row.ratio_hb_n2 = ratio(nb, &row.env_hb_n2);
    if opts.majorant {
        let s = majorant_sum(q, b, &opts.count)?;
        row.majorant_sum = Some(s);
        let perms: f64 = (1..q.dim()).map(|k| k as f64).product();
        row.majorant_constant = if nb <= 1 {
            Some(0.0)
        } else if s > 0.0 {
            Some((nb - 1) as f64 / (perms * s))
        } else {
            None
        };
    }
    Ok(())
}

/// Σ over the leading coordinate i and dyadic B_j = ⌊B/2^j⌋ ≥ 1 of
/// N_{w†}(Q^{(i)}; B_j), Q^{(i)} having Aᵢ moved to the front. The tail
/// order does not matter since w† is symmetric in x₂..xₙ.
pub fn majorant_sum(q: &DiagonalForm, b: u64, opts: &CountOptions) -> Result<f64> {
    let n = q.dim();
    let w = WeightDescriptor::wdag(n);
    let mut total = 0.0;
    for i in 0..n {
        let mut perm = vec![i];
        perm.extend((0..n).filter(|&k| k != i));
        let qi = q.permuted(&perm);
        let mut bj = b;
        while bj >= 1 {
            total += counting::count_weighted(&qi, bj, &w, opts)?.value;
            bj /= 2;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(v: &[i64]) -> DiagonalForm {
        DiagonalForm::new(v.to_vec()).unwrap()
    }

    #[test]
    fn envelope_examples() {
        let q = f(&[1, 1, 1, -1]);
        for b in [1.0, 7.0, 40.0] {
            let e = envelope(&q, b, Theorem::Thm1, 0.05).unwrap();
            let want = b * b + b.powf(1.55);
            assert!((e.value - want).abs() < 1e-12 * want);
        }
        let q5 = f(&[1, 1, 1, 1, -1]);
        let x: f64 = 100.0;
        let e = envelope(&q5, x, Theorem::Thm2, 0.05).unwrap();
        let want = x.powf(1.5) + x.powf(1.05);
        assert!((e.value - want).abs() < 1e-12 * want);
        assert!(envelope(&f(&[1, 1, 1, -100]), 10.0, Theorem::Corollary, 0.05).is_err());
        assert!(envelope(&f(&[1, 1, -1, -1]), 10.0, Theorem::Thm1, 0.05).is_err());
        assert!(envelope(&q, 10.0, Theorem::Thm2, 0.05).is_err());
        let hb = envelope(&q5, 10.0, Theorem::HbN2, 0.05).unwrap();
        assert!((hb.value - 10f64.powf(3.05)).abs() < 1e-9);
    }

    #[test]
    fn corollary_matches_thm1_shape_for_unit_forms() {
        // m = H = |Δ| = 1: both reduce to B^{n-2} + B^{(n-1+δ)/2+ε}.
        let q = f(&[1, -1, 1, -1, 1, -1]);
        for b in [2.0, 9.0] {
            let a = envelope(&q, b, Theorem::Thm1, 0.1).unwrap().value;
            let c = envelope(&q, b, Theorem::Corollary, 0.1).unwrap().value;
            assert!((a - c).abs() < 1e-12 * a);
            assert!((a - (b.powi(4) + b.powf(3.1))).abs() < 1e-9 * a);
        }
    }

    #[test]
    fn main_term_scales_like_b_to_the_n_minus_2() {
        let q = f(&[1, 1, 1, 1, -1]);
        let m1 = main_term(&q, 10).unwrap();
        let m2 = main_term(&q, 20).unwrap();
        assert!(m1.value > 0.0);
        assert_eq!(m2.value / m1.value, 8.0);
        assert_eq!(m1.oriented, vec![1, -1, -1, -1, -1]);
    }

    #[test]
    fn measured_c_x_near_one() {
        let c = measured_c_x(40.0).unwrap();
        assert!((c - 1.0).abs() < 1e-2, "{c}");
    }

    #[test]
    fn reconstruct_rejects_bad_forms() {
        let opts = ReconstructOptions::default();
        assert_eq!(
            reconstruct(&f(&[1, 1, -1, -1]), 5, &opts).unwrap_err(),
            Error::SquareDiscriminant
        );
        assert!(reconstruct(&f(&[1, 1, -1]), 5, &opts).is_err());
        assert!(reconstruct(&f(&[1, 1, 1, 1, 1, 1, -1]), 5, &opts).is_err());
    }

    #[test]
    fn zero_shell_uses_singular_partial_sums() {
        let q = f(&[1, 1, 1, -1]);
        let opts = ReconstructOptions {
            q_max: Some(12),
            c_max: 0,
            ..Default::default()
        };
        let r = reconstruct(&q, 6, &opts).unwrap();
        assert_eq!(r.ledger.len(), 12);
        // S_2(0) = 0 for this form, so q = 2 contributes nothing.
        assert_eq!(r.ledger[1].contribution, 0.0);
        assert_eq!(r.ledger[1].nonzero_terms, 0);
        assert_eq!(r.reconstructed, ledger_total(&r.ledger));
        assert!(r.complete);
    }

    #[test]
    fn sweep_empty_and_small() {
        let r = sweep(&[], &[4, 8], &SweepOptions::default());
        assert!(r.rows.is_empty());
        assert_eq!(r.max_ratio_thm1, None);
        let forms = vec![f(&[1, 2, -3, 1, -1]), f(&[1, 1, 1, -2])];
        let r = sweep(&forms, &[4, 8], &SweepOptions::default());
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.failed_rows, 0, "{:?}", r.rows);
        for row in &r.rows {
            assert!(row.ratio_thm1.unwrap().is_finite());
            assert_eq!(row.ratio_thm2.is_some(), row.n >= 5);
            assert!(row.sigma_infinity.unwrap() >= 0.0);
        }
    }
}
