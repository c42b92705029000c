//! The acceptance suite: thirteen criteria, each returning a verdict, a
//! one-line detail and machine-readable metrics. Tolerances live here as
//! constants.

use std::time::Instant;

use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analytic::integral::{iq_zero_many, sigma_infinity, sigma_infinity_to, IntegralOptions};
use crate::analytic::kernel::h_eval;
use crate::analytic::weights::{omega_eps, WeightDescriptor};
use crate::corpus::{generate_corpus, Constraints, CorpusSpec};
use crate::counting::{self, CountOptions, Method};
use crate::deltamethod::{self, ReconstructOptions, SweepOptions};
use crate::densities;
use crate::error::Result;
use crate::expsums;
use crate::qform::{bigint_to_f64, DiagonalForm};
use crate::{arith, Error};

pub const CRITERIA: u32 = 13;
pub const REFERENCE_FORM: [i64; 5] = [1, 1, 1, 1, -1];

pub const C1_SECONDS: f64 = 60.0;
pub const C2_SECONDS: f64 = 300.0;
pub const C2_TOL: f64 = 1e-6;
pub const C4_TOL: f64 = 1e-6;
pub const C6_MAX_EXPONENT: f64 = 0.25;
pub const C7_SAMPLES: usize = 100_000;
pub const C7_OMEGA_TOL: f64 = 1e-10;
pub const C8_Q1_TOL: f64 = 0.05;
pub const C8_SECONDS: f64 = 600.0;
pub const C9_STABILITY: f64 = 0.02;
/// σ_∞ relative target for the corpus in criterion 9.
pub const C9_SIGMA_TARGET: f64 = 1e-4;
pub const C10_REL_TOL: f64 = 0.10;
pub const C10_TAIL_FACTOR: f64 = 3.0;
/// 15 minutes on 8 cores.
pub const C10_CORE_SECONDS: f64 = 15.0 * 60.0 * 8.0;
pub const C11_BAND: (f64, f64) = (0.8, 1.2);
pub const C12_SLACK_N5: f64 = 0.3;
pub const C12_MAX_N4: f64 = 3.8;
pub const C13_BASELINE_TOL: f64 = 0.05;

const BASELINE: &str = include_str!("../data/envelope_baseline.json");

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
    pub metrics: Value,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "{} [{:>2}] {}: {} ({:.1} s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail,
            self.seconds
        )
    }
}

pub fn name(id: u32) -> &'static str {
    match id {
        1 => "counting oracle equivalence",
        2 => "exponential-sum triple agreement",
        3 => "density / exponential-sum identity",
        4 => "local density anchor",
        5 => "N_k(p) bound at odd p | Δ",
        6 => "singular series growth",
        7 => "h-kernel support and ω saturation",
        8 => "I_q(0) against the singular integral",
        9 => "σ_∞ boundedness",
        10 => "delta-method reconstruction",
        11 => "main-term convergence",
        12 => "exponential-sum growth exponents",
        13 => "envelope boundedness",
        _ => "unknown",
    }
}

/// Runs one criterion; an internal error is a failure with the error as detail.
pub fn run(id: u32) -> CriterionResult {
    let start = Instant::now();
    let out: Result<(bool, String, Value)> = match id {
        1 => c1(),
        2 => c2(),
        3 => c3(),
        4 => c4(),
        5 => c5(),
        6 => c6(),
        7 => c7(),
        8 => c8(),
        9 => c9(),
        10 => c10(),
        11 => c11(),
        12 => c12(),
        13 => c13(),
        _ => Err(Error::InvalidArgument(format!("no criterion {id}"))),
    };
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail, metrics) = out.unwrap_or_else(|e| (false, format!("error: {e}"), Value::Null));
    CriterionResult {
        id,
        name: name(id),
        passed,
        detail,
        seconds,
        metrics,
    }
}

pub fn run_all(ids: &[u32]) -> Vec<CriterionResult> {
    ids.iter().map(|&i| run(i)).collect()
}

fn core_seconds(wall: f64) -> f64 {
    wall * rayon::current_num_threads() as f64
}

fn corpus(seed: u64, n: &[usize], range: (u64, u64), count: usize, c: Constraints) -> Result<Vec<DiagonalForm>> {
    generate_corpus(&CorpusSpec {
        seed,
        n_values: n.to_vec(),
        coeff_range: range,
        count,
        constraints: c,
    })
}

fn nonsquare() -> Constraints {
    Constraints {
        nonsquare_disc: true,
        ..Default::default()
    }
}

fn small_corpus() -> Result<Vec<DiagonalForm>> {
    corpus(0xC0FFEE, &[4, 5], (1, 10), 50, Constraints::default())
}

fn c1() -> Result<(bool, String, Value)> {
    let start = Instant::now();
    let opts = CountOptions {
        method: Method::Mitm,
        ..Default::default()
    };
    let mut mismatches = Vec::new();
    let mut checks = 0;
    for q in small_corpus()? {
        for b in 1..=12u64 {
            let oracle = counting::enumerate_oracle(&q, b, u128::MAX)?.len() as u64;
            let mitm = counting::count_box(&q, b, &opts)?.count;
            checks += 1;
            if oracle != mitm {
                mismatches.push(json!({"form": q.coeffs(), "b": b, "oracle": oracle, "mitm": mitm}));
            }
        }
    }
    let a1 = counting::count_box(&DiagonalForm::new(vec![1, 1, -1, -1])?, 1, &opts)?.count;
    let a2 = counting::count_box(&DiagonalForm::new(vec![1, 1, 1, -1])?, 1, &opts)?.count;
    let secs = start.elapsed().as_secs_f64();
    let passed = mismatches.is_empty() && a1 == 33 && a2 == 13 && secs <= C1_SECONDS;
    Ok((
        passed,
        format!(
            "{checks} (form, B) pairs, {} mismatches, anchors {a1}/33 and {a2}/13, {secs:.1} s of {C1_SECONDS} s",
            mismatches.len()
        ),
        json!({"checks": checks, "mismatches": mismatches, "anchors": [a1, a2], "seconds": secs}),
    ))
}

fn c2() -> Result<(bool, String, Value)> {
    let start = Instant::now();
    let forms = corpus(0xE5A, &[4], (1, 12), 20, Constraints::default())?;
    let cap = 2000;
    let mut rng = SplitMix64::seed_from_u64(0xE5A);
    let mut max_diff: f64 = 0.0;
    let mut max_closed: f64 = 0.0;
    let mut max_frac: f64 = 0.0;
    let (mut zero_branch, mut unit_branch, mut compared) = (0u64, 0u64, 0u64);
    for q in &forms {
        let n = q.dim();
        let zero = vec![0i64; n];
        let mut e1 = zero.clone();
        e1[0] = 1;
        for c in [&zero, &e1] {
            for m in 1..=400u64 {
                let d = expsums::sq_direct(q, m, c, cap)?;
                let mu = expsums::sq_multiplicative(q, m, c, cap)?;
                max_diff = max_diff.max((d.value - mu.value).abs()).max(d.imag.abs());
                max_frac = max_frac.max((d.value - d.rounded as f64).abs());
                compared += 1;
            }
            for p in arith::primes_up_to(101).into_iter().filter(|&p| p > 2) {
                let Ok(closed) = expsums::sp_closed(q, p, c) else {
                    continue;
                };
                let d = expsums::sq_direct(q, p, c, cap)?;
                max_closed = max_closed.max((d.value - closed as f64).abs());
                let dual = q.q_inverse_scaled(c)? % num_bigint::BigInt::from(p);
                if dual == 0.into() {
                    zero_branch += 1;
                } else {
                    unit_branch += 1;
                }
            }
        }
        for _ in 0..10 {
            let m = rng.random_range(401..=2000u64);
            for c in [&zero, &e1] {
                let d = expsums::sq_direct(q, m, c, cap)?;
                max_frac = max_frac.max((d.value - d.rounded as f64).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let passed = max_diff < C2_TOL
        && max_closed < C2_TOL
        && max_frac < C2_TOL
        && zero_branch > 0
        && unit_branch > 0
        && secs <= C2_SECONDS;
    Ok((
        passed,
        format!(
            "direct vs multiplicative {max_diff:.1e}, vs closed form {max_closed:.1e}, integrality {max_frac:.1e}; branches {zero_branch}/{unit_branch}; {secs:.1} s"
        ),
        json!({"compared": compared, "max_diff": max_diff, "max_closed_diff": max_closed,
               "max_fraction": max_frac, "zero_branch": zero_branch, "unit_branch": unit_branch, "seconds": secs}),
    ))
}

fn c3() -> Result<(bool, String, Value)> {
    let budget = 1_000_000;
    let mut checks = 0;
    let mut failures = Vec::new();
    for q in small_corpus()? {
        for p in [3u64, 5, 7] {
            let mut k = 1u32;
            while p.pow(2 * k) <= budget {
                let r = densities::partial_identity(&q, p, k, budget, expsums::DEFAULT_CAP)?;
                checks += 1;
                if !r.holds {
                    failures.push(json!({"form": q.coeffs(), "p": p, "k": k}));
                }
                k += 1;
            }
        }
    }
    Ok((
        failures.is_empty(),
        format!("{checks} exact comparisons, {} failures", failures.len()),
        json!({"checks": checks, "failures": failures}),
    ))
}

fn c4() -> Result<(bool, String, Value)> {
    let q = DiagonalForm::new(vec![1, 1, 1, -1])?;
    let d = densities::sigma_p(&q, 3, densities::DEFAULT_BUDGET)?;
    let want: [BigRational; 2] = [
        BigRational::new(7.into(), 9.into()),
        BigRational::new(23.into(), 27.into()),
    ];
    let partials_ok = d.partials.len() >= 2 && d.partials[..2] == want;
    let err = (d.value - 5.0 / 6.0).abs();
    let ratio_ok = d.tail_ratio.is_some_and(|r| (r + 1.0 / 3.0).abs() < 1e-9);
    Ok((
        err < C4_TOL && partials_ok && ratio_ok,
        format!(
            "σ_3 = {:.12} (|Δ| = {err:.1e}), partials 7/9, 23/27: {partials_ok}, ratio {:?}",
            d.value, d.tail_ratio
        ),
        json!({"value": d.value, "error": err, "partials": d.partials.iter().map(|r| r.to_string()).collect::<Vec<_>>(),
               "tail_ratio": d.tail_ratio, "method": d.method}),
    ))
}

fn c5() -> Result<(bool, String, Value)> {
    let mut entries = 0;
    let mut violations = 0;
    let mut skipped = 0;
    for q in small_corpus()? {
        let r = densities::stag_check(&q, densities::DEFAULT_BUDGET)?;
        entries += r.entries.len();
        violations += r.violations;
        skipped += r.skipped.len();
    }
    Ok((
        violations == 0 && entries > 0,
        format!("{entries} (p, k) checks, {violations} violations, {skipped} primes beyond budget"),
        json!({"entries": entries, "violations": violations, "skipped": skipped}),
    ))
}

fn c6() -> Result<(bool, String, Value)> {
    let mut forms = corpus(0x6A, &[4], (1, 31), 50, nonsquare())?;
    forms.extend(corpus(0x6B, &[5], (1, 15), 50, Constraints::default())?);
    let rows: Vec<(Vec<i64>, f64, f64)> = forms
        .iter()
        .map(|q| {
            let s = densities::singular_series(
                q,
                densities::DEFAULT_CUTOFF,
                densities::DEFAULT_BUDGET,
                densities::DEFAULT_L_TERMS,
            )?;
            Ok((q.coeffs().to_vec(), s.value, bigint_to_f64(&q.discriminant()).abs()))
        })
        .collect::<Result<_>>()?;
    // 𝔖 = 0 means a local obstruction; such forms satisfy the bound trivially.
    let obstructed = rows.iter().filter(|r| r.1 == 0.0).count();
    let mut exps: Vec<f64> = rows
        .iter()
        .filter(|r| r.2 > 1.0 && r.1 != 0.0)
        .map(|r| r.1.ln() / r.2.ln())
        .collect();
    let finite = exps.iter().all(|e| e.is_finite()) && rows.iter().all(|r| r.1 >= 0.0);
    exps.sort_by(f64::total_cmp);
    let max = *exps.last().unwrap_or(&f64::NAN);
    let max_disc = rows.iter().map(|r| r.2).fold(0.0, f64::max);
    let q = |t: f64| exps[((exps.len() - 1) as f64 * t).round() as usize];
    Ok((
        finite && max <= C6_MAX_EXPONENT,
        format!(
            "max log𝔖/log|Δ| = {max:.4} (min {:.4}, median {:.4}, p90 {:.4}) over {} forms, {obstructed} with 𝔖 = 0, |Δ| ≤ {max_disc}",
            q(0.0),
            q(0.5),
            q(0.9),
            exps.len()
        ),
        json!({"max": max, "min": q(0.0), "median": q(0.5), "p90": q(0.9), "max_disc": max_disc, "obstructed": obstructed,
               "rows": rows.iter().map(|r| json!({"form": r.0, "singular_series": r.1, "abs_disc": r.2})).collect::<Vec<_>>()}),
    ))
}

fn c7() -> Result<(bool, String, Value)> {
    let mut rng = SplitMix64::seed_from_u64(7);
    let mut nonzero = 0;
    for i in 0..C7_SAMPLES {
        let y: f64 = rng.random_range(-50.0..50.0);
        let edge = 1f64.max(2.0 * y.abs());
        // Half the samples hug the edge, half spread out.
        let x = if i % 2 == 0 {
            edge * (1.0 + rng.random_range(1e-12..1e-3))
        } else {
            edge * rng.random_range(1.0..10.0) + f64::MIN_POSITIVE
        };
        if x <= edge {
            continue;
        }
        if h_eval(x, y)? != 0.0 {
            nonzero += 1;
        }
    }
    let mut worst: f64 = 0.0;
    for _ in 0..C7_SAMPLES / 10 {
        let eps: f64 = rng.random_range(1e-3..10.0);
        let x = 2.0 * eps + rng.random_range(0.0..20.0);
        worst = worst.max((omega_eps(eps, x) - 1.0).abs());
    }
    Ok((
        nonzero == 0 && worst <= C7_OMEGA_TOL,
        format!("{nonzero} nonzero h values in {C7_SAMPLES} samples; max |ω_ε − 1| beyond 2ε = {worst:.1e}"),
        json!({"nonzero": nonzero, "samples": C7_SAMPLES, "omega_max_dev": worst}),
    ))
}

fn reference() -> DiagonalForm {
    DiagonalForm::new(REFERENCE_FORM.to_vec()).expect("reference form")
}

fn c8() -> Result<(bool, String, Value)> {
    let start = Instant::now();
    let o = reference().orient_for_delta();
    let n = o.form.dim();
    let w = WeightDescriptor::wdag(n);
    let opts = IntegralOptions::default();
    let sig = sigma_infinity(&o.form, &w, &opts)?;
    let b = 20u64;
    let moduli = [1u64, 2, 4, 8];
    let vals = iq_zero_many(&o.form, b, &moduli, &w, &opts)?;
    let a1 = o.form.coeffs()[0] as f64;
    let scale = a1 * sig.value * (b as f64).powi(n as i32);
    let dev: Vec<f64> = vals.iter().map(|v| (v.re / scale - 1.0).abs()).collect();
    let errs: Vec<f64> = vals.iter().map(|v| v.abs_err / scale).collect();
    // Decreasing as q/X shrinks: dev(8) > dev(4) > dev(2) > dev(1).
    let monotone = dev.windows(2).all(|w| w[0] < w[1]);
    let secs = start.elapsed().as_secs_f64();
    let passed = monotone && dev[0] < C8_Q1_TOL && secs <= C8_SECONDS;
    Ok((
        passed,
        format!(
            "deviations at q = 1, 2, 4, 8: {:.4}, {:.4}, {:.4}, {:.4}; monotone {monotone}; q=1 needs < {C8_Q1_TOL}",
            dev[0], dev[1], dev[2], dev[3]
        ),
        json!({"oriented": o.form.coeffs(), "sigma_infinity": sig.value, "b": b, "q": moduli,
               "i_q0": vals.iter().map(|v| v.re).collect::<Vec<_>>(), "deviation": dev,
               "deviation_err": errs, "monotone": monotone, "seconds": secs}),
    ))
}

fn c9() -> Result<(bool, String, Value)> {
    let forms = corpus(0x9, &[4, 5], (1, 10), 12, nonsquare())?;
    let mut rows = Vec::new();
    let mut max: f64 = 0.0;
    let mut worst_rel: f64 = 0.0;
    let mut ok = true;
    for q in &forms {
        let o = q.orient_for_delta();
        let w = WeightDescriptor::wdag(q.dim());
        let scale = ((o.form.coeffs()[0] as f64) * q.height() as f64).sqrt();
        let mut vals = Vec::new();
        for res in [1.0, 2.0] {
            let opts = IntegralOptions {
                resolution: res,
                ..Default::default()
            };
            vals.push(sigma_infinity_to(&o.form, &w, &opts, C9_SIGMA_TARGET).map(|s| s.value * scale));
        }
        match (&vals[0], &vals[1]) {
            (Ok(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                let rel = if a.max(*b) > 0.0 { (a - b).abs() / a.max(*b) } else { 0.0 };
                worst_rel = worst_rel.max(rel);
                max = max.max(a.max(*b));
                rows.push(json!({"form": q.coeffs(), "oriented": o.form.coeffs(), "value": a, "value_res2": b, "rel": rel}));
            }
            _ => {
                ok = false;
                rows.push(json!({"form": q.coeffs(), "error": format!("{:?} / {:?}", vals[0], vals[1])}));
            }
        }
    }
    Ok((
        ok && worst_rel <= C9_STABILITY,
        format!(
            "max σ_∞(A₁H)^{{1/2}} = {max:.6} over {} forms; worst resolution change {worst_rel:.1e} (limit {C9_STABILITY})",
            forms.len()
        ),
        json!({"max": max, "worst_rel_change": worst_rel, "rows": rows}),
    ))
}

fn c10() -> Result<(bool, String, Value)> {
    let r = deltamethod::reconstruct(&reference(), 40, &ReconstructOptions::default())?;
    let gap = (r.reconstructed - r.exact_weighted).abs();
    let core = core_seconds(r.seconds);
    let rel_ok = r.rel_err_vs_exact <= C10_REL_TOL;
    let tail_ok = r.tail_abs <= C10_TAIL_FACTOR * gap;
    let passed = r.complete && rel_ok && tail_ok && core <= C10_CORE_SECONDS;
    let detail = format!(
        "q_max {} c_max {}: reconstructed {:.6} vs N_w† {:.6} (rel {:.3}); tail {:.3e} vs gap {:.3e}; {} of {} c≠0 blocks unresolved{}; {core:.0} core-s",
        r.q_max,
        r.c_max,
        r.reconstructed,
        r.exact_weighted,
        r.rel_err_vs_exact,
        r.tail_abs,
        gap,
        r.unresolved.len(),
        r.q_max,
        match (r.unresolved.first(), r.unresolved.last()) {
            (Some(a), Some(b)) => format!(" (q {a}..={b})"),
            _ => String::new(),
        }
    );
    let metrics = serde_json::to_value(&r).map_err(|e| Error::Io(e.to_string()))?;
    Ok((passed, detail, metrics))
}

fn c11() -> Result<(bool, String, Value)> {
    let q = reference();
    let o = q.orient_for_delta();
    let w = WeightDescriptor::wdag(q.dim());
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    for b in [40u64, 80] {
        let exact = counting::count_weighted(&o.form, b, &w, &CountOptions::default())?;
        let mt = deltamethod::main_term(&q, b)?;
        let ratio = exact.value / mt.value;
        ratios.push(ratio);
        rows.push(json!({"b": b, "weighted_count": exact.value, "main_term": mt.value,
                         "sigma_infinity": mt.sigma_infinity, "singular_series": mt.singular_series, "ratio": ratio}));
    }
    let in_band = ratios[1] >= C11_BAND.0 && ratios[1] <= C11_BAND.1;
    let closer = (ratios[1] - 1.0).abs() < (ratios[0] - 1.0).abs();
    Ok((
        in_band && closer,
        format!("N_w†/(σ_∞𝔖B³) = {:.4} at B=40, {:.4} at B=80", ratios[0], ratios[1]),
        json!({"rows": rows}),
    ))
}

fn growth_slope(q: &DiagonalForm, c: &[i64]) -> Result<f64> {
    let ys: Vec<u64> = (6..=11).map(|k| 1u64 << k).collect();
    let all = expsums::sq_all(q, c, 2048, expsums::DEFAULT_CAP)?;
    let samples: Vec<(u64, f64)> = ys.iter().map(|&y| (y, expsums::partial_from(&all, y).abs_sum)).collect();
    Ok(expsums::growth_fit(&samples))
}

fn c12() -> Result<(bool, String, Value)> {
    let n5 = corpus(0x12, &[5], (1, 10), 6, Constraints::default())?;
    let n4 = corpus(0x13, &[4], (1, 10), 6, nonsquare())?;
    let mut rows = Vec::new();
    let mut max5: f64 = f64::NEG_INFINITY;
    let mut max4: f64 = f64::NEG_INFINITY;
    for q in &n5 {
        let s = growth_slope(q, &[0; 5])?;
        max5 = max5.max(s);
        rows.push(json!({"form": q.coeffs(), "c": [0, 0, 0, 0, 0], "slope": s}));
    }
    for q in &n4 {
        let c = [1i64, 0, 0, 0];
        debug_assert!(q.q_inverse_scaled(&c)? != 0.into());
        let s = growth_slope(q, &c)?;
        max4 = max4.max(s);
        rows.push(json!({"form": q.coeffs(), "c": c, "slope": s}));
    }
    // n = 5 is odd, so δ_n = 0 and the exponent is (n + 3)/2 = 4.
    let lim5 = (5.0 + 3.0 + crate::qform::delta_n(5) as f64) / 2.0 + C12_SLACK_N5;
    Ok((
        max5 <= lim5 && max4 <= C12_MAX_N4,
        format!("max slope n=5: {max5:.3} (limit {lim5}); n=4 with c = e₁: {max4:.3} (limit {C12_MAX_N4})"),
        json!({"max_n5": max5, "limit_n5": lim5, "max_n4": max4, "limit_n4": C12_MAX_N4, "rows": rows}),
    ))
}

pub fn c13_sweep() -> Result<deltamethod::SweepReport> {
    let mut forms = corpus(0x130, &[4], (1, 10), 10, nonsquare())?;
    forms.extend(corpus(0x131, &[5], (1, 10), 10, Constraints::default())?);
    let opts = SweepOptions {
        densities: false,
        majorant: false,
        ..Default::default()
    };
    Ok(deltamethod::sweep(&forms, &[8, 16, 32, 64], &opts))
}

fn c13() -> Result<(bool, String, Value)> {
    let r = c13_sweep()?;
    let base: Value = serde_json::from_str(BASELINE).map_err(|e| Error::Io(e.to_string()))?;
    let b1 = base["max_ratio_thm1"].as_f64().unwrap_or(f64::NAN);
    let b2 = base["max_ratio_thm2"].as_f64().unwrap_or(f64::NAN);
    let m1 = r.max_ratio_thm1.unwrap_or(f64::NAN);
    let m2 = r.max_ratio_thm2.unwrap_or(f64::NAN);
    let within = |m: f64, b: f64| m.is_finite() && (m - b).abs() <= C13_BASELINE_TOL * b;
    let passed = r.failed_rows == 0 && within(m1, b1) && within(m2, b2);
    Ok((
        passed,
        format!(
            "max N/env(thm1) = {m1:.6} (baseline {b1:.6}), max M/env(thm2) = {m2:.6} (baseline {b2:.6}), {} rows, {} failed",
            r.rows.len(),
            r.failed_rows
        ),
        json!({"max_ratio_thm1": m1, "max_ratio_thm2": m2, "baseline": base, "rows": r.rows.len(), "failed_rows": r.failed_rows}),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_criteria_pass() {
        for id in [3, 4, 5, 7] {
            let r = run(id);
            assert!(r.passed, "{}", r.line());
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run(99);
        assert!(!r.passed);
        assert!(r.line().starts_with("FAIL [99]"));
    }
}
