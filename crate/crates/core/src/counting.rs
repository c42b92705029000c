//! Exact counts of integer zeros of a diagonal form.

use std::time::Instant;

use serde::Serialize;

use crate::analytic::weights::WeightDescriptor;
use crate::arith;
use crate::error::{Error, Result};
use crate::qform::DiagonalForm;
use crate::summation::NeumaierSum;

pub const DEFAULT_BUDGET_BYTES: u64 = 1 << 30;
pub const DEFAULT_BRUTE_CAP: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Auto,
    Brute,
    Mitm,
}

#[derive(Debug, Clone, Copy)]
pub struct CountOptions {
    pub method: Method,
    pub budget_bytes: u64,
    pub brute_cap: u128,
}

impl Default for CountOptions {
    fn default() -> Self {
        let budget_bytes = std::env::var("QDL_BUDGET_BYTES")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(DEFAULT_BUDGET_BYTES);
        CountOptions {
            method: Method::Auto,
            budget_bytes,
            brute_cap: DEFAULT_BRUTE_CAP,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CountResult {
    pub count: u64,
    pub bound: u64,
    pub method: Method,
    pub seconds: f64,
}

/// N(Q; B): zeros with |x|_∞ ≤ B.
pub fn count_box(q: &DiagonalForm, b: u64, opts: &CountOptions) -> Result<CountResult> {
    if b == 0 {
        return Err(Error::InvalidArgument("B must be at least 1".into()));
    }
    let ranges = vec![b; q.dim()];
    count_ranges(q, &ranges, b, opts)
}

/// M(Q; X): zeros with max |A_i x_i^2| ≤ X.
pub fn count_energy(q: &DiagonalForm, x: u64, opts: &CountOptions) -> Result<CountResult> {
    if x == 0 {
        return Err(Error::InvalidArgument("X must be at least 1".into()));
    }
    let ranges: Vec<u64> = q
        .coeffs()
        .iter()
        .map(|a| arith::isqrt(x / a.unsigned_abs()))
        .collect();
    count_ranges(q, &ranges, x, opts)
}

/// Zeros with |x_i| ≤ ranges[i].
pub fn count_ranges(
    q: &DiagonalForm,
    ranges: &[u64],
    bound: u64,
    opts: &CountOptions,
) -> Result<CountResult> {
    check_magnitude(q, ranges)?;
    let start = Instant::now();
    let points: u128 = ranges.iter().map(|&r| 2 * r as u128 + 1).product();
    let method = match opts.method {
        Method::Auto if points <= 1_000_000 => Method::Brute,
        Method::Auto => Method::Mitm,
        m => m,
    };
    let count = match method {
        Method::Brute => {
            if points > opts.brute_cap {
                return Err(Error::BudgetExceeded {
                    what: "brute-force enumeration (points)",
                    required: points,
                    budget: opts.brute_cap,
                });
            }
            brute(q.coeffs(), ranges)
        }
        _ => mitm(q.coeffs(), ranges, opts.budget_bytes)?,
    };
    Ok(CountResult {
        count,
        bound,
        method,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn check_magnitude(q: &DiagonalForm, ranges: &[u64]) -> Result<()> {
    let mut total: u128 = 0;
    for (&a, &r) in q.coeffs().iter().zip(ranges) {
        total += a.unsigned_abs() as u128 * (r as u128) * (r as u128);
    }
    if total >= 1u128 << 62 {
        return Err(Error::InvalidArgument(format!(
            "Σ|A_i| R_i^2 = {total} does not fit the 64-bit kernels"
        )));
    }
    Ok(())
}

fn brute(a: &[i64], ranges: &[u64]) -> u64 {
    let n = a.len();
    let mut x: Vec<i64> = ranges.iter().map(|&r| -(r as i64)).collect();
    let mut count = 0u64;
    loop {
        let v: i64 = a.iter().zip(&x).map(|(&ai, &xi)| ai * xi * xi).sum();
        if v == 0 {
            count += 1;
        }
        let mut k = n;
        loop {
            if k == 0 {
                return count;
            }
            k -= 1;
            if x[k] < ranges[k] as i64 {
                x[k] += 1;
                break;
            }
            x[k] = -(ranges[k] as i64);
        }
    }
}

/// Splits axes into two halves with balanced Σ log(range).
fn split_axes(ranges: &[u64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..ranges.len()).collect();
    order.sort_by(|&i, &j| ranges[j].cmp(&ranges[i]).then(i.cmp(&j)));
    let (mut left, mut right) = (Vec::new(), Vec::new());
    let (mut wl, mut wr) = (0.0f64, 0.0f64);
    for i in order {
        let w = ((ranges[i] + 1) as f64).ln();
        if wl <= wr {
            left.push(i);
            wl += w;
        } else {
            right.push(i);
            wr += w;
        }
    }
    left.sort_unstable();
    right.sort_unstable();
    (left, right)
}

/// Sorted (value, multiplicity) table of Σ_{i∈axes} A_i x_i^2, |x_i| ≤ R_i.
fn half_table(a: &[i64], ranges: &[u64], axes: &[usize]) -> Vec<(i64, u64)> {
    let mut table: Vec<(i64, u64)> = vec![(0, 1)];
    for &i in axes {
        let r = ranges[i] as i64;
        let mut next = Vec::with_capacity(table.len() * (r as usize + 1));
        for &(v, m) in &table {
            next.push((v, m));
            for x in 1..=r {
                next.push((v + a[i] * x * x, 2 * m));
            }
        }
        table = next;
    }
    compress(table)
}

fn compress(mut t: Vec<(i64, u64)>) -> Vec<(i64, u64)> {
    t.sort_unstable_by_key(|e| e.0);
    let mut out: Vec<(i64, u64)> = Vec::with_capacity(t.len());
    for (v, m) in t {
        match out.last_mut() {
            Some(last) if last.0 == v => last.1 += m,
            _ => out.push((v, m)),
        }
    }
    out
}

fn table_entries(ranges: &[u64], axes: &[usize]) -> u128 {
    axes.iter().map(|&i| ranges[i] as u128 + 1).product()
}

fn mitm(a: &[i64], ranges: &[u64], budget: u64) -> Result<u64> {
    let (left, right) = split_axes(ranges);
    let required = 16 * (table_entries(ranges, &left) + table_entries(ranges, &right));
    if required > budget as u128 {
        return Err(Error::BudgetExceeded {
            what: "meet-in-the-middle tables (bytes)",
            required,
            budget: budget as u128,
        });
    }
    let lt = half_table(a, ranges, &left);
    let mut rt = half_table(a, ranges, &right);
    for e in rt.iter_mut() {
        e.0 = -e.0;
    }
    rt.reverse();
    Ok(merge_count(&lt, &rt))
}

/// Σ m_l m_r over equal keys of two ascending tables.
fn merge_count(l: &[(i64, u64)], r: &[(i64, u64)]) -> u64 {
    let (mut i, mut j) = (0, 0);
    let mut total: u128 = 0;
    while i < l.len() && j < r.len() {
        match l[i].0.cmp(&r[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                total += l[i].1 as u128 * r[j].1 as u128;
                i += 1;
                j += 1;
            }
        }
    }
    u64::try_from(total).expect("count fits in 64 bits")
}

/// Primitive zeros, by Möbius inversion over N(Q; ⌊B/d⌋) − 1.
pub fn count_primitive(q: &DiagonalForm, b: u64, opts: &CountOptions) -> Result<CountResult> {
    if b == 0 {
        return Err(Error::InvalidArgument("B must be at least 1".into()));
    }
    let start = Instant::now();
    let mut total: i128 = 0;
    let mut cache: Vec<(u64, u64)> = Vec::new();
    let mut method = Method::Brute;
    for d in 1..=b {
        let mu = arith::mobius(d);
        if mu == 0 {
            continue;
        }
        let bd = b / d;
        let n = match cache.iter().find(|e| e.0 == bd) {
            Some(&(_, n)) => n,
            None => {
                let r = count_box(q, bd, opts)?;
                if r.method == Method::Mitm {
                    method = Method::Mitm;
                }
                cache.push((bd, r.count));
                r.count
            }
        };
        total += mu as i128 * (n as i128 - 1);
    }
    Ok(CountResult {
        count: u64::try_from(total).expect("nonnegative"),
        bound: b,
        method,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// All zeros in the box, lexicographically sorted.
pub fn enumerate_oracle(q: &DiagonalForm, b: u64, cap: u128) -> Result<Vec<Vec<i64>>> {
    let n = q.dim();
    let points = (2 * b as u128 + 1).checked_pow(n as u32).unwrap_or(u128::MAX);
    if points > cap {
        return Err(Error::BudgetExceeded {
            what: "oracle enumeration (points)",
            required: points,
            budget: cap,
        });
    }
    let a = q.coeffs();
    let bi = b as i64;
    let mut x = vec![-bi; n];
    let mut out = Vec::new();
    loop {
        let v: i64 = a.iter().zip(&x).map(|(&ai, &xi)| ai * xi * xi).sum();
        if v == 0 {
            out.push(x.clone());
        }
        let mut k = n;
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            if x[k] < bi {
                x[k] += 1;
                break;
            }
            x[k] = -bi;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedCount {
    pub value: f64,
    /// Bound from weight evaluation: n·2^{-40} per contributing term.
    pub abs_err: f64,
    pub terms: u64,
    pub seconds: f64,
}

/// N_w(Q; B) = Σ_{Q(x)=0} w(x/B) for weights that factor as
/// f(x_1) Π_{i≥2} g_i(x_i; x_1).
pub fn count_weighted(
    q: &DiagonalForm,
    b: u64,
    w: &WeightDescriptor,
    opts: &CountOptions,
) -> Result<WeightedCount> {
    if w.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: w.dim(),
        });
    }
    let (lo, hi) = w.x1_support()?;
    let start = Instant::now();
    let bf = b as f64;
    let a = q.coeffs();
    let n = q.dim();
    let x1_lo = (lo * bf).floor() as i64;
    let x1_hi = (hi * bf).ceil() as i64;
    let mut total = NeumaierSum::new();
    let mut terms = 0u64;
    for x1 in x1_lo..=x1_hi {
        let u1 = x1 as f64 / bf;
        let f1 = w.factor1(u1);
        if f1 == 0.0 {
            continue;
        }
        // Per-axis lists of (A_i x^2, Σ_{±x} g_i) for x ≥ 0.
        let mut axes: Vec<Vec<(i64, f64)>> = Vec::with_capacity(n - 1);
        for i in 1..n {
            let (tl, th) = w.tail_support(i, u1);
            let r = ((tl.abs().max(th.abs())) * bf).ceil() as i64;
            let mut list = Vec::new();
            for x in 0..=r {
                let mut g = w.tail_factor(i, x as f64 / bf, u1);
                if x > 0 {
                    g += w.tail_factor(i, -(x as f64) / bf, u1);
                }
                if g != 0.0 {
                    list.push((a[i] * x * x, g));
                }
            }
            axes.push(list);
        }
        let sizes: Vec<u64> = axes.iter().map(|l| l.len() as u64).collect();
        let (left, right) = split_axes(&sizes);
        let need = 24 * (table_entries(&sizes, &left) + table_entries(&sizes, &right));
        if need > opts.budget_bytes as u128 {
            return Err(Error::BudgetExceeded {
                what: "weighted meet-in-the-middle tables (bytes)",
                required: need,
                budget: opts.budget_bytes as u128,
            });
        }
        let lt = weighted_half(&axes, &left);
        let mut rt = weighted_half(&axes, &right);
        let target = -a[0] * x1 * x1;
        for e in rt.iter_mut() {
            e.0 = target - e.0;
        }
        rt.reverse();
        let (mut i, mut j) = (0, 0);
        let mut s = NeumaierSum::new();
        while i < lt.len() && j < rt.len() {
            match lt[i].0.cmp(&rt[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    s.add(lt[i].1 * rt[j].1);
                    terms += lt[i].2 * rt[j].2;
                    i += 1;
                    j += 1;
                }
            }
        }
        total.add(f1 * s.value());
    }
    Ok(WeightedCount {
        value: total.value(),
        abs_err: n as f64 * (2.0f64).powi(-40) * terms as f64,
        terms,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Sorted (value, Σ weight, #lattice points) table for a half of the tail axes.
fn weighted_half(axes: &[Vec<(i64, f64)>], which: &[usize]) -> Vec<(i64, f64, u64)> {
    let mut table: Vec<(i64, f64, u64)> = vec![(0, 1.0, 1)];
    for &k in which {
        let mut next = Vec::with_capacity(table.len() * axes[k].len());
        for &(v, g, c) in &table {
            for &(av, ag) in &axes[k] {
                let pts = if av == 0 { 1 } else { 2 };
                next.push((v + av, g * ag, c * pts));
            }
        }
        table = next;
    }
    table.sort_by(|x, y| x.0.cmp(&y.0));
    let mut out: Vec<(i64, f64, u64)> = Vec::with_capacity(table.len());
    let mut acc = NeumaierSum::new();
    for (v, g, c) in table {
        match out.last_mut() {
            Some(last) if last.0 == v => {
                acc.add(g);
                last.1 = acc.value();
                last.2 += c;
            }
            _ => {
                acc = NeumaierSum::new();
                acc.add(g);
                out.push((v, g, c));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::weights::wdag;
    use proptest::prelude::*;

    fn f(v: &[i64]) -> DiagonalForm {
        DiagonalForm::new(v.to_vec()).unwrap()
    }

    fn opts(m: Method) -> CountOptions {
        CountOptions {
            method: m,
            ..CountOptions::default()
        }
    }

    /// Independent oracle: plain nested scan without the odometer.
    fn scan(q: &DiagonalForm, ranges: &[i64]) -> u64 {
        fn rec(a: &[i64], r: &[i64], acc: i64) -> u64 {
            match a.split_first() {
                None => u64::from(acc == 0),
                Some((&ai, rest)) => (-r[0]..=r[0]).map(|x| rec(rest, &r[1..], acc + ai * x * x)).sum(),
            }
        }
        rec(q.coeffs(), ranges, 0)
    }

    #[test]
    fn box_examples() {
        for m in [Method::Brute, Method::Mitm] {
            assert_eq!(count_box(&f(&[1, 1, -1, -1]), 1, &opts(m)).unwrap().count, 33);
            assert_eq!(count_box(&f(&[1, 1, 1, -1]), 1, &opts(m)).unwrap().count, 13);
        }
        assert!(count_box(&f(&[1, 1, 1, -1]), 0, &opts(Method::Auto)).is_err());
    }

    #[test]
    fn energy_examples() {
        let o = opts(Method::Auto);
        assert_eq!(count_energy(&f(&[1, 1, -1, -1]), 1, &o).unwrap().count, 33);
        assert_eq!(count_energy(&f(&[4, 1, -1, -1]), 1, &o).unwrap().count, 9);
        assert_eq!(scan(&f(&[4, 1, -1, -1]), &[0, 1, 1, 1]), 9);
        assert!(count_energy(&f(&[1, 1, 1, -1]), 0, &o).is_err());
    }

    #[test]
    fn primitive_examples() {
        let o = opts(Method::Auto);
        assert_eq!(count_primitive(&f(&[1, 1, -1, -1]), 1, &o).unwrap().count, 32);
        assert_eq!(count_primitive(&f(&[1, 1, 1, -1]), 1, &o).unwrap().count, 12);
        for b in 1..=4 {
            let q = f(&[1, 1, 1, -1]);
            let direct = enumerate_oracle(&q, b, DEFAULT_BRUTE_CAP)
                .unwrap()
                .into_iter()
                .filter(|x| x.iter().fold(0u64, |g, &v| arith::gcd(g, v.unsigned_abs())) == 1)
                .count() as u64;
            assert_eq!(count_primitive(&q, b, &o).unwrap().count, direct);
        }
    }

    #[test]
    fn oracle_examples() {
        let v = enumerate_oracle(&f(&[1, 1, -1, -1]), 1, DEFAULT_BRUTE_CAP).unwrap();
        assert_eq!(v.len(), 33);
        assert_eq!(v[0], vec![-1, -1, -1, -1]);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
        assert!(v.contains(&vec![0, 0, 0, 0]));
        assert_eq!(enumerate_oracle(&f(&[1, 1, 1, -1]), 1, DEFAULT_BRUTE_CAP).unwrap().len(), 13);
        assert!(enumerate_oracle(&f(&[1, 1, 1, -1]), 100, 1000).is_err());
    }

    #[test]
    fn budget_is_reported() {
        let o = CountOptions {
            method: Method::Mitm,
            budget_bytes: 100,
            brute_cap: 10,
        };
        match count_box(&f(&[1, 1, -1, -1]), 50, &o) {
            Err(Error::BudgetExceeded { required, .. }) => assert!(required > 100),
            other => panic!("{other:?}"),
        }
    }

    /// Direct Σ over the support box, for comparison with the meet-in-the-middle sum.
    fn weighted_scan(q: &DiagonalForm, b: i64) -> f64 {
        let n = q.dim();
        let mut s = 0.0;
        for x1 in b..=3 * b {
            let r = x1;
            let mut x = vec![-r; n - 1];
            loop {
                let mut full = vec![x1];
                full.extend(&x);
                if q.evaluate_i128(&full) == Some(0) {
                    let u: Vec<f64> = full.iter().map(|&v| v as f64 / b as f64).collect();
                    s += wdag(&u);
                }
                let mut k = n - 1;
                let done = loop {
                    if k == 0 {
                        break true;
                    }
                    k -= 1;
                    if x[k] < r {
                        x[k] += 1;
                        break false;
                    }
                    x[k] = -r;
                };
                if done {
                    break;
                }
            }
        }
        s
    }

    #[test]
    fn weighted_examples() {
        let o = opts(Method::Auto);
        let w = WeightDescriptor::wdag(4);
        let v = count_weighted(&f(&[1, 1, -1, -1]), 1, &w, &o).unwrap();
        assert!(v.value.is_finite());
        assert_eq!(v.value, 0.0);
        let q = f(&[1, -1, -1, -1, -1]);
        for b in [1, 2, 3, 4] {
            let got = count_weighted(&q, b, &WeightDescriptor::wdag(5), &o).unwrap().value;
            let want = weighted_scan(&q, b as i64);
            assert!((got - want).abs() <= 1e-12 * want.max(1.0), "B={b}: {got} vs {want}");
        }
        assert!(count_weighted(&q, 2, &WeightDescriptor::OmegaEps { eps: 0.5, dim: 5 }, &o).is_err());
    }

    #[test]
    fn wdag_count_bounded_by_box() {
        let o = opts(Method::Auto);
        for v in [[1i64, -1, -1, -1, -1], [2, -1, -3, 1, -1], [1, 1, -2, -3, 1]] {
            let q = f(&v);
            for b in [2u64, 3, 5] {
                let w = count_weighted(&q, b, &WeightDescriptor::wdag(5), &o).unwrap().value;
                let n = count_box(&q, 3 * b, &o).unwrap().count as f64;
                assert!(w >= 0.0 && w <= n);
            }
        }
    }

    #[test]
    fn energy_equals_box_for_unit_forms() {
        let o = opts(Method::Auto);
        let q = f(&[1, -1, 1, -1, 1]);
        for x in [1u64, 4, 10, 26, 49] {
            let m = count_energy(&q, x, &o).unwrap().count;
            let n = count_box(&q, arith::isqrt(x), &o).unwrap().count;
            assert_eq!(m, n);
        }
    }

    fn arb_form() -> impl Strategy<Value = DiagonalForm> {
        (4usize..=5).prop_flat_map(|n| {
            proptest::collection::vec((1i64..=10, any::<bool>()), n).prop_map(|v| {
                let mut c: Vec<i64> = v.iter().map(|&(m, s)| if s { m } else { -m }).collect();
                c[0] = c[0].abs();
                let l = c.len() - 1;
                c[l] = -c[l].abs();
                DiagonalForm::new(c).unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn mitm_matches_scan(q in arb_form(), b in 1u64..=5) {
            let m = count_box(&q, b, &opts(Method::Mitm)).unwrap().count;
            prop_assert_eq!(m, scan(&q, &vec![b as i64; q.dim()]));
        }

        #[test]
        fn monotone_and_permutation_invariant(q in arb_form(), b in 1u64..=6, rot in 0usize..5) {
            let o = opts(Method::Mitm);
            let n1 = count_box(&q, b, &o).unwrap().count;
            let n2 = count_box(&q, b + 1, &o).unwrap().count;
            prop_assert!(n1 <= n2);
            let perm: Vec<usize> = (0..q.dim()).map(|i| (i + rot) % q.dim()).collect();
            prop_assert_eq!(count_box(&q.permuted(&perm), b, &o).unwrap().count, n1);
        }
    }
}
