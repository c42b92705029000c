//! Acceptance suite: one PASS/FAIL line per criterion. Tolerances live in
//! `qdl_core::selftest`.
//!
//! Criteria in `EXPECTED_RED` fail on this implementation for reasons worked
//! out separately (see README); they are printed as FAIL and do not stop the
//! run. Any other failure exits nonzero. `QDL_ACCEPTANCE=1,3` restricts the ids.

use qdl_core::selftest;

/// 8: I_q(0) at q = 1 is not close to σ_∞ at B = 20.
/// 10: blocks with q ≤ 65 exceed the per-block evaluation budget.
/// 12: one n = 5 form has a 2-adic jump inside the fitted range.
const EXPECTED_RED: [u32; 3] = [8, 10, 12];

fn main() {
    let ids: Vec<u32> = match std::env::var("QDL_ACCEPTANCE") {
        Ok(s) => s.split(',').map(|t| t.trim().parse().expect("criterion id")).collect(),
        Err(_) => (1..=13).collect(),
    };
    let mut unexpected = Vec::new();
    for id in ids {
        let r = selftest::run(id);
        println!("{}", r.line());
        if !r.passed && !EXPECTED_RED.contains(&id) {
            unexpected.push(id);
        }
        if r.passed && EXPECTED_RED.contains(&id) {
            println!("note: criterion {id} is listed as expected red but passed");
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
