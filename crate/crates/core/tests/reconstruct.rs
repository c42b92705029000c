use qdl_core::deltamethod::{self, ledger_total, ReconstructOptions};
use qdl_core::qform::make_form;
use qdl_core::DiagonalForm;

fn f(a: &[i64]) -> DiagonalForm {
    make_form(a, false).unwrap()
}

fn small() -> ReconstructOptions {
    ReconstructOptions {
        q_max: Some(8),
        c_max: 1,
        ..Default::default()
    }
}

#[test]
fn ledger_is_additive() {
    let r = deltamethod::reconstruct(&f(&[1, 2, -3, -1]), 4, &small()).unwrap();
    assert_eq!(r.reconstructed, ledger_total(&r.ledger));
    let by_shell: f64 = r.shell_totals.iter().sum();
    assert!((by_shell - r.reconstructed).abs() <= 1e-12 * r.reconstructed.abs().max(1.0));
    assert_eq!(r.ledger.len(), 8 * 2);
    for (k, e) in r.ledger.iter().enumerate() {
        assert_eq!((e.q, e.shell), (k as u64 / 2 + 1, k as u64 % 2));
    }
    let evals: u64 = r.ledger.iter().map(|e| e.evals).sum();
    assert_eq!(evals, r.evals);
}

#[test]
fn tail_permutation_leaves_totals_unchanged() {
    // The leading coefficient stays put; the others are shuffled.
    let a = deltamethod::reconstruct(&f(&[1, 2, -3, -5]), 4, &small()).unwrap();
    let b = deltamethod::reconstruct(&f(&[1, -5, 2, -3]), 4, &small()).unwrap();
    assert_eq!(a.exact_weighted, b.exact_weighted);
    assert_eq!(a.unresolved, b.unresolved);
    for (x, y) in a.ledger.iter().zip(&b.ledger) {
        assert_eq!(x.nonzero_terms, y.nonzero_terms);
        assert!((x.contribution - y.contribution).abs() <= 1e-9 * x.contribution.abs().max(1e-6), "{x:?} {y:?}");
    }
}

#[test]
fn report_is_deterministic() {
    let q = f(&[1, 3, -2, -5]);
    let a = deltamethod::reconstruct(&q, 3, &small()).unwrap();
    let b = deltamethod::reconstruct(&q, 3, &small()).unwrap();
    assert_eq!(a.reconstructed.to_bits(), b.reconstructed.to_bits());
    assert_eq!(a.ledger.len(), b.ledger.len());
}
