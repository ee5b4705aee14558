use proptest::prelude::*;
use squarepack::certificate::Certificate;
use squarepack::engine::{Limits, PackingState, Termination};
use squarepack::geometry::ResidualTag;
use squarepack::series::{partial_sum, side, tail_sum, Params};
use squarepack::verify::{verify, VerifyLevel};
use squarepack::RunReport;

fn run(t: f64, m: u64, n0: u64, budget: u64) -> (PackingState, RunReport) {
    let mut st = PackingState::init(Params::new(t, m, n0).unwrap());
    let report = st.run(&Limits::budget(budget));
    (st, report)
}

#[test]
fn engine_output_verifies_with_bruteforce() {
    let (st, report) = run(0.75, 8, 100_000, 1_500);
    let cert = Certificate::from_state(&st, Some(report.termination));
    let v = verify(&cert, VerifyLevel::FullBruteforce);
    assert!(v.pass(), "{:?}", v.failures());
    assert_eq!(v.bruteforce_agrees, Some(true));
}

#[test]
fn failed_run_still_verifies() {
    let (st, report) = run(0.75, 8, 1_000, 1_000_000);
    assert!(matches!(report.termination, Termination::Failed { .. }));
    assert!(report.squares_placed > 10_000);
    let cert = Certificate::from_state(&st, Some(report.termination.clone()));
    let v = verify(&cert, VerifyLevel::Fast);
    assert!(v.pass(), "{:?}", v.failures());
}

#[test]
fn residual_area_tracks_the_tail() {
    let (st, report) = run(0.6, 4, 10_000, 30_000);
    let tail = tail_sum(1.2, st.n_current()).unwrap().value;
    assert!(((st.family().recompute_area() - tail) / tail).abs() < 1e-8);
    let placed = partial_sum(1.2, 10_000, st.n_current() - 1);
    let total = tail_sum(1.2, 10_000).unwrap().value;
    assert!(((placed + tail - total) / total).abs() < 1e-12);
    assert!(report.height_non_increasing);
}

#[test]
fn runs_are_deterministic() {
    let (a, _) = run(0.9, 16, 5_000, 5_000);
    let (b, _) = run(0.9, 16, 5_000, 5_000);
    let (ca, cb) = (
        Certificate::from_state(&a, None),
        Certificate::from_state(&b, None),
    );
    assert_eq!(ca.to_json(), cb.to_json());
}

#[test]
fn family_widths_never_exceed_the_first() {
    let (st, _) = run(0.75, 4, 2_000, 20_000);
    assert!(st.ledger().iter().all(|r| r.no_width_inflation));
    let first = st.outer().width();
    assert!(st.family().iter().all(|r| r.rect.width() <= first));
}

#[test]
fn stopped_runs_return_strips() {
    let (st, _) = run(0.75, 8, 100_000, 70);
    let strips = st
        .family()
        .iter()
        .filter(|r| r.tag == ResidualTag::Strip)
        .count();
    assert!(strips > 0);
    assert!(st.indices_contiguous());
}

#[test]
fn placed_sides_match_the_index() {
    let (st, _) = run(0.75, 8, 100_000, 3_000);
    for sq in st.placed() {
        let exact = side(sq.n, 0.75);
        assert!(((sq.side - exact) / exact).abs() <= 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_short_runs_verify(t in 0.55f64..0.95, m in 2u64..12, n0 in 2_000u64..200_000, budget in 0u64..1_500) {
        let (st, report) = run(t, m, n0, budget);
        prop_assert!(report.indices_contiguous);
        prop_assert!(report.max_conservation_rel_err < 1e-8);
        prop_assert!(report.max_decomposition_rel_err < 1e-12);
        let cert = Certificate::from_state(&st, Some(report.termination));
        let v = verify(&cert, VerifyLevel::Fast);
        prop_assert!(v.pass(), "{:?}", v.failures());
    }

    #[test]
    fn tail_recurrence(s in 1.05f64..3.0, n0 in 1u64..10_000_000) {
        let a = tail_sum(s, n0).unwrap();
        let b = tail_sum(s, n0 + 1).unwrap();
        let diff = a.value - b.value - (n0 as f64).powf(-s);
        prop_assert!(diff.abs() <= a.error_bound + b.error_bound);
    }

    #[test]
    fn partial_sums_concatenate(s in 0.5f64..2.5, a in 1u64..1_000_000, len1 in 0u64..200_000, len2 in 1u64..200_000) {
        let b = a + len1;
        let c = b + len2;
        let whole = partial_sum(s, a, c);
        let split = partial_sum(s, a, b) + partial_sum(s, b + 1, c);
        prop_assert!(((whole - split) / whole).abs() < 1e-13);
    }
}
