mod common;

use common::*;
use milseq::decoder::TokenSequence;
use milseq::evaluation::{edit_distance, segment_metrics, tune_thresholds, ScoredItems};
use proptest::prelude::*;

#[test]
fn ctc_matches_path_enumeration() {
    for seed in 0..60 {
        let (value, fb, tape) = ctc_case(seed);
        assert!(value <= 1e-6, "seed {}: nll off by {:e}", seed, value);
        assert!(fb <= 1e-5 && tape <= 1e-5, "seed {}: gradient errors {:e} {:e}", seed, fb, tape);
    }
}

#[test]
fn edit_distance_matches_enumeration() {
    for seed in 0..300 {
        edit_case(seed).unwrap();
    }
}

#[test]
fn segment_metrics_match_grid_recount() {
    for seed in 0..200 {
        segment_case(seed).unwrap();
    }
}

#[test]
fn tuner_never_loses_to_phase_one() {
    for seed in 0..100 {
        let (scores, labels) = random_score_set(seed);
        let items = ScoredItems::new(&scores, &labels).unwrap();
        let report = tune_thresholds(&items, seed).unwrap();
        assert!(report.final_f1 >= report.phase1_f1, "seed {}", seed);
        let recount = micro_f1_direct(&scores, &labels, report.thresholds.as_slice());
        assert!((recount - report.final_f1).abs() < 1e-9, "seed {}", seed);
    }
}

#[test]
fn tuner_matches_exhaustive_search_on_constructed_cases() {
    for (i, (scores, labels)) in constructed_two_class_cases().into_iter().enumerate() {
        let items = ScoredItems::new(&scores, &labels).unwrap();
        let report = tune_thresholds(&items, 11).unwrap();
        let best = exhaustive_two_class(&scores, &labels);
        assert!((report.final_f1 - best).abs() < 1e-9, "case {}: {} vs {}", i, report.final_f1, best);
    }
}

#[test]
fn constructed_case_needs_second_phase() {
    let (scores, labels) = constructed_two_class_cases().remove(0);
    let report = tune_thresholds(&ScoredItems::new(&scores, &labels).unwrap(), 0).unwrap();
    assert!(report.final_f1 > report.phase1_f1);
    assert!(report.accepted > 0);
}

#[test]
fn insertions_alone_drive_error_rate_over_one_hundred() {
    // One reference class active for a second, five spurious classes all along.
    let reference = to_intervals(&[(0, 0, 10)]);
    let hyp = to_intervals(&[(0, 0, 10), (1, 0, 30), (2, 0, 30), (3, 0, 30), (4, 0, 30), (5, 0, 30)]);
    let (er, f1) = segment_metrics(&hyp, &reference, 3.0, 1.0, 6).unwrap();
    assert_eq!(er, 1500.0);
    assert!((0.0..=100.0).contains(&f1));
}

fn tokens() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..4, 0..8)
}

proptest! {
    #[test]
    fn edit_distance_is_a_metric(a in tokens(), b in tokens(), c in tokens()) {
        let d = |x: &Vec<usize>, y: &Vec<usize>| edit_distance(&TokenSequence(x.clone()), &TokenSequence(y.clone())).total();
        prop_assert_eq!(d(&a, &a), 0);
        prop_assert_eq!(d(&a, &b), d(&b, &a));
        prop_assert!(d(&a, &c) <= d(&a, &b) + d(&b, &c));
        prop_assert!(d(&a, &b) <= a.len().max(b.len()));
    }

    #[test]
    fn edit_split_is_consistent(a in tokens(), b in tokens()) {
        let e = edit_distance(&TokenSequence(a.clone()), &TokenSequence(b.clone()));
        prop_assert_eq!(e.deletions as i64 - e.insertions as i64, a.len() as i64 - b.len() as i64);
    }

    #[test]
    fn segment_scores_stay_in_range(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let hyp = random_spans(&mut r, 3, 40, 5);
        let reference = random_spans(&mut r, 3, 40, 4);
        let (er, f1) = segment_metrics(&to_intervals(&hyp), &to_intervals(&reference), 4.0, 1.0, 3).unwrap();
        prop_assert!(er >= 0.0);
        prop_assert!((0.0..=100.0).contains(&f1));
        let (er_self, f1_self) = segment_metrics(&to_intervals(&reference), &to_intervals(&reference), 4.0, 1.0, 3).unwrap();
        prop_assert_eq!(er_self, 0.0);
        prop_assert_eq!(f1_self, 100.0);
    }

    #[test]
    fn tuned_thresholds_reproduce_reported_score(seed in 0u64..10_000) {
        let (scores, labels) = random_score_set(seed);
        let report = tune_thresholds(&ScoredItems::new(&scores, &labels).unwrap(), seed).unwrap();
        prop_assert!(report.final_f1 + 1e-12 >= report.phase1_f1);
        let recount = micro_f1_direct(&scores, &labels, report.thresholds.as_slice());
        prop_assert!((recount - report.final_f1).abs() < 1e-9);
    }
}
