mod common;

use hypoflag::corpus;
use hypoflag::exact::{bareiss_rank, Rational};
use hypoflag::exec::Execution;
use hypoflag::hormander::{
    check_hormander, check_observation, check_parabolic, generate_lie_span, model_generators, sample_points,
    CheckOptions, Mode, SpanOptions, Verdict,
};
use hypoflag::model::{derive_geometry, ModelSpec};

fn opts(depth: usize) -> CheckOptions {
    CheckOptions { max_depth: Some(depth), ..CheckOptions::default() }
}

/// Rank of `[A^T | |a|^2]` computed from the drift columns.
fn testing_rank(spec: &ModelSpec) -> usize {
    let g = derive_geometry(spec).unwrap();
    let rows: Vec<Vec<Rational>> = g
        .columns()
        .into_iter()
        .map(|mut c| {
            let s: Rational = c.iter().map(|x| x * x).sum();
            c.push(s);
            c
        })
        .collect();
    bareiss_rank(&rows)
}

fn rank_a(spec: &ModelSpec) -> usize {
    bareiss_rank(&derive_geometry(spec).unwrap().columns())
}

#[test]
fn testing_rank_matches_drift_matrix() {
    for spec in common::fuzz_models(20, false, 0) {
        let r = check_hormander(&spec, Mode::Testing, &opts(spec.n + 2)).unwrap();
        let want = testing_rank(&spec);
        assert_eq!(r.ranks, vec![want; 5], "{}", spec.to_json());
        assert!(want <= spec.k + 1);
        let expect_full = want == spec.n;
        assert_eq!(matches!(r.verdict, Verdict::SpansEverySample), expect_full);
    }
}

#[test]
fn testing_augmentations_have_fixed_rank() {
    for spec in common::fuzz_models(20, false, 0) {
        let p = check_parabolic(&spec, Mode::Testing, &opts(spec.n + 2)).unwrap();
        assert_eq!(p.ranks, vec![rank_a(&spec) + 1; 5], "{}", spec.to_json());
        let o = check_observation(&spec, &opts(spec.n + 2)).unwrap();
        assert_eq!(o.ranks, vec![rank_a(&spec) + 1; 5], "{}", spec.to_json());
    }
}

#[test]
fn rank_is_monotone_in_depth() {
    for spec in common::fuzz_models(8, true, 300) {
        let mut last = vec![0; 5];
        for depth in 1..=4 {
            let r = check_hormander(&spec, Mode::Detection, &opts(depth)).unwrap();
            assert!(r.ranks.iter().zip(&last).all(|(a, b)| a >= b));
            last = r.ranks;
        }
    }
}

#[test]
fn rank_is_monotone_in_generators() {
    for spec in common::fuzz_models(8, true, 400) {
        let gens = model_generators(&spec, Mode::Detection).unwrap();
        let points = sample_points(spec.n, 5, 0);
        let full = generate_lie_span(&gens, 4, &points, &SpanOptions::default()).unwrap();
        let fewer = generate_lie_span(&gens[..gens.len() - 1], 4, &points, &SpanOptions::default()).unwrap();
        assert!(fewer.ranks.iter().zip(&full.ranks).all(|(a, b)| a <= b));
    }
}

#[test]
fn pruned_search_matches_exhaustive() {
    for spec in common::fuzz_models(10, true, 500) {
        let gens = model_generators(&spec, Mode::Detection).unwrap();
        let points = sample_points(spec.n, 3, 1);
        let pruned = generate_lie_span(&gens, 3, &points, &SpanOptions::default()).unwrap();
        let exhaustive = SpanOptions { exhaustive: true, ..SpanOptions::default() };
        let full = generate_lie_span(&gens, 3, &points, &exhaustive).unwrap();
        assert_eq!(pruned.ranks, full.ranks, "{}", spec.to_json());
    }
}

#[test]
fn reports_are_deterministic_across_strategies() {
    let spec = corpus::regime_tracking();
    let mut o = opts(4);
    o.span.execution = Execution::Sequential;
    let a = check_hormander(&spec, Mode::Detection, &o).unwrap().to_json();
    o.span.execution = Execution::Parallel;
    let b = check_hormander(&spec, Mode::Detection, &o).unwrap().to_json();
    assert_eq!(a, b);
    assert_eq!(a, check_hormander(&spec, Mode::Detection, &o).unwrap().to_json());
}

#[test]
fn sample_points_depend_only_on_seed() {
    assert_eq!(sample_points(3, 5, 42), sample_points(3, 5, 42));
    assert_ne!(sample_points(3, 5, 42), sample_points(3, 5, 43));
    for p in sample_points(4, 10, 0) {
        assert!(p.iter().all(|x| *x > Rational::from_integer(0.into())));
    }
}
