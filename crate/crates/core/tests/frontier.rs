mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use taskbits::frontier::{
    information_estimate, merge, pareto_filter, read_points_csv, write_points_csv, Point,
};
use taskbits::harness::published_frontier;

fn pts(raw: &[(f64, f64)]) -> Vec<Point> {
    raw.iter().map(|&(k, t)| Point::new(k, t, "test")).collect()
}

fn pairs(points: &[Point]) -> Vec<(f64, f64)> {
    points.iter().map(|p| (p.kappa, p.tau)).collect()
}

/// Pools on a coarse grid so that ties in both coordinates are common.
fn pool() -> impl Strategy<Value = Vec<Point>> {
    proptest::collection::vec((0u32..60, 0u32..40), 0..200).prop_map(|v| {
        v.into_iter()
            .map(|(k, t)| Point::new(k as f64 * 10.0, t as f64 / 40.0, "p"))
            .collect()
    })
}

#[test]
fn small_cases() {
    assert_eq!(
        pairs(pareto_filter(&pts(&[(3.0, 0.2)])).points()),
        vec![(3.0, 0.2)]
    );
    let f = pareto_filter(&pts(&[(10.0, 0.5), (20.0, 0.4), (15.0, 0.7)]));
    assert_eq!(pairs(f.points()), vec![(10.0, 0.5), (15.0, 0.7)]);
    assert!(pareto_filter(&[]).is_empty());
}

#[test]
fn lookups_on_a_small_frontier() {
    let f = pareto_filter(&pts(&[(100.0, 0.1), (200.0, 0.5), (400.0, 0.9)]));
    assert_eq!(f.complexity_at(0.0), Some(100.0));
    assert_eq!(f.complexity_at(0.5), Some(200.0));
    assert_eq!(f.complexity_at(0.95), None);
    assert!(f.is_adaptable(200.0, 0.5));
    assert!(!f.is_adaptable(199.0, 0.5));
    assert!(!f.is_adaptable(0.0, 0.05));
}

#[test]
fn published_points_lookups() {
    let f = published_frontier("olmo3-32b", "gsm8k");
    assert_eq!(f.complexity_at(0.722), Some(4358.0));
    assert!(f.is_adaptable(5000.0, 0.72));
    assert_eq!(f.witness_at(0.78).map(|p| p.kappa), Some(1.2e6));
}

#[test]
fn information_estimate_cases() {
    let a = pareto_filter(&pts(&[(100.0, 0.3), (1000.0, 0.8)]));
    let b = pareto_filter(&pts(&[(50.0, 0.6)]));
    assert_eq!(information_estimate(&a, &a, 0.5), Some(0.0));
    assert_eq!(information_estimate(&a, &b, 0.5), Some(950.0));
    assert_eq!(information_estimate(&a, &b, 0.7), None);
}

#[test]
fn merge_with_dominated_pool_is_unchanged() {
    let f = pts(&[(10.0, 0.5), (20.0, 0.9)]);
    let worse = pts(&[(11.0, 0.4), (30.0, 0.9), (20.0, 0.8)]);
    assert_eq!(pairs(merge([&f[..], &worse[..]]).points()), pairs(&f));
    assert_eq!(pairs(merge([&f[..], &f[..]]).points()), pairs(&f));
}

#[test]
fn csv_roundtrip_keeps_provenance() {
    let mut p = Point::new(4358.0, 0.722, "adapter");
    p.provenance.hyperparams.insert("rank".into(), "1".into());
    p.provenance.seed = 9;
    p.provenance.n_eval = 500;
    p.provenance.witness = Some("d/adapter.tbp".into());
    let mut buf = Vec::new();
    write_points_csv(&[p.clone()], &mut buf).unwrap();
    assert_eq!(read_points_csv(&buf[..]).unwrap(), vec![p]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matches_brute_force(points in pool()) {
        let f = pareto_filter(&points);
        let got: BTreeSet<_> = f.points().iter().map(common::key).collect();
        prop_assert_eq!(got.len(), f.len());
        prop_assert_eq!(got, common::brute_force_front(&points));
        for w in f.points().windows(2) {
            prop_assert!(w[0].kappa < w[1].kappa && w[0].tau < w[1].tau);
        }
    }

    #[test]
    fn idempotent(points in pool()) {
        let once = pareto_filter(&points);
        prop_assert_eq!(pareto_filter(once.points()), once);
    }

    #[test]
    fn complexity_is_monotone_in_target(points in pool(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let f = pareto_filter(&points);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        match (f.complexity_at(lo), f.complexity_at(hi)) {
            (Some(x), Some(y)) => prop_assert!(x <= y),
            (None, Some(_)) => prop_assert!(false, "reachable at {hi} but not at {lo}"),
            _ => {}
        }
    }

    #[test]
    fn merge_takes_the_pointwise_minimum(a in pool(), b in pool(), t in 0.0f64..1.0) {
        let fa = pareto_filter(&a);
        let fb = pareto_filter(&b);
        let m = merge([&a[..], &b[..]]);
        let expected = match (fa.complexity_at(t), fb.complexity_at(t)) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        prop_assert_eq!(m.complexity_at(t), expected);
        if let Some(x) = fa.complexity_at(t) {
            prop_assert!(m.complexity_at(t).unwrap() <= x);
        }
    }
}
