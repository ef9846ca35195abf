mod common;

use common::uniform_points;
use proptest::prelude::*;
use relucid_core::udt::{
    fit_udt, pessimistic_errors, predict_udt, prune_pessimistic, udt_rules, udt_ruleset, UdtParams, UdtTree,
};
use relucid_core::Matrix;

fn entropy(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    counts.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).log2()).sum()
}

fn col(v: &[f64]) -> Matrix {
    Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap()
}

#[test]
fn worked_gain_ratio() {
    let t = fit_udt(&col(&[1.0, 2.0, 3.0, 4.0]), &[0, 0, 1, 1], 2, UdtParams::default()).unwrap();
    let s = t.root().split.clone().unwrap();
    assert_eq!(s.threshold, 2.5);
    let gain = entropy(&[2.0, 2.0]) - 0.5 * entropy(&[2.0, 0.0]) - 0.5 * entropy(&[0.0, 2.0]);
    let split_info = entropy(&[2.0, 2.0]);
    assert!((s.gain - gain).abs() < 1e-12);
    assert!((s.gain_ratio - gain / split_info).abs() < 1e-12);
    assert!((s.gain_ratio - 1.0).abs() < 1e-12);
    let rules = udt_rules(&t);
    assert_eq!(rules.len(), 2);
    assert_eq!(rules[0].label, 0);
    assert_eq!(rules[1].label, 1);
    assert_eq!(predict_udt(&t, &[2.5]).unwrap(), 0);
}

fn separable(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let x = uniform_points(3, n, 0.0, 1.0, seed);
    let y = x.iter_rows().map(|r| usize::from(r[1] > 0.4) + usize::from(r[1] > 0.4 && r[2] > 0.7)).collect();
    (x, y)
}

#[test]
fn axis_separable_training_accuracy() {
    let (x, y) = separable(400, 3);
    let t = fit_udt(&x, &y, 3, UdtParams::default()).unwrap();
    for (r, &l) in x.iter_rows().zip(&y) {
        assert_eq!(predict_udt(&t, r).unwrap(), l);
    }
}

fn check_estimates(t: &UdtTree) {
    // Node by node, a kept split is estimated no worse than its leaf replacement.
    for (i, n) in t.nodes().iter().enumerate() {
        assert!(n.error_estimate.is_finite());
        if !n.is_leaf() {
            assert!(t.subtree_estimate(i) <= n.error_estimate + 1e-9);
        }
    }
}

#[test]
fn pruning_shrinks_and_is_consistent() {
    for seed in 0..10 {
        let x = uniform_points(2, 300, 0.0, 1.0, seed);
        // Noisy labels so there is something to prune.
        let y: Vec<usize> = x
            .iter_rows()
            .enumerate()
            .map(|(i, r)| usize::from(r[0] + r[1] > 1.0) ^ usize::from(i % 7 == 0))
            .collect();
        let t = fit_udt(&x, &y, 2, UdtParams::default()).unwrap();
        let p = prune_pessimistic(&t, 0.25);
        assert!(p.leaf_count() <= t.leaf_count());
        assert!(udt_rules(&p).len() <= udt_rules(&t).len());
        check_estimates(&p);
        for n in t.nodes().iter().filter(|n| !n.is_leaf()) {
            let s = n.split.as_ref().unwrap();
            assert!(s.gain_ratio > 0.0 && s.gain_ratio.is_finite());
        }
    }
}

proptest! {
    #[test]
    fn rules_agree_with_predict(seed in 0u64..1000) {
        let (x, y) = separable(120, seed);
        let t = fit_udt(&x, &y, 3, UdtParams { min_leaf: 3, ..Default::default() }).unwrap();
        let t = prune_pessimistic(&t, 0.25);
        let rs = udt_ruleset(&t, 0).unwrap();
        for p in uniform_points(3, 500, -0.5, 1.5, seed + 7).iter_rows() {
            let firing: Vec<_> = rs.rules().iter().filter(|r| r.fires(p)).collect();
            prop_assert_eq!(firing.len(), 1);
            prop_assert_eq!(rs.classify(p).unwrap().0, predict_udt(&t, p).unwrap());
        }
    }

    #[test]
    fn zero_error_bound_is_smallest(n in 1usize..200, cf in 0.05f64..0.5) {
        let zero = pessimistic_errors(0, n, cf);
        for e in 1..=n.min(20) {
            prop_assert!(pessimistic_errors(e, n, cf) > zero);
        }
    }
}
