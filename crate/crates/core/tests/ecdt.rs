mod common;

use common::{rel_close, uniform_points, xor_net};
use relucid_core::ecdt::{
    build_ecdt, extract_rule_for_leaf, extract_ruleset, extract_ruleset_naive, extract_ruleset_with_stats,
    local_explain, EcdtOptions,
};
use relucid_core::trainer::random_network;
use relucid_core::{ActivationPattern, Consequence, Error, Mlp, RuleSet};

fn logits_at(rs: &RuleSet, x: &[f64]) -> Vec<f64> {
    let (_, id) = rs.classify(x).unwrap();
    match &rs.rule(id.unwrap()).unwrap().consequence {
        Consequence::Affine(a) => a.logits(x),
        Consequence::Label(_) => panic!("ecdt rules carry affine consequences"),
    }
}

fn assert_exact(m: &Mlp, rs: &RuleSet, n: usize, seed: u64) {
    let pts = uniform_points(m.input_dim(), n, -3.0, 3.0, seed);
    for x in pts.iter_rows() {
        let (label, _) = rs.classify(x).unwrap();
        assert_eq!(label, m.predict(x).unwrap());
        for (a, b) in logits_at(rs, x).iter().zip(m.logits(x).unwrap()) {
            assert!(rel_close(*a, b, 1e-6));
        }
    }
}

#[test]
fn xor_rule_set() {
    let m = xor_net();
    let (rs, stats) = extract_ruleset_with_stats(&m, &EcdtOptions::default()).unwrap();
    assert_eq!(rs.len(), 3);
    let ids: Vec<u64> = rs.rules().iter().map(|r| r.id).collect();
    assert_eq!(ids, [0b00, 0b10, 0b11]);
    assert!(stats.lps_infeasible >= 1);
    let corners = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]];
    let labels: Vec<usize> = corners.iter().map(|x| rs.classify(x).unwrap().0).collect();
    assert_eq!(labels, [0, 1, 1, 0]);
    assert_eq!(rs.classify(&[0.0, 0.0]).unwrap().1, Some(0));
    let unpruned = extract_ruleset(&m, &EcdtOptions { prune: false, ..Default::default() }).unwrap();
    assert_eq!(unpruned.len(), 4);
}

#[test]
fn exactness_on_random_nets() {
    for seed in 0..12 {
        let dim = 2 + (seed as usize % 3);
        let out = if seed % 2 == 0 { 1 } else { 3 };
        let m = random_network(dim, &[4, 3], out, seed).unwrap();
        let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
        assert_exact(&m, &rs, 2000, seed);
    }
}

#[test]
fn exact_on_grid_corners() {
    let m = random_network(2, &[3, 3], 1, 77).unwrap();
    let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
    for i in 0..=20 {
        for j in 0..=20 {
            let x = [-2.0 + 0.2 * i as f64, -2.0 + 0.2 * j as f64];
            assert_eq!(rs.classify(&x).unwrap().0, m.predict(&x).unwrap());
        }
    }
}

#[test]
fn partition_exactly_one_rule_fires() {
    let m = random_network(3, &[3, 4], 1, 5).unwrap();
    let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
    for x in uniform_points(3, 10_000, -4.0, 4.0, 1).iter_rows() {
        assert_eq!(rs.rules().iter().filter(|r| r.fires(x)).count(), 1);
    }
}

#[test]
fn pruned_rules_never_fire() {
    for seed in 0..6 {
        let m = random_network(2, &[3, 3], 1, 100 + seed).unwrap();
        let pruned = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
        let all = extract_ruleset(&m, &EcdtOptions { prune: false, ..Default::default() }).unwrap();
        let shadow: Vec<_> = all.rules().iter().filter(|r| pruned.rule(r.id).is_none()).collect();
        assert_eq!(all.len(), 64);
        for x in uniform_points(2, 5000, -5.0, 5.0, seed).iter_rows() {
            assert!(shadow.iter().all(|r| !r.fires(x)));
        }
    }
}

#[test]
fn unpruned_constraint_count_is_hidden_total() {
    let m = random_network(2, &[5, 5], 1, 3).unwrap();
    let rs = extract_ruleset(&m, &EcdtOptions { prune: false, ..Default::default() }).unwrap();
    assert_eq!(rs.len(), 1024);
    assert!(rs.rules().iter().all(|r| r.constraints.len() == 10));
}

#[test]
fn local_matches_global() {
    let m = random_network(3, &[4, 3], 3, 9).unwrap();
    let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
    for x in uniform_points(3, 300, -3.0, 3.0, 2).iter_rows() {
        let local = local_explain(&m, x).unwrap();
        assert!(local.fires(x));
        assert_eq!(local.consequence.label(x), m.predict(x).unwrap());
        let global = rs.rule(local.id).expect("local pattern is feasible, so it was kept");
        assert_eq!(&local, global);
    }
}

#[test]
fn lazy_equals_naive_and_materialized() {
    for seed in 0..8 {
        let m = random_network(2, &[3, 2], 1, 200 + seed).unwrap();
        let lazy = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
        assert_eq!(lazy, extract_ruleset_naive(&m, true, 30).unwrap());
        let tree = EcdtOptions { materialize_tree: true, ..Default::default() };
        assert_eq!(lazy, extract_ruleset(&m, &tree).unwrap());
    }
}

#[test]
fn capacity_cap() {
    let m = random_network(2, &[16, 15], 1, 0).unwrap();
    let err = extract_ruleset(&m, &EcdtOptions::default()).unwrap_err();
    assert!(matches!(err, Error::Capacity { bits: 31, cap: 30 }));
    assert!(matches!(build_ecdt(&[16, 15], 30), Err(Error::Capacity { .. })));
    // Local explanations are not capped.
    assert!(local_explain(&m, &[0.3, -0.2]).is_ok());
}

#[test]
fn tree_shape() {
    let t = build_ecdt(&[2, 3], 30).unwrap();
    assert_eq!(t.leaves().count(), 32);
    assert_eq!(t.depth(), 5);
    // Every leaf pattern extracts a rule with one constraint per hidden unit.
    let m = random_network(2, &[2, 3], 1, 1).unwrap();
    for leaf in t.leaves() {
        let p: &ActivationPattern = leaf.value.as_ref().unwrap();
        assert_eq!(extract_rule_for_leaf(&m, p).unwrap().constraints.len(), 5);
    }
}
