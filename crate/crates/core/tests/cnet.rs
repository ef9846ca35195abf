mod common;

use common::{uniform_points, xor_net};
use relucid_core::cnet::{back_project_leaf, extract_cnet_ruleset, extract_udt_ruleset, hidden_features, CnetOptions, UdtPathConstraint};
use relucid_core::data::Dataset;
use relucid_core::feasibility::{check_feasible_default, ConstraintSystem};
use relucid_core::trainer::random_network;
use relucid_core::udt::{predict_udt, UdtParams};
use relucid_core::{ActivationPattern, LinearConstraint, Matrix, Mlp, Op};

fn labeled(m: &Mlp, n: usize, seed: u64) -> Dataset {
    let x = uniform_points(m.input_dim(), n, -2.0, 2.0, seed);
    let y = x.iter_rows().map(|r| m.predict(r).unwrap()).collect();
    Dataset::from_parts(x, y).unwrap()
}

#[test]
fn xor_hidden_features() {
    let x = Matrix::from_rows(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]).unwrap();
    let h = hidden_features(&xor_net(), &x).unwrap();
    assert_eq!(h.as_slice(), &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 1.0]);
}

#[test]
fn xor_threshold_back_projects_directly() {
    let path = [UdtPathConstraint { feature: 0, op: Op::Gt, threshold: 0.5 }];
    let r = back_project_leaf(&xor_net(), &ActivationPattern::new(vec![]), &path, 1).unwrap();
    assert_eq!(r.constraints, vec![LinearConstraint::new(vec![1.0, 1.0], Op::Gt, 0.5)]);
}

#[test]
fn structural_count_and_inactive_prefix() {
    let m = random_network(2, &[3, 4], 1, 8).unwrap();
    let path = [
        UdtPathConstraint { feature: 1, op: Op::Le, threshold: 0.7 },
        UdtPathConstraint { feature: 3, op: Op::Gt, threshold: 0.2 },
    ];
    let off = ActivationPattern::new(vec![vec![false; 3]]);
    let r = back_project_leaf(&m, &off, &path, 0).unwrap();
    assert_eq!(r.constraints.len(), 3 + 2);
    // All units off: the back-projected tests have zero coefficients.
    assert!(r.constraints[3..].iter().all(|c| c.coeffs.iter().all(|&v| v == 0.0)));
}

#[test]
fn k1_equivalence() {
    for seed in 0..5 {
        let m = random_network(2, &[4], 1, seed).unwrap();
        let train = labeled(&m, 400, seed);
        let ex = extract_cnet_ruleset(&m, &train, &CnetOptions::default()).unwrap();
        assert_eq!(ex.ruleset.len(), ex.tree.leaf_count());
        for x in uniform_points(2, 3000, -3.0, 3.0, seed + 50).iter_rows() {
            let h = m.last_hidden(x).unwrap();
            assert_eq!(ex.ruleset.classify(x).unwrap().0, predict_udt(&ex.tree, &h).unwrap());
        }
    }
}

#[test]
fn training_points_fire_their_rule() {
    let m = random_network(3, &[3, 3], 1, 4).unwrap();
    let train = labeled(&m, 300, 4);
    let ex = extract_cnet_ruleset(&m, &train, &CnetOptions::default()).unwrap();
    for x in train.features().iter_rows() {
        let h = m.last_hidden(x).unwrap();
        let (label, id) = ex.ruleset.classify(x).unwrap();
        assert!(id.is_some(), "every training point is covered");
        assert_eq!(label, predict_udt(&ex.tree, &h).unwrap());
    }
    for r in ex.ruleset.rules() {
        let sys = ConstraintSystem::new(3, r.constraints.clone());
        assert!(check_feasible_default(&sys).unwrap().feasible);
    }
}

#[test]
fn udt_baseline_fits_predictions() {
    let m = random_network(2, &[4, 4], 1, 12).unwrap();
    let train = labeled(&m, 500, 1);
    let opts = CnetOptions { udt: UdtParams::default(), ..Default::default() };
    let (rs, tree) = extract_udt_ruleset(&m, &train, &opts).unwrap();
    assert_eq!(rs.len(), tree.leaf_count());
    let agree = train
        .features()
        .iter_rows()
        .filter(|x| rs.classify(x).unwrap().0 == m.predict(x).unwrap())
        .count();
    assert!(agree as f64 / 500.0 > 0.8);
}
