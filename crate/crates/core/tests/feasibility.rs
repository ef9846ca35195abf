use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relucid_core::feasibility::{check_feasible_default, witness_valid, ConstraintSystem};
use relucid_core::{LinearConstraint, Op};

fn random_system(seed: u64) -> ConstraintSystem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = rng.gen_range(2..=3);
    let m = rng.gen_range(1..=6);
    let constraints = (0..m)
        .map(|_| {
            let coeffs = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let op = if rng.gen_bool(0.5) { Op::Le } else { Op::Gt };
            LinearConstraint::new(coeffs, op, rng.gen_range(-2.0..2.0))
        })
        .collect();
    ConstraintSystem::new(dim, constraints)
}

/// Uniform rejection sampler over `[-10, 10]^d`.
fn sampler_finds_point(sys: &ConstraintSystem, samples: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    let mut x = vec![0.0; sys.dim];
    (0..samples).any(|_| {
        x.iter_mut().for_each(|v| *v = rng.gen_range(-10.0..10.0));
        sys.constraints.iter().all(|c| c.holds(&x))
    })
}

#[test]
fn one_sided_agreement_with_sampler() {
    for seed in 0..100 {
        let sys = random_system(seed);
        let r = check_feasible_default(&sys).unwrap();
        if sampler_finds_point(&sys, 100_000, seed) {
            assert!(r.feasible, "seed {seed}: sampler found a point, LP says infeasible");
        }
        if r.feasible {
            assert!(witness_valid(&sys, r.witness.as_ref().unwrap()), "seed {seed}: bad witness");
        }
    }
}

#[test]
fn empty_system_with_box() {
    let sys = ConstraintSystem::new(3, vec![]).with_bounds(vec![(1.0, 2.0), (-5.0, -4.0), (0.0, 0.5)]);
    let r = check_feasible_default(&sys).unwrap();
    assert!(r.feasible);
    let w = r.witness.unwrap();
    for (v, (lo, hi)) in w.iter().zip([(1.0, 2.0), (-5.0, -4.0), (0.0, 0.5)]) {
        assert!(*v >= lo && *v <= hi);
    }
}

proptest! {
    #[test]
    fn adding_constraints_is_monotone(seed in 0u64..5000, extra_seed in 0u64..5000) {
        let sys = random_system(seed);
        let base = check_feasible_default(&sys).unwrap().feasible;
        let mut more = sys.clone();
        let ext = random_system(extra_seed);
        if ext.dim == sys.dim {
            more.constraints.extend(ext.constraints);
            let grown = check_feasible_default(&more).unwrap().feasible;
            prop_assert!(base || !grown);
        }
    }
}
