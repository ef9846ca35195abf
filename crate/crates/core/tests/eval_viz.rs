mod common;

use common::xor_net;
use relucid_core::ecdt::{extract_ruleset, EcdtOptions};
use relucid_core::eval::{compactness, fidelity, CountingConvention, FidelitySource};
use relucid_core::trainer::random_network;
use relucid_core::viz::{class_map, render_rule_regions, render_slice, rule_region_segments, SliceSpec};
use relucid_core::{Classifier, Matrix, Result};

struct Constant(usize);

impl Classifier for Constant {
    fn input_dim(&self) -> usize {
        2
    }
    fn classify_label(&self, _: &[f64]) -> Result<usize> {
        Ok(self.0)
    }
}

#[test]
fn fidelity_counts() {
    let m = xor_net();
    let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
    let x = common::uniform_points(2, 1000, -1.0, 2.0, 0);
    let r = fidelity(&rs, &m, &x, FidelitySource::SampledSpace).unwrap();
    assert_eq!((r.matches, r.total, r.fidelity), (1000, 1000, 1.0));
    // Counting oracle for a constant surrogate.
    let ones = x.iter_rows().filter(|p| m.predict(p).unwrap() == 1).count();
    let c = fidelity(&Constant(1), &m, &x, FidelitySource::TestSet).unwrap();
    assert_eq!(c.matches, ones);
    // Row order does not matter.
    let rev: Vec<usize> = (0..1000).rev().collect();
    let c2 = fidelity(&Constant(1), &m, &x.select_rows(&rev), FidelitySource::TestSet).unwrap();
    assert_eq!(c2.matches, c.matches);
    assert!(fidelity(&rs, &m, &Matrix::zeros(0, 2), FidelitySource::TestSet).is_err());
    assert!(fidelity(&rs, &m, &Matrix::zeros(3, 3), FidelitySource::TestSet).is_err());
}

#[test]
fn compactness_conventions() {
    let m = random_network(2, &[5, 5], 1, 1).unwrap();
    let rs = extract_ruleset(&m, &EcdtOptions { prune: false, ..Default::default() }).unwrap();
    assert_eq!(compactness(&rs, CountingConvention::HiddenOnly).mean_constraints_per_rule, 10.0);
    assert_eq!(compactness(&rs, CountingConvention::WithOutputThreshold).mean_constraints_per_rule, 11.0);
    let pruned = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
    let c = compactness(&pruned, CountingConvention::WithOutputThreshold);
    assert!(c.mean_constraints_per_rule <= 11.0);
    // Multi-logit models have no output threshold to count.
    let m3 = random_network(2, &[3], 3, 1).unwrap();
    let rs3 = extract_ruleset(&m3, &EcdtOptions { prune: false, ..Default::default() }).unwrap();
    assert_eq!(compactness(&rs3, CountingConvention::WithOutputThreshold).mean_constraints_per_rule, 3.0);
}

#[test]
fn model_and_rules_render_identically() {
    let m = random_network(3, &[4, 3], 3, 21).unwrap();
    let rs = extract_ruleset(&m, &EcdtOptions::default()).unwrap();
    let mut spec = SliceSpec::new(3, (0, 2), [(-2.0, 2.0), (-1.0, 3.0)]);
    spec.fixed_values[1] = 0.4;
    spec.resolution = 120;
    assert_eq!(class_map(&m, &spec).unwrap(), class_map(&rs, &spec).unwrap());
    assert_eq!(render_slice(&m, 3, &spec).unwrap(), render_slice(&rs, 3, &spec).unwrap());
}

#[test]
fn constant_predictor_single_region() {
    let mut spec = SliceSpec::new(2, (0, 1), [(0.0, 1.0), (0.0, 1.0)]);
    spec.resolution = 50;
    assert!(class_map(&Constant(2), &spec).unwrap().iter().all(|&c| c == 2));
    let svg = render_slice(&Constant(2), 3, &spec).unwrap();
    // One merged run per row.
    assert_eq!(svg.matches("height=\"8.000\" fill=").count(), 50);
}

#[test]
fn xor_boundaries_are_two_parallel_lines() {
    let rs = extract_ruleset(&xor_net(), &EcdtOptions::default()).unwrap();
    let spec = SliceSpec::new(2, (0, 1), [(-1.0, 2.0), (-1.0, 2.0)]);
    let segs = rule_region_segments(&rs, &spec).unwrap();
    assert!(!segs.is_empty());
    let mut offsets: Vec<f64> = Vec::new();
    for s in &segs {
        // Every stroke lies on x1 + x2 = c, c ∈ {0, 1}.
        let c0 = s.from.0 + s.from.1;
        let c1 = s.to.0 + s.to.1;
        assert!((c0 - c1).abs() < 1e-9);
        assert!(c0.abs() < 1e-9 || (c0 - 1.0).abs() < 1e-9);
        if !offsets.iter().any(|o| (o - c0).abs() < 1e-9) {
            offsets.push(c0);
        }
    }
    assert_eq!(offsets.len(), 2);
    let svg = render_rule_regions(&rs, &spec).unwrap();
    assert_eq!(svg, render_rule_regions(&rs, &spec).unwrap());
    assert!(svg.contains("<line") && svg.ends_with("</svg>\n"));
}
