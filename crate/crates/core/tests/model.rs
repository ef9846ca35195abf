mod common;

use common::{reference_forward, uniform_points, xor_net};
use proptest::prelude::*;
use relucid_core::trainer::random_network;
use relucid_core::{Activation, ActivationPattern, Layer, Matrix, Mlp};

#[test]
fn xor_forward_by_hand() {
    let m = xor_net();
    let f = m.forward(&[1.0, 1.0]).unwrap();
    assert_eq!(f.hidden, vec![vec![2.0, 1.0]]);
    assert_eq!(f.logits, vec![0.0]);
    let f = m.forward(&[1.0, 0.0]).unwrap();
    assert_eq!(f.hidden, vec![vec![1.0, 0.0]]);
    assert_eq!(f.logits, vec![1.0]);
    let labels: Vec<usize> = [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]
        .iter()
        .map(|x| m.predict(x).unwrap())
        .collect();
    assert_eq!(labels, [0, 1, 1, 0]);
    assert_eq!(m.activation_pattern(&[1.0, 1.0]).unwrap(), ActivationPattern::new(vec![vec![true, true]]));
    assert_eq!(m.activation_pattern(&[0.0, 0.0]).unwrap(), ActivationPattern::new(vec![vec![false, false]]));
}

#[test]
fn zero_network_is_inactive_everywhere() {
    let h = Layer::new(Matrix::zeros(3, 4), vec![0.0; 4], Activation::Relu).unwrap();
    let o = Layer::new(Matrix::zeros(4, 3), vec![0.0; 3], Activation::Softmax).unwrap();
    let m = Mlp::new(3, vec![h, o]).unwrap();
    let f = m.forward(&[1.0, -2.0, 3.0]).unwrap();
    assert_eq!(f.logits, vec![0.0; 3]);
    assert!(f.hidden.iter().flatten().all(|&v| v == 0.0));
    assert!(m.activation_pattern(&[1.0, -2.0, 3.0]).unwrap().bits().all(|b| !b));
    // Argmax ties go to the lowest index.
    assert_eq!(m.predict(&[5.0, 5.0, 5.0]).unwrap(), 0);
}

#[test]
fn shape_errors() {
    let m = xor_net();
    assert!(m.forward(&[1.0]).is_err());
    assert!(m.predict(&[1.0, 2.0, 3.0]).is_err());
    let bad = Layer::new(Matrix::zeros(2, 2), vec![0.0; 3], Activation::Relu);
    assert!(bad.is_err());
    assert!(Layer::new(Matrix::zeros(1, 1), vec![f64::NAN], Activation::Relu).is_err());
}

proptest! {
    #[test]
    fn forward_matches_reference(seed in 0u64..500, dim in 1usize..5, h1 in 1usize..6, h2 in 0usize..6, out in 1usize..4) {
        let hidden: Vec<usize> = if h2 == 0 { vec![h1] } else { vec![h1, h2] };
        let m = random_network(dim, &hidden, out, seed).unwrap();
        let pts = uniform_points(dim, 20, -3.0, 3.0, seed);
        for x in pts.iter_rows() {
            let f = m.forward(x).unwrap();
            let (logits, h) = reference_forward(&m, x);
            for (a, b) in f.hidden.iter().flatten().zip(h.iter().flatten()) {
                prop_assert!(common::rel_close(*a, *b, 1e-12));
            }
            for (a, b) in f.logits.iter().zip(&logits) {
                prop_assert!(common::rel_close(*a, *b, 1e-12));
            }
            // H = max(0, z) exactly, and bits follow H > 0.
            for (hk, zk) in f.hidden.iter().zip(&f.pre_activations) {
                for (hv, zv) in hk.iter().zip(zk) {
                    prop_assert_eq!(*hv, zv.max(0.0));
                }
            }
            let p = m.activation_pattern(x).unwrap();
            let from_h: Vec<bool> = f.hidden.iter().flatten().map(|&v| v > 0.0).collect();
            prop_assert_eq!(p.bits().collect::<Vec<_>>(), from_h);
        }
    }

    #[test]
    fn predict_invariant_under_output_scaling(seed in 0u64..500, out in 1usize..4, scale in 0.01f64..100.0) {
        let m = random_network(3, &[4, 3], out, seed).unwrap();
        let mut layers: Vec<Layer> = m.layers().cloned().collect();
        let o = layers.last_mut().unwrap();
        for w in o.weights.as_mut_slice() {
            *w *= scale;
        }
        for b in &mut o.biases {
            *b *= scale;
        }
        let scaled = Mlp::new(3, layers).unwrap();
        let pts = uniform_points(3, 30, -2.0, 2.0, seed + 1);
        for x in pts.iter_rows() {
            prop_assert_eq!(m.predict(x).unwrap(), scaled.predict(x).unwrap());
        }
    }
}
