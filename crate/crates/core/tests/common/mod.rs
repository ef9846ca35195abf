#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use relucid_core::{Activation, Layer, Matrix, Mlp};

pub fn xor_net() -> Mlp {
    let h = Layer::new(
        Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap(),
        vec![0.0, -1.0],
        Activation::Relu,
    )
    .unwrap();
    let o = Layer::new(Matrix::from_rows(&[[1.0], [-2.0]]).unwrap(), vec![0.0], Activation::Linear).unwrap();
    Mlp::new(2, vec![h, o]).unwrap()
}

pub fn uniform_points(dim: usize, n: usize, lo: f64, hi: f64, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..n * dim).map(|_| rng.gen_range(lo..hi)).collect();
    Matrix::from_vec(n, dim, data).unwrap()
}

/// Plain triple-loop forward pass, independent of the library's matmul.
pub fn reference_forward(m: &Mlp, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut h = x.to_vec();
    let mut hidden = Vec::new();
    for layer in m.hidden_layers() {
        let mut next = vec![0.0; layer.fan_out()];
        for (j, out) in next.iter_mut().enumerate() {
            let mut z = layer.biases[j];
            for (i, hi) in h.iter().enumerate() {
                z += hi * layer.weights[(i, j)];
            }
            *out = if z > 0.0 { z } else { 0.0 };
        }
        hidden.push(next.clone());
        h = next;
    }
    let o = m.output_layer();
    let logits = (0..o.fan_out())
        .map(|j| o.biases[j] + h.iter().enumerate().map(|(i, hi)| hi * o.weights[(i, j)]).sum::<f64>())
        .collect();
    (logits, hidden)
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
