//! Datasets, seeded splits, min-max scaling and the P2 generator.

use alloc::string::String;
use alloc::vec::Vec;
use alloc::{format, vec};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::Matrix;
use crate::model::Mlp;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_count: usize,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_count: usize,
    ) -> Result<Self> {
        if features.rows() == 0 {
            return Err(Error::InvalidArgument("dataset must have at least one row".into()));
        }
        if labels.len() != features.rows() {
            return Err(Error::shape("labels", features.rows(), labels.len()));
        }
        if feature_names.len() != features.cols() {
            return Err(Error::shape("feature names", features.cols(), feature_names.len()));
        }
        if !features.is_finite() {
            return Err(Error::NonFinite("dataset features"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} outside {class_count} classes"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            feature_names,
            class_count,
        })
    }

    /// Dataset with names `x1 … xd` and `class_count = max label + 1` (at least 2).
    pub fn from_parts(features: Matrix, labels: Vec<usize>) -> Result<Self> {
        let names = crate::rules::default_names(features.cols());
        let classes = labels.iter().copied().max().map_or(2, |m| (m + 1).max(2));
        Dataset::new(features, labels, names, classes)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn class_frequencies(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Most frequent label, ties to the lowest index.
    pub fn majority_class(&self) -> usize {
        majority(&self.class_frequencies())
    }

    /// Per-column `(min, max)`.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.dim())
            .map(|c| {
                self.features.iter_rows().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
                    (lo.min(r[c]), hi.max(r[c]))
                })
            })
            .collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.features.select_rows(idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
            self.feature_names.clone(),
            self.class_count,
        )
    }

    /// Same features with different labels (e.g. a network's predictions).
    pub fn relabel(&self, labels: Vec<usize>, class_count: usize) -> Result<Dataset> {
        Dataset::new(
            self.features.clone(),
            labels,
            self.feature_names.clone(),
            class_count,
        )
    }
}

pub(crate) fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Seeded permutation split; `⌈n·train_fraction⌉` rows go to the training part.
pub fn split(data: &Dataset, spec: SplitSpec) -> Result<(Dataset, Dataset)> {
    let n = data.len();
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {} must lie in (0, 1)",
            spec.train_fraction
        )));
    }
    let n_train = libm::ceil(n as f64 * spec.train_fraction) as usize;
    if n < 2 || n_train == 0 || n_train >= n {
        return Err(Error::InvalidArgument(format!(
            "cannot split {n} rows with fraction {} into two nonempty parts",
            spec.train_fraction
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    idx.shuffle(&mut rng);
    let (a, b) = idx.split_at(n_train);
    Ok((data.subset(a)?, data.subset(b)?))
}

/// The P2 task: `x₁, x₂` uniform in `[0, √6]`, kept only when
/// `4 ≤ x₁² + x₂² ≤ 6`; label 1 iff `x₁² + x₂² ≥ 5`.
pub fn generate_p2(n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("P2 needs n ≥ 1".into()));
    }
    let hi = libm::sqrt(6.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Vec::with_capacity(2 * n);
    let mut labels = Vec::with_capacity(n);
    while labels.len() < n {
        let x1 = rng.gen::<f64>() * hi;
        let x2 = rng.gen::<f64>() * hi;
        let r2 = x1 * x1 + x2 * x2;
        if (4.0..=6.0).contains(&r2) {
            data.push(x1);
            data.push(x2);
            labels.push(p2_label(x1, x2));
        }
    }
    Dataset::new(
        Matrix::from_vec(n, 2, data)?,
        labels,
        vec![String::from("x1"), String::from("x2")],
        2,
    )
}

#[inline]
pub fn p2_label(x1: f64, x2: f64) -> usize {
    usize::from(x1 * x1 + x2 * x2 >= 5.0)
}

/// Per-feature min-max scaling to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(data: &Dataset) -> Self {
        let (min, max) = data.bounding_box().into_iter().unzip();
        MinMaxScaler { min, max }
    }

    fn range(&self, i: usize) -> f64 {
        let r = self.max[i] - self.min[i];
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(i, &v)| (v - self.min[i]) / self.range(i))
            .collect()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        let mut out = Vec::with_capacity(data.len() * data.dim());
        for r in data.features().iter_rows() {
            out.extend(self.transform_row(r));
        }
        Dataset::new(
            Matrix::from_vec(data.len(), data.dim(), out)?,
            data.labels().to_vec(),
            data.feature_names().to_vec(),
            data.class_count(),
        )
    }

    /// Rewrites the first layer of a model trained on scaled inputs so it accepts
    /// raw inputs: `W' = diag(1/range)·W`, `b' = b − (min/range)·W`.
    pub fn fold_into(&self, model: &Mlp) -> Result<Mlp> {
        if model.input_dim() != self.min.len() {
            return Err(Error::shape("scaler width", model.input_dim(), self.min.len()));
        }
        let mut out = model.clone();
        let first = &mut out.hidden_layers_mut()[0];
        let offset: Vec<f64> = (0..self.min.len()).map(|i| self.min[i] / self.range(i)).collect();
        let shift = first.weights.vecmul(&offset);
        for i in 0..self.min.len() {
            let r = self.range(i);
            first.weights.row_mut(i).iter_mut().for_each(|w| *w /= r);
        }
        for (b, s) in first.biases.iter_mut().zip(shift) {
            *b -= s;
        }
        Ok(out)
    }
}
