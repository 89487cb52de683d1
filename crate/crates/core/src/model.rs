//! Desk-scale binary classifiers trained by the federation.
//!
//! Both architectures share a flat `Vec<f64>` weight layout so the ledger
//! and the aggregator can treat models as opaque vectors. Loss is binary
//! cross-entropy; labels are 0.0 or 1.0.

use crate::rng::SimRng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Flat model parameters.
pub type WeightVector = Vec<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("weight vector has length {got}, architecture needs {expected}")]
    WeightLength { expected: usize, got: usize },
    #[error("feature vector has length {got}, architecture needs {expected}")]
    FeatureLength { expected: usize, got: usize },
}

/// Network shape. Weight layouts:
///
/// * `LogisticRegression`: `[w (features), b]`
/// * `TwoLayerMlp`: `[W1 (hidden × features, row-major), b1 (hidden),
///   w2 (hidden), b2]`, tanh hidden activation, sigmoid output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Architecture {
    LogisticRegression { features: usize },
    TwoLayerMlp { features: usize, hidden: usize },
}

impl Architecture {
    pub fn features(&self) -> usize {
        match *self {
            Architecture::LogisticRegression { features } => features,
            Architecture::TwoLayerMlp { features, .. } => features,
        }
    }

    pub fn weight_len(&self) -> usize {
        match *self {
            Architecture::LogisticRegression { features } => features + 1,
            Architecture::TwoLayerMlp { features, hidden } => hidden * (features + 2) + 1,
        }
    }

    /// Deterministic initial weights. Logistic regression starts at zero;
    /// the MLP draws small Gaussian matrix entries (zero biases) to break
    /// hidden-unit symmetry.
    pub fn init_weights(&self, rng: &mut SimRng) -> WeightVector {
        match *self {
            Architecture::LogisticRegression { .. } => vec![0.0; self.weight_len()],
            Architecture::TwoLayerMlp { features, hidden } => {
                let normal = Normal::new(0.0, 0.1).expect("fixed std");
                let mut w = vec![0.0; self.weight_len()];
                for value in w.iter_mut().take(hidden * features) {
                    *value = normal.sample(rng);
                }
                let out_start = hidden * features + hidden;
                for value in w[out_start..out_start + hidden].iter_mut() {
                    *value = normal.sample(rng);
                }
                w
            }
        }
    }
}

/// A model instance: an architecture plus its current weights.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub arch: Architecture,
    pub weights: WeightVector,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Keeps log arguments away from zero.
const PROB_FLOOR: f64 = 1e-12;

impl LocalModel {
    pub fn new(arch: Architecture, weights: WeightVector) -> Result<Self, ModelError> {
        if weights.len() != arch.weight_len() {
            return Err(ModelError::WeightLength {
                expected: arch.weight_len(),
                got: weights.len(),
            });
        }
        Ok(Self { arch, weights })
    }

    pub fn init(arch: Architecture, rng: &mut SimRng) -> Self {
        Self { arch, weights: arch.init_weights(rng) }
    }

    /// P(label = 1 | x).
    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arch.features());
        match self.arch {
            Architecture::LogisticRegression { features } => {
                let w = &self.weights;
                let z: f64 = w[..features].iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>()
                    + w[features];
                sigmoid(z)
            }
            Architecture::TwoLayerMlp { features, hidden } => {
                sigmoid(self.mlp_forward(x, features, hidden, None))
            }
        }
    }

    /// Binary cross-entropy of one sample.
    pub fn loss(&self, x: &[f64], y: f64) -> f64 {
        let p = self.predict(x).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
        -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
    }

    /// Mean loss over a dataset.
    pub fn dataset_loss(&self, data: &Dataset) -> f64 {
        assert!(!data.is_empty(), "loss of an empty dataset is undefined");
        let total: f64 = (0..data.len()).map(|i| self.loss(data.row(i), data.label(i))).sum();
        total / data.len() as f64
    }

    /// Fraction of samples classified correctly at the 0.5 threshold.
    pub fn accuracy(&self, data: &Dataset) -> f64 {
        assert!(!data.is_empty(), "accuracy of an empty dataset is undefined");
        let hits = (0..data.len())
            .filter(|&i| {
                let predicted = if self.predict(data.row(i)) >= 0.5 { 1.0 } else { 0.0 };
                predicted == data.label(i)
            })
            .count();
        hits as f64 / data.len() as f64
    }

    /// Gradient of this sample's loss with respect to the weights,
    /// written into `out` (overwritten, `weight_len` long).
    pub fn gradient(&self, x: &[f64], y: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.arch.weight_len());
        match self.arch {
            Architecture::LogisticRegression { features } => {
                let delta = self.predict(x) - y;
                for (o, xi) in out[..features].iter_mut().zip(x) {
                    *o = delta * xi;
                }
                out[features] = delta;
            }
            Architecture::TwoLayerMlp { features, hidden } => {
                let mut hidden_act = vec![0.0; hidden];
                let z2 = self.mlp_forward(x, features, hidden, Some(&mut hidden_act));
                let delta2 = sigmoid(z2) - y;

                let w = &self.weights;
                let b1_start = hidden * features;
                let w2_start = b1_start + hidden;
                let b2 = w2_start + hidden;

                for j in 0..hidden {
                    let a = hidden_act[j];
                    // Output layer.
                    out[w2_start + j] = delta2 * a;
                    // Backprop through tanh.
                    let delta1 = delta2 * w[w2_start + j] * (1.0 - a * a);
                    out[b1_start + j] = delta1;
                    for (o, xi) in out[j * features..(j + 1) * features].iter_mut().zip(x) {
                        *o = delta1 * xi;
                    }
                }
                out[b2] = delta2;
            }
        }
    }

    /// Pre-activation output; optionally records hidden activations.
    fn mlp_forward(
        &self,
        x: &[f64],
        features: usize,
        hidden: usize,
        mut record: Option<&mut [f64]>,
    ) -> f64 {
        let w = &self.weights;
        let b1_start = hidden * features;
        let w2_start = b1_start + hidden;
        let b2 = w2_start + hidden;
        let mut z2 = w[b2];
        for j in 0..hidden {
            let z1: f64 = w[j * features..(j + 1) * features]
                .iter()
                .zip(x)
                .map(|(wi, xi)| wi * xi)
                .sum::<f64>()
                + w[b1_start + j];
            let a = z1.tanh();
            if let Some(buf) = record.as_deref_mut() {
                buf[j] = a;
            }
            z2 += w[w2_start + j] * a;
        }
        z2
    }
}

/// Row-major feature matrix with labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0, "feature dimension must be positive");
        Self { features: Vec::new(), labels: Vec::new(), dim }
    }

    pub fn push_row(&mut self, row: &[f64], label: f64) {
        assert_eq!(row.len(), self.dim);
        debug_assert!(label == 0.0 || label == 1.0);
        self.features.extend_from_slice(row);
        self.labels.push(label);
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
}
