//! Residual graph convolution over the linkage-graph Laplacian.
//!
//! Layer `l` computes `H' = act(L H W_l + H)`, with ReLU on hidden layers and
//! a sigmoid on the single-column output layer. The residual term is dropped
//! wherever the input and output widths differ (the first and last layers).
//! No biases.

use ndarray::{Array2, Zip};
use rand::RngExt;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::generate::rng;
use crate::linkage::NormalizedLaplacian;
use crate::predictor::metrics::PROB_CLAMP;
use crate::predictor::{ProbabilityVector, TrainExample};

pub const DEFAULT_LAYERS: usize = 20;
pub const DEFAULT_HIDDEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    /// `weights[l]` is `dims[l] × dims[l + 1]`.
    pub weights: Vec<Array2<f64>>,
}

/// Activations kept for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[l]` is `H^l`; the last entry is the `n × 1` output.
    pub inputs: Vec<Array2<f64>>,
    /// `L H^l` per layer.
    pub propagated: Vec<Array2<f64>>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Uniform `±sqrt(6 / (fan_in + fan_out))`.
pub(crate) fn glorot(rows: usize, cols: usize, rng: &mut impl RngExt) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..bound))
}

impl GcnModel {
    /// `nlayers` weight matrices: `input → hidden → … → hidden → 1`.
    pub fn new(input: usize, hidden: usize, nlayers: usize, seed: u64) -> Result<Self> {
        if nlayers == 0 || input == 0 || hidden == 0 {
            return Err(Error::InvalidArgument("GCN needs at least one layer and non-zero widths".into()));
        }
        let mut dims = vec![input];
        dims.extend(std::iter::repeat_n(hidden, nlayers - 1));
        dims.push(1);
        let mut rng = rng(seed);
        let weights = dims.windows(2).map(|w| glorot(w[0], w[1], &mut rng)).collect();
        Ok(GcnModel { weights })
    }

    pub fn from_weights(weights: Vec<Array2<f64>>) -> Result<Self> {
        let model = GcnModel { weights };
        model.check()?;
        Ok(model)
    }

    pub fn zeros(dims: &[usize]) -> Self {
        GcnModel {
            weights: dims.windows(2).map(|w| Array2::zeros((w[0], w[1]))).collect(),
        }
    }

    pub fn nlayers(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims: Vec<usize> = self.weights.iter().map(|w| w.nrows()).collect();
        dims.push(self.weights.last().map_or(0, |w| w.ncols()));
        dims
    }

    pub fn input_dim(&self) -> usize {
        self.weights[0].nrows()
    }

    fn check(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Dimension("GCN has no layers".into()));
        }
        for (l, pair) in self.weights.windows(2).enumerate() {
            if pair[0].ncols() != pair[1].nrows() {
                return Err(Error::Dimension(format!(
                    "layer {l} outputs {} columns but layer {} expects {}",
                    pair[0].ncols(),
                    l + 1,
                    pair[1].nrows()
                )));
            }
        }
        if self.weights.last().unwrap().ncols() != 1 {
            return Err(Error::Dimension("output layer must have one column".into()));
        }
        if self.weights.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Dimension("non-finite weight".into()));
        }
        Ok(())
    }

    fn has_residual(&self, l: usize) -> bool {
        let w = &self.weights[l];
        l + 1 < self.weights.len() && w.nrows() == w.ncols()
    }

    pub fn forward(&self, lap: &NormalizedLaplacian, feats: &FeatureMatrix) -> Result<(ProbabilityVector, ForwardCache)> {
        self.forward_raw(lap, &feats.values)
    }

    pub(crate) fn forward_raw(
        &self,
        lap: &NormalizedLaplacian,
        h0: &Array2<f64>,
    ) -> Result<(ProbabilityVector, ForwardCache)> {
        if lap.n() != h0.nrows() {
            return Err(Error::Dimension(format!(
                "Laplacian has {} nodes, features have {} rows",
                lap.n(),
                h0.nrows()
            )));
        }
        if h0.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                h0.ncols()
            )));
        }
        let last = self.weights.len() - 1;
        let mut inputs = vec![h0.clone()];
        let mut propagated = Vec::with_capacity(self.weights.len());
        for (l, w) in self.weights.iter().enumerate() {
            let h = &inputs[l];
            let lh = lap.apply(h);
            let mut z = lh.dot(w);
            if self.has_residual(l) {
                z += h;
            }
            if l == last {
                z.mapv_inplace(sigmoid);
            } else {
                z.mapv_inplace(|v| v.max(0.0));
            }
            propagated.push(lh);
            inputs.push(z);
        }
        let p = inputs[last + 1]
            .column(0)
            .iter()
            .map(|&v| v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
            .collect();
        Ok((ProbabilityVector(p), ForwardCache { inputs, propagated }))
    }

    /// Gradients of the mean cross-entropy of one example.
    pub fn gradients(&self, example: &TrainExample) -> Result<(f64, Vec<Array2<f64>>)> {
        self.batch_gradients(&[example])
    }

    /// Gradients of the cross-entropy averaged over all variables of the batch.
    pub fn batch_gradients(&self, batch: &[&TrainExample]) -> Result<(f64, Vec<Array2<f64>>)> {
        let total: usize = batch.iter().map(|e| e.labels.len()).sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut grads: Vec<Array2<f64>> = self.weights.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let mut loss_sum = 0.0;
        for ex in batch {
            let (p, cache) = self.forward_raw(&ex.laplacian, &ex.features.values)?;
            loss_sum += super::metrics::cross_entropy(&p.0, &ex.labels) * ex.labels.len() as f64;
            self.backward(&ex.laplacian, &cache, &ex.labels, total as f64, &mut grads);
        }
        Ok((loss_sum / total as f64, grads))
    }

    fn backward(
        &self,
        lap: &NormalizedLaplacian,
        cache: &ForwardCache,
        labels: &[f64],
        norm: f64,
        grads: &mut [Array2<f64>],
    ) {
        let last = self.weights.len() - 1;
        let out = &cache.inputs[last + 1];
        // d loss / d pre-sigmoid = (p - y) / N.
        let mut dz = Array2::from_shape_fn(out.raw_dim(), |(i, _)| (out[[i, 0]] - labels[i]) / norm);
        for l in (0..=last).rev() {
            grads[l] += &cache.propagated[l].t().dot(&dz);
            if l == 0 {
                break;
            }
            // L is symmetric: d(L H W)/dH contracts to L dZ Wᵀ.
            let mut dh = lap.apply(&dz.dot(&self.weights[l].t()));
            if self.has_residual(l) {
                dh += &dz;
            }
            Zip::from(&mut dh).and(&cache.inputs[l]).for_each(|g, &a| {
                if a <= 0.0 {
                    *g = 0.0;
                }
            });
            dz = dh;
        }
    }
}
