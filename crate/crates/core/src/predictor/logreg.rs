//! Per-variable logistic regression on the same feature matrix.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::predictor::gcn::sigmoid;
use crate::predictor::metrics::{cross_entropy, PROB_CLAMP};
use crate::predictor::{ProbabilityVector, TrainExample};

#[derive(Debug, Clone, PartialEq)]
pub struct LogReg {
    /// `nfeat × 1`.
    pub weights: Array2<f64>,
    pub bias: f64,
}

impl LogReg {
    pub fn zeros(nfeat: usize) -> Self {
        LogReg {
            weights: Array2::zeros((nfeat, 1)),
            bias: 0.0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn predict(&self, feats: &FeatureMatrix) -> Result<ProbabilityVector> {
        self.predict_raw(&feats.values)
    }

    fn predict_raw(&self, x: &Array2<f64>) -> Result<ProbabilityVector> {
        if x.ncols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "model expects {} features, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let z = x.dot(&self.weights);
        Ok(ProbabilityVector(
            z.column(0)
                .iter()
                .map(|&v| sigmoid(v + self.bias).clamp(PROB_CLAMP, 1.0 - PROB_CLAMP))
                .collect(),
        ))
    }

    /// Mean cross-entropy over the batch and its gradient `(dW, db)`.
    pub fn batch_gradients(&self, batch: &[&TrainExample]) -> Result<(f64, Array2<f64>, f64)> {
        let total: usize = batch.iter().map(|e| e.labels.len()).sum();
        if total == 0 {
            return Err(Error::EmptyDataset);
        }
        let norm = total as f64;
        let mut dw = Array2::zeros(self.weights.raw_dim());
        let mut db = 0.0;
        let mut loss = 0.0;
        for ex in batch {
            let p = self.predict_raw(&ex.features.values)?;
            loss += cross_entropy(&p.0, &ex.labels) * ex.labels.len() as f64;
            let dz = Array2::from_shape_fn((p.len(), 1), |(i, _)| (p.0[i] - ex.labels[i]) / norm);
            dw += &ex.features.values.t().dot(&dz);
            db += dz.sum();
        }
        Ok((loss / norm, dw, db))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkage::NormalizedLaplacian;
    use crate::predictor::{train_logreg, TrainConfig};
    use ndarray::arr2;

    fn example(values: Array2<f64>, labels: Vec<f64>) -> TrainExample {
        let n = values.nrows();
        TrainExample::new(
            NormalizedLaplacian::identity(n),
            FeatureMatrix {
                names: (0..values.ncols()).map(|k| format!("f{k}")).collect(),
                values,
            },
            labels,
        )
        .unwrap()
    }

    #[test]
    fn zero_model_is_uninformative() {
        let ex = example(arr2(&[[0.1, 0.9], [1.0, 0.0]]), vec![1.0, 0.0]);
        assert_eq!(LogReg::zeros(2).predict(&ex.features).unwrap().0, vec![0.5, 0.5]);
    }

    #[test]
    fn identical_rows_get_identical_probabilities() {
        let model = LogReg {
            weights: arr2(&[[0.4], [-1.3]]),
            bias: 0.2,
        };
        let ex = example(arr2(&[[0.3, 0.6], [0.3, 0.6], [0.3, 0.6]]), vec![1.0, 0.0, 1.0]);
        let p = model.predict(&ex.features).unwrap();
        assert!(p.0.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn separable_single_feature() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 / 19.0).collect();
        let labels: Vec<f64> = xs.iter().map(|&x| if x > 0.5 { 1.0 } else { 0.0 }).collect();
        let ex = example(Array2::from_shape_vec((20, 1), xs).unwrap(), labels.clone());
        let config = TrainConfig {
            epochs: 2000,
            learning_rate: 1.0,
            ..TrainConfig::default()
        };
        let model = train_logreg(std::slice::from_ref(&ex), &config).unwrap().0;
        let p = model.predict(&ex.features).unwrap();
        let correct = p.0.iter().zip(&labels).filter(|(p, y)| (**p > 0.5) == (**y > 0.5)).count();
        assert_eq!(correct, 20);
    }
}
