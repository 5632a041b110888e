//! Solution prediction: per-variable probabilities of taking value 1 in an
//! optimal solution.

mod gcn;
mod logreg;
pub mod metrics;

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

pub use gcn::{ForwardCache, GcnModel, DEFAULT_HIDDEN, DEFAULT_LAYERS};
pub use logreg::LogReg;
pub use metrics::{average_precision, cross_entropy, prevalence};

use crate::error::{Error, Result};
use crate::features::{instance_features, FeatureMatrix};
use crate::generate::rng;
use crate::io;
use crate::linkage::{build_linkage_graph, normalized_laplacian, NormalizedLaplacian};
use crate::mip::MipInstance;

pub const MODEL_FILE_VERSION: u32 = 1;
/// The 20-layer residual stack amplifies activations by orders of magnitude
/// at initialization; unclipped steps push every ReLU dead within an epoch.
pub const DEFAULT_GRAD_CLIP: f64 = 1.0;

/// Factor that brings the global norm of `grads` down to `clip`.
fn clip_scale<'a>(grads: impl IntoIterator<Item = &'a f64>, clip: Option<f64>) -> f64 {
    let Some(clip) = clip else { return 1.0 };
    let norm = grads.into_iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > clip {
        clip / norm
    } else {
        1.0
    }
}

/// `p_i = P(x_i = 1)`, each strictly inside `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbabilityVector(pub Vec<f64>);

impl ProbabilityVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_json(path, &self.0)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let p: Vec<f64> = io::read_json(path)?;
        if p.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
            return Err(Error::parse(path, "probabilities must lie in [0, 1]"));
        }
        Ok(ProbabilityVector(p))
    }
}

/// One solved instance: Laplacian, normalized features, and 0/1 labels.
#[derive(Debug, Clone)]
pub struct TrainExample {
    pub laplacian: NormalizedLaplacian,
    pub features: FeatureMatrix,
    pub labels: Vec<f64>,
}

impl TrainExample {
    pub fn new(laplacian: NormalizedLaplacian, features: FeatureMatrix, labels: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if laplacian.n() != n || features.nvars() != n {
            return Err(Error::Dimension(format!(
                "Laplacian {} / features {} / labels {} disagree",
                laplacian.n(),
                features.nvars(),
                n
            )));
        }
        Ok(TrainExample {
            laplacian,
            features,
            labels,
        })
    }

    /// Builds graph and features from an instance and its 0/1 solution.
    pub fn from_instance(inst: &MipInstance, solution: &[u8]) -> Result<Self> {
        let (laplacian, features) = model_inputs(inst)?;
        TrainExample::new(laplacian, features, solution.iter().map(|&b| b as f64).collect())
    }
}

/// Laplacian and normalized features for an instance.
pub fn model_inputs(inst: &MipInstance) -> Result<(NormalizedLaplacian, FeatureMatrix)> {
    let lap = normalized_laplacian(&build_linkage_graph(inst));
    let feats = instance_features(inst)?;
    Ok((lap, feats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Fraction of instances held out; when positive the returned model is the
    /// one with the lowest validation loss.
    pub validation_fraction: f64,
    pub layers: usize,
    pub hidden: usize,
    /// Largest global gradient norm applied in one step; larger gradients are
    /// rescaled to this norm. `None` disables clipping.
    pub grad_clip: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 1e-2,
            seed: 0,
            validation_fraction: 0.0,
            layers: DEFAULT_LAYERS,
            hidden: DEFAULT_HIDDEN,
            grad_clip: Some(DEFAULT_GRAD_CLIP),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Mean per-step training loss of each epoch (measured before each step).
    pub epoch_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    pub best_epoch: Option<usize>,
}

/// Parameters updated by plain SGD.
trait Sgd: Clone {
    fn loss_and_step(&mut self, batch: &[&TrainExample], lr: f64, clip: Option<f64>) -> Result<f64>;
    fn loss(&self, batch: &[&TrainExample]) -> Result<f64>;
}

impl Sgd for GcnModel {
    fn loss_and_step(&mut self, batch: &[&TrainExample], lr: f64, clip: Option<f64>) -> Result<f64> {
        let (loss, grads) = self.batch_gradients(batch)?;
        let step = lr * clip_scale(grads.iter().flatten(), clip);
        for (w, g) in self.weights.iter_mut().zip(&grads) {
            w.scaled_add(-step, g);
        }
        Ok(loss)
    }

    fn loss(&self, batch: &[&TrainExample]) -> Result<f64> {
        Ok(self.batch_gradients(batch)?.0)
    }
}

impl Sgd for LogReg {
    fn loss_and_step(&mut self, batch: &[&TrainExample], lr: f64, clip: Option<f64>) -> Result<f64> {
        let (loss, dw, db) = self.batch_gradients(batch)?;
        let step = lr * clip_scale(dw.iter().chain([&db]), clip);
        self.weights.scaled_add(-step, &dw);
        self.bias -= step * db;
        Ok(loss)
    }

    fn loss(&self, batch: &[&TrainExample]) -> Result<f64> {
        Ok(self.batch_gradients(batch)?.0)
    }
}

/// One graph per step, order reshuffled each epoch from the seed.
fn sgd<M: Sgd>(mut model: M, dataset: &[TrainExample], config: &TrainConfig) -> Result<(M, TrainLog)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = rng(config.seed ^ 0x5eed_5eed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let n_val = if config.validation_fraction > 0.0 && dataset.len() > 1 {
        ((dataset.len() as f64 * config.validation_fraction).round() as usize).clamp(1, dataset.len() - 1)
    } else {
        0
    };
    order.shuffle(&mut rng);
    let val: Vec<&TrainExample> = order[..n_val].iter().map(|&i| &dataset[i]).collect();
    let mut train_idx = order[n_val..].to_vec();
    train_idx.sort_unstable();

    let mut log = TrainLog::default();
    let mut best: Option<(f64, M)> = None;
    for epoch in 0..config.epochs {
        train_idx.shuffle(&mut rng);
        let mut total = 0.0;
        for &i in &train_idx {
            total += model.loss_and_step(&[&dataset[i]], config.learning_rate, config.grad_clip)?;
        }
        log.epoch_loss.push(total / train_idx.len() as f64);
        if !val.is_empty() {
            let v = model.loss(&val)?;
            log.validation_loss.push(v);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, model.clone()));
                log.best_epoch = Some(epoch);
            }
        }
    }
    Ok(match best {
        Some((_, m)) => (m, log),
        None => (model, log),
    })
}

pub fn train_gcn(dataset: &[TrainExample], config: &TrainConfig) -> Result<(GcnModel, TrainLog)> {
    let first = dataset.first().ok_or(Error::EmptyDataset)?;
    let model = GcnModel::new(first.features.nfeat(), config.hidden, config.layers, config.seed)?;
    sgd(model, dataset, config)
}

pub fn train_logreg(dataset: &[TrainExample], config: &TrainConfig) -> Result<(LogReg, TrainLog)> {
    let first = dataset.first().ok_or(Error::EmptyDataset)?;
    sgd(LogReg::zeros(first.features.nfeat()), dataset, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gcn,
    Lr,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Gcn(GcnModel),
    Lr(LogReg),
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "type")]
    kind: ModelKind,
    dims: Vec<usize>,
    weights: Vec<Vec<f64>>,
    version: u32,
}

fn to_matrix(data: &[f64], rows: usize, cols: usize, path: &Path) -> Result<Array2<f64>> {
    if data.len() != rows * cols {
        return Err(Error::parse(
            path,
            format!("weight block has {} values, expected {rows}x{cols}", data.len()),
        ));
    }
    Array2::from_shape_vec((rows, cols), data.to_vec()).map_err(|e| Error::parse(path, e))
}

fn row_major(m: &Array2<f64>) -> Vec<f64> {
    m.rows().into_iter().flat_map(|r| r.to_vec()).collect()
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Gcn(_) => ModelKind::Gcn,
            Model::Lr(_) => ModelKind::Lr,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Gcn(m) => m.input_dim(),
            Model::Lr(m) => m.input_dim(),
        }
    }

    pub fn predict(&self, lap: &NormalizedLaplacian, feats: &FeatureMatrix) -> Result<ProbabilityVector> {
        match self {
            Model::Gcn(m) => Ok(m.forward(lap, feats)?.0),
            Model::Lr(m) => m.predict(feats),
        }
    }

    /// Builds model inputs from the instance, then predicts.
    pub fn predict_instance(&self, inst: &MipInstance) -> Result<ProbabilityVector> {
        let (lap, feats) = model_inputs(inst)?;
        self.predict(&lap, &feats)
    }

    /// JSON `{type, dims, weights, version}`. LR stores `[w, [bias]]`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = match self {
            Model::Gcn(m) => ModelFile {
                kind: ModelKind::Gcn,
                dims: m.dims(),
                weights: m.weights.iter().map(row_major).collect(),
                version: MODEL_FILE_VERSION,
            },
            Model::Lr(m) => ModelFile {
                kind: ModelKind::Lr,
                dims: vec![m.input_dim(), 1],
                weights: vec![row_major(&m.weights), vec![m.bias]],
                version: MODEL_FILE_VERSION,
            },
        };
        io::write_json(path, &file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file: ModelFile = io::read_json(path)?;
        if file.version != MODEL_FILE_VERSION {
            return Err(Error::Version {
                found: file.version,
                expected: MODEL_FILE_VERSION,
            });
        }
        match file.kind {
            ModelKind::Gcn => {
                if file.dims.len() < 2 || file.weights.len() != file.dims.len() - 1 {
                    return Err(Error::parse(path, "GCN dims and weight count disagree"));
                }
                let weights = file
                    .weights
                    .iter()
                    .zip(file.dims.windows(2))
                    .map(|(w, d)| to_matrix(w, d[0], d[1], path))
                    .collect::<Result<Vec<_>>>()?;
                GcnModel::from_weights(weights)
                    .map(Model::Gcn)
                    .map_err(|e| Error::parse(path, e))
            }
            ModelKind::Lr => {
                if file.dims.len() != 2 || file.dims[1] != 1 || file.weights.len() != 2 || file.weights[1].len() != 1 {
                    return Err(Error::parse(path, "LR model must have dims [F, 1] and weights [w, [bias]]"));
                }
                let weights = to_matrix(&file.weights[0], file.dims[0], 1, path)?;
                Ok(Model::Lr(LogReg {
                    weights,
                    bias: file.weights[1][0],
                }))
            }
        }
    }
}
