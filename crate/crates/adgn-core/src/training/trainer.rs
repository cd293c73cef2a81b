//! Training loops: mini-batch regression over graph datasets and
//! full-batch node classification, both with early stopping on a
//! validation metric and a single test evaluation at the best
//! checkpoint.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::graph::{DatasetSplit, NodeDataset, Sample};
use crate::layers::{bind_model, model_forward, Aggregation, ModelParams, Pooling};
use crate::matrix::Matrix;
use crate::training::loss::{accuracy, squared_error_sum};
use crate::training::optimizer::{adam_step, AdamConfig, AdamState};
use crate::util::child_seed;

/// Seed streams, kept distinct so reordering one consumer cannot shift
/// another.
const INIT_STREAM: u64 = 11;
const SHUFFLE_STREAM: u64 = 12;

/// Which architecture a run trains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    AdgnSimple,
    AdgnGcn,
    GcnBaseline,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::AdgnSimple => "adgn-simple",
            ModelKind::AdgnGcn => "adgn-gcn",
            ModelKind::GcnBaseline => "gcn-baseline",
        }
    }

    pub fn is_adgn(&self) -> bool {
        !matches!(self, ModelKind::GcnBaseline)
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "adgn-simple" => Ok(ModelKind::AdgnSimple),
            "adgn-gcn" => Ok(ModelKind::AdgnGcn),
            "gcn-baseline" => Ok(ModelKind::GcnBaseline),
            other => Err(Error::InvalidParameter {
                name: "model",
                reason: format!("unknown model kind {other:?}"),
            }),
        }
    }
}

/// One hyper-parameter point. `epsilon`/`gamma` are ignored by the
/// baseline stack.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelHyper {
    pub kind: ModelKind,
    pub layers: usize,
    pub dim: usize,
    pub epsilon: f64,
    pub gamma: f64,
}

impl ModelHyper {
    pub fn build(&self, d_in: usize, d_out: usize, pooling: Pooling, seed: u64) -> ModelParams {
        match self.kind {
            ModelKind::AdgnSimple => ModelParams::new_adgn(
                d_in,
                self.dim,
                d_out,
                self.layers,
                self.epsilon,
                self.gamma,
                Aggregation::Simple,
                pooling,
                seed,
            ),
            ModelKind::AdgnGcn => ModelParams::new_adgn(
                d_in,
                self.dim,
                d_out,
                self.layers,
                self.epsilon,
                self.gamma,
                Aggregation::Gcn,
                pooling,
                seed,
            ),
            ModelKind::GcnBaseline => {
                ModelParams::new_gcn_stack(d_in, self.dim, d_out, self.layers, pooling, seed)
            }
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            ModelKind::GcnBaseline => format!("{}(L={},d={})", self.kind.name(), self.layers, self.dim),
            _ => format!(
                "{}(L={},d={},eps={},gamma={})",
                self.kind.name(),
                self.layers,
                self.dim,
                self.epsilon,
                self.gamma
            ),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::InvalidParameter {
                name: "layers",
                reason: "need at least one layer".to_string(),
            });
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter {
                name: "dim",
                reason: "need a positive state dimension".to_string(),
            });
        }
        if self.kind.is_adgn() && !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("training requires a positive step size, got {}", self.epsilon),
            });
        }
        if self.kind.is_adgn() && !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("diffusion strength must be finite and non-negative, got {}", self.gamma),
            });
        }
        Ok(())
    }
}

/// Loop controls shared by both protocols.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSettings {
    pub max_epochs: usize,
    /// Stop once this many epochs pass without a validation improvement.
    pub patience: usize,
    /// Graphs per gradient step in the regression protocol; ignored by
    /// the full-batch node protocol.
    pub batch_size: usize,
    pub adam: AdamConfig,
    /// Node-state reduction for graph-level targets.
    #[serde(default = "default_pooling")]
    pub pooling: Pooling,
}

fn default_pooling() -> Pooling {
    Pooling::Mean
}

impl TrainSettings {
    pub fn new(max_epochs: usize, patience: usize, batch_size: usize, adam: AdamConfig) -> Self {
        TrainSettings {
            max_epochs,
            patience,
            batch_size,
            adam,
            pooling: default_pooling(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::InvalidParameter {
                name: "max_epochs",
                reason: "need at least one epoch".to_string(),
            });
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidParameter {
                name: "batch_size",
                reason: "need a positive batch size".to_string(),
            });
        }
        if self.pooling == Pooling::None {
            return Err(Error::InvalidParameter {
                name: "pooling",
                reason: "graph-level targets need mean or sum pooling".to_string(),
            });
        }
        self.adam.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_metric: f64,
}

/// Everything a finished run reports. Wall-clock time is carried for
/// display but never serialized, so artifact bytes depend only on the
/// computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub model: String,
    pub task: String,
    pub seed: u64,
    pub config_hash: String,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch with the best validation metric; 0 when no epoch
    /// finished.
    pub best_epoch: usize,
    pub stopped_epoch: usize,
    pub best_validation: f64,
    /// Metric at the best checkpoint, computed exactly once. NaN when
    /// the run diverged before any checkpoint existed.
    pub test_metric: f64,
    pub diverged: bool,
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

/// A finished run: the report plus the best-checkpoint parameters.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub report: TrainReport,
    pub params: ModelParams,
}

struct BatchLoss {
    total: Tensor,
    count: usize,
    leaves: Vec<Tensor>,
    /// Squared-error sum of each sample in batch order. A sample's value
    /// depends only on the parameters and the sample itself, so summing
    /// these in dataset order gives an epoch loss that is bitwise
    /// independent of how the shuffle grouped the batches.
    per_sample: Vec<f64>,
}

/// Forward passes for every sample in `batch` on one tape, returning the
/// node-weighted squared-error total and the entry count.
fn batch_squared_error(tape: &mut Tape, params: &ModelParams, batch: &[&Sample]) -> Result<BatchLoss> {
    let binding = bind_model(tape, params)?;
    let mut total: Option<Tensor> = None;
    let mut count = 0usize;
    let mut per_sample = Vec::with_capacity(batch.len());
    for sample in batch {
        let out = model_forward(tape, &binding, &sample.graph)?;
        let target = target_matrix(sample)?;
        count += target.rows() * target.cols();
        let t = tape.leaf(&target)?;
        let sq = squared_error_sum(tape, out.output, t)?;
        per_sample.push(tape.value(sq)?[0]);
        total = Some(match total {
            None => sq,
            Some(acc) => tape.add(acc, sq)?,
        });
    }
    let total = total.ok_or(Error::InvalidParameter {
        name: "batch",
        reason: "empty batch".to_string(),
    })?;
    Ok(BatchLoss {
        total,
        count,
        leaves: binding.leaves,
        per_sample,
    })
}

fn target_matrix(sample: &Sample) -> Result<Matrix> {
    if let Some(values) = &sample.target.node_values {
        Matrix::from_vec(values.len(), 1, values.clone())
    } else if let Some(value) = sample.target.graph_value {
        Matrix::from_vec(1, 1, vec![value])
    } else {
        Err(Error::InvalidParameter {
            name: "target",
            reason: "sample carries no target".to_string(),
        })
    }
}

/// Node-weighted MSE of `params` over `samples`, without gradients.
pub fn evaluate_mse(params: &ModelParams, samples: &[Sample]) -> Result<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for sample in samples {
        let mut tape = Tape::new();
        let binding = bind_model(&mut tape, params)?;
        let out = model_forward(&mut tape, &binding, &sample.graph)?;
        let target = target_matrix(sample)?;
        let pred = tape.value(out.output)?;
        for (p, t) in pred.iter().zip(target.data()) {
            let d = p - t;
            sum += d * d;
        }
        count += target.rows() * target.cols();
    }
    if count == 0 {
        return Err(Error::InvalidParameter {
            name: "samples",
            reason: "no samples to evaluate".to_string(),
        });
    }
    Ok(sum / count as f64)
}

/// Mini-batch regression on a graph dataset. Validation metric is raw
/// MSE (lower is better); the test metric is the MSE of the best
/// checkpoint.
pub fn train_gpp(
    dataset: &DatasetSplit,
    hyper: &ModelHyper,
    settings: &TrainSettings,
    seed: u64,
    config_hash: &str,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    settings.validate()?;
    if dataset.train.is_empty() || dataset.validation.is_empty() || dataset.test.is_empty() {
        return Err(Error::InvalidParameter {
            name: "dataset",
            reason: "train, validation, and test splits must be non-empty".to_string(),
        });
    }
    let start = Instant::now();
    let pooling = if dataset.task.is_node_level() {
        Pooling::None
    } else {
        settings.pooling
    };
    let d_in = dataset.train[0].graph.features().cols();
    let mut params = hyper.build(d_in, 1, pooling, child_seed(seed, INIT_STREAM));
    let mut state = AdamState::new(&params);
    let mut shuffle_rng = crate::util::rng_from_seed(child_seed(seed, SHUFFLE_STREAM));

    let mut report = TrainReport {
        model: hyper.kind.name().to_string(),
        task: dataset.task.name().to_string(),
        seed,
        config_hash: config_hash.to_string(),
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_epoch: 0,
        best_validation: f64::INFINITY,
        test_metric: f64::NAN,
        diverged: false,
        wall_clock_seconds: 0.0,
    };
    let mut best_params: Option<ModelParams> = None;
    let mut indices: Vec<usize> = (0..dataset.train.len()).collect();

    let mut epoch_sq = vec![0.0; dataset.train.len()];

    'epochs: for epoch in 1..=settings.max_epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_count = 0usize;
        for chunk in indices.chunks(settings.batch_size) {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &dataset.train[i]).collect();
            let step = (|| -> Result<BatchLoss> {
                let mut tape = Tape::new();
                let batch_loss = batch_squared_error(&mut tape, &params, &batch)?;
                let loss = tape.scale(batch_loss.total, 1.0 / batch_loss.count as f64)?;
                tape.backward(loss)?;
                let mut grads = Vec::with_capacity(batch_loss.leaves.len());
                for &leaf in &batch_loss.leaves {
                    grads.push(tape.grad_matrix(leaf)?);
                }
                adam_step(&mut params, &grads, &mut state, &settings.adam)?;
                Ok(batch_loss)
            })();
            match step {
                Ok(batch_loss) => {
                    // Store per-sample squared errors at their dataset
                    // positions so the epoch sum below is independent of
                    // the shuffle order.
                    for (&i, &sq) in chunk.iter().zip(&batch_loss.per_sample) {
                        epoch_sq[i] = sq;
                    }
                    epoch_count += batch_loss.count;
                }
                Err(e) if e.is_numerical() => {
                    report.diverged = true;
                    report.stopped_epoch = epoch;
                    break 'epochs;
                }
                Err(e) => return Err(e),
            }
        }
        let train_loss = epoch_sq.iter().sum::<f64>() / epoch_count as f64;
        let validation = match evaluate_mse(&params, &dataset.validation) {
            Ok(v) if v.is_finite() => v,
            Ok(_) => {
                report.diverged = true;
                report.stopped_epoch = epoch;
                break 'epochs;
            }
            Err(e) if e.is_numerical() => {
                report.diverged = true;
                report.stopped_epoch = epoch;
                break 'epochs;
            }
            Err(e) => return Err(e),
        };
        report.epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_metric: validation,
        });
        report.stopped_epoch = epoch;
        if validation < report.best_validation {
            report.best_validation = validation;
            report.best_epoch = epoch;
            best_params = Some(params.clone());
        }
        if epoch - report.best_epoch >= settings.patience {
            break;
        }
    }

    let final_params = best_params.unwrap_or_else(|| params.clone());
    if report.best_epoch > 0 {
        match evaluate_mse(&final_params, &dataset.test) {
            Ok(v) => report.test_metric = v,
            Err(e) if e.is_numerical() => report.diverged = true,
            Err(e) => return Err(e),
        }
    }
    if report.best_validation.is_infinite() {
        report.best_validation = f64::NAN;
    }
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        report,
        params: final_params,
    })
}

/// Logits for every node of a labeled graph under `params`.
pub fn node_logits(params: &ModelParams, dataset: &NodeDataset) -> Result<Matrix> {
    let mut tape = Tape::new();
    let binding = bind_model(&mut tape, params)?;
    let out = model_forward(&mut tape, &binding, &dataset.graph)?;
    tape.value_matrix(out.output)
}

fn mask_rows(mask: &[bool]) -> std::sync::Arc<[u32]> {
    mask.iter()
        .enumerate()
        .filter(|(_, &m)| m)
        .map(|(i, _)| i as u32)
        .collect::<Vec<u32>>()
        .into()
}

/// Full-batch node classification on one split of a labeled graph.
/// Validation metric is accuracy (higher is better); the test metric is
/// the accuracy of the best checkpoint.
pub fn train_node(
    dataset: &NodeDataset,
    split_index: usize,
    hyper: &ModelHyper,
    settings: &TrainSettings,
    seed: u64,
    config_hash: &str,
) -> Result<TrainOutcome> {
    hyper.validate()?;
    settings.adam.validate()?;
    if settings.max_epochs == 0 {
        return Err(Error::InvalidParameter {
            name: "max_epochs",
            reason: "need at least one epoch".to_string(),
        });
    }
    let splits = dataset.splits.get(split_index).ok_or(Error::InvalidParameter {
        name: "split_index",
        reason: format!("dataset has {} splits, asked for {}", dataset.splits.len(), split_index),
    })?;
    let start = Instant::now();
    let d_in = dataset.graph.features().cols();
    let mut params = hyper.build(
        d_in,
        dataset.num_classes as usize,
        Pooling::None,
        child_seed(seed, INIT_STREAM),
    );
    let mut state = AdamState::new(&params);
    let labels: std::sync::Arc<[u32]> = dataset.labels.clone().into();
    let train_rows = mask_rows(&splits.train);
    if train_rows.is_empty() {
        return Err(Error::InvalidParameter {
            name: "split",
            reason: "training mask selects no nodes".to_string(),
        });
    }

    let mut report = TrainReport {
        model: hyper.kind.name().to_string(),
        task: "node-classification".to_string(),
        seed,
        config_hash: config_hash.to_string(),
        epochs: Vec::new(),
        best_epoch: 0,
        stopped_epoch: 0,
        best_validation: f64::NEG_INFINITY,
        test_metric: f64::NAN,
        diverged: false,
        wall_clock_seconds: 0.0,
    };
    let mut best_params: Option<ModelParams> = None;

    for epoch in 1..=settings.max_epochs {
        let step = (|| -> Result<(f64, f64)> {
            let mut tape = Tape::new();
            let binding = bind_model(&mut tape, &params)?;
            let out = model_forward(&mut tape, &binding, &dataset.graph)?;
            let loss = tape.softmax_cross_entropy(out.output, &labels, &train_rows)?;
            let logits = tape.value_matrix(out.output)?;
            tape.backward(loss)?;
            let mut grads = Vec::with_capacity(binding.leaves.len());
            for &leaf in &binding.leaves {
                grads.push(tape.grad_matrix(leaf)?);
            }
            let loss_value = tape.value(loss)?[0];
            adam_step(&mut params, &grads, &mut state, &settings.adam)?;
            let val_acc = accuracy(&logits, &dataset.labels, &splits.validation)?;
            Ok((loss_value, val_acc))
        })();
        let (train_loss, validation) = match step {
            Ok(v) => v,
            Err(e) if e.is_numerical() => {
                report.diverged = true;
                report.stopped_epoch = epoch;
                break;
            }
            Err(e) => return Err(e),
        };
        report.epochs.push(EpochRecord {
            epoch,
            train_loss,
            validation_metric: validation,
        });
        report.stopped_epoch = epoch;
        if validation > report.best_validation {
            report.best_validation = validation;
            report.best_epoch = epoch;
            best_params = Some(params.clone());
        }
        if epoch - report.best_epoch >= settings.patience {
            break;
        }
    }

    let final_params = best_params.unwrap_or_else(|| params.clone());
    if report.best_epoch > 0 {
        match node_logits(&final_params, dataset) {
            Ok(logits) => report.test_metric = accuracy(&logits, &dataset.labels, &splits.test)?,
            Err(e) if e.is_numerical() => report.diverged = true,
            Err(e) => return Err(e),
        }
    }
    if report.best_validation.is_infinite() {
        report.best_validation = f64::NAN;
    }
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok(TrainOutcome {
        report,
        params: final_params,
    })
}
