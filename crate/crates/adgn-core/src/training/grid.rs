//! Hyper-parameter grid search: Cartesian enumeration, repeated seeded
//! runs per point, and deterministic ranking by mean validation metric.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DatasetSplit, NodeDataset};
use crate::layers::ModelParams;
use crate::training::trainer::{
    train_gpp, train_node, ModelHyper, ModelKind, TrainReport, TrainSettings,
};

/// Value lists whose Cartesian product forms the grid. `epsilons` and
/// `gammas` only apply to the antisymmetric cores; the baseline stack
/// enumerates layers x dims x learning rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub layers: Vec<usize>,
    pub dims: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub gammas: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

impl GridSpec {
    /// The full regression-protocol grid: 4 depths x 3 widths x 4 step
    /// sizes x 4 diffusion strengths at one learning rate, 192 points.
    pub fn full_gpp() -> Self {
        GridSpec {
            layers: vec![1, 5, 10, 20],
            dims: vec![10, 20, 30],
            epsilons: vec![1.0, 0.1, 0.01, 0.001],
            gammas: vec![1.0, 0.1, 0.01, 0.001],
            learning_rates: vec![0.003],
        }
    }

    pub fn validate(&self, kind: ModelKind) -> Result<()> {
        if self.layers.is_empty() || self.dims.is_empty() || self.learning_rates.is_empty() {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "layers, dims, and learning_rates must be non-empty".to_string(),
            });
        }
        if kind.is_adgn() && (self.epsilons.is_empty() || self.gammas.is_empty()) {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: "antisymmetric models need epsilon and gamma lists".to_string(),
            });
        }
        Ok(())
    }

    /// Grid points in a fixed nested order: layers, dims, epsilons,
    /// gammas, learning rates.
    pub fn entries(&self, kind: ModelKind) -> Vec<GridEntry> {
        let mut out = Vec::new();
        for &layers in &self.layers {
            for &dim in &self.dims {
                if kind.is_adgn() {
                    for &epsilon in &self.epsilons {
                        for &gamma in &self.gammas {
                            for &lr in &self.learning_rates {
                                out.push(GridEntry {
                                    hyper: ModelHyper {
                                        kind,
                                        layers,
                                        dim,
                                        epsilon,
                                        gamma,
                                    },
                                    learning_rate: lr,
                                });
                            }
                        }
                    }
                } else {
                    for &lr in &self.learning_rates {
                        out.push(GridEntry {
                            hyper: ModelHyper {
                                kind,
                                layers,
                                dim,
                                epsilon: 0.0,
                                gamma: 0.0,
                            },
                            learning_rate: lr,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub hyper: ModelHyper,
    pub learning_rate: f64,
}

/// Direction of the validation metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// Regression: validation MSE, lower wins.
    MinimizeValidation,
    /// Classification: validation accuracy, higher wins.
    MaximizeValidation,
}

/// Aggregated runs for one grid point. Means and deviations are over
/// the non-diverged runs (population formula); NaN when all diverged.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PointSummary {
    pub entry: GridEntry,
    pub validation_mean: f64,
    pub validation_std: f64,
    pub test_mean: f64,
    pub test_std: f64,
    pub diverged_runs: usize,
    pub total_runs: usize,
    pub reports: Vec<TrainReport>,
    /// Index into `reports` of the best-validation run, when any run
    /// finished with a finite metric.
    pub best_run: Option<usize>,
    /// Checkpoint of the run at `best_run`.
    #[serde(skip)]
    pub best_params: Option<ModelParams>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridOutcome {
    pub objective: Objective,
    /// Best first. Points with any diverged run rank below fully
    /// finite ones; ties break toward fewer layers, then smaller dim,
    /// then enumeration order.
    pub ranked: Vec<PointSummary>,
}

impl GridOutcome {
    pub fn winner(&self) -> &PointSummary {
        &self.ranked[0]
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

fn summarize(entry: GridEntry, outcomes: Vec<(TrainReport, ModelParams)>, objective: Objective) -> PointSummary {
    let total_runs = outcomes.len();
    let mut best_params = None;
    let mut best_run = None;
    let mut best_val = f64::NAN;
    let mut vals = Vec::new();
    let mut tests = Vec::new();
    let mut diverged_runs = 0usize;
    let mut reports = Vec::with_capacity(total_runs);
    for (run, (report, params)) in outcomes.into_iter().enumerate() {
        if report.diverged || !report.best_validation.is_finite() {
            diverged_runs += 1;
        } else {
            vals.push(report.best_validation);
            tests.push(report.test_metric);
            let better = match objective {
                Objective::MinimizeValidation => {
                    !best_val.is_finite() || report.best_validation < best_val
                }
                Objective::MaximizeValidation => {
                    !best_val.is_finite() || report.best_validation > best_val
                }
            };
            if better {
                best_val = report.best_validation;
                best_params = Some(params);
                best_run = Some(run);
            }
        }
        reports.push(report);
    }
    let (validation_mean, validation_std) = mean_std(&vals);
    let (test_mean, test_std) = mean_std(&tests);
    PointSummary {
        entry,
        validation_mean,
        validation_std,
        test_mean,
        test_std,
        diverged_runs,
        total_runs,
        reports,
        best_run,
        best_params,
    }
}

fn rank(mut summaries: Vec<PointSummary>, objective: Objective) -> Vec<PointSummary> {
    let signed = |s: &PointSummary| -> f64 {
        if !s.validation_mean.is_finite() {
            return f64::INFINITY;
        }
        match objective {
            Objective::MinimizeValidation => s.validation_mean,
            Objective::MaximizeValidation => -s.validation_mean,
        }
    };
    summaries.sort_by(|a, b| {
        (a.diverged_runs > 0)
            .cmp(&(b.diverged_runs > 0))
            .then(signed(a).total_cmp(&signed(b)))
            .then(a.entry.hyper.layers.cmp(&b.entry.hyper.layers))
            .then(a.entry.hyper.dim.cmp(&b.entry.hyper.dim))
    });
    summaries
}

/// Grid search on the regression protocol: every grid point is trained
/// once per seed; points are ranked by mean validation MSE.
pub fn grid_search_gpp(
    dataset: &DatasetSplit,
    spec: &GridSpec,
    kind: ModelKind,
    seeds: &[u64],
    settings: &TrainSettings,
    config_hash: &str,
) -> Result<GridOutcome> {
    spec.validate(kind)?;
    if seeds.is_empty() {
        return Err(Error::InvalidParameter {
            name: "seeds",
            reason: "need at least one seed".to_string(),
        });
    }
    let entries = spec.entries(kind);
    let jobs: Vec<(usize, u64)> = entries
        .iter()
        .enumerate()
        .flat_map(|(i, _)| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<(usize, TrainReport, ModelParams)> = jobs
        .par_iter()
        .map(|&(i, seed)| {
            let mut run_settings = settings.clone();
            run_settings.adam.learning_rate = entries[i].learning_rate;
            let outcome = train_gpp(dataset, &entries[i].hyper, &run_settings, seed, config_hash)?;
            Ok((i, outcome.report, outcome.params))
        })
        .collect::<Result<_>>()?;

    let mut grouped: Vec<Vec<(TrainReport, ModelParams)>> = (0..entries.len()).map(|_| Vec::new()).collect();
    for (i, report, params) in results {
        grouped[i].push((report, params));
    }
    let summaries: Vec<PointSummary> = entries
        .into_iter()
        .zip(grouped)
        .map(|(entry, outcomes)| summarize(entry, outcomes, Objective::MinimizeValidation))
        .collect();
    Ok(GridOutcome {
        objective: Objective::MinimizeValidation,
        ranked: rank(summaries, Objective::MinimizeValidation),
    })
}

/// Grid search on the node-classification protocol. Run `k` for a grid
/// point uses seed `seeds[k]` and node split `k % n_splits`, so seeds
/// and splits rotate together.
pub fn grid_search_node(
    dataset: &NodeDataset,
    spec: &GridSpec,
    kind: ModelKind,
    seeds: &[u64],
    settings: &TrainSettings,
    config_hash: &str,
) -> Result<GridOutcome> {
    spec.validate(kind)?;
    if seeds.is_empty() {
        return Err(Error::InvalidParameter {
            name: "seeds",
            reason: "need at least one seed".to_string(),
        });
    }
    if dataset.splits.is_empty() {
        return Err(Error::InvalidParameter {
            name: "dataset",
            reason: "node dataset has no splits".to_string(),
        });
    }
    let entries = spec.entries(kind);
    let jobs: Vec<(usize, usize)> = entries
        .iter()
        .enumerate()
        .flat_map(|(i, _)| (0..seeds.len()).map(move |k| (i, k)))
        .collect();
    let results: Vec<(usize, TrainReport, ModelParams)> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let mut run_settings = settings.clone();
            run_settings.adam.learning_rate = entries[i].learning_rate;
            let split = k % dataset.splits.len();
            let outcome = train_node(dataset, split, &entries[i].hyper, &run_settings, seeds[k], config_hash)?;
            Ok((i, outcome.report, outcome.params))
        })
        .collect::<Result<_>>()?;

    let mut grouped: Vec<Vec<(TrainReport, ModelParams)>> = (0..entries.len()).map(|_| Vec::new()).collect();
    for (i, report, params) in results {
        grouped[i].push((report, params));
    }
    let summaries: Vec<PointSummary> = entries
        .into_iter()
        .zip(grouped)
        .map(|(entry, outcomes)| summarize(entry, outcomes, Objective::MaximizeValidation))
        .collect();
    Ok(GridOutcome {
        objective: Objective::MaximizeValidation,
        ranked: rank(summaries, Objective::MaximizeValidation),
    })
}
