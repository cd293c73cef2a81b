//! On-disk artifact formats shared by the train and eval commands.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use adgn_core::layers::ModelParams;
use adgn_core::training::{GridOutcome, ModelHyper, Objective, PointSummary};
use adgn_core::{Error, Result};

pub const SUMMARY_FILE: &str = "summary.csv";

/// The winning run of a grid search, with everything needed to evaluate
/// it again: hyper-parameters, the trained weights, and the hash of the
/// config file that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub model: String,
    pub task: String,
    pub config_hash: String,
    pub hyper: ModelHyper,
    pub learning_rate: f64,
    /// Seed of the stored run.
    pub seed: u64,
    /// Node-split index the stored run trained on; 0 for regression.
    pub split_index: usize,
    pub best_validation: f64,
    pub test_metric: f64,
    pub params: ModelParams,
}

impl Checkpoint {
    /// Builds a checkpoint from a grid winner. Fails when every run of
    /// the winning point diverged (there is nothing to store).
    pub fn from_winner(
        point: &PointSummary,
        config_hash: &str,
        n_splits: usize,
    ) -> Result<Checkpoint> {
        let (run, params) = match (point.best_run, &point.best_params) {
            (Some(run), Some(params)) => (run, params.clone()),
            _ => {
                return Err(Error::NonFinite {
                    op: "grid search (every run of the winning point diverged)",
                })
            }
        };
        let report = &point.reports[run];
        Ok(Checkpoint {
            model: report.model.clone(),
            task: report.task.clone(),
            config_hash: config_hash.to_string(),
            hyper: point.entry.hyper.clone(),
            learning_rate: point.entry.learning_rate,
            seed: report.seed,
            split_index: run % n_splits.max(1),
            best_validation: report.best_validation,
            test_metric: report.test_metric,
            params,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let display = path.display().to_string();
        let mut body = serde_json::to_vec(self).map_err(|e| Error::json(&display, e))?;
        body.push(b'\n');
        fs::write(path, body).map_err(|e| Error::io(&display, e))
    }

    pub fn read(path: &Path) -> Result<Checkpoint> {
        let display = path.display().to_string();
        let body = fs::read(path).map_err(|e| Error::io(&display, e))?;
        serde_json::from_slice(&body).map_err(|e| Error::json(&display, e))
    }
}

pub fn write_grid_json(path: &Path, outcome: &GridOutcome) -> Result<()> {
    let display = path.display().to_string();
    let mut body = serde_json::to_vec(outcome).map_err(|e| Error::json(&display, e))?;
    body.push(b'\n');
    fs::write(path, body).map_err(|e| Error::io(&display, e))
}

/// One line of `summary.csv`.
pub struct SummaryRow {
    pub model: String,
    pub task: String,
    /// Mean and deviation of the per-seed reporting metric of the
    /// winning grid point: log10 test MSE for regression, test accuracy
    /// for node classification.
    pub mean: f64,
    pub std: f64,
    /// Runs that finished without divergence and contributed.
    pub seeds: usize,
    pub config_hash: String,
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut out = String::from("model,task,mean,std,seeds,config\n");
    for row in rows {
        out.push_str(&format!(
            "{},{},{:e},{:e},{},{}\n",
            row.model, row.task, row.mean, row.std, row.seeds, row.config_hash
        ));
    }
    let display = path.display().to_string();
    fs::write(path, out).map_err(|e| Error::io(&display, e))
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

/// Per-seed reporting metric of a grid point's non-diverged runs.
pub fn reporting_metrics(point: &PointSummary, objective: Objective) -> Vec<f64> {
    point
        .reports
        .iter()
        .filter(|r| !r.diverged && r.best_validation.is_finite())
        .map(|r| match objective {
            Objective::MinimizeValidation => adgn_core::training::log10_mse(r.test_metric),
            Objective::MaximizeValidation => r.test_metric,
        })
        .collect()
}
