//! `adgn train`: run the configured grid search for every model family
//! and write the summary table, per-model grid reports, and winning
//! checkpoints.

use std::fs;
use std::path::Path;

use adgn_core::training::{grid_search_gpp, grid_search_node, GridOutcome, Objective};
use adgn_core::{Error, ExperimentConfig, Result};

use crate::artifacts::{
    mean_std, reporting_metrics, write_grid_json, write_summary_csv, Checkpoint, SummaryRow,
    SUMMARY_FILE,
};
use crate::data::{load_any, materialize, AnyDataset};

pub fn run(config_path: &Path, data_override: Option<&Path>, out: &Path) -> Result<()> {
    let loaded = ExperimentConfig::load(config_path)?;
    let config = &loaded.config;
    let dataset = match data_override {
        Some(dir) => load_any(dir)?,
        None => materialize(&config.data)?,
    };
    println!("dataset: {}", dataset.describe());
    fs::create_dir_all(out).map_err(|e| Error::io(out.display().to_string(), e))?;

    let mut rows = Vec::new();
    for &kind in &config.models {
        let outcome: GridOutcome = match &dataset {
            AnyDataset::Gpp(ds) => grid_search_gpp(
                ds,
                &config.grid,
                kind,
                &config.seeds,
                &config.training,
                &loaded.hash,
            )?,
            AnyDataset::Node(nd) => grid_search_node(
                nd,
                &config.grid,
                kind,
                &config.seeds,
                &config.training,
                &loaded.hash,
            )?,
        };
        write_grid_json(&out.join(format!("grid-{}.json", kind.name())), &outcome)?;

        let winner = outcome.winner();
        let n_splits = match &dataset {
            AnyDataset::Gpp(_) => 1,
            AnyDataset::Node(nd) => nd.splits.len(),
        };
        let metrics = reporting_metrics(winner, outcome.objective);
        let (mean, std) = mean_std(&metrics);
        let metric_name = match outcome.objective {
            Objective::MinimizeValidation => "test log10(mse)",
            Objective::MaximizeValidation => "test accuracy",
        };
        println!(
            "{}: best {} (lr={}) {} {:.4} +- {:.4} over {} runs ({} grid points)",
            kind.name(),
            winner.entry.hyper.label(),
            winner.entry.learning_rate,
            metric_name,
            mean,
            std,
            metrics.len(),
            outcome.ranked.len()
        );
        match Checkpoint::from_winner(winner, &loaded.hash, n_splits) {
            Ok(checkpoint) => {
                checkpoint.write(&out.join(format!("checkpoint-{}.json", kind.name())))?
            }
            Err(_) => println!(
                "{}: every run of the winning point diverged; no checkpoint written",
                kind.name()
            ),
        }
        rows.push(SummaryRow {
            model: kind.name().to_string(),
            task: dataset.task_name().to_string(),
            mean,
            std,
            seeds: metrics.len(),
            config_hash: loaded.hash.clone(),
        });
    }
    write_summary_csv(&out.join(SUMMARY_FILE), &rows)?;
    println!("wrote {}", out.join(SUMMARY_FILE).display());
    Ok(())
}
