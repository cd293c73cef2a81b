//! `adgn eval`: re-evaluate a stored checkpoint on the test portion of a
//! dataset directory.

use std::path::Path;

use adgn_core::training::{accuracy, evaluate_mse, log10_mse, node_logits};
use adgn_core::{Error, Result};

use crate::artifacts::Checkpoint;
use crate::data::{load_any, AnyDataset};

pub fn run(checkpoint_path: &Path, data_dir: &Path) -> Result<()> {
    let checkpoint = Checkpoint::read(checkpoint_path)?;
    checkpoint.params.validate()?;
    println!(
        "checkpoint: {} on {} (config {}, seed {})",
        checkpoint.model, checkpoint.task, checkpoint.config_hash, checkpoint.seed
    );
    match load_any(data_dir)? {
        AnyDataset::Gpp(ds) => {
            let mse = evaluate_mse(&checkpoint.params, &ds.test)?;
            if !mse.is_finite() {
                return Err(Error::NonFinite {
                    op: "checkpoint evaluation",
                });
            }
            println!(
                "test mse {:e} (log10 {:.4}) on {} graphs",
                mse,
                log10_mse(mse),
                ds.test.len()
            );
        }
        AnyDataset::Node(nd) => {
            if checkpoint.split_index >= nd.splits.len() {
                return Err(Error::InvalidParameter {
                    name: "split_index",
                    reason: format!(
                        "checkpoint trained on split {} but the dataset has {}",
                        checkpoint.split_index,
                        nd.splits.len()
                    ),
                });
            }
            let logits = node_logits(&checkpoint.params, &nd)?;
            let split = &nd.splits[checkpoint.split_index];
            let acc = accuracy(&logits, &nd.labels, &split.test)?;
            let count = split.test.iter().filter(|&&b| b).count();
            println!(
                "test accuracy {:.4} on {} nodes (split {})",
                acc, count, checkpoint.split_index
            );
        }
    }
    Ok(())
}
