//! Dataset materialization: either kind of dataset, generated in memory
//! or loaded from a directory written by `gen-data` or `ingest`.

use std::path::Path;

use adgn_core::config::DataSpec;
use adgn_core::graph::io::NODE_FILE;
use adgn_core::graph::{
    generate_dataset, generate_node_dataset, read_node_dir, read_split_dir, DatasetSplit,
    NodeDataset,
};
use adgn_core::Result;

pub enum AnyDataset {
    Gpp(DatasetSplit),
    Node(NodeDataset),
}

impl AnyDataset {
    pub fn task_name(&self) -> &str {
        match self {
            AnyDataset::Gpp(ds) => ds.task.name(),
            AnyDataset::Node(_) => "node-classification",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            AnyDataset::Gpp(ds) => format!(
                "{} regression, {}/{}/{} graphs",
                ds.task.name(),
                ds.train.len(),
                ds.validation.len(),
                ds.test.len()
            ),
            AnyDataset::Node(nd) => format!(
                "node classification, {} nodes, {} classes, {} splits",
                nd.graph.n(),
                nd.num_classes,
                nd.splits.len()
            ),
        }
    }
}

/// Loads a dataset directory; the presence of the node file decides
/// which format it holds.
pub fn load_any(dir: &Path) -> Result<AnyDataset> {
    if dir.join(NODE_FILE).exists() {
        Ok(AnyDataset::Node(read_node_dir(dir)?))
    } else {
        Ok(AnyDataset::Gpp(read_split_dir(dir)?))
    }
}

/// Generates or loads the dataset a config describes.
pub fn materialize(spec: &DataSpec) -> Result<AnyDataset> {
    match spec {
        DataSpec::Generate { task, scale, seed } => {
            Ok(AnyDataset::Gpp(generate_dataset(*task, *scale, *seed)?))
        }
        DataSpec::GenerateBlocks {
            nodes,
            blocks,
            p_in,
            p_out,
            noise,
            n_splits,
            seed,
        } => Ok(AnyDataset::Node(generate_node_dataset(
            *nodes, *blocks, *p_in, *p_out, *noise, *n_splits, *seed,
        )?)),
        DataSpec::Load { path } => load_any(path),
    }
}
