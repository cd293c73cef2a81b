//! `adgn ingest`: turn edge/feature/label text files into a validated
//! node-classification dataset directory with seeded split masks.

use std::path::Path;

use adgn_core::graph::{ingest_node_files, write_node_dir};
use adgn_core::Result;

pub fn run(
    edges: &Path,
    features: &Path,
    labels: &Path,
    n_splits: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let dataset = ingest_node_files(edges, features, labels, n_splits, seed)?;
    write_node_dir(out, &dataset)?;
    println!(
        "ingested {} nodes, {} edges, {} classes, {} feature columns; {} split assignments (seed {seed})",
        dataset.graph.n(),
        dataset.graph.edge_count(),
        dataset.num_classes,
        dataset.graph.features().cols(),
        dataset.splits.len()
    );
    println!("wrote {}", out.display());
    Ok(())
}
