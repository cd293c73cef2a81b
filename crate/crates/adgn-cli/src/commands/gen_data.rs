//! `adgn gen-data`: synthesize the dataset a config describes and write
//! it to a directory. Rerunning with the same config produces byte-
//! identical files.

use std::path::Path;

use adgn_core::config::DataSpec;
use adgn_core::graph::{write_node_dir, write_split_dir, DatasetManifest};
use adgn_core::{Error, ExperimentConfig, Result};

use crate::data::{materialize, AnyDataset};

pub fn run(config_path: &Path, out: &Path) -> Result<()> {
    let loaded = ExperimentConfig::load(config_path)?;
    if matches!(loaded.config.data, DataSpec::Load { .. }) {
        return Err(Error::InvalidConfig {
            reason: "data source is \"load\"; there is nothing to generate".to_string(),
        });
    }
    match materialize(&loaded.config.data)? {
        AnyDataset::Gpp(ds) => {
            write_split_dir(out, &ds)?;
            let m = DatasetManifest::describe(&ds);
            println!(
                "wrote {} dataset to {}: {}/{}/{} graphs, density {:.3}..{:.3}",
                ds.task.name(),
                out.display(),
                m.train_size,
                m.validation_size,
                m.test_size,
                m.density_min,
                m.density_max
            );
        }
        AnyDataset::Node(nd) => {
            write_node_dir(out, &nd)?;
            println!(
                "wrote node dataset to {}: {} nodes, {} edges, {} classes, {} splits",
                out.display(),
                nd.graph.n(),
                nd.graph.edge_count(),
                nd.num_classes,
                nd.splits.len()
            );
        }
    }
    println!("config hash {}", loaded.hash);
    Ok(())
}
