//! Experiment configuration: one JSON document pins the dataset, the
//! model family, the hyper-parameter grid, and the optimizer. The raw
//! config bytes are hashed, and every artifact a run writes embeds that
//! hash, so outputs can always be traced to the exact input file.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DatasetScale, GraphTask};
use crate::training::{GridSpec, ModelKind, TrainSettings};
use crate::util::content_hash;

/// Where the experiment's data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataSpec {
    /// Synthesize a graph-property regression dataset.
    Generate {
        task: GraphTask,
        scale: DatasetScale,
        seed: u64,
    },
    /// Synthesize a node-classification dataset on a block-structured
    /// random graph.
    GenerateBlocks {
        nodes: usize,
        blocks: usize,
        p_in: f64,
        p_out: f64,
        noise: f64,
        n_splits: usize,
        seed: u64,
    },
    /// Load a dataset directory written by `gen-data` or `ingest`. The
    /// directory's contents decide whether it is a regression split or
    /// a node-classification file.
    Load { path: PathBuf },
}

impl DataSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            DataSpec::Generate { .. } => Ok(()),
            DataSpec::GenerateBlocks {
                nodes,
                blocks,
                p_in,
                p_out,
                noise,
                n_splits,
                ..
            } => {
                if *nodes == 0 || *blocks == 0 || *nodes < *blocks {
                    return Err(Error::InvalidParameter {
                        name: "data",
                        reason: format!("{nodes} nodes across {blocks} blocks"),
                    });
                }
                for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
                    if !(0.0..=1.0).contains(p) {
                        return Err(Error::InvalidParameter {
                            name: "data",
                            reason: format!("{name} = {p} outside [0, 1]"),
                        });
                    }
                }
                if !(*noise >= 0.0) {
                    return Err(Error::InvalidParameter {
                        name: "data",
                        reason: format!("noise = {noise} must be non-negative"),
                    });
                }
                if *n_splits == 0 {
                    return Err(Error::InvalidParameter {
                        name: "data",
                        reason: "n_splits must be positive".to_string(),
                    });
                }
                Ok(())
            }
            DataSpec::Load { path } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::InvalidParameter {
                        name: "data",
                        reason: "empty dataset path".to_string(),
                    });
                }
                Ok(())
            }
        }
    }

    /// True when the spec produces (or loads) node-classification data.
    /// Only decidable without touching the filesystem for generated
    /// specs; `Load` answers `None`.
    pub fn is_node_level(&self) -> Option<bool> {
        match self {
            DataSpec::Generate { .. } => Some(false),
            DataSpec::GenerateBlocks { .. } => Some(true),
            DataSpec::Load { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Short identifier used in output file names.
    pub name: String,
    pub data: DataSpec,
    /// Model families to compare; each runs the full grid.
    pub models: Vec<ModelKind>,
    pub grid: GridSpec,
    pub training: TrainSettings,
    /// One training run per seed at every grid point.
    pub seeds: Vec<u64>,
}

/// A parsed config plus the hash of the bytes it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Hex hash of the raw file contents.
    pub hash: String,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '-' || c == '_')
        {
            return Err(Error::InvalidParameter {
                name: "name",
                reason: format!(
                    "{:?} must be non-empty lowercase alphanumeric with - or _",
                    self.name
                ),
            });
        }
        self.data.validate()?;
        if self.models.is_empty() {
            return Err(Error::InvalidParameter {
                name: "models",
                reason: "need at least one model".to_string(),
            });
        }
        for (i, kind) in self.models.iter().enumerate() {
            if self.models[..i].contains(kind) {
                return Err(Error::InvalidParameter {
                    name: "models",
                    reason: format!("duplicate model {}", kind.name()),
                });
            }
            self.grid.validate(*kind)?;
        }
        self.training.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidParameter {
                name: "seeds",
                reason: "need at least one seed".to_string(),
            });
        }
        for (i, seed) in self.seeds.iter().enumerate() {
            if self.seeds[..i].contains(seed) {
                return Err(Error::InvalidParameter {
                    name: "seeds",
                    reason: format!("duplicate seed {seed}"),
                });
            }
        }
        Ok(())
    }

    /// Parses and validates config bytes; the returned hash covers the
    /// bytes exactly as given (whitespace included). Parse failures are
    /// configuration errors, not serialization errors: a config the
    /// schema rejects is the caller's input being wrong.
    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<LoadedConfig> {
        let config: ExperimentConfig =
            serde_json::from_slice(bytes).map_err(|e| Error::InvalidConfig {
                reason: format!("{origin}: {e}"),
            })?;
        config.validate()?;
        Ok(LoadedConfig {
            config,
            hash: content_hash(bytes),
        })
    }

    pub fn load(path: &Path) -> Result<LoadedConfig> {
        let display = path.display().to_string();
        let bytes = fs::read(path).map_err(|e| Error::io(&display, e))?;
        Self::from_bytes(&bytes, &display)
    }
}
