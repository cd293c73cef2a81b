//! Benchmark dataset assembly: the three graph-property tasks over a
//! mixture of generator families, plus the synthetic block-model node
//! classification task.
//!
//! Every sample owns a child seed derived from the dataset seed, so
//! datasets are reproducible as a whole and per record.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::generators::{
    generate_barabasi_albert, generate_erdos_renyi, generate_grid, generate_sbm,
};
use super::oracles::{oracle_diameter, oracle_eccentricity, oracle_sssp};
use super::Graph;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::util::{child_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphTask {
    Sssp,
    Eccentricity,
    Diameter,
}

impl GraphTask {
    /// True when the target is one value per node rather than per graph.
    pub fn is_node_level(&self) -> bool {
        matches!(self, GraphTask::Sssp | GraphTask::Eccentricity)
    }

    pub fn name(&self) -> &'static str {
        match self {
            GraphTask::Sssp => "sssp",
            GraphTask::Eccentricity => "eccentricity",
            GraphTask::Diameter => "diameter",
        }
    }
}

/// Exact target for one sample: hop-count values stored as reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyTarget {
    pub task: GraphTask,
    pub node_values: Option<Vec<f64>>,
    pub graph_value: Option<f64>,
}

impl PropertyTarget {
    pub fn per_node(task: GraphTask, values: Vec<f64>) -> Result<Self> {
        let target = PropertyTarget {
            task,
            node_values: Some(values),
            graph_value: None,
        };
        target.validate(None)?;
        Ok(target)
    }

    pub fn per_graph(task: GraphTask, value: f64) -> Result<Self> {
        let target = PropertyTarget {
            task,
            node_values: None,
            graph_value: Some(value),
        };
        target.validate(None)?;
        Ok(target)
    }

    /// Checks that exactly the field matching the task level is present
    /// and that all values are non-negative integers stored as reals.
    /// `n` additionally pins the per-node length when known.
    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        let bad = |reason: String| Error::InvalidParameter {
            name: "target",
            reason,
        };
        match (self.task.is_node_level(), &self.node_values, &self.graph_value) {
            (true, Some(values), None) => {
                if let Some(n) = n {
                    if values.len() != n {
                        return Err(bad(format!("{} values for {n} nodes", values.len())));
                    }
                }
                for &v in values {
                    check_hop_value(v).map_err(|r| bad(r))?;
                }
                Ok(())
            }
            (false, None, Some(value)) => check_hop_value(*value).map_err(bad),
            _ => Err(bad(format!(
                "task {} requires exactly the {} field",
                self.task.name(),
                if self.task.is_node_level() { "node_values" } else { "graph_value" }
            ))),
        }
    }
}

fn check_hop_value(v: f64) -> std::result::Result<(), String> {
    if !(v >= 0.0 && v.fract() == 0.0) {
        return Err(format!("hop count {v} is not a non-negative integer"));
    }
    Ok(())
}

/// One benchmark graph with its target and provenance.
#[derive(Clone, Debug)]
pub struct Sample {
    pub graph: Graph,
    pub target: PropertyTarget,
    /// SSSP source node; `None` for the other tasks.
    pub source: Option<u32>,
    /// Human-readable generator call, e.g. `erdos-renyi(n=30,p=0.31)`.
    pub generator: String,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DatasetScale {
    Full,
    Reduced(usize),
}

impl DatasetScale {
    /// (train, validation, test) sizes. Reduced scale keeps the full
    /// protocol's 8:1:2 proportions.
    pub fn sizes(&self) -> (usize, usize, usize) {
        match self {
            DatasetScale::Full => (5120, 640, 1280),
            DatasetScale::Reduced(k) => (*k, k.div_ceil(8), k.div_ceil(4)),
        }
    }
}

impl std::fmt::Display for DatasetScale {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DatasetScale::Full => write!(f, "full"),
            DatasetScale::Reduced(k) => write!(f, "reduced-{k}"),
        }
    }
}

impl std::str::FromStr for DatasetScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "full" {
            return Ok(DatasetScale::Full);
        }
        if let Some(k) = s.strip_prefix("reduced-") {
            let k: usize = k.parse().map_err(|_| Error::InvalidParameter {
                name: "scale",
                reason: format!("cannot parse train size in {s:?}"),
            })?;
            if k == 0 {
                return Err(Error::InvalidParameter {
                    name: "scale",
                    reason: "reduced scale needs at least 1 training graph".to_string(),
                });
            }
            return Ok(DatasetScale::Reduced(k));
        }
        Err(Error::InvalidParameter {
            name: "scale",
            reason: format!("expected \"full\" or \"reduced-<k>\", got {s:?}"),
        })
    }
}

impl Serialize for DatasetScale {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for DatasetScale {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub task: GraphTask,
    pub seed: u64,
    pub scale: DatasetScale,
    pub train: Vec<Sample>,
    pub validation: Vec<Sample>,
    pub test: Vec<Sample>,
}

impl DatasetSplit {
    pub fn all_samples(&self) -> impl Iterator<Item = &Sample> {
        self.train.iter().chain(&self.validation).chain(&self.test)
    }

    /// (min, max) edge density over every sample.
    pub fn density_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in self.all_samples() {
            let d = s.graph.density();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        (lo, hi)
    }

    /// Sample counts per generator family (erdos-renyi, barabasi-albert, grid).
    pub fn generator_counts(&self) -> (usize, usize, usize) {
        let mut er = 0;
        let mut ba = 0;
        let mut grid = 0;
        for s in self.all_samples() {
            if s.generator.starts_with("erdos-renyi") {
                er += 1;
            } else if s.generator.starts_with("barabasi-albert") {
                ba += 1;
            } else {
                grid += 1;
            }
        }
        (er, ba, grid)
    }
}

/// Sets benchmark input features: column 0 is an i.i.d. uniform [0,1)
/// identifier per node; column 1 flags the SSSP source (all zeros for
/// the other tasks). `source` is required exactly for SSSP.
pub fn assign_features(
    mut graph: Graph,
    task: GraphTask,
    source: Option<u32>,
    rng: &mut impl Rng,
) -> Result<Graph> {
    match (task, source) {
        (GraphTask::Sssp, None) => {
            return Err(Error::InvalidParameter {
                name: "source",
                reason: "sssp requires a source node".to_string(),
            })
        }
        (GraphTask::Sssp, Some(s)) if s as usize >= graph.n() => {
            return Err(Error::InvalidParameter {
                name: "source",
                reason: format!("source {s} out of range for {} nodes", graph.n()),
            })
        }
        (GraphTask::Eccentricity | GraphTask::Diameter, Some(_)) => {
            return Err(Error::InvalidParameter {
                name: "source",
                reason: format!("task {} takes no source", task.name()),
            })
        }
        _ => {}
    }
    let n = graph.n();
    let mut features = Matrix::zeros(n, 2);
    for u in 0..n {
        features.set(u, 0, rng.random::<f64>());
        let flag = matches!(source, Some(s) if s as usize == u);
        features.set(u, 1, if flag { 1.0 } else { 0.0 });
    }
    graph.set_features(features)?;
    Ok(graph)
}

/// Grid shapes with 2 ≤ rows ≤ cols and 25 ≤ rows·cols ≤ 35, the node
/// range shared by all generator families.
const GRID_SHAPES: &[(usize, usize)] = &[
    (2, 13),
    (2, 14),
    (2, 15),
    (2, 16),
    (2, 17),
    (3, 9),
    (3, 10),
    (3, 11),
    (4, 7),
    (4, 8),
    (5, 5),
    (5, 6),
    (5, 7),
];

fn generate_sample(task: GraphTask, seed: u64) -> Result<Sample> {
    let mut rng = rng_from_seed(seed);
    let (graph, generator) = match rng.random_range(0..3u32) {
        0 => {
            let n = rng.random_range(25..=35usize);
            let p = rng.random_range(0.1..0.5);
            (generate_erdos_renyi(n, p, &mut rng)?, format!("erdos-renyi(n={n},p={p})"))
        }
        1 => {
            let n = rng.random_range(25..=35usize);
            let m = rng.random_range(1..=4usize);
            (
                generate_barabasi_albert(n, m, &mut rng)?,
                format!("barabasi-albert(n={n},m={m})"),
            )
        }
        _ => {
            let (rows, cols) = GRID_SHAPES[rng.random_range(0..GRID_SHAPES.len())];
            (generate_grid(rows, cols)?, format!("grid(rows={rows},cols={cols})"))
        }
    };
    let source = match task {
        GraphTask::Sssp => Some(rng.random_range(0..graph.n() as u32)),
        _ => None,
    };
    let graph = assign_features(graph, task, source, &mut rng)?;
    let target = match task {
        GraphTask::Sssp => {
            PropertyTarget::per_node(task, oracle_sssp(&graph, source.expect("sssp has a source"))?)?
        }
        GraphTask::Eccentricity => PropertyTarget::per_node(task, oracle_eccentricity(&graph)?)?,
        GraphTask::Diameter => PropertyTarget::per_graph(task, oracle_diameter(&graph)?)?,
    };
    Ok(Sample {
        graph,
        target,
        source,
        generator,
        seed,
    })
}

/// Stream labels separating the three split RNG families.
const SPLIT_STREAMS: [(u64, &str); 3] = [(1, "train"), (2, "validation"), (3, "test")];

/// Generates a complete train/validation/test dataset for one task.
/// Graphs are connected, targets exact, and the whole result is a pure
/// function of (task, scale, seed).
pub fn generate_dataset(task: GraphTask, scale: DatasetScale, seed: u64) -> Result<DatasetSplit> {
    let (n_train, n_val, n_test) = scale.sizes();
    let mut splits: Vec<Vec<Sample>> = Vec::with_capacity(3);
    for ((stream, _), count) in SPLIT_STREAMS.iter().zip([n_train, n_val, n_test]) {
        let split_seed = child_seed(seed, *stream);
        let mut samples = Vec::with_capacity(count);
        for i in 0..count {
            samples.push(generate_sample(task, child_seed(split_seed, i as u64))?);
        }
        splits.push(samples);
    }
    let test = splits.pop().expect("three splits");
    let validation = splits.pop().expect("three splits");
    let train = splits.pop().expect("three splits");
    Ok(DatasetSplit {
        task,
        seed,
        scale,
        train,
        validation,
        test,
    })
}

/// Boolean node masks for one split assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train: Vec<bool>,
    pub validation: Vec<bool>,
    pub test: Vec<bool>,
}

impl SplitMasks {
    pub fn count(mask: &[bool]) -> usize {
        mask.iter().filter(|&&b| b).count()
    }
}

/// Class-stratified node splits: a fixed number of training and
/// validation nodes per class, the rest as test. Errors when any class
/// cannot fill both quotas.
pub fn make_class_splits(
    labels: &[u32],
    train_per_class: usize,
    val_per_class: usize,
    rng: &mut impl Rng,
) -> Result<SplitMasks> {
    let n = labels.len();
    let classes = match labels.iter().max() {
        Some(&m) => m as usize + 1,
        None => {
            return Err(Error::InvalidParameter {
                name: "labels",
                reason: "empty label vector".to_string(),
            })
        }
    };
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (u, &l) in labels.iter().enumerate() {
        by_class[l as usize].push(u);
    }
    let mut masks = SplitMasks {
        train: vec![false; n],
        validation: vec![false; n],
        test: vec![false; n],
    };
    for (c, members) in by_class.iter_mut().enumerate() {
        if members.len() < train_per_class + val_per_class {
            return Err(Error::InvalidParameter {
                name: "labels",
                reason: format!(
                    "class {c} has {} nodes; needs at least {}",
                    members.len(),
                    train_per_class + val_per_class
                ),
            });
        }
        members.shuffle(rng);
        for (rank, &u) in members.iter().enumerate() {
            if rank < train_per_class {
                masks.train[u] = true;
            } else if rank < train_per_class + val_per_class {
                masks.validation[u] = true;
            } else {
                masks.test[u] = true;
            }
        }
    }
    Ok(masks)
}

/// A labeled graph for node classification with repeated split masks.
#[derive(Clone, Debug)]
pub struct NodeDataset {
    pub graph: Graph,
    pub labels: Vec<u32>,
    pub num_classes: usize,
    pub splits: Vec<SplitMasks>,
    pub seed: u64,
}

/// Synthetic node-classification task on a stochastic block model.
///
/// Features are two columns: a uniform [0,1) identifier and a noisy
/// class signal (label + 1)/classes + U(−noise, noise), so the label is
/// recoverable from a node's neighborhood but not reliably from the node
/// alone. Split masks follow the per-class quota rule (20 train / 30
/// validation per class unless overridden at ingestion).
#[allow(clippy::too_many_arguments)]
pub fn generate_node_dataset(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    noise: f64,
    n_splits: usize,
    seed: u64,
) -> Result<NodeDataset> {
    if !(noise >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "noise",
            reason: format!("noise level {noise} must be non-negative"),
        });
    }
    if n_splits == 0 {
        return Err(Error::InvalidParameter {
            name: "n_splits",
            reason: "need at least one split assignment".to_string(),
        });
    }
    let mut rng = rng_from_seed(child_seed(seed, 0));
    let (mut graph, labels) = generate_sbm(n, blocks, p_in, p_out, &mut rng)?;
    let mut features = Matrix::zeros(n, 2);
    for u in 0..n {
        features.set(u, 0, rng.random::<f64>());
        let signal = (labels[u] as f64 + 1.0) / blocks as f64;
        let jitter = if noise > 0.0 { rng.random_range(-noise..noise) } else { 0.0 };
        features.set(u, 1, signal + jitter);
    }
    graph.set_features(features)?;
    let mut splits = Vec::with_capacity(n_splits);
    for k in 0..n_splits {
        let mut split_rng = rng_from_seed(child_seed(seed, 1000 + k as u64));
        splits.push(make_class_splits(&labels, 20, 30, &mut split_rng)?);
    }
    Ok(NodeDataset {
        graph,
        labels,
        num_classes: blocks,
        splits,
        seed,
    })
}
