//! Dataset serialization: one JSON record per line, one file per split,
//! plus a manifest with generation metadata.
//!
//! Records are written in a canonical form (fixed field order, sorted
//! edges, shortest-round-trip floats), so writing, reading, and writing
//! again is byte-identical. That property backs the determinism checks
//! on generated artifacts.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dataset::{
    make_class_splits, DatasetScale, DatasetSplit, GraphTask, NodeDataset, PropertyTarget, Sample,
    SplitMasks,
};
use super::Graph;
use crate::error::{Error, Result};
use crate::util::{child_seed, rng_from_seed};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRecord {
    n: usize,
    edges: Vec<(u32, u32)>,
    d_in: usize,
    /// Row-major node features, length n · d_in.
    features: Vec<f64>,
    task: GraphTask,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    source: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    node_targets: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    graph_target: Option<f64>,
    generator: String,
    seed: u64,
}

impl GraphRecord {
    fn from_sample(sample: &Sample) -> Self {
        let f = sample.graph.features();
        GraphRecord {
            n: sample.graph.n(),
            edges: sample.graph.undirected_edges(),
            d_in: f.cols(),
            features: f.data().to_vec(),
            task: sample.target.task,
            source: sample.source,
            node_targets: sample.target.node_values.clone(),
            graph_target: sample.target.graph_value,
            generator: sample.generator.clone(),
            seed: sample.seed,
        }
    }

    fn into_sample(self, path: &str) -> Result<Sample> {
        let invalid = |reason: String| Error::InvalidData {
            path: path.to_string(),
            reason,
        };
        let mut graph = Graph::from_edges(self.n, &self.edges)?;
        if self.features.len() != self.n * self.d_in {
            return Err(invalid(format!(
                "{} feature values for n={} d_in={}",
                self.features.len(),
                self.n,
                self.d_in
            )));
        }
        graph.set_features(crate::matrix::Matrix::from_vec(self.n, self.d_in, self.features)?)?;
        let target = PropertyTarget {
            task: self.task,
            node_values: self.node_targets,
            graph_value: self.graph_target,
        };
        target.validate(Some(self.n))?;
        if self.task == GraphTask::Sssp && self.source.is_none() {
            return Err(invalid("sssp record without source".to_string()));
        }
        Ok(Sample {
            graph,
            target,
            source: self.source,
            generator: self.generator,
            seed: self.seed,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub task: GraphTask,
    pub seed: u64,
    pub scale: DatasetScale,
    pub train_size: usize,
    pub validation_size: usize,
    pub test_size: usize,
    pub erdos_renyi_count: usize,
    pub barabasi_albert_count: usize,
    pub grid_count: usize,
    pub density_min: f64,
    pub density_max: f64,
}

impl DatasetManifest {
    pub fn describe(split: &DatasetSplit) -> Self {
        let (er, ba, grid) = split.generator_counts();
        let (density_min, density_max) = split.density_range();
        DatasetManifest {
            task: split.task,
            seed: split.seed,
            scale: split.scale,
            train_size: split.train.len(),
            validation_size: split.validation.len(),
            test_size: split.test.len(),
            erdos_renyi_count: er,
            barabasi_albert_count: ba,
            grid_count: grid,
            density_min,
            density_max,
        }
    }
}

const SPLIT_FILES: [&str; 3] = ["train.jsonl", "validation.jsonl", "test.jsonl"];
pub const MANIFEST_FILE: &str = "manifest.json";

fn write_jsonl(path: &Path, samples: &[Sample]) -> Result<()> {
    let display = path.display().to_string();
    let mut out = Vec::new();
    for sample in samples {
        let record = GraphRecord::from_sample(sample);
        let line = serde_json::to_string(&record).map_err(|e| Error::json(&display, e))?;
        out.extend_from_slice(line.as_bytes());
        out.push(b'\n');
    }
    fs::write(path, out).map_err(|e| Error::io(&display, e))
}

fn read_jsonl(path: &Path) -> Result<Vec<Sample>> {
    let display = path.display().to_string();
    let file = fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let mut samples = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        if line.is_empty() {
            continue;
        }
        let record: GraphRecord =
            serde_json::from_str(&line).map_err(|e| Error::json(&display, e))?;
        samples.push(record.into_sample(&display)?);
    }
    Ok(samples)
}

/// Writes train/validation/test JSONL files plus the manifest into `dir`.
pub fn write_split_dir(dir: &Path, split: &DatasetSplit) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    for (name, samples) in SPLIT_FILES
        .iter()
        .zip([&split.train, &split.validation, &split.test])
    {
        write_jsonl(&dir.join(name), samples)?;
    }
    let manifest = DatasetManifest::describe(split);
    let path = dir.join(MANIFEST_FILE);
    let display = path.display().to_string();
    let mut body =
        serde_json::to_vec_pretty(&manifest).map_err(|e| Error::json(&display, e))?;
    body.push(b'\n');
    let mut file = fs::File::create(&path).map_err(|e| Error::io(&display, e))?;
    file.write_all(&body).map_err(|e| Error::io(&display, e))?;
    Ok(())
}

/// Reads a dataset directory produced by [`write_split_dir`].
pub fn read_split_dir(dir: &Path) -> Result<DatasetSplit> {
    let manifest_path = dir.join(MANIFEST_FILE);
    let display = manifest_path.display().to_string();
    let body = fs::read(&manifest_path).map_err(|e| Error::io(&display, e))?;
    let manifest: DatasetManifest =
        serde_json::from_slice(&body).map_err(|e| Error::json(&display, e))?;
    let mut parts = SPLIT_FILES.iter().map(|name| read_jsonl(&dir.join(name)));
    let train = parts.next().expect("three split files")?;
    let validation = parts.next().expect("three split files")?;
    let test = parts.next().expect("three split files")?;
    for sample in train.iter().chain(&validation).chain(&test) {
        if sample.target.task != manifest.task {
            return Err(Error::InvalidData {
                path: dir.display().to_string(),
                reason: format!(
                    "record task {} does not match manifest task {}",
                    sample.target.task.name(),
                    manifest.task.name()
                ),
            });
        }
    }
    if (train.len(), validation.len(), test.len())
        != (manifest.train_size, manifest.validation_size, manifest.test_size)
    {
        return Err(Error::InvalidData {
            path: dir.display().to_string(),
            reason: "split sizes do not match manifest".to_string(),
        });
    }
    Ok(DatasetSplit {
        task: manifest.task,
        seed: manifest.seed,
        scale: manifest.scale,
        train,
        validation,
        test,
    })
}

pub const NODE_FILE: &str = "node.json";

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitIndexRecord {
    train: Vec<u32>,
    validation: Vec<u32>,
    test: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    n: usize,
    edges: Vec<(u32, u32)>,
    d_in: usize,
    features: Vec<f64>,
    labels: Vec<u32>,
    num_classes: usize,
    seed: u64,
    splits: Vec<SplitIndexRecord>,
}

fn mask_to_indices(mask: &[bool]) -> Vec<u32> {
    mask.iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i as u32))
        .collect()
}

fn indices_to_mask(n: usize, indices: &[u32], role: &str, path: &str) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &i in indices {
        if i as usize >= n {
            return Err(Error::InvalidData {
                path: path.to_string(),
                reason: format!("{role} index {i} outside 0..{n}"),
            });
        }
        if mask[i as usize] {
            return Err(Error::InvalidData {
                path: path.to_string(),
                reason: format!("duplicate {role} index {i}"),
            });
        }
        mask[i as usize] = true;
    }
    Ok(mask)
}

/// Writes a node-classification dataset as a single canonical JSON file
/// (`node.json`) inside `dir`.
pub fn write_node_dir(dir: &Path, dataset: &NodeDataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
    let f = dataset.graph.features();
    let record = NodeRecord {
        n: dataset.graph.n(),
        edges: dataset.graph.undirected_edges(),
        d_in: f.cols(),
        features: f.data().to_vec(),
        labels: dataset.labels.clone(),
        num_classes: dataset.num_classes,
        seed: dataset.seed,
        splits: dataset
            .splits
            .iter()
            .map(|s| SplitIndexRecord {
                train: mask_to_indices(&s.train),
                validation: mask_to_indices(&s.validation),
                test: mask_to_indices(&s.test),
            })
            .collect(),
    };
    let path = dir.join(NODE_FILE);
    let display = path.display().to_string();
    let mut body = serde_json::to_vec(&record).map_err(|e| Error::json(&display, e))?;
    body.push(b'\n');
    fs::write(&path, body).map_err(|e| Error::io(&display, e))
}

/// Reads a node-classification dataset written by [`write_node_dir`].
/// Every split must partition the node set across its three roles.
pub fn read_node_dir(dir: &Path) -> Result<NodeDataset> {
    let path = dir.join(NODE_FILE);
    let display = path.display().to_string();
    let body = fs::read(&path).map_err(|e| Error::io(&display, e))?;
    let record: NodeRecord =
        serde_json::from_slice(&body).map_err(|e| Error::json(&display, e))?;
    let invalid = |reason: String| Error::InvalidData {
        path: display.clone(),
        reason,
    };
    let mut graph = Graph::from_edges(record.n, &record.edges)?;
    if record.features.len() != record.n * record.d_in {
        return Err(invalid(format!(
            "{} feature values for n={} d_in={}",
            record.features.len(),
            record.n,
            record.d_in
        )));
    }
    graph.set_features(crate::matrix::Matrix::from_vec(record.n, record.d_in, record.features)?)?;
    if record.labels.len() != record.n {
        return Err(invalid(format!(
            "{} labels for {} nodes",
            record.labels.len(),
            record.n
        )));
    }
    if record.num_classes == 0 {
        return Err(invalid("num_classes must be positive".to_string()));
    }
    for (u, &label) in record.labels.iter().enumerate() {
        if label as usize >= record.num_classes {
            return Err(invalid(format!(
                "node {u} has label {label} outside 0..{}",
                record.num_classes
            )));
        }
    }
    if record.splits.is_empty() {
        return Err(invalid("dataset has no splits".to_string()));
    }
    let mut splits = Vec::with_capacity(record.splits.len());
    for s in &record.splits {
        let masks = SplitMasks {
            train: indices_to_mask(record.n, &s.train, "train", &display)?,
            validation: indices_to_mask(record.n, &s.validation, "validation", &display)?,
            test: indices_to_mask(record.n, &s.test, "test", &display)?,
        };
        for u in 0..record.n {
            let roles =
                masks.train[u] as usize + masks.validation[u] as usize + masks.test[u] as usize;
            if roles != 1 {
                return Err(invalid(format!("node {u} appears in {roles} split roles")));
            }
        }
        splits.push(masks);
    }
    Ok(NodeDataset {
        graph,
        labels: record.labels,
        num_classes: record.num_classes,
        splits,
        seed: record.seed,
    })
}

/// Lines of a whitespace-separated text table. Blank lines and lines
/// starting with `#` are skipped.
fn data_lines(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let display = path.display().to_string();
    let body = fs::read_to_string(path).map_err(|e| Error::io(&display, e))?;
    let mut rows = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows.push((lineno + 1, line.split_whitespace().map(str::to_string).collect()));
    }
    Ok(rows)
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    path: &Path,
    lineno: usize,
    what: &str,
) -> Result<T> {
    field.parse().map_err(|_| Error::InvalidData {
        path: path.display().to_string(),
        reason: format!("line {lineno}: cannot parse {what} from {field:?}"),
    })
}

/// Builds a node-classification dataset from three text files: an edge
/// list (`u v` per line), node features (one row of floats per node),
/// and integer labels (one per node). Node count and class count come
/// from the label file; split masks are drawn per class with the usual
/// quotas, seeded like the synthetic generator so a given seed always
/// yields the same masks.
pub fn ingest_node_files(
    edges_path: &Path,
    features_path: &Path,
    labels_path: &Path,
    n_splits: usize,
    seed: u64,
) -> Result<NodeDataset> {
    if n_splits == 0 {
        return Err(Error::InvalidParameter {
            name: "n_splits",
            reason: "need at least one split assignment".to_string(),
        });
    }
    let mut labels = Vec::new();
    for (lineno, fields) in data_lines(labels_path)? {
        if fields.len() != 1 {
            return Err(Error::InvalidData {
                path: labels_path.display().to_string(),
                reason: format!("line {lineno}: expected one label, got {}", fields.len()),
            });
        }
        labels.push(parse_field::<u32>(&fields[0], labels_path, lineno, "label")?);
    }
    if labels.is_empty() {
        return Err(Error::InvalidData {
            path: labels_path.display().to_string(),
            reason: "no labels".to_string(),
        });
    }
    let n = labels.len();
    let num_classes = *labels.iter().max().expect("non-empty") as usize + 1;

    let feature_rows = data_lines(features_path)?;
    if feature_rows.len() != n {
        return Err(Error::InvalidData {
            path: features_path.display().to_string(),
            reason: format!("{} feature rows for {n} labeled nodes", feature_rows.len()),
        });
    }
    let d_in = feature_rows[0].1.len();
    if d_in == 0 {
        return Err(Error::InvalidData {
            path: features_path.display().to_string(),
            reason: "feature rows are empty".to_string(),
        });
    }
    let mut features = crate::matrix::Matrix::zeros(n, d_in);
    for (u, (lineno, fields)) in feature_rows.iter().enumerate() {
        if fields.len() != d_in {
            return Err(Error::InvalidData {
                path: features_path.display().to_string(),
                reason: format!("line {lineno}: {} columns, expected {d_in}", fields.len()),
            });
        }
        for (c, field) in fields.iter().enumerate() {
            let v: f64 = parse_field(field, features_path, *lineno, "feature")?;
            if !v.is_finite() {
                return Err(Error::InvalidData {
                    path: features_path.display().to_string(),
                    reason: format!("line {lineno}: non-finite feature {field}"),
                });
            }
            features.set(u, c, v);
        }
    }

    let mut edges = Vec::new();
    for (lineno, fields) in data_lines(edges_path)? {
        if fields.len() != 2 {
            return Err(Error::InvalidData {
                path: edges_path.display().to_string(),
                reason: format!("line {lineno}: expected two endpoints, got {}", fields.len()),
            });
        }
        let u: u32 = parse_field(&fields[0], edges_path, lineno, "node index")?;
        let v: u32 = parse_field(&fields[1], edges_path, lineno, "node index")?;
        edges.push((u, v));
    }
    let mut graph = Graph::from_edges(n, &edges)?;
    graph.set_features(features)?;

    let mut splits = Vec::with_capacity(n_splits);
    for k in 0..n_splits {
        let mut split_rng = rng_from_seed(child_seed(seed, 1000 + k as u64));
        splits.push(make_class_splits(&labels, 20, 30, &mut split_rng)?);
    }
    Ok(NodeDataset {
        graph,
        labels,
        num_classes,
        splits,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::dataset::generate_dataset;

    fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(p).unwrap()))
            .collect()
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let ds = generate_dataset(GraphTask::Sssp, DatasetScale::Reduced(10), 31).unwrap();
        let dir1 = tempfile::tempdir().unwrap();
        write_split_dir(dir1.path(), &ds).unwrap();
        let reread = read_split_dir(dir1.path()).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_split_dir(dir2.path(), &reread).unwrap();
        assert_eq!(read_dir_bytes(dir1.path()), read_dir_bytes(dir2.path()));
    }

    #[test]
    fn same_seed_same_bytes() {
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        for dir in [&dir1, &dir2] {
            let ds = generate_dataset(GraphTask::Diameter, DatasetScale::Reduced(6), 5).unwrap();
            write_split_dir(dir.path(), &ds).unwrap();
        }
        assert_eq!(read_dir_bytes(dir1.path()), read_dir_bytes(dir2.path()));
    }

    #[test]
    fn manifest_contents() {
        let ds = generate_dataset(GraphTask::Eccentricity, DatasetScale::Reduced(8), 19).unwrap();
        let m = DatasetManifest::describe(&ds);
        assert_eq!(m.train_size, 8);
        assert_eq!(m.validation_size, 1);
        assert_eq!(m.test_size, 2);
        assert_eq!(
            m.erdos_renyi_count + m.barabasi_albert_count + m.grid_count,
            11
        );
        assert!(m.density_min > 0.0 && m.density_max <= 1.0);
    }

    #[test]
    fn reread_preserves_samples() {
        let ds = generate_dataset(GraphTask::Eccentricity, DatasetScale::Reduced(5), 23).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_split_dir(dir.path(), &ds).unwrap();
        let back = read_split_dir(dir.path()).unwrap();
        assert_eq!(back.seed, ds.seed);
        assert_eq!(back.scale, ds.scale);
        for (a, b) in ds.all_samples().zip(back.all_samples()) {
            assert_eq!(a.graph.undirected_edges(), b.graph.undirected_edges());
            assert_eq!(a.graph.features(), b.graph.features());
            assert_eq!(a.target, b.target);
            assert_eq!(a.generator, b.generator);
            assert_eq!(a.seed, b.seed);
        }
    }

    #[test]
    fn node_round_trip_is_byte_exact() {
        let ds = crate::graph::generate_node_dataset(180, 3, 0.3, 0.05, 0.1, 3, 7).unwrap();
        let dir1 = tempfile::tempdir().unwrap();
        write_node_dir(dir1.path(), &ds).unwrap();
        let back = read_node_dir(dir1.path()).unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        write_node_dir(dir2.path(), &back).unwrap();
        assert_eq!(
            std::fs::read(dir1.path().join(NODE_FILE)).unwrap(),
            std::fs::read(dir2.path().join(NODE_FILE)).unwrap()
        );
        assert_eq!(back.labels, ds.labels);
        assert_eq!(back.num_classes, ds.num_classes);
        assert_eq!(back.splits.len(), 3);
        assert_eq!(back.graph.features(), ds.graph.features());
    }

    #[test]
    fn node_reader_rejects_broken_splits() {
        let ds = crate::graph::generate_node_dataset(180, 3, 0.3, 0.05, 0.1, 1, 8).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_node_dir(dir.path(), &ds).unwrap();
        let path = dir.path().join(NODE_FILE);
        let body = std::fs::read_to_string(&path).unwrap();
        // Steal node 0 from whichever role holds it: it then appears in
        // zero roles and the partition check must fire.
        let broken = body
            .replacen("\"train\":[0,", "\"train\":[", 1)
            .replacen("\"validation\":[0,", "\"validation\":[", 1)
            .replacen("\"test\":[0,", "\"test\":[", 1);
        assert_ne!(body, broken);
        std::fs::write(&path, broken).unwrap();
        assert!(read_node_dir(dir.path()).is_err());
    }

    fn write_ingest_fixture(dir: &Path, per_class: usize) -> (std::path::PathBuf, std::path::PathBuf, std::path::PathBuf) {
        // Two clusters on a path of 2*per_class nodes, labels by half,
        // features = label plus a node-specific offset.
        let n = 2 * per_class;
        let edges_path = dir.join("edges.txt");
        let features_path = dir.join("features.txt");
        let labels_path = dir.join("labels.txt");
        let mut edges = String::from("# path graph\n");
        for u in 1..n {
            edges.push_str(&format!("{} {}\n", u - 1, u));
        }
        let mut features = String::new();
        let mut labels = String::new();
        for u in 0..n {
            let label = (u >= per_class) as usize;
            features.push_str(&format!("{} {}\n", label, u as f64 * 0.01));
            labels.push_str(&format!("{label}\n"));
        }
        std::fs::write(&edges_path, edges).unwrap();
        std::fs::write(&features_path, features).unwrap();
        std::fs::write(&labels_path, labels).unwrap();
        (edges_path, features_path, labels_path)
    }

    #[test]
    fn ingest_builds_a_valid_dataset_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let (e, f, l) = write_ingest_fixture(dir.path(), 60);
        let ds = ingest_node_files(&e, &f, &l, 5, 42).unwrap();
        assert_eq!(ds.graph.n(), 120);
        assert_eq!(ds.num_classes, 2);
        assert_eq!(ds.splits.len(), 5);
        for s in &ds.splits {
            assert_eq!(s.train.iter().filter(|&&b| b).count(), 40);
            assert_eq!(s.validation.iter().filter(|&&b| b).count(), 60);
            assert_eq!(s.test.iter().filter(|&&b| b).count(), 20);
        }
        // Same seed, same masks.
        let again = ingest_node_files(&e, &f, &l, 5, 42).unwrap();
        assert_eq!(again.splits[0].train, ds.splits[0].train);

        let out1 = tempfile::tempdir().unwrap();
        write_node_dir(out1.path(), &ds).unwrap();
        let back = read_node_dir(out1.path()).unwrap();
        let out2 = tempfile::tempdir().unwrap();
        write_node_dir(out2.path(), &back).unwrap();
        assert_eq!(
            std::fs::read(out1.path().join(NODE_FILE)).unwrap(),
            std::fs::read(out2.path().join(NODE_FILE)).unwrap()
        );
    }

    #[test]
    fn ingest_rejects_small_classes_and_malformed_rows() {
        let dir = tempfile::tempdir().unwrap();
        // 30 nodes per class cannot fill the 20 + 30 quota.
        let (e, f, l) = write_ingest_fixture(dir.path(), 30);
        assert!(ingest_node_files(&e, &f, &l, 1, 1).is_err());

        let (e, f, l) = write_ingest_fixture(dir.path(), 60);
        std::fs::write(dir.path().join("bad_edges.txt"), "0 1 2\n").unwrap();
        assert!(ingest_node_files(&dir.path().join("bad_edges.txt"), &f, &l, 1, 1).is_err());
        std::fs::write(dir.path().join("loop_edges.txt"), "5 5\n").unwrap();
        assert!(ingest_node_files(&dir.path().join("loop_edges.txt"), &f, &l, 1, 1).is_err());
        std::fs::write(dir.path().join("bad_feat.txt"), "0.0 nope\n").unwrap();
        assert!(ingest_node_files(&e, &dir.path().join("bad_feat.txt"), &l, 1, 1).is_err());
    }

    #[test]
    fn corrupt_records_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let ds = generate_dataset(GraphTask::Sssp, DatasetScale::Reduced(3), 2).unwrap();
        write_split_dir(dir.path(), &ds).unwrap();
        // Unknown field.
        std::fs::write(
            dir.path().join("train.jsonl"),
            br#"{"n":2,"edges":[[0,1]],"d_in":1,"features":[0.0,0.0],"task":"sssp","source":0,"node_targets":[0.0,1.0],"generator":"x","seed":1,"extra":true}"#,
        )
        .unwrap();
        assert!(read_split_dir(dir.path()).is_err());
        // Target length mismatch.
        std::fs::write(
            dir.path().join("train.jsonl"),
            br#"{"n":2,"edges":[[0,1]],"d_in":1,"features":[0.0,0.0],"task":"sssp","source":0,"node_targets":[0.0],"generator":"x","seed":1}"#,
        )
        .unwrap();
        assert!(read_split_dir(dir.path()).is_err());
    }

    #[test]
    fn missing_directory_is_io_error() {
        let err = read_split_dir(Path::new("/nonexistent/dataset-dir")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
