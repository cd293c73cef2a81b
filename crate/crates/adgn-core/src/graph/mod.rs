//! Undirected graphs in CSR form, plus generators, exact oracles, and
//! dataset assembly.
//!
//! A [`Graph`] stores each undirected edge as two arcs. The flattened
//! arc arrays (`sources`/`targets`) are shared `Arc` slices so the
//! autodiff gather/scatter ops can hold them without copying. Degree
//! normalization for the convolutional aggregation (with the implicit
//! self-loop, d̂ = degree + 1) is precomputed per node and per arc.

pub mod dataset;
pub mod generators;
pub mod io;
pub mod oracles;

pub use dataset::{
    assign_features, generate_dataset, generate_node_dataset, make_class_splits, DatasetScale,
    DatasetSplit, GraphTask, NodeDataset, PropertyTarget, Sample, SplitMasks,
};
pub use generators::{generate_barabasi_albert, generate_erdos_renyi, generate_grid, generate_sbm};
pub use io::{
    ingest_node_files, read_node_dir, read_split_dir, write_node_dir, write_split_dir,
    DatasetManifest,
};
pub use oracles::{bfs_hops, oracle_diameter, oracle_eccentricity, oracle_sssp};

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug)]
pub struct Graph {
    n: usize,
    /// Arc range of node u is `offsets[u]..offsets[u+1]`.
    offsets: Vec<usize>,
    /// Neighbor (message origin) of each arc, sorted within each node's range.
    sources: Arc<[u32]>,
    /// Owning node (message destination) of each arc.
    targets: Arc<[u32]>,
    /// 1/√(d̂_src · d̂_dst) per arc.
    gcn_arc_norm: Arc<[f64]>,
    /// 1/d̂_u per node (the self term of the normalized aggregation).
    gcn_self_norm: Arc<[f64]>,
    degrees_hat: Vec<f64>,
    features: Matrix,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Edges may appear in
    /// either orientation; duplicates collapse. Self-loops and endpoints
    /// outside `0..n` are rejected.
    pub fn from_edges(n: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph {
                reason: "node count must be positive".to_string(),
            });
        }
        if n > u32::MAX as usize {
            return Err(Error::InvalidGraph {
                reason: format!("node count {n} exceeds index range"),
            });
        }
        let mut unique = BTreeSet::new();
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::InvalidGraph {
                    reason: format!("edge ({u}, {v}) references a node outside 0..{n}"),
                });
            }
            if u == v {
                return Err(Error::InvalidGraph {
                    reason: format!("self-loop at node {u}"),
                });
            }
            unique.insert((u.min(v), u.max(v)));
        }

        let mut adjacency: Vec<Vec<u32>> = vec![Vec::new(); n];
        for &(u, v) in &unique {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let arc_count = 2 * unique.len();
        let mut sources = Vec::with_capacity(arc_count);
        let mut targets = Vec::with_capacity(arc_count);
        for (u, list) in adjacency.iter().enumerate() {
            sources.extend_from_slice(list);
            targets.extend(std::iter::repeat(u as u32).take(list.len()));
            offsets.push(sources.len());
        }

        let degrees_hat: Vec<f64> = adjacency.iter().map(|l| l.len() as f64 + 1.0).collect();
        let gcn_self_norm: Vec<f64> = degrees_hat.iter().map(|&d| 1.0 / d).collect();
        let mut gcn_arc_norm = Vec::with_capacity(sources.len());
        for (&src, &dst) in sources.iter().zip(&targets) {
            gcn_arc_norm.push(1.0 / (degrees_hat[src as usize] * degrees_hat[dst as usize]).sqrt());
        }

        Ok(Graph {
            n,
            offsets,
            sources: sources.into(),
            targets: targets.into(),
            gcn_arc_norm: gcn_arc_norm.into(),
            gcn_self_norm: gcn_self_norm.into(),
            degrees_hat,
            features: Matrix::zeros(n, 0),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.sources.len() / 2
    }

    /// Number of stored arcs (twice the edge count).
    pub fn arc_count(&self) -> usize {
        self.sources.len()
    }

    pub fn neighbors(&self, u: usize) -> &[u32] {
        &self.sources[self.offsets[u]..self.offsets[u + 1]]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.offsets[u + 1] - self.offsets[u]
    }

    /// Self-loop-inclusive degree d̂ = degree + 1.
    pub fn degree_hat(&self, u: usize) -> f64 {
        self.degrees_hat[u]
    }

    pub fn arc_sources(&self) -> &Arc<[u32]> {
        &self.sources
    }

    pub fn arc_targets(&self) -> &Arc<[u32]> {
        &self.targets
    }

    pub fn gcn_arc_norm(&self) -> &Arc<[f64]> {
        &self.gcn_arc_norm
    }

    pub fn gcn_self_norm(&self) -> &Arc<[f64]> {
        &self.gcn_self_norm
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn set_features(&mut self, features: Matrix) -> Result<()> {
        if features.rows() != self.n {
            return Err(Error::InvalidGraph {
                reason: format!(
                    "feature matrix has {} rows for {} nodes",
                    features.rows(),
                    self.n
                ),
            });
        }
        self.features = features;
        Ok(())
    }

    /// Undirected edges as (min, max) pairs in ascending order.
    pub fn undirected_edges(&self) -> Vec<(u32, u32)> {
        let mut edges = Vec::with_capacity(self.edge_count());
        for u in 0..self.n {
            for &v in self.neighbors(u) {
                if (u as u32) < v {
                    edges.push((u as u32, v));
                }
            }
        }
        edges
    }

    /// Fraction of possible node pairs that are edges, computed over
    /// ordered pairs: 2E / (n(n−1)). Zero for a single node.
    pub fn density(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.arc_count() as f64 / (self.n as f64 * (self.n as f64 - 1.0))
    }

    pub fn is_connected(&self) -> bool {
        let hops = oracles::bfs_hops(self, 0);
        hops.iter().all(|&h| h != u32::MAX)
    }

    /// Exhaustive symmetry check: every arc (u,v) has its reverse.
    pub fn check_symmetric(&self) -> bool {
        (0..self.n).all(|u| {
            self.neighbors(u)
                .iter()
                .all(|&v| self.neighbors(v as usize).binary_search(&(u as u32)).is_ok())
        })
    }
}
