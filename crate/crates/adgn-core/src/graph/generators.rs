//! Synthetic graph generators.
//!
//! Eccentricity and diameter targets need connected graphs, so the random
//! families reject and resample whole graphs until connected, capped at
//! [`MAX_CONNECTIVITY_ATTEMPTS`]. Sampling order is fixed (lexicographic
//! over node pairs), so a given RNG state always yields the same graph.

use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};

pub const MAX_CONNECTIVITY_ATTEMPTS: usize = 1000;

/// Erdős–Rényi G(n, p), resampled until connected.
pub fn generate_erdos_renyi(n: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: "node count must be positive".to_string(),
        });
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "p",
            reason: format!("edge probability {p} outside (0, 1]"),
        });
    }
    for _ in 0..MAX_CONNECTIVITY_ATTEMPTS {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let graph = Graph::from_edges(n, &edges)?;
        if graph.is_connected() {
            return Ok(graph);
        }
    }
    Err(Error::ConnectivityRetriesExhausted {
        generator: "erdos-renyi",
        attempts: MAX_CONNECTIVITY_ATTEMPTS,
    })
}

/// Preferential attachment: a complete seed on m+1 nodes, then each new
/// node attaches m edges to distinct existing nodes with probability
/// proportional to degree. Connected by construction.
pub fn generate_barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> Result<Graph> {
    if m == 0 {
        return Err(Error::InvalidParameter {
            name: "m",
            reason: "attachment count must be at least 1".to_string(),
        });
    }
    if n < m + 1 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least m+1 = {} nodes, got {n}", m + 1),
        });
    }
    let mut edges: Vec<(u32, u32)> = Vec::new();
    // Each edge contributes both endpoints; sampling an entry uniformly
    // is degree-proportional sampling.
    let mut endpoint_pool: Vec<u32> = Vec::new();
    for u in 0..=(m as u32) {
        for v in (u + 1)..=(m as u32) {
            edges.push((u, v));
            endpoint_pool.push(u);
            endpoint_pool.push(v);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for u in (m + 1)..n {
        chosen.clear();
        while chosen.len() < m {
            let candidate = endpoint_pool[rng.random_range(0..endpoint_pool.len())];
            if !chosen.contains(&candidate) {
                chosen.push(candidate);
            }
        }
        for &v in &chosen {
            edges.push((u as u32, v));
            endpoint_pool.push(u as u32);
            endpoint_pool.push(v);
        }
    }
    Graph::from_edges(n, &edges)
}

/// Rectangular lattice with 4-neighborhood, rows × cols nodes.
pub fn generate_grid(rows: usize, cols: usize) -> Result<Graph> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter {
            name: "rows/cols",
            reason: "grid dimensions must be positive".to_string(),
        });
    }
    let id = |r: usize, c: usize| (r * cols + c) as u32;
    let mut edges = Vec::with_capacity(rows * (cols - 1) + cols * (rows - 1));
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    Graph::from_edges(rows * cols, &edges)
}

/// Stochastic block model over `blocks` near-equal groups of `n` total
/// nodes: within-block edge probability `p_in`, between-block `p_out`.
/// Returns the graph and ground-truth block labels; resampled until
/// connected.
pub fn generate_sbm(
    n: usize,
    blocks: usize,
    p_in: f64,
    p_out: f64,
    rng: &mut impl Rng,
) -> Result<(Graph, Vec<u32>)> {
    if blocks == 0 || n < blocks {
        return Err(Error::InvalidParameter {
            name: "blocks",
            reason: format!("cannot split {n} nodes into {blocks} non-empty blocks"),
        });
    }
    for (name, p) in [("p_in", p_in), ("p_out", p_out)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("probability {p} outside [0, 1]"),
            });
        }
    }
    if p_in < p_out {
        return Err(Error::InvalidParameter {
            name: "p_in",
            reason: format!("within-block probability {p_in} below between-block {p_out}"),
        });
    }

    let base = n / blocks;
    let extra = n % blocks;
    let mut labels = Vec::with_capacity(n);
    for b in 0..blocks {
        let size = base + usize::from(b < extra);
        labels.extend(std::iter::repeat(b as u32).take(size));
    }

    for _ in 0..MAX_CONNECTIVITY_ATTEMPTS {
        let mut edges = Vec::new();
        for u in 0..n as u32 {
            for v in (u + 1)..n as u32 {
                let p = if labels[u as usize] == labels[v as usize] {
                    p_in
                } else {
                    p_out
                };
                if rng.random::<f64>() < p {
                    edges.push((u, v));
                }
            }
        }
        let graph = Graph::from_edges(n, &edges)?;
        if graph.is_connected() {
            return Ok((graph, labels));
        }
    }
    Err(Error::ConnectivityRetriesExhausted {
        generator: "sbm",
        attempts: MAX_CONNECTIVITY_ATTEMPTS,
    })
}
