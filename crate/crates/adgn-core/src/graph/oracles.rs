//! Exact structural targets by breadth-first search.
//!
//! All three benchmark tasks are unweighted shortest-path quantities, so
//! BFS is exact. Eccentricity and diameter require connectivity; any
//! unreachable node is a hard error rather than an infinite target.

use super::Graph;
use crate::error::{Error, Result};

/// Hop counts from `src`; unreachable nodes get `u32::MAX`.
pub fn bfs_hops(graph: &Graph, src: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; graph.n()];
    dist[src] = 0;
    let mut queue = std::collections::VecDeque::with_capacity(graph.n());
    queue.push_back(src as u32);
    while let Some(u) = queue.pop_front() {
        let du = dist[u as usize];
        for &v in graph.neighbors(u as usize) {
            if dist[v as usize] == u32::MAX {
                dist[v as usize] = du + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Exact hop distances from `source` as reals.
pub fn oracle_sssp(graph: &Graph, source: u32) -> Result<Vec<f64>> {
    if source as usize >= graph.n() {
        return Err(Error::InvalidParameter {
            name: "source",
            reason: format!("node {source} out of range for {} nodes", graph.n()),
        });
    }
    let hops = bfs_hops(graph, source as usize);
    finite_or_err(&hops, source as usize)?;
    Ok(hops.into_iter().map(f64::from).collect())
}

/// Eccentricity of every node: max hop distance to any other node.
pub fn oracle_eccentricity(graph: &Graph) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(graph.n());
    for u in 0..graph.n() {
        let hops = bfs_hops(graph, u);
        finite_or_err(&hops, u)?;
        out.push(hops.into_iter().max().unwrap_or(0) as f64);
    }
    Ok(out)
}

/// Diameter: max eccentricity over nodes.
pub fn oracle_diameter(graph: &Graph) -> Result<f64> {
    let ecc = oracle_eccentricity(graph)?;
    Ok(ecc.into_iter().fold(0.0, f64::max))
}

fn finite_or_err(hops: &[u32], from: usize) -> Result<()> {
    if let Some(node) = hops.iter().position(|&h| h == u32::MAX) {
        return Err(Error::Disconnected { node, from });
    }
    Ok(())
}
