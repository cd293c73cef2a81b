//! Independent reference implementations for tests and benchmarks.
//!
//! Everything here deliberately avoids the production code paths it is
//! used to check: shortest paths come from Floyd–Warshall instead of BFS,
//! eigenvalues from power iteration instead of Jacobi rotations, and
//! aggregations from dense adjacency matrices instead of CSR
//! gather/scatter. Slow and simple on purpose.

use crate::graph::Graph;
use crate::matrix::Matrix;

/// All-pairs shortest hop counts by Floyd–Warshall; `f64::INFINITY` for
/// unreachable pairs. O(n³), intended for n ≤ a few dozen.
pub fn floyd_warshall(graph: &Graph) -> Vec<Vec<f64>> {
    let n = graph.n();
    let mut dist = vec![vec![f64::INFINITY; n]; n];
    for (u, row) in dist.iter_mut().enumerate() {
        row[u] = 0.0;
        for &v in graph.neighbors(u) {
            row[v as usize] = 1.0;
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = dist[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let through = dik + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    dist
}

/// Eccentricity per node from a Floyd–Warshall distance table.
pub fn eccentricities_from_distances(dist: &[Vec<f64>]) -> Vec<f64> {
    dist.iter()
        .map(|row| row.iter().copied().fold(0.0, f64::max))
        .collect()
}

/// All eigenvalues of a symmetric matrix by power iteration with
/// projection against previously found eigenvectors, sorted descending.
///
/// Accuracy relies on the Rayleigh quotient being variational: even when
/// two eigenvalues nearly coincide and the iteration cannot separate
/// them, the returned value lies between them. Intended for small
/// positive semi-definite inputs.
pub fn power_iteration_eigenvalues(m: &Matrix, max_iters: usize, tol: f64) -> Vec<f64> {
    assert_eq!(m.rows(), m.cols(), "square input required");
    let d = m.rows();
    let scale = m.frobenius_norm();
    if scale == 0.0 {
        return vec![0.0; d];
    }
    // Once the image of an iterate (after deflation) shrinks below this,
    // the iterate lies in the kernel of the remaining subspace.
    // Renormalizing past it would only amplify projection noise.
    let kernel_floor = scale * 1e-12;
    let mut found: Vec<Vec<f64>> = Vec::with_capacity(d);
    let mut eigenvalues = Vec::with_capacity(d);

    for k in 0..d {
        // Deterministic, cheaply decorrelated start vector.
        let mut v: Vec<f64> = (0..d)
            .map(|i| {
                let x = crate::util::child_seed(k as u64 + 1, i as u64) as f64;
                x / u64::MAX as f64 - 0.5
            })
            .collect();
        project_out(&mut v, &found);
        if normalize(&mut v) == 0.0 {
            // Nothing left outside the found subspace.
            eigenvalues.push(0.0);
            found.push(unit_basis(d, k));
            continue;
        }
        let mut lambda = 0.0;
        for _ in 0..max_iters {
            let mut w = matvec(m, &v);
            project_out(&mut w, &found);
            let norm = normalize(&mut w);
            if norm < kernel_floor {
                // v is (numerically) in the kernel restricted to the
                // remaining subspace; keep v itself as the eigenvector.
                lambda = 0.0;
                break;
            }
            let next = rayleigh(m, &w);
            let done = (next - lambda).abs() <= tol * next.abs().max(1e-300).max(tol);
            lambda = next;
            v = w;
            if done {
                break;
            }
        }
        eigenvalues.push(lambda);
        found.push(v);
    }
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    eigenvalues
}

fn matvec(m: &Matrix, v: &[f64]) -> Vec<f64> {
    let d = m.rows();
    let mut out = vec![0.0; d];
    for (i, o) in out.iter_mut().enumerate() {
        let row = m.row(i);
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(v) {
            acc += a * b;
        }
        *o = acc;
    }
    out
}

fn project_out(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
        for (x, y) in v.iter_mut().zip(u) {
            *x -= dot * y;
        }
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 1e-150 {
        for x in v.iter_mut() {
            *x /= norm;
        }
        norm
    } else {
        0.0
    }
}

fn rayleigh(m: &Matrix, v: &[f64]) -> f64 {
    let mv = matvec(m, v);
    v.iter().zip(&mv).map(|(a, b)| a * b).sum()
}

fn unit_basis(d: usize, k: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[k] = 1.0;
    e
}

/// Dense adjacency matrix (no self-loops).
pub fn dense_adjacency(graph: &Graph) -> Matrix {
    let n = graph.n();
    let mut a = Matrix::zeros(n, n);
    for u in 0..n {
        for &v in graph.neighbors(u) {
            a.set(u, v as usize, 1.0);
        }
    }
    a
}

/// Dense normalized operator D̂^{−1/2}(A + I)D̂^{−1/2} with d̂ = degree + 1.
pub fn dense_normalized_adjacency(graph: &Graph) -> Matrix {
    let n = graph.n();
    let mut a = dense_adjacency(graph);
    for u in 0..n {
        a.set(u, u, 1.0);
    }
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|u| 1.0 / (graph.neighbors(u).len() as f64 + 1.0).sqrt())
        .collect();
    for r in 0..n {
        for c in 0..n {
            let v = a.get(r, c) * inv_sqrt[r] * inv_sqrt[c];
            a.set(r, c, v);
        }
    }
    a
}

/// Reference simple aggregation: (A · X) · V with dense A.
pub fn dense_simple_aggregate(graph: &Graph, x: &Matrix, v: &Matrix) -> Matrix {
    dense_adjacency(graph)
        .matmul(x)
        .and_then(|ax| ax.matmul(v))
        .expect("shapes fixed by construction")
}

/// Reference normalized aggregation: (D̂^{−1/2}(A+I)D̂^{−1/2} · X) · V.
pub fn dense_gcn_aggregate(graph: &Graph, x: &Matrix, v: &Matrix) -> Matrix {
    dense_normalized_adjacency(graph)
        .matmul(x)
        .and_then(|ax| ax.matmul(v))
        .expect("shapes fixed by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::oracles::{oracle_diameter, oracle_eccentricity, oracle_sssp};
    use crate::graph::generators::generate_erdos_renyi;
    use crate::util::rng_from_seed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn floyd_warshall_matches_bfs_oracles() {
        let mut rng = rng_from_seed(101);
        for _ in 0..50 {
            let g = generate_erdos_renyi(8, 0.35, &mut rng).unwrap();
            let dist = floyd_warshall(&g);
            for src in 0..g.n() {
                let bfs = oracle_sssp(&g, src as u32).unwrap();
                assert_eq!(bfs, dist[src]);
            }
            let ecc = eccentricities_from_distances(&dist);
            assert_eq!(ecc, oracle_eccentricity(&g).unwrap());
            let diameter = ecc.iter().copied().fold(0.0, f64::max);
            assert_eq!(diameter, oracle_diameter(&g).unwrap());
        }
    }

    #[test]
    fn power_iteration_recovers_known_spectrum() {
        // Diagonal matrix: spectrum is the diagonal.
        let m = Matrix::from_rows(&[
            &[3.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
            &[0.0, 0.0, 0.5],
        ])
        .unwrap();
        let eig = power_iteration_eigenvalues(&m, 10_000, 1e-14);
        assert_abs_diff_eq!(eig[0], 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(eig[1], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(eig[2], 0.5, epsilon = 1e-10);
    }

    #[test]
    fn power_iteration_handles_multiplicity() {
        // Rotation generator squared: −S² has the double eigenvalue 1.
        let m = Matrix::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        let eig = power_iteration_eigenvalues(&m, 1000, 1e-14);
        assert_abs_diff_eq!(eig[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(eig[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn power_iteration_zero_matrix() {
        let eig = power_iteration_eigenvalues(&Matrix::zeros(4, 4), 100, 1e-14);
        assert!(eig.iter().all(|&l| l.abs() < 1e-14));
    }

    #[test]
    fn dense_normalized_adjacency_rows() {
        // Single edge: d̂ = 2 for both nodes; Â = [[1/2, 1/2], [1/2, 1/2]].
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let a = dense_normalized_adjacency(&g);
        for r in 0..2 {
            for c in 0..2 {
                assert_abs_diff_eq!(a.get(r, c), 0.5, epsilon = 1e-15);
            }
        }
    }
}
