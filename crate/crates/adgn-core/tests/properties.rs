//! Randomized algebraic properties of the numerical kernels: transpose
//! and matmul interplay, spectral invariants of the Jacobi solver, the
//! gather/scatter adjoint pair, and metric axioms of the path oracles.

use std::sync::Arc;

use proptest::prelude::*;

use adgn_core::diagnostics::symmetric_eigenvalues;
use adgn_core::graph::generators::generate_erdos_renyi;
use adgn_core::graph::oracles::{oracle_diameter, oracle_eccentricity, oracle_sssp};
use adgn_core::testing::floyd_warshall;
use adgn_core::util::rng_from_seed;
use adgn_core::{Matrix, Tape};

fn matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    Matrix::uniform(rows, cols, -3.0, 3.0, &mut rng_from_seed(seed))
}

proptest! {
    #[test]
    fn transpose_distributes_over_matmul(
        m in 1usize..6, k in 1usize..6, n in 1usize..6, seed in any::<u64>()
    ) {
        let a = matrix(m, k, seed);
        let b = matrix(k, n, seed.wrapping_add(1));
        let lhs = a.matmul(&b).unwrap().transpose();
        let rhs = b.transpose().matmul(&a.transpose()).unwrap();
        // Same addends in the same order, so the products are bitwise equal.
        prop_assert_eq!(lhs.data(), rhs.data());
    }

    #[test]
    fn jacobi_preserves_trace_and_frobenius_norm(
        n in 1usize..8, seed in any::<u64>()
    ) {
        let m = matrix(n, n, seed);
        let sym = m.add(&m.transpose()).unwrap();
        let trace: f64 = (0..n).map(|i| sym.get(i, i)).sum();
        let solution = symmetric_eigenvalues(&sym).unwrap();
        let scale = 1.0 + sym.frobenius_norm();

        let eig_sum: f64 = solution.eigenvalues.iter().sum();
        prop_assert!((eig_sum - trace).abs() <= 1e-10 * scale);

        // Rotations preserve the Frobenius norm, so sum of squares must too.
        let eig_sq: f64 = solution.eigenvalues.iter().map(|v| v * v).sum();
        let frob_sq = sym.frobenius_norm().powi(2);
        prop_assert!((eig_sq - frob_sq).abs() <= 1e-10 * scale * scale);
    }

    #[test]
    fn scatter_add_backward_is_gather(
        rows in 1usize..8, cols in 1usize..5, out_rows in 1usize..6,
        seed in any::<u64>()
    ) {
        let mut rng = rng_from_seed(seed);
        let index: Arc<[u32]> = (0..rows)
            .map(|_| rng.random_range(0..out_rows as u32))
            .collect();
        let x = Matrix::uniform(rows, cols, -2.0, 2.0, &mut rng);
        let y = Matrix::uniform(out_rows, cols, -2.0, 2.0, &mut rng);

        let mut tape = Tape::new();
        let xt = tape.leaf(&x).unwrap();
        let yt = tape.leaf(&y).unwrap();
        let scattered = tape.scatter_add_rows(xt, &index, out_rows).unwrap();
        let weighted = tape.hadamard(scattered, yt).unwrap();
        let loss = tape.sum(weighted).unwrap();
        tape.backward(loss).unwrap();

        // d<scatter(x), y>/dx routes y's rows back through the index map.
        let grad = tape.grad_matrix(xt).unwrap();
        for (r, &i) in index.iter().enumerate() {
            prop_assert_eq!(grad.row(r), y.row(i as usize));
        }
    }

    #[test]
    fn path_oracles_satisfy_metric_axioms(
        n in 2usize..9, p in 0.4f64..1.0, seed in any::<u64>()
    ) {
        let graph = generate_erdos_renyi(n, p, &mut rng_from_seed(seed)).unwrap();
        let Ok(diameter) = oracle_diameter(&graph) else {
            // Disconnected draw; distances are undefined, nothing to check.
            return Ok(());
        };
        let dist = floyd_warshall(&graph);
        let ecc = oracle_eccentricity(&graph).unwrap();

        for u in 0..n {
            let from_u = oracle_sssp(&graph, u as u32).unwrap();
            let mut max_row: f64 = 0.0;
            for v in 0..n {
                prop_assert_eq!(from_u[v], dist[u][v]);
                prop_assert_eq!(dist[u][v], dist[v][u]);
                max_row = max_row.max(dist[u][v]);
                for w in 0..n {
                    prop_assert!(dist[u][w] <= dist[u][v] + dist[v][w]);
                }
            }
            prop_assert_eq!(ecc[u], max_row);
        }
        let max_ecc = ecc.iter().cloned().fold(0.0, f64::max);
        prop_assert_eq!(diameter, max_ecc);
    }
}
