//! Cyclic Jacobi eigenvalue iteration for symmetric matrices.
//!
//! The spectrum pipeline only ever needs eigenvalues of the symmetric
//! positive semi-definite matrix −S² built from an antisymmetric S, so a
//! plain rotation sweep is exact for the job and avoids a general
//! nonsymmetric solver.

use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Result of a converged Jacobi iteration.
#[derive(Clone, Debug)]
pub struct JacobiSolution {
    /// Eigenvalues sorted in descending order.
    pub eigenvalues: Vec<f64>,
    /// Frobenius norm of the off-diagonal part at convergence.
    pub off_diagonal_norm: f64,
    /// Full sweeps performed.
    pub sweeps: usize,
}

const DEFAULT_TOL: f64 = 1e-11;
const DEFAULT_MAX_SWEEPS: usize = 60;
/// Input asymmetry beyond this (relative to scale) is a caller bug.
const SYMMETRY_SLACK: f64 = 1e-8;

/// Eigenvalues of a symmetric matrix with default tolerances.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<JacobiSolution> {
    symmetric_eigenvalues_with(a, DEFAULT_TOL, DEFAULT_MAX_SWEEPS)
}

/// Eigenvalues of a symmetric matrix. Converges when the off-diagonal
/// Frobenius norm drops below `tol` (absolute); errors if `max_sweeps`
/// full sweeps do not get there.
pub fn symmetric_eigenvalues_with(a: &Matrix, tol: f64, max_sweeps: usize) -> Result<JacobiSolution> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::InvalidParameter {
            name: "matrix",
            reason: format!("expected square input, got {}x{}", a.rows(), a.cols()),
        });
    }
    let scale = a.frobenius_norm().max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (a.get(i, j) - a.get(j, i)).abs() > SYMMETRY_SLACK * scale {
                return Err(Error::InvalidParameter {
                    name: "matrix",
                    reason: format!(
                        "not symmetric: entry ({i},{j}) differs from ({j},{i}) by {}",
                        (a.get(i, j) - a.get(j, i)).abs()
                    ),
                });
            }
        }
    }

    // Work on an exactly symmetrized copy so rotations stay consistent.
    let mut m = a.clone();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (a.get(i, j) + a.get(j, i));
            m.set(i, j, avg);
            m.set(j, i, avg);
        }
    }

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&m);
        if off < tol {
            let mut eigenvalues: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
            eigenvalues.sort_by(|a, b| b.total_cmp(a));
            return Ok(JacobiSolution {
                eigenvalues,
                off_diagonal_norm: off,
                sweeps,
            });
        }
        if sweeps >= max_sweeps {
            return Err(Error::EigensolverStalled {
                sweeps,
                off_norm: off,
            });
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut m, p, q);
            }
        }
        sweeps += 1;
    }
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.rows();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let v = m.get(i, j);
                sum += v * v;
            }
        }
    }
    sum.sqrt()
}

/// One Givens rotation zeroing entry (p, q) of the symmetric matrix.
fn rotate(m: &mut Matrix, p: usize, q: usize) {
    let apq = m.get(p, q);
    if apq == 0.0 {
        return;
    }
    let app = m.get(p, p);
    let aqq = m.get(q, q);
    let theta = (aqq - app) / (2.0 * apq);
    // Smaller-angle root keeps the iteration stable.
    let t = if theta >= 0.0 {
        1.0 / (theta + (1.0 + theta * theta).sqrt())
    } else {
        1.0 / (theta - (1.0 + theta * theta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let n = m.rows();
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m.get(k, p);
        let akq = m.get(k, q);
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        m.set(k, p, new_kp);
        m.set(p, k, new_kp);
        m.set(k, q, new_kq);
        m.set(q, k, new_kq);
    }
    m.set(p, p, app - t * apq);
    m.set(q, q, aqq + t * apq);
    m.set(p, q, 0.0);
    m.set(q, p, 0.0);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn diagonal_matrix_is_immediate() {
        let m = Matrix::from_rows(&[&[3.0, 0.0], &[0.0, -1.0]]).unwrap();
        let sol = symmetric_eigenvalues(&m).unwrap();
        assert_eq!(sol.eigenvalues, vec![3.0, -1.0]);
        assert_eq!(sol.sweeps, 0);
    }

    #[test]
    fn two_by_two_closed_form() {
        // [[2,1],[1,2]] has eigenvalues 3 and 1.
        let m = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let sol = symmetric_eigenvalues(&m).unwrap();
        assert_abs_diff_eq!(sol.eigenvalues[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.eigenvalues[1], 1.0, epsilon = 1e-12);
        assert!(sol.off_diagonal_norm < 1e-10);
    }

    #[test]
    fn matches_trace_and_frobenius_invariants() {
        let mut rng = crate::util::rng_from_seed(80);
        for _ in 0..20 {
            let raw = Matrix::uniform(6, 6, -2.0, 2.0, &mut rng);
            let sym = raw.add(&raw.transpose()).unwrap();
            let sol = symmetric_eigenvalues(&sym).unwrap();
            let trace: f64 = (0..6).map(|i| sym.get(i, i)).sum();
            let eig_sum: f64 = sol.eigenvalues.iter().sum();
            assert_abs_diff_eq!(trace, eig_sum, epsilon = 1e-9);
            let frob_sq: f64 = sym.data().iter().map(|v| v * v).sum();
            let eig_sq: f64 = sol.eigenvalues.iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(frob_sq, eig_sq, epsilon = 1e-8);
            assert!(sol.off_diagonal_norm < 1e-10);
        }
    }

    #[test]
    fn agrees_with_power_iteration_oracle() {
        let mut rng = crate::util::rng_from_seed(81);
        for _ in 0..10 {
            let raw = Matrix::uniform(5, 5, -1.0, 1.0, &mut rng);
            // PSD input: AᵀA.
            let psd = raw.transpose().matmul(&raw).unwrap();
            let sol = symmetric_eigenvalues(&psd).unwrap();
            let oracle = crate::testing::power_iteration_eigenvalues(&psd, 20_000, 1e-14);
            for (a, b) in sol.eigenvalues.iter().zip(&oracle) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = Matrix::from_rows(&[&[1.0, 2.0], &[5.0, 1.0]]).unwrap();
        assert!(symmetric_eigenvalues(&m).is_err());
        let rect = Matrix::zeros(2, 3);
        assert!(symmetric_eigenvalues(&rect).is_err());
    }

    #[test]
    fn zero_matrix_gives_zero_spectrum() {
        let sol = symmetric_eigenvalues(&Matrix::zeros(4, 4)).unwrap();
        assert_eq!(sol.eigenvalues, vec![0.0; 4]);
    }
}
