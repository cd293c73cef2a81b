//! Loss and metric helpers shared by the trainer and the evaluator.

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Reporting floor: an exact-zero MSE maps to −10 instead of −∞.
pub const LOG10_MSE_FLOOR: f64 = 1e-10;

/// Mean squared error over every entry, on the tape.
pub fn mse_loss(tape: &mut Tape, pred: Tensor, target: Tensor) -> Result<Tensor> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::ShapeMismatch {
            op: "mse_loss",
            lhs_rows: pred.rows(),
            lhs_cols: pred.cols(),
            rhs_rows: target.rows(),
            rhs_cols: target.cols(),
        });
    }
    let n = pred.rows() * pred.cols();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "pred",
            reason: "cannot average over zero entries".to_string(),
        });
    }
    let diff = tape.sub(pred, target)?;
    let sq = tape.hadamard(diff, diff)?;
    let total = tape.sum(sq)?;
    tape.scale(total, 1.0 / n as f64)
}

/// Sum of squared errors, on the tape. Used to combine several graphs
/// into one node-weighted batch mean.
pub fn squared_error_sum(tape: &mut Tape, pred: Tensor, target: Tensor) -> Result<Tensor> {
    if pred.rows() != target.rows() || pred.cols() != target.cols() {
        return Err(Error::ShapeMismatch {
            op: "squared_error_sum",
            lhs_rows: pred.rows(),
            lhs_cols: pred.cols(),
            rhs_rows: target.rows(),
            rhs_cols: target.cols(),
        });
    }
    let diff = tape.sub(pred, target)?;
    let sq = tape.hadamard(diff, diff)?;
    tape.sum(sq)
}

/// log₁₀ of an MSE value for reporting, floored so exact fits stay
/// finite.
pub fn log10_mse(mse: f64) -> f64 {
    mse.max(LOG10_MSE_FLOOR).log10()
}

/// Fraction of masked rows whose argmax matches the label.
pub fn accuracy(logits: &Matrix, labels: &[u32], mask: &[bool]) -> Result<f64> {
    if labels.len() != logits.rows() || mask.len() != logits.rows() {
        return Err(Error::InvalidParameter {
            name: "labels",
            reason: format!(
                "labels ({}) and mask ({}) must match logit rows ({})",
                labels.len(),
                mask.len(),
                logits.rows()
            ),
        });
    }
    let mut hits = 0usize;
    let mut total = 0usize;
    for (u, &selected) in mask.iter().enumerate() {
        if !selected {
            continue;
        }
        let row = logits.row(u);
        let mut best = 0usize;
        for (c, &v) in row.iter().enumerate() {
            if v > row[best] {
                best = c;
            }
        }
        if best as u32 == labels[u] {
            hits += 1;
        }
        total += 1;
    }
    if total == 0 {
        return Err(Error::InvalidParameter {
            name: "mask",
            reason: "mask selects no rows".to_string(),
        });
    }
    Ok(hits as f64 / total as f64)
}
