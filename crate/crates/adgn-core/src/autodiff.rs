//! Reverse-mode automatic differentiation on a linear tape.
//!
//! Operations append nodes to a [`Tape`] as they execute, so the graph is
//! defined by running the forward computation. `backward` replays nodes in
//! reverse and accumulates adjoints additively. Everything is `f64`, every
//! kernel walks its inputs in a fixed order, and gradients for repeated
//! runs of the same program are bitwise identical.
//!
//! A [`Tensor`] is a plain handle (id + shape) into the tape that created
//! it; values and gradients live in the tape. Tapes are cheap to build and
//! meant to be dropped after each optimizer step, which doubles as
//! gradient zeroing between steps.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::matrix::{matmul_nn, matmul_nt_acc, matmul_tn_acc, Matrix};

/// Handle to a node on a [`Tape`]. Only valid for the tape that issued it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Tensor {
    id: usize,
    rows: usize,
    cols: usize,
}

impl Tensor {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

enum Op {
    Leaf,
    MatMul {
        a: usize,
        b: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    Sub {
        a: usize,
        b: usize,
    },
    /// Adds a 1×c bias row to every row of `a`.
    AddBias {
        a: usize,
        bias: usize,
    },
    Scale {
        a: usize,
        factor: f64,
    },
    Hadamard {
        a: usize,
        b: usize,
    },
    Tanh {
        a: usize,
    },
    Transpose {
        a: usize,
    },
    /// Sum of all entries, a 1×1 result.
    Sum {
        a: usize,
    },
    /// Column means, a 1×c result.
    MeanRows {
        a: usize,
    },
    /// Row i of the output is row `index[i]` of `a`.
    GatherRows {
        a: usize,
        index: Arc<[u32]>,
    },
    /// Row i of `a` is added into output row `index[i]`; rows hit by
    /// several indices accumulate in index order.
    ScatterAddRows {
        a: usize,
        index: Arc<[u32]>,
    },
    /// Row i multiplied by `coeffs[i]`.
    ScaleRows {
        a: usize,
        coeffs: Arc<[f64]>,
    },
    /// Mean softmax cross-entropy over the rows listed in `rows`.
    /// Softmax probabilities for those rows are cached for the backward pass.
    SoftmaxCrossEntropy {
        logits: usize,
        labels: Arc<[u32]>,
        rows: Arc<[u32]>,
        probs: Vec<f64>,
    },
}

struct Node {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Vec<f64>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, rows: usize, cols: usize, values: Vec<f64>, op: Op, name: &'static str) -> Result<Tensor> {
        debug_assert_eq!(values.len(), rows * cols);
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite { op: name });
        }
        let id = self.nodes.len();
        self.nodes.push(Node { rows, cols, values, op });
        Ok(Tensor { id, rows, cols })
    }

    fn check(&self, t: Tensor) -> Result<()> {
        if t.id >= self.nodes.len() {
            return Err(Error::UnknownTensor {
                id: t.id,
                len: self.nodes.len(),
            });
        }
        Ok(())
    }

    fn values_of(&self, id: usize) -> &[f64] {
        &self.nodes[id].values
    }

    /// Inserts an input node. Leaves carry gradients like any other node;
    /// callers decide which leaves are trainable.
    pub fn leaf(&mut self, m: &Matrix) -> Result<Tensor> {
        self.push(m.rows(), m.cols(), m.data().to_vec(), Op::Leaf, "leaf")
    }

    pub fn leaf_from_slice(&mut self, rows: usize, cols: usize, values: &[f64]) -> Result<Tensor> {
        if values.len() != rows * cols {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("expected {} entries for {rows}x{cols}, got {}", rows * cols, values.len()),
            });
        }
        self.push(rows, cols, values.to_vec(), Op::Leaf, "leaf")
    }

    pub fn value(&self, t: Tensor) -> Result<&[f64]> {
        self.check(t)?;
        Ok(self.values_of(t.id))
    }

    pub fn value_matrix(&self, t: Tensor) -> Result<Matrix> {
        Ok(Matrix::from_vec(t.rows, t.cols, self.value(t)?.to_vec()).expect("tensor shape is consistent"))
    }

    /// Gradient of the last `backward` loss with respect to `t`.
    pub fn grad(&self, t: Tensor) -> Result<&[f64]> {
        self.check(t)?;
        if self.grads.len() != self.nodes.len() {
            return Err(Error::InvalidParameter {
                name: "tape",
                reason: "backward has not been run".to_string(),
            });
        }
        Ok(&self.grads[t.id])
    }

    pub fn grad_matrix(&self, t: Tensor) -> Result<Matrix> {
        Ok(Matrix::from_vec(t.rows, t.cols, self.grad(t)?.to_vec()).expect("tensor shape is consistent"))
    }

    pub fn matmul(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.check(a)?;
        self.check(b)?;
        if a.cols != b.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs_rows: a.rows,
                lhs_cols: a.cols,
                rhs_rows: b.rows,
                rhs_cols: b.cols,
            });
        }
        let mut out = vec![0.0; a.rows * b.cols];
        matmul_nn(self.values_of(a.id), self.values_of(b.id), &mut out, a.rows, a.cols, b.cols);
        self.push(a.rows, b.cols, out, Op::MatMul { a: a.id, b: b.id }, "matmul")
    }

    pub fn add(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.elementwise(a, b, "add")
    }

    pub fn sub(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.elementwise(a, b, "sub")
    }

    pub fn hadamard(&mut self, a: Tensor, b: Tensor) -> Result<Tensor> {
        self.elementwise(a, b, "hadamard")
    }

    fn elementwise(&mut self, a: Tensor, b: Tensor, which: &'static str) -> Result<Tensor> {
        self.check(a)?;
        self.check(b)?;
        if (a.rows, a.cols) != (b.rows, b.cols) {
            return Err(Error::ShapeMismatch {
                op: which,
                lhs_rows: a.rows,
                lhs_cols: a.cols,
                rhs_rows: b.rows,
                rhs_cols: b.cols,
            });
        }
        let av = self.values_of(a.id);
        let bv = self.values_of(b.id);
        let (values, op) = match which {
            "add" => (
                av.iter().zip(bv).map(|(&x, &y)| x + y).collect(),
                Op::Add { a: a.id, b: b.id },
            ),
            "sub" => (
                av.iter().zip(bv).map(|(&x, &y)| x - y).collect(),
                Op::Sub { a: a.id, b: b.id },
            ),
            "hadamard" => (
                av.iter().zip(bv).map(|(&x, &y)| x * y).collect(),
                Op::Hadamard { a: a.id, b: b.id },
            ),
            _ => unreachable!(),
        };
        self.push(a.rows, a.cols, values, op, which)
    }

    pub fn add_bias(&mut self, a: Tensor, bias: Tensor) -> Result<Tensor> {
        self.check(a)?;
        self.check(bias)?;
        if bias.rows != 1 || bias.cols != a.cols {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                lhs_rows: a.rows,
                lhs_cols: a.cols,
                rhs_rows: bias.rows,
                rhs_cols: bias.cols,
            });
        }
        let av = self.values_of(a.id);
        let bv = self.values_of(bias.id);
        let mut values = Vec::with_capacity(av.len());
        for row in av.chunks_exact(a.cols) {
            for (x, y) in row.iter().zip(bv) {
                values.push(x + y);
            }
        }
        self.push(a.rows, a.cols, values, Op::AddBias { a: a.id, bias: bias.id }, "add_bias")
    }

    pub fn scale(&mut self, a: Tensor, factor: f64) -> Result<Tensor> {
        self.check(a)?;
        let values = self.values_of(a.id).iter().map(|&x| x * factor).collect();
        self.push(a.rows, a.cols, values, Op::Scale { a: a.id, factor }, "scale")
    }

    pub fn tanh(&mut self, a: Tensor) -> Result<Tensor> {
        self.check(a)?;
        let values = self.values_of(a.id).iter().map(|&x| x.tanh()).collect();
        self.push(a.rows, a.cols, values, Op::Tanh { a: a.id }, "tanh")
    }

    pub fn transpose(&mut self, a: Tensor) -> Result<Tensor> {
        self.check(a)?;
        let av = self.values_of(a.id);
        let mut values = vec![0.0; av.len()];
        for r in 0..a.rows {
            for c in 0..a.cols {
                values[c * a.rows + r] = av[r * a.cols + c];
            }
        }
        self.push(a.cols, a.rows, values, Op::Transpose { a: a.id }, "transpose")
    }

    pub fn sum(&mut self, a: Tensor) -> Result<Tensor> {
        self.check(a)?;
        let total: f64 = self.values_of(a.id).iter().sum();
        self.push(1, 1, vec![total], Op::Sum { a: a.id }, "sum")
    }

    pub fn mean_rows(&mut self, a: Tensor) -> Result<Tensor> {
        self.check(a)?;
        if a.rows == 0 {
            return Err(Error::InvalidParameter {
                name: "mean_rows",
                reason: "input has zero rows".to_string(),
            });
        }
        let av = self.values_of(a.id);
        let mut values = vec![0.0; a.cols];
        for row in av.chunks_exact(a.cols) {
            for (acc, &x) in values.iter_mut().zip(row) {
                *acc += x;
            }
        }
        let inv = 1.0 / a.rows as f64;
        for v in &mut values {
            *v *= inv;
        }
        self.push(1, a.cols, values, Op::MeanRows { a: a.id }, "mean_rows")
    }

    pub fn gather_rows(&mut self, a: Tensor, index: &Arc<[u32]>) -> Result<Tensor> {
        self.check(a)?;
        for &i in index.iter() {
            if i as usize >= a.rows {
                return Err(Error::InvalidParameter {
                    name: "gather_rows",
                    reason: format!("index {i} out of range for {} rows", a.rows),
                });
            }
        }
        let av = self.values_of(a.id);
        let mut values = Vec::with_capacity(index.len() * a.cols);
        for &i in index.iter() {
            let i = i as usize;
            values.extend_from_slice(&av[i * a.cols..(i + 1) * a.cols]);
        }
        self.push(
            index.len(),
            a.cols,
            values,
            Op::GatherRows { a: a.id, index: Arc::clone(index) },
            "gather_rows",
        )
    }

    pub fn scatter_add_rows(&mut self, a: Tensor, index: &Arc<[u32]>, out_rows: usize) -> Result<Tensor> {
        self.check(a)?;
        if index.len() != a.rows {
            return Err(Error::InvalidParameter {
                name: "scatter_add_rows",
                reason: format!("index length {} does not match {} input rows", index.len(), a.rows),
            });
        }
        for &i in index.iter() {
            if i as usize >= out_rows {
                return Err(Error::InvalidParameter {
                    name: "scatter_add_rows",
                    reason: format!("index {i} out of range for {out_rows} output rows"),
                });
            }
        }
        let av = self.values_of(a.id);
        let mut values = vec![0.0; out_rows * a.cols];
        for (r, &i) in index.iter().enumerate() {
            let dst = &mut values[i as usize * a.cols..(i as usize + 1) * a.cols];
            let src = &av[r * a.cols..(r + 1) * a.cols];
            for (d, &s) in dst.iter_mut().zip(src) {
                *d += s;
            }
        }
        self.push(
            out_rows,
            a.cols,
            values,
            Op::ScatterAddRows { a: a.id, index: Arc::clone(index) },
            "scatter_add_rows",
        )
    }

    pub fn scale_rows(&mut self, a: Tensor, coeffs: &Arc<[f64]>) -> Result<Tensor> {
        self.check(a)?;
        if coeffs.len() != a.rows {
            return Err(Error::InvalidParameter {
                name: "scale_rows",
                reason: format!("coefficient length {} does not match {} rows", coeffs.len(), a.rows),
            });
        }
        let av = self.values_of(a.id);
        let mut values = Vec::with_capacity(av.len());
        for (r, row) in av.chunks_exact(a.cols).enumerate() {
            let c = coeffs[r];
            values.extend(row.iter().map(|&x| x * c));
        }
        self.push(
            a.rows,
            a.cols,
            values,
            Op::ScaleRows { a: a.id, coeffs: Arc::clone(coeffs) },
            "scale_rows",
        )
    }

    /// Mean softmax cross-entropy of `logits` against integer `labels`,
    /// restricted to the rows listed in `rows`. Labels index columns.
    pub fn softmax_cross_entropy(
        &mut self,
        logits: Tensor,
        labels: &Arc<[u32]>,
        rows: &Arc<[u32]>,
    ) -> Result<Tensor> {
        self.check(logits)?;
        if labels.len() != logits.rows {
            return Err(Error::InvalidParameter {
                name: "softmax_cross_entropy",
                reason: format!("{} labels for {} rows", labels.len(), logits.rows),
            });
        }
        if rows.is_empty() {
            return Err(Error::InvalidParameter {
                name: "softmax_cross_entropy",
                reason: "row selection is empty".to_string(),
            });
        }
        let c = logits.cols;
        for &y in labels.iter() {
            if y as usize >= c {
                return Err(Error::InvalidParameter {
                    name: "softmax_cross_entropy",
                    reason: format!("label {y} out of range for {c} classes"),
                });
            }
        }
        for &r in rows.iter() {
            if r as usize >= logits.rows {
                return Err(Error::InvalidParameter {
                    name: "softmax_cross_entropy",
                    reason: format!("row {r} out of range for {} rows", logits.rows),
                });
            }
        }
        let lv = self.values_of(logits.id);
        let mut probs = Vec::with_capacity(rows.len() * c);
        let mut total = 0.0;
        for &r in rows.iter() {
            let row = &lv[r as usize * c..(r as usize + 1) * c];
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
            let mut z = 0.0;
            for &x in row {
                z += (x - max).exp();
            }
            let log_z = z.ln();
            for &x in row {
                probs.push(((x - max) - log_z).exp());
            }
            let y = labels[r as usize] as usize;
            total -= (row[y] - max) - log_z;
        }
        let mean = total / rows.len() as f64;
        self.push(
            1,
            1,
            vec![mean],
            Op::SoftmaxCrossEntropy {
                logits: logits.id,
                labels: Arc::clone(labels),
                rows: Arc::clone(rows),
                probs,
            },
            "softmax_cross_entropy",
        )
    }

    /// Accumulates d(loss)/d(node) for every node reachable from `loss`.
    /// Repeated calls recompute from scratch; adjoints within one call
    /// accumulate additively in fixed tape order.
    pub fn backward(&mut self, loss: Tensor) -> Result<()> {
        self.check(loss)?;
        if loss.rows != 1 || loss.cols != 1 {
            return Err(Error::NonScalarLoss {
                rows: loss.rows,
                cols: loss.cols,
            });
        }
        let n = self.nodes.len();
        self.grads = self.nodes.iter().map(|node| vec![0.0; node.values.len()]).collect();
        self.grads[loss.id][0] = 1.0;
        let mut live = vec![false; n];
        live[loss.id] = true;

        for id in (0..=loss.id).rev() {
            if !live[id] {
                continue;
            }
            let g = std::mem::take(&mut self.grads[id]);
            {
                let node = &self.nodes[id];
                let (rows, cols) = (node.rows, node.cols);
                match &node.op {
                    Op::Leaf => {}
                    Op::MatMul { a, b } => {
                        let (am, ak) = (self.nodes[*a].rows, self.nodes[*a].cols);
                        let bn = self.nodes[*b].cols;
                        // d/dA = G · Bᵀ, d/dB = Aᵀ · G. Sequential scopes so
                        // an aliased input (a == b) accumulates both halves.
                        {
                            let bv = &self.nodes[*b].values;
                            let ga = &mut self.grads[*a];
                            matmul_nt_acc(&g, bv, ga, am, bn, ak);
                        }
                        {
                            let av = &self.nodes[*a].values;
                            let gb = &mut self.grads[*b];
                            matmul_tn_acc(av, &g, gb, ak, am, bn);
                        }
                        live[*a] = true;
                        live[*b] = true;
                    }
                    Op::Add { a, b } => {
                        accumulate(&mut self.grads[*a], &g, 1.0);
                        accumulate(&mut self.grads[*b], &g, 1.0);
                        live[*a] = true;
                        live[*b] = true;
                    }
                    Op::Sub { a, b } => {
                        accumulate(&mut self.grads[*a], &g, 1.0);
                        accumulate(&mut self.grads[*b], &g, -1.0);
                        live[*a] = true;
                        live[*b] = true;
                    }
                    Op::AddBias { a, bias } => {
                        accumulate(&mut self.grads[*a], &g, 1.0);
                        let gb = &mut self.grads[*bias];
                        for row in g.chunks_exact(cols) {
                            for (acc, &x) in gb.iter_mut().zip(row) {
                                *acc += x;
                            }
                        }
                        live[*a] = true;
                        live[*bias] = true;
                    }
                    Op::Scale { a, factor } => {
                        accumulate(&mut self.grads[*a], &g, *factor);
                        live[*a] = true;
                    }
                    Op::Hadamard { a, b } => {
                        {
                            let bv = &self.nodes[*b].values;
                            let ga = &mut self.grads[*a];
                            for i in 0..g.len() {
                                ga[i] += g[i] * bv[i];
                            }
                        }
                        {
                            let av = &self.nodes[*a].values;
                            let gb = &mut self.grads[*b];
                            for i in 0..g.len() {
                                gb[i] += g[i] * av[i];
                            }
                        }
                        live[*a] = true;
                        live[*b] = true;
                    }
                    Op::Tanh { a } => {
                        let y = &node.values;
                        let ga = &mut self.grads[*a];
                        for i in 0..g.len() {
                            ga[i] += g[i] * (1.0 - y[i] * y[i]);
                        }
                        live[*a] = true;
                    }
                    Op::Transpose { a } => {
                        // `node` is cols(a)×rows(a); transpose g back.
                        let acols = rows;
                        let ga = &mut self.grads[*a];
                        for r in 0..rows {
                            for c in 0..cols {
                                ga[c * acols + r] += g[r * cols + c];
                            }
                        }
                        live[*a] = true;
                    }
                    Op::Sum { a } => {
                        accumulate_scalar(&mut self.grads[*a], g[0]);
                        live[*a] = true;
                    }
                    Op::MeanRows { a } => {
                        let arows = self.nodes[*a].rows;
                        let inv = 1.0 / arows as f64;
                        let ga = &mut self.grads[*a];
                        for row in ga.chunks_exact_mut(cols) {
                            for (acc, &x) in row.iter_mut().zip(&g) {
                                *acc += x * inv;
                            }
                        }
                        live[*a] = true;
                    }
                    Op::GatherRows { a, index } => {
                        let ga = &mut self.grads[*a];
                        for (r, &i) in index.iter().enumerate() {
                            let dst = &mut ga[i as usize * cols..(i as usize + 1) * cols];
                            let src = &g[r * cols..(r + 1) * cols];
                            for (d, &s) in dst.iter_mut().zip(src) {
                                *d += s;
                            }
                        }
                        live[*a] = true;
                    }
                    Op::ScatterAddRows { a, index } => {
                        let ga = &mut self.grads[*a];
                        for (r, &i) in index.iter().enumerate() {
                            let dst = &mut ga[r * cols..(r + 1) * cols];
                            let src = &g[i as usize * cols..(i as usize + 1) * cols];
                            for (d, &s) in dst.iter_mut().zip(src) {
                                *d += s;
                            }
                        }
                        live[*a] = true;
                    }
                    Op::ScaleRows { a, coeffs } => {
                        let ga = &mut self.grads[*a];
                        for (r, row) in ga.chunks_exact_mut(cols).enumerate() {
                            let c = coeffs[r];
                            let src = &g[r * cols..(r + 1) * cols];
                            for (d, &s) in row.iter_mut().zip(src) {
                                *d += c * s;
                            }
                        }
                        live[*a] = true;
                    }
                    Op::SoftmaxCrossEntropy { logits, labels, rows: sel, probs } => {
                        let c = self.nodes[*logits].cols;
                        let scale = g[0] / sel.len() as f64;
                        let gl = &mut self.grads[*logits];
                        for (k, &r) in sel.iter().enumerate() {
                            let p = &probs[k * c..(k + 1) * c];
                            let dst = &mut gl[r as usize * c..(r as usize + 1) * c];
                            let y = labels[r as usize] as usize;
                            for (j, (d, &pj)) in dst.iter_mut().zip(p).enumerate() {
                                let indicator = if j == y { 1.0 } else { 0.0 };
                                *d += scale * (pj - indicator);
                            }
                        }
                        live[*logits] = true;
                    }
                }
            }
            self.grads[id] = g;
        }
        Ok(())
    }
}

fn accumulate(dst: &mut [f64], src: &[f64], factor: f64) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += factor * s;
    }
}

fn accumulate_scalar(dst: &mut [f64], s: f64) {
    for d in dst {
        *d += s;
    }
}

/// Central-difference check of an analytic gradient.
///
/// `f` evaluates the scalar objective at the given parameter vector;
/// `analytic` is d(f)/d(params) at `params`. Returns the maximum over
/// coordinates of `|analytic - numeric| / max(1, |numeric|)` with the
/// two-sided stencil `(f(θ+h) - f(θ-h)) / 2h`.
pub fn finite_difference_check<F>(
    mut f: F,
    params: &mut [f64],
    analytic: &[f64],
    h: f64,
) -> Result<f64>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    if params.len() != analytic.len() {
        return Err(Error::InvalidParameter {
            name: "analytic",
            reason: format!("{} analytic entries for {} parameters", analytic.len(), params.len()),
        });
    }
    if !(h > 0.0) {
        return Err(Error::InvalidParameter {
            name: "h",
            reason: "step must be positive".to_string(),
        });
    }
    let mut worst = 0.0_f64;
    for i in 0..params.len() {
        let saved = params[i];
        params[i] = saved + h;
        let fp = f(params)?;
        params[i] = saved - h;
        let fm = f(params)?;
        params[i] = saved;
        let numeric = (fp - fm) / (2.0 * h);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(1.0);
        worst = worst.max(err);
    }
    Ok(worst)
}
