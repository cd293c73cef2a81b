//! Model building blocks: the antisymmetric message-passing layer, the
//! plain convolution stack used as a baseline, and the encoder/readout
//! MLPs around them.
//!
//! Convention: states are row vectors, so a weight matrix is stored
//! `[in, out]` and applied as `x · W`. The antisymmetric step uses the
//! operator `M = W − Wᵀ − γI` built from the stored matrix at use time;
//! the stored `W` itself is unconstrained. One layer performs a single
//! forward-Euler step
//!
//! ```text
//! x_u ← x_u + ε · tanh(x_u · M + Φ(X, N_u) + b)
//! ```
//!
//! with the same `W`, `V`, `b` at every layer, so depth L approximates
//! integrating the underlying node ODE to horizon ε·L. The neighborhood
//! term Φ is either the plain sum over neighbors (`Simple`) or the
//! degree-normalized sum with self-loop (`Gcn`).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Tensor};
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::util::rng_from_seed;

/// Any node state beyond this magnitude is treated as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Φ(X, N_u) = Σ_{j∈N_u} V x_j (excludes the node itself).
    Simple,
    /// Φ(X, N_u) = V Σ_{j∈N_u∪{u}} x_j / √(d̂_j d̂_u), d̂ = degree + 1.
    Gcn,
}

impl Aggregation {
    pub fn name(&self) -> &'static str {
        match self {
            Aggregation::Simple => "simple",
            Aggregation::Gcn => "gcn",
        }
    }
}

/// Shared-weight antisymmetric core. `w`, `v`, `bias` are trainable;
/// `epsilon`, `gamma`, `layers` are fixed hyperparameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdgnParams {
    pub w: Matrix,
    pub v: Matrix,
    /// Row vector [1, d].
    pub bias: Matrix,
    pub epsilon: f64,
    pub gamma: f64,
    pub layers: usize,
    pub aggregation: Aggregation,
}

impl AdgnParams {
    pub fn init(dim: usize, layers: usize, epsilon: f64, gamma: f64, aggregation: Aggregation, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        AdgnParams {
            w: Matrix::uniform(dim, dim, -bound, bound, rng),
            v: Matrix::uniform(dim, dim, -bound, bound, rng),
            bias: Matrix::zeros(1, dim),
            epsilon,
            gamma,
            layers,
            aggregation,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.rows()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.w.rows();
        if self.w.cols() != d {
            return Err(Error::InvalidParameter {
                name: "w",
                reason: format!("must be square, got {}x{}", self.w.rows(), self.w.cols()),
            });
        }
        if self.v.shape() != (d, d) {
            return Err(Error::InvalidParameter {
                name: "v",
                reason: format!("expected {d}x{d}, got {}x{}", self.v.rows(), self.v.cols()),
            });
        }
        if self.bias.shape() != (1, d) {
            return Err(Error::InvalidParameter {
                name: "bias",
                reason: format!("expected 1x{d}, got {}x{}", self.bias.rows(), self.bias.cols()),
            });
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "epsilon",
                reason: format!("step size {} must be finite and non-negative", self.epsilon),
            });
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "gamma",
                reason: format!("diffusion strength {} must be finite and non-negative", self.gamma),
            });
        }
        if self.layers == 0 {
            return Err(Error::InvalidParameter {
                name: "layers",
                reason: "need at least one layer".to_string(),
            });
        }
        Ok(())
    }
}

/// One layer of the baseline stack: x ← tanh(aggregate_gcn(x) + b).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnLayerParams {
    pub weight: Matrix,
    pub bias: Matrix,
}

/// Independent per-layer weights, in contrast with the shared-weight core.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcnStackParams {
    pub layers: Vec<GcnLayerParams>,
}

impl GcnStackParams {
    pub fn init(dim: usize, layers: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (dim as f64).sqrt();
        GcnStackParams {
            layers: (0..layers)
                .map(|_| GcnLayerParams {
                    weight: Matrix::uniform(dim, dim, -bound, bound, rng),
                    bias: Matrix::zeros(1, dim),
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.rows())
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter {
                name: "layers",
                reason: "need at least one layer".to_string(),
            });
        }
        let d = self.dim();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weight.shape() != (d, d) || layer.bias.shape() != (1, d) {
                return Err(Error::InvalidParameter {
                    name: "layers",
                    reason: format!("layer {i} shapes do not chain at dim {d}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpLayer {
    pub weight: Matrix,
    pub bias: Matrix,
}

/// Dense layers with tanh between them and a linear output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layers: Vec<MlpLayer>,
}

impl MlpParams {
    /// Single linear layer.
    pub fn linear(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        MlpParams {
            layers: vec![MlpLayer {
                weight: init_weight(d_in, d_out, rng),
                bias: Matrix::zeros(1, d_out),
            }],
        }
    }

    /// One hidden tanh layer of width `hidden`, then a linear map.
    pub fn one_hidden(d_in: usize, hidden: usize, d_out: usize, rng: &mut impl Rng) -> Self {
        MlpParams {
            layers: vec![
                MlpLayer {
                    weight: init_weight(d_in, hidden, rng),
                    bias: Matrix::zeros(1, hidden),
                },
                MlpLayer {
                    weight: init_weight(hidden, d_out, rng),
                    bias: Matrix::zeros(1, d_out),
                },
            ],
        }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.rows())
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.cols())
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::InvalidParameter {
                name: "layers",
                reason: "mlp needs at least one layer".to_string(),
            });
        }
        let mut dim = self.in_dim();
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weight.rows() != dim {
                return Err(Error::InvalidParameter {
                    name: "layers",
                    reason: format!("layer {i} expects input dim {}, previous gives {dim}", layer.weight.rows()),
                });
            }
            if layer.bias.shape() != (1, layer.weight.cols()) {
                return Err(Error::InvalidParameter {
                    name: "layers",
                    reason: format!("layer {i} bias shape mismatch"),
                });
            }
            dim = layer.weight.cols();
        }
        Ok(())
    }
}

fn init_weight(d_in: usize, d_out: usize, rng: &mut impl Rng) -> Matrix {
    let bound = 1.0 / (d_in as f64).sqrt();
    Matrix::uniform(d_in, d_out, -bound, bound, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoreParams {
    Adgn(AdgnParams),
    GcnStack(GcnStackParams),
}

impl CoreParams {
    pub fn dim(&self) -> usize {
        match self {
            CoreParams::Adgn(p) => p.dim(),
            CoreParams::GcnStack(p) => p.dim(),
        }
    }

    pub fn layers(&self) -> usize {
        match self {
            CoreParams::Adgn(p) => p.layers,
            CoreParams::GcnStack(p) => p.layers.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CoreParams::Adgn(p) => match p.aggregation {
                Aggregation::Simple => "adgn-simple",
                Aggregation::Gcn => "adgn-gcn",
            },
            CoreParams::GcnStack(_) => "gcn-baseline",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pooling {
    /// Node-level output [n, d_out].
    None,
    /// Graph-level output: average node states before the readout.
    Mean,
    /// Graph-level output: sum node states before the readout.
    Sum,
}

/// Encoder → core → (pooling) → readout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub encoder: MlpParams,
    pub core: CoreParams,
    pub readout: MlpParams,
    pub pooling: Pooling,
}

impl ModelParams {
    /// Standard assembly: one-hidden-layer encoder and readout around the
    /// antisymmetric core, all widths equal to `dim`. Parameter draws are
    /// ordered encoder, core, readout from a single seeded generator.
    #[allow(clippy::too_many_arguments)]
    pub fn new_adgn(
        d_in: usize,
        dim: usize,
        d_out: usize,
        layers: usize,
        epsilon: f64,
        gamma: f64,
        aggregation: Aggregation,
        pooling: Pooling,
        seed: u64,
    ) -> Self {
        let mut rng = rng_from_seed(seed);
        ModelParams {
            encoder: MlpParams::one_hidden(d_in, dim, dim, &mut rng),
            core: CoreParams::Adgn(AdgnParams::init(dim, layers, epsilon, gamma, aggregation, &mut rng)),
            readout: MlpParams::one_hidden(dim, dim, d_out, &mut rng),
            pooling,
        }
    }

    /// Same assembly with the baseline convolution stack as the core.
    pub fn new_gcn_stack(
        d_in: usize,
        dim: usize,
        d_out: usize,
        layers: usize,
        pooling: Pooling,
        seed: u64,
    ) -> Self {
        let mut rng = rng_from_seed(seed);
        ModelParams {
            encoder: MlpParams::one_hidden(d_in, dim, dim, &mut rng),
            core: CoreParams::GcnStack(GcnStackParams::init(dim, layers, &mut rng)),
            readout: MlpParams::one_hidden(dim, dim, d_out, &mut rng),
            pooling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.encoder.validate()?;
        self.readout.validate()?;
        match &self.core {
            CoreParams::Adgn(p) => p.validate()?,
            CoreParams::GcnStack(p) => p.validate()?,
        }
        let d = self.core.dim();
        if self.encoder.out_dim() != d || self.readout.in_dim() != d {
            return Err(Error::InvalidParameter {
                name: "model",
                reason: format!(
                    "encoder out {} and readout in {} must equal core dim {d}",
                    self.encoder.out_dim(),
                    self.readout.in_dim()
                ),
            });
        }
        Ok(())
    }

    /// Visits every trainable matrix in canonical order with a stable name.
    /// Optimizer state, gradient extraction, and parameter flattening all
    /// share this order.
    pub fn visit(&self, f: &mut impl FnMut(&str, &Matrix)) {
        for (i, layer) in self.encoder.layers.iter().enumerate() {
            f(&format!("encoder.{i}.weight"), &layer.weight);
            f(&format!("encoder.{i}.bias"), &layer.bias);
        }
        match &self.core {
            CoreParams::Adgn(p) => {
                f("core.w", &p.w);
                f("core.v", &p.v);
                f("core.bias", &p.bias);
            }
            CoreParams::GcnStack(p) => {
                for (i, layer) in p.layers.iter().enumerate() {
                    f(&format!("core.{i}.weight"), &layer.weight);
                    f(&format!("core.{i}.bias"), &layer.bias);
                }
            }
        }
        for (i, layer) in self.readout.layers.iter().enumerate() {
            f(&format!("readout.{i}.weight"), &layer.weight);
            f(&format!("readout.{i}.bias"), &layer.bias);
        }
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&str, &mut Matrix)) {
        for (i, layer) in self.encoder.layers.iter_mut().enumerate() {
            f(&format!("encoder.{i}.weight"), &mut layer.weight);
            f(&format!("encoder.{i}.bias"), &mut layer.bias);
        }
        match &mut self.core {
            CoreParams::Adgn(p) => {
                f("core.w", &mut p.w);
                f("core.v", &mut p.v);
                f("core.bias", &mut p.bias);
            }
            CoreParams::GcnStack(p) => {
                for (i, layer) in p.layers.iter_mut().enumerate() {
                    f(&format!("core.{i}.weight"), &mut layer.weight);
                    f(&format!("core.{i}.bias"), &mut layer.bias);
                }
            }
        }
        for (i, layer) in self.readout.layers.iter_mut().enumerate() {
            f(&format!("readout.{i}.weight"), &mut layer.weight);
            f(&format!("readout.{i}.bias"), &mut layer.bias);
        }
    }

    /// All trainable values in canonical visit order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit(&mut |_, m| out.extend_from_slice(m.data()));
        out
    }

    /// Writes a flat vector (from [`flatten`](Self::flatten)) back into
    /// the parameter matrices.
    pub fn unflatten(&mut self, values: &[f64]) -> Result<()> {
        let mut offset = 0usize;
        let mut overflow = false;
        self.visit_mut(&mut |_, m| {
            let len = m.data().len();
            if offset + len > values.len() {
                overflow = true;
                return;
            }
            m.data_mut().copy_from_slice(&values[offset..offset + len]);
            offset += len;
        });
        if overflow || offset != values.len() {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("expected {} parameter values, got {}", offset, values.len()),
            });
        }
        Ok(())
    }
}

/// M = W − Wᵀ − γ·I. The γ=0 result is exactly antisymmetric.
pub fn antisymmetric_operator(w: &Matrix, gamma: f64) -> Result<Matrix> {
    if w.rows() != w.cols() {
        return Err(Error::ShapeMismatch {
            op: "antisymmetric_operator",
            lhs_rows: w.rows(),
            lhs_cols: w.cols(),
            rhs_rows: w.cols(),
            rhs_cols: w.rows(),
        });
    }
    let mut m = w.sub(&w.transpose())?;
    if gamma != 0.0 {
        for i in 0..m.rows() {
            let v = m.get(i, i) - gamma;
            m.set(i, i, v);
        }
    }
    Ok(m)
}

/// Tape-resident core parameters: leaf handles plus the derived operator.
pub struct AdgnBinding {
    pub w: Tensor,
    pub v: Tensor,
    pub bias: Tensor,
    /// x · operator realizes (W − Wᵀ − γI) applied to row states.
    pub operator: Tensor,
    pub epsilon: f64,
    pub layers: usize,
    pub aggregation: Aggregation,
}

pub fn bind_adgn(tape: &mut Tape, params: &AdgnParams) -> Result<AdgnBinding> {
    params.validate()?;
    let w = tape.leaf(&params.w)?;
    let v = tape.leaf(&params.v)?;
    let bias = tape.leaf(&params.bias)?;
    let wt = tape.transpose(w)?;
    let mut operator = tape.sub(w, wt)?;
    if params.gamma != 0.0 {
        let gi = tape.leaf(&Matrix::identity(params.dim()).scale(params.gamma))?;
        operator = tape.sub(operator, gi)?;
    }
    Ok(AdgnBinding {
        w,
        v,
        bias,
        operator,
        epsilon: params.epsilon,
        layers: params.layers,
        aggregation: params.aggregation,
    })
}

/// Plain neighbor sum: row u of the result is Σ_{j∈N_u} (x_j · V).
pub fn aggregate_simple(tape: &mut Tape, x: Tensor, graph: &Graph, v: Tensor) -> Result<Tensor> {
    let xv = tape.matmul(x, v)?;
    let messages = tape.gather_rows(xv, graph.arc_sources())?;
    tape.scatter_add_rows(messages, graph.arc_targets(), graph.n())
}

/// Degree-normalized sum with self term, then the V map:
/// row u = (Σ_{j∈N_u} x_j/√(d̂_j d̂_u) + x_u/d̂_u) · V.
pub fn aggregate_gcn(tape: &mut Tape, x: Tensor, graph: &Graph, v: Tensor) -> Result<Tensor> {
    let gathered = tape.gather_rows(x, graph.arc_sources())?;
    let scaled = tape.scale_rows(gathered, graph.gcn_arc_norm())?;
    let neighbor_sum = tape.scatter_add_rows(scaled, graph.arc_targets(), graph.n())?;
    let self_part = tape.scale_rows(x, graph.gcn_self_norm())?;
    let normalized = tape.add(neighbor_sum, self_part)?;
    tape.matmul(normalized, v)
}

fn check_divergence(tape: &Tape, state: Tensor, layer: usize) -> Result<()> {
    let max_abs = tape
        .value(state)?
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
    if max_abs > DIVERGENCE_LIMIT {
        return Err(Error::Divergence {
            layer,
            max_abs,
            limit: DIVERGENCE_LIMIT,
        });
    }
    Ok(())
}

/// One forward-Euler step. `layer` is the 1-based index reported on
/// divergence.
pub fn adgn_step(
    tape: &mut Tape,
    x: Tensor,
    graph: &Graph,
    binding: &AdgnBinding,
    layer: usize,
) -> Result<Tensor> {
    let agg = match binding.aggregation {
        Aggregation::Simple => aggregate_simple(tape, x, graph, binding.v)?,
        Aggregation::Gcn => aggregate_gcn(tape, x, graph, binding.v)?,
    };
    let drift = tape.matmul(x, binding.operator)?;
    let pre = tape.add(drift, agg)?;
    let pre = tape.add_bias(pre, binding.bias)?;
    let act = tape.tanh(pre)?;
    let step = tape.scale(act, binding.epsilon)?;
    let out = tape.add(x, step)?;
    check_divergence(tape, out, layer)?;
    Ok(out)
}

/// Applies the shared-weight step `binding.layers` times.
pub fn adgn_forward(tape: &mut Tape, x0: Tensor, graph: &Graph, binding: &AdgnBinding) -> Result<Tensor> {
    let mut x = x0;
    for layer in 1..=binding.layers {
        x = adgn_step(tape, x, graph, binding, layer)?;
    }
    Ok(x)
}

pub struct GcnStackBinding {
    pub layers: Vec<(Tensor, Tensor)>,
}

pub fn bind_gcn_stack(tape: &mut Tape, params: &GcnStackParams) -> Result<GcnStackBinding> {
    params.validate()?;
    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        let w = tape.leaf(&layer.weight)?;
        let b = tape.leaf(&layer.bias)?;
        layers.push((w, b));
    }
    Ok(GcnStackBinding { layers })
}

/// Baseline stack: x ← tanh(aggregate_gcn(x, W_ℓ) + b_ℓ), independent
/// weights per layer.
pub fn gcn_stack_forward(
    tape: &mut Tape,
    x0: Tensor,
    graph: &Graph,
    binding: &GcnStackBinding,
) -> Result<Tensor> {
    let mut x = x0;
    for (i, &(w, b)) in binding.layers.iter().enumerate() {
        let agg = aggregate_gcn(tape, x, graph, w)?;
        let pre = tape.add_bias(agg, b)?;
        x = tape.tanh(pre)?;
        check_divergence(tape, x, i + 1)?;
    }
    Ok(x)
}

pub struct MlpBinding {
    pub layers: Vec<(Tensor, Tensor)>,
}

pub fn bind_mlp(tape: &mut Tape, params: &MlpParams) -> Result<MlpBinding> {
    params.validate()?;
    let mut layers = Vec::with_capacity(params.layers.len());
    for layer in &params.layers {
        layers.push((tape.leaf(&layer.weight)?, tape.leaf(&layer.bias)?));
    }
    Ok(MlpBinding { layers })
}

/// tanh between layers, linear output.
pub fn mlp_forward(tape: &mut Tape, x: Tensor, binding: &MlpBinding) -> Result<Tensor> {
    let last = binding.layers.len() - 1;
    let mut h = x;
    for (i, &(w, b)) in binding.layers.iter().enumerate() {
        let lin = tape.matmul(h, w)?;
        h = tape.add_bias(lin, b)?;
        if i != last {
            h = tape.tanh(h)?;
        }
    }
    Ok(h)
}

/// Average of node rows: [n, d] → [1, d].
pub fn mean_pool(tape: &mut Tape, x: Tensor) -> Result<Tensor> {
    tape.mean_rows(x)
}

/// Sum of node rows: [n, d] → [1, d].
pub fn sum_pool(tape: &mut Tape, x: Tensor) -> Result<Tensor> {
    let mean = tape.mean_rows(x)?;
    tape.scale(mean, x.rows() as f64)
}

/// Tape-resident full model with leaf handles in canonical visit order.
pub struct ModelBinding {
    pub encoder: MlpBinding,
    pub core: ModelCoreBinding,
    pub readout: MlpBinding,
    pub pooling: Pooling,
    /// Leaves aligned with [`ModelParams::visit`] order.
    pub leaves: Vec<Tensor>,
}

pub enum ModelCoreBinding {
    Adgn(AdgnBinding),
    GcnStack(GcnStackBinding),
}

pub fn bind_model(tape: &mut Tape, params: &ModelParams) -> Result<ModelBinding> {
    params.validate()?;
    let encoder = bind_mlp(tape, &params.encoder)?;
    let core = match &params.core {
        CoreParams::Adgn(p) => ModelCoreBinding::Adgn(bind_adgn(tape, p)?),
        CoreParams::GcnStack(p) => ModelCoreBinding::GcnStack(bind_gcn_stack(tape, p)?),
    };
    let readout = bind_mlp(tape, &params.readout)?;
    let mut leaves = Vec::new();
    for &(w, b) in &encoder.layers {
        leaves.push(w);
        leaves.push(b);
    }
    match &core {
        ModelCoreBinding::Adgn(b) => {
            leaves.push(b.w);
            leaves.push(b.v);
            leaves.push(b.bias);
        }
        ModelCoreBinding::GcnStack(stack) => {
            for &(w, b) in &stack.layers {
                leaves.push(w);
                leaves.push(b);
            }
        }
    }
    for &(w, b) in &readout.layers {
        leaves.push(w);
        leaves.push(b);
    }
    Ok(ModelBinding {
        encoder,
        core,
        readout,
        pooling: params.pooling,
        leaves,
    })
}

/// Output of a full forward pass, keeping the input leaf so callers can
/// read input gradients.
pub struct ModelOutput {
    pub output: Tensor,
    pub input: Tensor,
}

/// encoder → core → optional pooling → readout over a graph's features.
pub fn model_forward(tape: &mut Tape, binding: &ModelBinding, graph: &Graph) -> Result<ModelOutput> {
    let input = tape.leaf(graph.features())?;
    let encoded = mlp_forward(tape, input, &binding.encoder)?;
    let states = match &binding.core {
        ModelCoreBinding::Adgn(core) => adgn_forward(tape, encoded, graph, core)?,
        ModelCoreBinding::GcnStack(core) => gcn_stack_forward(tape, encoded, graph, core)?,
    };
    let pooled = match binding.pooling {
        Pooling::None => states,
        Pooling::Mean => mean_pool(tape, states)?,
        Pooling::Sum => sum_pool(tape, states)?,
    };
    let output = mlp_forward(tape, pooled, &binding.readout)?;
    Ok(ModelOutput { output, input })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn path3() -> Graph {
        Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
    }

    fn identity_adgn(dim: usize, epsilon: f64, gamma: f64, layers: usize, aggregation: Aggregation) -> AdgnParams {
        AdgnParams {
            w: Matrix::zeros(dim, dim),
            v: Matrix::zeros(dim, dim),
            bias: Matrix::zeros(1, dim),
            epsilon,
            gamma,
            layers,
            aggregation,
        }
    }

    #[test]
    fn antisymmetric_operator_known_values() {
        let w = Matrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]).unwrap();
        let m0 = antisymmetric_operator(&w, 0.0).unwrap();
        assert_eq!(m0.data(), &[0.0, -1.0, 1.0, 0.0]);
        let m1 = antisymmetric_operator(&w, 0.1).unwrap();
        assert_eq!(m1.data(), &[-0.1, -1.0, 1.0, -0.1]);
        assert!(antisymmetric_operator(&Matrix::zeros(2, 3), 0.0).is_err());
    }

    #[test]
    fn antisymmetric_operator_is_skew_for_random_inputs() {
        let mut rng = crate::util::rng_from_seed(40);
        for _ in 0..100 {
            let w = Matrix::uniform(5, 5, -2.0, 2.0, &mut rng);
            let m = antisymmetric_operator(&w, 0.0).unwrap();
            let mt = m.transpose();
            for (a, b) in m.data().iter().zip(mt.data()) {
                assert_eq!(*a, -*b);
            }
        }
    }

    #[test]
    fn scalar_operator_degenerates_to_zero() {
        let w = Matrix::from_rows(&[&[3.7]]).unwrap();
        let m = antisymmetric_operator(&w, 0.0).unwrap();
        assert_eq!(m.data(), &[0.0]);
    }

    #[test]
    fn simple_aggregation_on_path() {
        let mut tape = Tape::new();
        let g = path3();
        let x = tape.leaf(&Matrix::from_rows(&[&[1.0], &[2.0], &[3.0]]).unwrap()).unwrap();
        let v = tape.leaf(&Matrix::identity(1)).unwrap();
        let agg = aggregate_simple(&mut tape, x, &g, v).unwrap();
        assert_eq!(tape.value(agg).unwrap(), &[2.0, 4.0, 2.0]);
    }

    #[test]
    fn simple_aggregation_isolated_node_is_zero() {
        let mut tape = Tape::new();
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        let x = tape.leaf(&Matrix::from_rows(&[&[5.0], &[7.0], &[9.0]]).unwrap()).unwrap();
        let v = tape.leaf(&Matrix::identity(1)).unwrap();
        let agg = aggregate_simple(&mut tape, x, &g, v).unwrap();
        assert_eq!(tape.value(agg).unwrap(), &[7.0, 5.0, 0.0]);
    }

    #[test]
    fn gcn_aggregation_single_edge() {
        let mut tape = Tape::new();
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let x = tape.leaf(&Matrix::from_rows(&[&[1.0], &[0.0]]).unwrap()).unwrap();
        let v = tape.leaf(&Matrix::identity(1)).unwrap();
        let agg = aggregate_gcn(&mut tape, x, &g, v).unwrap();
        let got = tape.value(agg).unwrap();
        assert_abs_diff_eq!(got[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(got[1], 0.5, epsilon = 1e-15);
    }

    #[test]
    fn gcn_aggregation_isolated_node_keeps_state() {
        let mut tape = Tape::new();
        let g = Graph::from_edges(2, &[]).unwrap();
        let x = tape.leaf(&Matrix::from_rows(&[&[3.0], &[-2.0]]).unwrap()).unwrap();
        let v = tape.leaf(&Matrix::identity(1)).unwrap();
        let agg = aggregate_gcn(&mut tape, x, &g, v).unwrap();
        assert_eq!(tape.value(agg).unwrap(), &[3.0, -2.0]);
    }

    #[test]
    fn gcn_aggregation_matches_dense_oracle() {
        let mut rng = crate::util::rng_from_seed(41);
        for trial in 0..20 {
            let g = crate::graph::generate_erdos_renyi(8, 0.4, &mut rng).unwrap();
            let x = Matrix::uniform(8, 3, -1.0, 1.0, &mut rng);
            let v = Matrix::uniform(3, 3, -1.0, 1.0, &mut rng);
            let mut tape = Tape::new();
            let tx = tape.leaf(&x).unwrap();
            let tv = tape.leaf(&v).unwrap();
            let agg = aggregate_gcn(&mut tape, tx, &g, tv).unwrap();
            let want = crate::testing::dense_gcn_aggregate(&g, &x, &v);
            for (a, b) in tape.value(agg).unwrap().iter().zip(want.data()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-12);
            }
            let _ = trial;
        }
    }

    #[test]
    fn gcn_all_ones_matches_normalized_rows() {
        let mut rng = crate::util::rng_from_seed(42);
        let g = crate::graph::generate_erdos_renyi(7, 0.5, &mut rng).unwrap();
        let ones = Matrix::from_vec(7, 1, vec![1.0; 7]).unwrap();
        let mut tape = Tape::new();
        let tx = tape.leaf(&ones).unwrap();
        let tv = tape.leaf(&Matrix::identity(1)).unwrap();
        let agg = aggregate_gcn(&mut tape, tx, &g, tv).unwrap();
        let want = crate::testing::dense_normalized_adjacency(&g).matmul(&ones).unwrap();
        for (a, b) in tape.value(agg).unwrap().iter().zip(want.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn simple_aggregation_matches_dense_oracle() {
        let mut rng = crate::util::rng_from_seed(43);
        let g = crate::graph::generate_erdos_renyi(8, 0.4, &mut rng).unwrap();
        let x = Matrix::uniform(8, 3, -1.0, 1.0, &mut rng);
        let v = Matrix::uniform(3, 3, -1.0, 1.0, &mut rng);
        let mut tape = Tape::new();
        let tx = tape.leaf(&x).unwrap();
        let tv = tape.leaf(&v).unwrap();
        let agg = aggregate_simple(&mut tape, tx, &g, tv).unwrap();
        let want = crate::testing::dense_simple_aggregate(&g, &x, &v);
        for (a, b) in tape.value(agg).unwrap().iter().zip(want.data()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_epsilon_step_is_identity() {
        let g = path3();
        let mut rng = crate::util::rng_from_seed(44);
        let mut params = AdgnParams::init(4, 7, 0.0, 0.3, Aggregation::Simple, &mut rng);
        params.bias = Matrix::uniform(1, 4, -1.0, 1.0, &mut rng);
        let x0 = Matrix::uniform(3, 4, -1.0, 1.0, &mut rng);
        let mut tape = Tape::new();
        let tx = tape.leaf(&x0).unwrap();
        let binding = bind_adgn(&mut tape, &params).unwrap();
        let out = adgn_forward(&mut tape, tx, &g, &binding).unwrap();
        assert_eq!(tape.value(out).unwrap(), x0.data());
    }

    #[test]
    fn zero_parameters_step_is_identity() {
        let g = path3();
        let params = identity_adgn(2, 0.5, 0.0, 1, Aggregation::Simple);
        let x0 = Matrix::from_rows(&[&[1.0, -1.0], &[0.5, 0.25], &[0.0, 2.0]]).unwrap();
        let mut tape = Tape::new();
        let tx = tape.leaf(&x0).unwrap();
        let binding = bind_adgn(&mut tape, &params).unwrap();
        let out = adgn_step(&mut tape, tx, &g, &binding, 1).unwrap();
        assert_eq!(tape.value(out).unwrap(), x0.data());
    }

    #[test]
    fn scalar_diffusion_step_hand_value() {
        // Single node, d=1, W=0, γ=1, b=0, ε=0.5, x=1:
        // x′ = 1 + 0.5·tanh(−1).
        let g = Graph::from_edges(1, &[]).unwrap();
        let params = identity_adgn(1, 0.5, 1.0, 1, Aggregation::Simple);
        let mut tape = Tape::new();
        let tx = tape.leaf(&Matrix::from_rows(&[&[1.0]]).unwrap()).unwrap();
        let binding = bind_adgn(&mut tape, &params).unwrap();
        let out = adgn_step(&mut tape, tx, &g, &binding, 1).unwrap();
        let got = tape.value(out).unwrap()[0];
        assert_eq!(got, 1.0 + 0.5 * (-1.0_f64).tanh());
        assert_abs_diff_eq!(got, 0.6192029220221176, epsilon = 1e-15);
    }

    #[test]
    fn single_layer_forward_equals_step() {
        let g = path3();
        let mut rng = crate::util::rng_from_seed(45);
        let params = AdgnParams::init(3, 1, 0.2, 0.1, Aggregation::Gcn, &mut rng);
        let x0 = Matrix::uniform(3, 3, -1.0, 1.0, &mut rng);

        let mut t1 = Tape::new();
        let x = t1.leaf(&x0).unwrap();
        let b1 = bind_adgn(&mut t1, &params).unwrap();
        let fwd = adgn_forward(&mut t1, x, &g, &b1).unwrap();

        let mut t2 = Tape::new();
        let x = t2.leaf(&x0).unwrap();
        let b2 = bind_adgn(&mut t2, &params).unwrap();
        let step = adgn_step(&mut t2, x, &g, &b2, 1).unwrap();

        assert_eq!(t1.value(fwd).unwrap(), t2.value(step).unwrap());
    }

    #[test]
    fn weight_sharing_single_leaf_per_parameter() {
        let g = path3();
        let mut rng = crate::util::rng_from_seed(46);
        let params = AdgnParams::init(3, 10, 0.1, 0.1, Aggregation::Simple, &mut rng);
        let mut tape = Tape::new();
        let x = tape.leaf(&Matrix::uniform(3, 3, -1.0, 1.0, &mut rng)).unwrap();
        let before = tape.len();
        let binding = bind_adgn(&mut tape, &params).unwrap();
        let after_bind = tape.len();
        let out = adgn_forward(&mut tape, x, &g, &binding).unwrap();
        // Binding adds the three parameter leaves plus the derived
        // operator nodes (transpose, sub, constant γI, sub); the forward
        // layers reuse them and add no further leaves.
        assert_eq!(after_bind - before, 7);
        let loss = tape.sum(out).unwrap();
        tape.backward(loss).unwrap();
        let gw = tape.grad_matrix(binding.w).unwrap();
        assert!(gw.max_abs() > 0.0, "shared weight receives gradient");
    }

    #[test]
    fn deeper_stacks_accumulate_weight_gradient() {
        let g = path3();
        let mut rng = crate::util::rng_from_seed(47);
        let x0 = Matrix::uniform(3, 3, -1.0, 1.0, &mut rng);
        let mut grad_for = |layers: usize| {
            let mut params = AdgnParams::init(3, layers, 0.1, 0.1, Aggregation::Simple, &mut rng);
            // Same weights for both depths.
            let mut seeded = crate::util::rng_from_seed(999);
            params.w = Matrix::uniform(3, 3, -0.5, 0.5, &mut seeded);
            params.v = Matrix::uniform(3, 3, -0.5, 0.5, &mut seeded);
            let mut tape = Tape::new();
            let x = tape.leaf(&x0).unwrap();
            let binding = bind_adgn(&mut tape, &params).unwrap();
            let out = adgn_forward(&mut tape, x, &g, &binding).unwrap();
            let loss = tape.sum(out).unwrap();
            tape.backward(loss).unwrap();
            tape.grad_matrix(binding.w).unwrap()
        };
        let g1 = grad_for(1);
        let g3 = grad_for(3);
        assert_ne!(g1, g3, "layer count changes the accumulated gradient");
    }

    #[test]
    fn receptive_field_is_hop_bounded() {
        // Path of 7 nodes, perturb node 6; with L layers the change can
        // reach exactly the nodes within hop distance L.
        let g = Graph::from_edges(7, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6)]).unwrap();
        let mut rng = crate::util::rng_from_seed(48);
        for layers in [1usize, 2, 3] {
            let params = AdgnParams::init(2, layers, 0.3, 0.1, Aggregation::Simple, &mut rng);
            let base = Matrix::uniform(7, 2, -1.0, 1.0, &mut rng);
            let mut bumped = base.clone();
            bumped.set(6, 0, bumped.get(6, 0) + 0.5);

            let run = |x0: &Matrix| {
                let mut tape = Tape::new();
                let x = tape.leaf(x0).unwrap();
                let binding = bind_adgn(&mut tape, &params).unwrap();
                let out = adgn_forward(&mut tape, x, &g, &binding).unwrap();
                tape.value_matrix(out).unwrap()
            };
            let a = run(&base);
            let b = run(&bumped);
            for u in 0..7 {
                let delta: f64 = (0..2).map(|c| (a.get(u, c) - b.get(u, c)).abs()).sum();
                let hops = 6 - u;
                if hops > layers {
                    assert_eq!(delta, 0.0, "L={layers}, node {u} beyond reach changed");
                } else {
                    assert!(delta > 0.0, "L={layers}, node {u} within reach unchanged");
                }
            }
        }
    }

    #[test]
    fn divergence_reports_layer() {
        // Huge epsilon blows the state past the limit immediately.
        let g = path3();
        let mut params = identity_adgn(2, 1e9, 0.0, 3, Aggregation::Simple);
        params.bias = Matrix::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        let mut tape = Tape::new();
        let x = tape.leaf(&Matrix::zeros(3, 2)).unwrap();
        let binding = bind_adgn(&mut tape, &params).unwrap();
        let err = adgn_forward(&mut tape, x, &g, &binding).unwrap_err();
        match err {
            Error::Divergence { layer, .. } => assert_eq!(layer, 1),
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn gcn_stack_zero_weights_gives_tanh_bias() {
        let g = path3();
        let params = GcnStackParams {
            layers: vec![GcnLayerParams {
                weight: Matrix::zeros(2, 2),
                bias: Matrix::from_vec(1, 2, vec![0.3, -0.7]).unwrap(),
            }],
        };
        let mut tape = Tape::new();
        let x = tape.leaf(&Matrix::uniform(3, 2, -1.0, 1.0, &mut crate::util::rng_from_seed(49))).unwrap();
        let binding = bind_gcn_stack(&mut tape, &params).unwrap();
        let out = gcn_stack_forward(&mut tape, x, &g, &binding).unwrap();
        let got = tape.value(out).unwrap();
        for row in got.chunks(2) {
            assert_abs_diff_eq!(row[0], 0.3_f64.tanh(), epsilon = 1e-15);
            assert_abs_diff_eq!(row[1], (-0.7_f64).tanh(), epsilon = 1e-15);
        }
    }

    #[test]
    fn mlp_identity_passthrough() {
        // Single linear layer with identity weight and zero bias.
        let params = MlpParams {
            layers: vec![MlpLayer {
                weight: Matrix::identity(3),
                bias: Matrix::zeros(1, 3),
            }],
        };
        let x0 = Matrix::uniform(4, 3, -2.0, 2.0, &mut crate::util::rng_from_seed(50));
        let mut tape = Tape::new();
        let x = tape.leaf(&x0).unwrap();
        let binding = bind_mlp(&mut tape, &params).unwrap();
        let out = mlp_forward(&mut tape, x, &binding).unwrap();
        assert_eq!(tape.value(out).unwrap(), x0.data());
    }

    #[test]
    fn pooling_values() {
        let mut tape = Tape::new();
        let x = tape.leaf(&Matrix::from_rows(&[&[1.0, 3.0], &[3.0, 5.0]]).unwrap()).unwrap();
        let mean = mean_pool(&mut tape, x).unwrap();
        assert_eq!(tape.value(mean).unwrap(), &[2.0, 4.0]);
        let total = sum_pool(&mut tape, x).unwrap();
        assert_eq!(tape.value(total).unwrap(), &[4.0, 8.0]);
    }

    #[test]
    fn model_shapes_for_all_configurations() {
        let mut rng = crate::util::rng_from_seed(51);
        let g = crate::graph::generate_erdos_renyi(6, 0.5, &mut rng).unwrap();
        let mut g = g;
        g.set_features(Matrix::uniform(6, 2, 0.0, 1.0, &mut rng)).unwrap();

        let node_model = ModelParams::new_adgn(2, 5, 1, 3, 0.1, 0.1, Aggregation::Simple, Pooling::None, 7);
        let mut tape = Tape::new();
        let binding = bind_model(&mut tape, &node_model).unwrap();
        let out = model_forward(&mut tape, &binding, &g).unwrap();
        assert_eq!((out.output.rows(), out.output.cols()), (6, 1));

        let graph_model = ModelParams::new_gcn_stack(2, 5, 1, 3, Pooling::Mean, 7);
        let mut tape = Tape::new();
        let binding = bind_model(&mut tape, &graph_model).unwrap();
        let out = model_forward(&mut tape, &binding, &g).unwrap();
        assert_eq!((out.output.rows(), out.output.cols()), (1, 1));
    }

    #[test]
    fn model_validation_catches_dim_mismatch() {
        let mut model = ModelParams::new_adgn(2, 4, 1, 2, 0.1, 0.1, Aggregation::Simple, Pooling::None, 3);
        model.readout = MlpParams {
            layers: vec![MlpLayer {
                weight: Matrix::zeros(5, 1),
                bias: Matrix::zeros(1, 1),
            }],
        };
        assert!(model.validate().is_err());
    }

    #[test]
    fn visit_order_and_flatten_round_trip() {
        let model = ModelParams::new_adgn(2, 3, 1, 2, 0.1, 0.0, Aggregation::Gcn, Pooling::None, 11);
        let mut names = Vec::new();
        model.visit(&mut |name, _| names.push(name.to_string()));
        assert_eq!(
            names,
            vec![
                "encoder.0.weight",
                "encoder.0.bias",
                "encoder.1.weight",
                "encoder.1.bias",
                "core.w",
                "core.v",
                "core.bias",
                "readout.0.weight",
                "readout.0.bias",
                "readout.1.weight",
                "readout.1.bias",
            ]
        );
        let flat = model.flatten();
        let mut copy = ModelParams::new_adgn(2, 3, 1, 2, 0.1, 0.0, Aggregation::Gcn, Pooling::None, 999);
        copy.unflatten(&flat).unwrap();
        assert_eq!(copy.flatten(), flat);
        assert_eq!(copy, model);
        assert!(copy.unflatten(&flat[1..]).is_err());
    }

    #[test]
    fn leaves_align_with_visit_order() {
        let model = ModelParams::new_gcn_stack(2, 3, 2, 2, Pooling::None, 13);
        let mut shapes = Vec::new();
        model.visit(&mut |_, m| shapes.push(m.shape()));
        let mut tape = Tape::new();
        let binding = bind_model(&mut tape, &model).unwrap();
        assert_eq!(binding.leaves.len(), shapes.len());
        for (leaf, shape) in binding.leaves.iter().zip(shapes) {
            assert_eq!((leaf.rows(), leaf.cols()), shape);
        }
    }

    #[test]
    fn forward_is_bitwise_deterministic() {
        let mut rng = crate::util::rng_from_seed(52);
        let mut g = crate::graph::generate_erdos_renyi(10, 0.3, &mut rng).unwrap();
        g.set_features(Matrix::uniform(10, 2, 0.0, 1.0, &mut rng)).unwrap();
        let model = ModelParams::new_adgn(2, 6, 1, 8, 0.1, 0.1, Aggregation::Gcn, Pooling::Mean, 21);
        let run = || {
            let mut tape = Tape::new();
            let binding = bind_model(&mut tape, &model).unwrap();
            let out = model_forward(&mut tape, &binding, &g).unwrap();
            tape.value(out.output).unwrap().to_vec()
        };
        assert_eq!(run(), run());
    }
}
