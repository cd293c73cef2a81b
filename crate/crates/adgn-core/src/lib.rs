//! Stable deep graph networks built on an antisymmetric weight
//! parameterization, with everything needed to study them end to end:
//!
//! - [`autodiff`]: tape-based reverse-mode differentiation over `f64`
//!   matrices, with a finite-difference checker.
//! - [`graph`]: CSR graphs, synthetic generators, exact structural
//!   oracles, and dataset construction with JSONL serialization.
//! - [`layers`]: the antisymmetric message-passing core, a plain graph
//!   convolution stack for comparison, and the surrounding encoder,
//!   readout, and pooling pieces.
//! - [`diagnostics`]: layer Jacobians, their spectra via a symmetric
//!   eigensolver, and gradient-versus-depth profiling.
//! - [`training`]: losses, Adam with either weight-decay convention,
//!   the training loop, and grid search over hyperparameters.
//! - [`config`]: experiment configuration files and content hashes.
//!
//! Determinism is a crate-wide contract: given the same seed and inputs,
//! every public entry point produces bitwise-identical numbers and
//! byte-identical artifacts, on any platform. All randomness flows from
//! explicit `u64` seeds through [`util::child_seed`].

pub mod autodiff;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod graph;
pub mod layers;
pub mod matrix;
pub mod testing;
pub mod training;
pub mod util;

pub use autodiff::{finite_difference_check, Tape, Tensor};
pub use config::{DataSpec, ExperimentConfig, LoadedConfig};
pub use error::{Error, Result};
pub use matrix::Matrix;
