//! Fixed-point bias analytics and step-size sweeps for diffusion strategies
//! over networks.
//!
//! A network of `N` nodes, each holding a private cost `Jₖ(w)`, runs the
//! general diffusion recursion
//!
//! ```text
//! φₖ = Σ_l a₁,lk w_l
//! ψₖ = φₖ − μₖ Σ_l c_lk ∇J_l(φₖ)
//! wₖ = Σ_l a₂,lk ψ_l
//! ```
//!
//! toward the minimizer `w°` of `Σₖ Jₖ`. With fixed step sizes the nodes settle
//! at a biased fixed point. This crate runs the recursion to that fixed point,
//! computes the bias in closed form, computes its small-step-size limit, and
//! checks the structural conditions under which that limit vanishes.
//!
//! Modules, bottom-up:
//!
//! - [`numerics`]: dense linear algebra helpers.
//! - [`rng`]: seeded splitmix64 / Box–Muller streams.
//! - [`network`]: topologies, combination rules, Perron vector, structural checks.
//! - [`costs`]: least-squares costs, the global optimum, step-size bounds.
//! - [`diffusion`]: the recursion and its fixed point.
//! - [`bias`]: closed-form bias, limit operators and limit bias.
//! - [`experiment`]: step-size sweeps, CSV and plot-script output.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bias;
pub mod costs;
pub mod diffusion;
pub mod experiment;
pub mod network;
pub mod numerics;
pub mod rng;

use thiserror::Error;

pub use bias::{BiasError, BiasReport, LimitOperators};
pub use costs::{CostEnsemble, CostError, CostModel, QuadraticCost};
pub use diffusion::{DiffusionConfig, DiffusionError, FixedPointResult, NetworkState, Strategy};
pub use experiment::{ExperimentConfig, ExperimentError, SweepRow};
pub use network::{CombinationMatrix, CombinationRule, NetworkError, StochasticKind, Topology};
pub use numerics::{DenseMatrix, DenseVector, NumericsError};

/// Any error this crate produces.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Bias(#[from] BiasError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
}
