//! Step-size sweeps over generated scenarios, the pre-run report, and the
//! CSV and gnuplot artifacts.

mod check;
mod config;
mod output;
mod sweep;

use std::path::PathBuf;

use thiserror::Error;

pub use check::{check_scenario, CheckReport};
pub use config::{default_schedule, parse_scenarios, ExperimentConfig, StepMode};
pub use output::{emit_csv, emit_plot_script, plot_script_string, to_csv_string, CSV_HEADER};
pub use sweep::{
    fit_loglog_slope, run_scenarios, run_scenarios_with_progress, run_sweep, step_shape, Scenario, SlopeField, SweepRow,
};

use crate::bias::BiasError;
use crate::costs::CostError;
use crate::diffusion::{DiffusionError, Strategy};
use crate::network::{CombinationRule, NetworkError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("cannot read config: {0}")]
    Config(String),
    #[error("Assumption 1 violated at node {node}: weighted curvature {value:e} is not positive")]
    Assumption1 { node: usize, value: f64 },
    #[error("step size {mu:e} at node {node} is not below its bound {bound:e} for the largest mu_max")]
    StepTooLarge { node: usize, mu: f64, bound: f64 },
    #[error("log-log slope fit does not apply: {0}")]
    SlopeFit(String),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Cost(#[from] CostError),
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
    #[error(transparent)]
    Bias(#[from] BiasError),
}

impl ExperimentError {
    /// Whether the error is a rejected input (as opposed to a failure while
    /// running or writing).
    pub fn is_validation(&self) -> bool {
        match self {
            Self::Io { .. } | Self::Bias(_) => false,
            Self::Diffusion(e) => matches!(
                e,
                DiffusionError::InvalidConfig(_) | DiffusionError::StepSizeBound { .. }
            ),
            _ => true,
        }
    }
}

/// The four built-in figure sweeps, each with averaging, relative-degree and
/// Metropolis `A`. Returns `(name, scenarios)` pairs.
pub fn figure_configs() -> Vec<(&'static str, Vec<ExperimentConfig>)> {
    let figure = |strategy, c_rule, step_mode| {
        [
            CombinationRule::Averaging,
            CombinationRule::RelativeDegree,
            CombinationRule::Metropolis,
        ]
        .into_iter()
        .map(|a_rule| ExperimentConfig::new(strategy, a_rule, c_rule, step_mode))
        .collect::<Vec<_>>()
    };
    vec![
        (
            "fig1",
            figure(
                Strategy::Atc,
                CombinationRule::RelativeDegree,
                StepMode::UnequalUniformHalf,
            ),
        ),
        (
            "fig2",
            figure(Strategy::Cta, CombinationRule::Averaging, StepMode::UnequalUniformHalf),
        ),
        (
            "fig3",
            figure(Strategy::Atc, CombinationRule::RelativeDegree, StepMode::Equal),
        ),
        (
            "fig4",
            figure(Strategy::Cta, CombinationRule::Averaging, StepMode::Equal),
        ),
    ]
}
