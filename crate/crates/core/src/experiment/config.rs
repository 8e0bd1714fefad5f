use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::diffusion::Strategy;
use crate::network::CombinationRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepMode {
    /// Every node uses `μ_max`.
    Equal,
    /// Node 0 uses `μ_max`; the others draw once from `[μ_max/2, μ_max]`.
    UnequalUniformHalf,
}

impl StepMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Equal => "equal",
            Self::UnequalUniformHalf => "unequal_uniform_half",
        }
    }
}

/// `10^-2, 10^-2.5, …, 10^-5`.
pub fn default_schedule() -> Vec<f64> {
    (0..7).map(|i| 10f64.powf(-2.0 - 0.5 * i as f64)).collect()
}

fn default_n_nodes() -> usize {
    50
}
fn default_dim() -> usize {
    4
}
fn default_rows() -> usize {
    6
}
fn default_avg_degree() -> f64 {
    4.0
}
fn default_topology_seed() -> u64 {
    1
}
fn default_data_seed() -> u64 {
    2
}
fn default_step_seed() -> u64 {
    3
}
fn default_tol() -> f64 {
    1e-12
}
fn default_max_iter() -> usize {
    1_000_000
}

/// One sweep scenario. Read from JSON; unknown fields are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_n_nodes")]
    pub n_nodes: usize,
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_rows")]
    pub rows: usize,
    /// Target average number of neighbors (self excluded).
    #[serde(default = "default_avg_degree")]
    pub avg_degree: f64,
    #[serde(default = "default_topology_seed")]
    pub topology_seed: u64,
    #[serde(default = "default_data_seed")]
    pub data_seed: u64,
    #[serde(default = "default_step_seed")]
    pub step_seed: u64,
    pub strategy: Strategy,
    pub a_rule: CombinationRule,
    pub c_rule: CombinationRule,
    pub step_mode: StepMode,
    #[serde(default = "default_schedule")]
    pub mu_max_schedule: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Debug: give every node the same data, so the bias is zero.
    #[serde(default)]
    pub identical_costs: bool,
}

impl ExperimentConfig {
    /// Defaults for everything except the four scenario choices.
    pub fn new(strategy: Strategy, a_rule: CombinationRule, c_rule: CombinationRule, step_mode: StepMode) -> Self {
        Self {
            n_nodes: default_n_nodes(),
            dim: default_dim(),
            rows: default_rows(),
            avg_degree: default_avg_degree(),
            topology_seed: default_topology_seed(),
            data_seed: default_data_seed(),
            step_seed: default_step_seed(),
            strategy,
            a_rule,
            c_rule,
            step_mode,
            mu_max_schedule: default_schedule(),
            tol: default_tol(),
            max_iter: default_max_iter(),
            identical_costs: false,
        }
    }

    /// Checks that do not need the generated network or data.
    pub fn validate_shape(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::InvalidConfig(msg));
        if self.n_nodes < 2 || self.dim == 0 || self.rows == 0 {
            return bad(format!(
                "need n_nodes >= 2, dim >= 1, rows >= 1 (got {}, {}, {})",
                self.n_nodes, self.dim, self.rows
            ));
        }
        if self.strategy == Strategy::General {
            return bad("strategy must be atc or cta".into());
        }
        if matches!(self.a_rule, CombinationRule::Identity | CombinationRule::Custom) {
            return bad(format!("a_rule `{}` is not supported", self.a_rule.name()));
        }
        if matches!(self.c_rule, CombinationRule::Metropolis | CombinationRule::Custom) {
            return bad(format!("c_rule `{}` is not supported", self.c_rule.name()));
        }
        if self.mu_max_schedule.is_empty() {
            return bad("mu_max_schedule is empty".into());
        }
        if let Some(mu) = self.mu_max_schedule.iter().find(|&&mu| !(mu > 0.0 && mu.is_finite())) {
            return bad(format!("mu_max_schedule entries must be positive, got {mu}"));
        }
        let mut sorted = self.mu_max_schedule.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("mu_max_schedule has duplicate entries".into());
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad(format!(
                "need tol > 0 and max_iter > 0 (got {}, {})",
                self.tol, self.max_iter
            ));
        }
        Ok(())
    }

    /// Schedule in descending order.
    pub fn descending_schedule(&self) -> Vec<f64> {
        let mut s = self.mu_max_schedule.clone();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }
}

/// A config file holds one scenario object or an array of them.
pub fn parse_scenarios(text: &str) -> Result<Vec<ExperimentConfig>, ExperimentError> {
    // an untagged enum would swallow the field-level message, so pick the
    // form first and deserialize it directly
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))?;
    let scenarios = if value.is_array() {
        serde_json::from_value::<Vec<ExperimentConfig>>(value)
    } else {
        serde_json::from_value::<ExperimentConfig>(value).map(|c| vec![c])
    }
    .map_err(|e| ExperimentError::Config(e.to_string()))?;
    if scenarios.is_empty() {
        return Err(ExperimentError::Config("config holds no scenarios".into()));
    }
    for s in &scenarios {
        s.validate_shape()?;
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_fill_in() {
        let c = parse_scenarios(
            r#"{"strategy":"atc","a_rule":"metropolis","c_rule":"relative_degree","step_mode":"equal"}"#,
        )
        .unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c[0].n_nodes, 50);
        assert_eq!(c[0].dim, 4);
        assert_eq!(c[0].rows, 6);
        assert_eq!(c[0].mu_max_schedule.len(), 7);
        assert_eq!(c[0].max_iter, 1_000_000);
    }

    #[test]
    fn unknown_fields_rejected() {
        let err = parse_scenarios(
            r#"{"strategy":"atc","a_rule":"metropolis","c_rule":"identity","step_mode":"equal","bogus":1}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn arrays_and_validation() {
        let two = r#"[{"strategy":"atc","a_rule":"metropolis","c_rule":"identity","step_mode":"equal"},
                      {"strategy":"cta","a_rule":"averaging","c_rule":"averaging","step_mode":"unequal_uniform_half"}]"#;
        assert_eq!(parse_scenarios(two).unwrap().len(), 2);
        assert!(parse_scenarios("[]").is_err());
        assert!(parse_scenarios(
            r#"{"strategy":"general","a_rule":"metropolis","c_rule":"identity","step_mode":"equal"}"#
        )
        .is_err());
        assert!(parse_scenarios(
            r#"{"strategy":"atc","a_rule":"metropolis","c_rule":"identity","step_mode":"equal","mu_max_schedule":[]}"#
        )
        .is_err());
        assert!(parse_scenarios(
            r#"{"strategy":"atc","a_rule":"metropolis","c_rule":"identity","step_mode":"equal","mu_max_schedule":[0.1,-1]}"#
        )
        .is_err());
        assert!(
            parse_scenarios(r#"{"strategy":"atc","a_rule":"identity","c_rule":"identity","step_mode":"equal"}"#)
                .is_err()
        );
    }

    #[test]
    fn default_schedule_values() {
        let s = default_schedule();
        assert_eq!(s[0], 1e-2);
        assert!((s[6] - 1e-5).abs() < 1e-20);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }
}
