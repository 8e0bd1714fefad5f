use std::fmt;

use super::{ExperimentConfig, ExperimentError, Scenario};
use crate::bias::{self, SpectralCheck};
use crate::network::{self, Assumption3Report};

/// Everything `check` reports for one scenario, evaluated at the largest
/// `μ_max` where a step size is involved.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckReport {
    pub label: String,
    pub mu_max: f64,
    pub assumption1: bool,
    /// Smallest `Σ_l c_lk λ_l,min` over nodes.
    pub min_weighted_curvature: f64,
    pub assumption2: bool,
    pub assumption3: Option<Assumption3Report>,
    /// Node with the largest `μₖ / bound_k`, and that ratio.
    pub worst_step: (usize, f64),
    pub spectral: Option<SpectralCheck>,
}

impl CheckReport {
    /// True when the scenario can be swept.
    pub fn passed(&self) -> bool {
        self.assumption1
            && self.assumption2
            && self.worst_step.1 < 1.0
            && self.spectral.is_some_and(|s| s.spectral_radius < 1.0)
    }
}

pub fn check_scenario(config: &ExperimentConfig) -> Result<CheckReport, ExperimentError> {
    let scenario = Scenario::build(config)?;
    let mu_max = config.descending_schedule()[0];
    let a1 = &scenario.assumption1;
    let min_weighted_curvature = a1.weighted_min.iter().copied().fold(f64::INFINITY, f64::min);

    let cfg = scenario.diffusion_config(mu_max)?;
    let composite = cfg.a1.matrix() * cfg.a2.matrix();
    let assumption2 = network::check_primitive(&composite)?;
    let assumption3 = if assumption2 {
        Some(scenario.assumption3()?)
    } else {
        None
    };

    let worst_step = (0..config.n_nodes)
        .map(|k| (k, cfg.step_sizes[k] / a1.step_bound(k)))
        .fold(
            (0, f64::NEG_INFINITY),
            |best, cur| if cur.1 > best.1 { cur } else { best },
        );

    let spectral = if a1.satisfied && assumption2 && worst_step.1 < 1.0 {
        Some(bias::spectral_check(&cfg, &scenario.ensemble)?)
    } else {
        None
    };

    Ok(CheckReport {
        label: format!(
            "{} A={} C={} steps={} N={} M={}",
            config.strategy.name(),
            config.a_rule.name(),
            config.c_rule.name(),
            config.step_mode.name(),
            config.n_nodes,
            config.dim
        ),
        mu_max,
        assumption1: a1.satisfied,
        min_weighted_curvature,
        assumption2,
        assumption3,
        worst_step,
        spectral,
    })
}

/// Round to 12 significant digits and print the shortest form.
fn short(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    format!("{rounded}")
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "SATISFIED"
    } else {
        "VIOLATED"
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Scenario: {}", self.label)?;
        writeln!(
            f,
            "Assumption 1: {} (min weighted curvature={})",
            verdict(self.assumption1),
            short(self.min_weighted_curvature)
        )?;
        writeln!(
            f,
            "Assumption 2: {} (A1*A2 primitive={})",
            verdict(self.assumption2),
            self.assumption2
        )?;
        match &self.assumption3 {
            Some(r) if r.satisfied => writeln!(f, "Assumption 3: SATISFIED (c0={})", short(r.c0_estimate))?,
            Some(r) => writeln!(
                f,
                "Assumption 3: NOT SATISFIED (max deviation={})",
                short(r.max_deviation)
            )?,
            None => writeln!(f, "Assumption 3: NOT EVALUATED")?,
        }
        writeln!(
            f,
            "Step-size bound: {} at mu_max={} (largest mu/bound={} at node {})",
            verdict(self.worst_step.1 < 1.0),
            short(self.mu_max),
            short(self.worst_step.1),
            self.worst_step.0
        )?;
        match &self.spectral {
            Some(s) => write!(
                f,
                "Spectral radius: {} ({}{})",
                short(s.spectral_radius),
                if s.warning { "not below 1" } else { "below 1" },
                if s.converged { "" } else { ", upper estimate" }
            ),
            None => write!(f, "Spectral radius: NOT EVALUATED"),
        }
    }
}
