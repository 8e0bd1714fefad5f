use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use super::{ExperimentConfig, ExperimentError, StepMode};
use crate::bias::{self, stack_rows};
use crate::costs::{self, Assumption1Report, CostEnsemble};
use crate::diffusion::{self, DiffusionConfig, Strategy};
use crate::network::{
    self, build_a, build_c, generate_topology, Assumption3Report, CombinationMatrix, CombinationRule, Topology,
    ASSUMPTION3_TOL,
};
use crate::numerics::{DenseMatrix, DenseVector};
use crate::rng::SeededStream;

/// One `(scenario, μ_max)` evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scenario_id: usize,
    pub strategy: Strategy,
    pub a_rule: CombinationRule,
    pub c_rule: CombinationRule,
    pub step_mode: StepMode,
    pub mu_max: f64,
    /// `‖w̃∞‖²` of the iterated fixed point, all nodes stacked.
    pub bias_sq_norm: f64,
    /// `N·‖limit‖²`, comparable with `bias_sq_norm`.
    pub limit_bias_sq_norm: f64,
    pub assumption3_satisfied: bool,
    pub spectral_radius: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `‖w̃∞‖²` from the direct solve (not written to CSV).
    pub closed_form_sq_norm: f64,
    /// Hash of the topology, data and `Ω₀` used for this row.
    pub fingerprint: u64,
}

/// Everything in a scenario that stays fixed across the `μ_max` schedule.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub topology: Topology,
    pub ensemble: CostEnsemble,
    pub a: CombinationMatrix,
    pub c: CombinationMatrix,
    /// Step-size shape with largest entry one.
    pub omega0: DenseVector,
    pub assumption1: Assumption1Report,
}

impl Scenario {
    pub fn build(config: &ExperimentConfig) -> Result<Self, ExperimentError> {
        config.validate_shape()?;
        let topology = generate_topology(config.n_nodes, config.avg_degree, config.topology_seed)?;
        let ensemble = if config.identical_costs {
            costs::sample_identical_ensemble(config.n_nodes, config.dim, config.rows, config.data_seed)?
        } else {
            costs::sample_ensemble(config.n_nodes, config.dim, config.rows, config.data_seed)?
        };
        let a = build_a(&topology, config.a_rule)?;
        let c = build_c(&topology, config.c_rule)?;
        let omega0 = step_shape(config.step_mode, config.n_nodes, config.step_seed);
        let assumption1 = costs::check_assumption1(&c, &ensemble)?;
        Ok(Self {
            config: config.clone(),
            topology,
            ensemble,
            a,
            c,
            omega0,
            assumption1,
        })
    }

    pub fn diffusion_config(&self, mu_max: f64) -> Result<DiffusionConfig, ExperimentError> {
        let steps = &self.omega0 * mu_max;
        let cfg = match self.config.strategy {
            Strategy::Atc => DiffusionConfig::atc(&self.a, self.c.clone(), steps)?,
            Strategy::Cta => DiffusionConfig::cta(&self.a, self.c.clone(), steps)?,
            Strategy::General => unreachable!("rejected by validate_shape"),
        };
        Ok(cfg)
    }

    /// Reject the scenario if any node's step size at the largest `μ_max`
    /// breaks its bound (or the bound does not exist).
    pub fn validate_steps(&self) -> Result<(), ExperimentError> {
        let mu_max = self.config.descending_schedule()[0];
        for k in 0..self.config.n_nodes {
            let weighted_min = self.assumption1.weighted_min[k];
            if !(weighted_min > 0.0) {
                return Err(ExperimentError::Assumption1 {
                    node: k,
                    value: weighted_min,
                });
            }
            let mu = self.omega0[k] * mu_max;
            let bound = self.assumption1.step_bound(k);
            if !(mu < bound) {
                return Err(ExperimentError::StepTooLarge { node: k, mu, bound });
            }
        }
        Ok(())
    }

    pub fn assumption3(&self) -> Result<Assumption3Report, ExperimentError> {
        let cfg = self.diffusion_config(1.0)?;
        let theta = network::perron_theta(&cfg.a1, &cfg.a2)?.theta;
        Ok(network::check_assumption3(
            &theta,
            &cfg.a2,
            &self.omega0,
            &self.c,
            ASSUMPTION3_TOL,
        )?)
    }

    fn fingerprint(&self, cfg: &DiffusionConfig) -> Result<u64, ExperimentError> {
        let mut h = DefaultHasher::new();
        self.topology.to_edge_list().hash(&mut h);
        self.ensemble.to_bundle()?.hash(&mut h);
        for w in cfg.omega0().iter() {
            // Ω₀ is recovered from the scaled steps, so compare at 12 digits
            format!("{w:.12e}").hash(&mut h);
        }
        Ok(h.finish())
    }
}

/// `Ω₀` diagonal: all ones, or node 0 at one and the rest uniform on
/// `[1/2, 1]` from the step seed.
pub fn step_shape(mode: StepMode, n: usize, step_seed: u64) -> DenseVector {
    match mode {
        StepMode::Equal => DenseVector::from_element(n, 1.0),
        StepMode::UnequalUniformHalf => {
            let mut rng = SeededStream::new(step_seed);
            DenseVector::from_fn(n, |k, _| if k == 0 { 1.0 } else { rng.uniform_in(0.5, 1.0) })
        }
    }
}

/// Run one scenario across its schedule. Rows come out in descending
/// `μ_max` with `scenario_id = 0`.
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>, ExperimentError> {
    run_scenario(config, 0, |_, _| {})
}

/// Run several scenarios; `scenario_id` is the position in `configs`.
pub fn run_scenarios(configs: &[ExperimentConfig]) -> Result<Vec<SweepRow>, ExperimentError> {
    run_scenarios_with_progress(configs, |_, _| {})
}

/// As [`run_scenarios`], reporting `(scenario_id, row)` as rows finish.
pub fn run_scenarios_with_progress(
    configs: &[ExperimentConfig],
    mut progress: impl FnMut(usize, &SweepRow),
) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut rows = Vec::new();
    for (id, cfg) in configs.iter().enumerate() {
        rows.extend(run_scenario(cfg, id, &mut progress)?);
    }
    Ok(rows)
}

fn run_scenario(
    config: &ExperimentConfig,
    scenario_id: usize,
    mut progress: impl FnMut(usize, &SweepRow),
) -> Result<Vec<SweepRow>, ExperimentError> {
    let scenario = Scenario::build(config)?;
    scenario.validate_steps()?;
    let n = config.n_nodes;
    let m = config.dim;
    let w_opt = costs::global_optimum(&scenario.ensemble)?;
    let assumption3 = scenario.assumption3()?;
    // Ω₀ is fixed, so the limit is too
    let limit = bias::limit_bias(&scenario.diffusion_config(1.0)?, &scenario.ensemble)?;
    // exactly zero under Assumption 3; the solve only leaves rounding residue
    let limit_bias_sq_norm = if assumption3.satisfied {
        0.0
    } else {
        n as f64 * limit.norm_squared()
    };

    let mut rows = Vec::with_capacity(config.mu_max_schedule.len());
    for mu_max in config.descending_schedule() {
        let cfg = scenario.diffusion_config(mu_max)?;
        let fp = diffusion::run_to_fixed_point(
            &cfg,
            &scenario.ensemble,
            &DenseMatrix::zeros(n, m),
            config.tol,
            config.max_iter,
        )?;
        let empirical = stack_rows(&bias::empirical_bias(&w_opt, &fp.w_infinity));
        let closed = bias::closed_form_bias(&cfg, &scenario.ensemble)?;
        let spectral = bias::spectral_check(&cfg, &scenario.ensemble)?;
        let row = SweepRow {
            scenario_id,
            strategy: config.strategy,
            a_rule: config.a_rule,
            c_rule: config.c_rule,
            step_mode: config.step_mode,
            mu_max,
            bias_sq_norm: empirical.norm_squared(),
            limit_bias_sq_norm,
            assumption3_satisfied: assumption3.satisfied,
            spectral_radius: spectral.spectral_radius,
            iterations: fp.iterations_used,
            converged: fp.converged,
            closed_form_sq_norm: closed.norm_squared(),
            fingerprint: scenario.fingerprint(&cfg)?,
        };
        progress(scenario_id, &row);
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlopeField {
    BiasSqNorm,
    ClosedFormSqNorm,
}

/// Least-squares slope of `ln(field)` against `ln(μ_max)`.
pub fn fit_loglog_slope(rows: &[SweepRow], field: SlopeField) -> Result<f64, ExperimentError> {
    if rows.len() < 3 {
        return Err(ExperimentError::SlopeFit(format!(
            "need at least 3 rows, got {}",
            rows.len()
        )));
    }
    let pick = |r: &SweepRow| match field {
        SlopeField::BiasSqNorm => r.bias_sq_norm,
        SlopeField::ClosedFormSqNorm => r.closed_form_sq_norm,
    };
    if let Some(r) = rows.iter().find(|r| !(pick(r) > 0.0)) {
        return Err(ExperimentError::SlopeFit(format!(
            "value {} at mu_max={} is not positive; a log-log fit does not apply",
            pick(r),
            r.mu_max
        )));
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.mu_max.ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| pick(r).ln()).collect();
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if hi - lo < std::f64::consts::LN_10 * (1.0 - 1e-12) {
        return Err(ExperimentError::SlopeFit(
            "mu_max values must span at least one decade".into(),
        ));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
