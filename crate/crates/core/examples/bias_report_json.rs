//! Every bias quantity for one configuration, as JSON.

use diffusion_pareto::diffusion::run_to_fixed_point;
use diffusion_pareto::experiment::{ExperimentConfig, Scenario, StepMode};
use diffusion_pareto::{BiasReport, CombinationRule, DenseMatrix, Strategy};

fn main() -> Result<(), diffusion_pareto::Error> {
    let mut cfg = ExperimentConfig::new(
        Strategy::Atc,
        CombinationRule::RelativeDegree,
        CombinationRule::Identity,
        StepMode::UnequalUniformHalf,
    );
    cfg.n_nodes = 4;
    cfg.dim = 2;
    cfg.avg_degree = 2.0;
    let scenario = Scenario::build(&cfg)?;
    let diffusion = scenario.diffusion_config(5e-3)?;
    let fp = run_to_fixed_point(
        &diffusion,
        &scenario.ensemble,
        &DenseMatrix::zeros(4, 2),
        1e-14,
        1_000_000,
    )?;
    println!("{}", BiasReport::build(&diffusion, &scenario.ensemble, &fp)?.to_json());
    Ok(())
}
