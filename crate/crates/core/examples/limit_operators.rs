//! Operators behind the small-step limit and the identities they satisfy,
//! plus the closed-form bias approaching the limit as μ_max shrinks.

use diffusion_pareto::bias;
use diffusion_pareto::experiment::{ExperimentConfig, Scenario, StepMode};
use diffusion_pareto::numerics::inf_norm;
use diffusion_pareto::{CombinationRule, DenseMatrix, DenseVector, Strategy};

fn main() -> Result<(), diffusion_pareto::Error> {
    let mut cfg = ExperimentConfig::new(
        Strategy::Atc,
        CombinationRule::Averaging,
        CombinationRule::RelativeDegree,
        StepMode::UnequalUniformHalf,
    );
    cfg.n_nodes = 10;
    cfg.avg_degree = 3.0;
    let scenario = Scenario::build(&cfg)?;
    let diffusion = scenario.diffusion_config(1e-2)?;
    let ops = bias::limit_operators(&diffusion, &scenario.ensemble)?;

    let row = |v: &DenseVector| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ");
    println!("theta = [{}]", row(&ops.theta));
    println!("z     = [{}]", row(&ops.z_vector));
    println!("|Z X|_inf = {:.2e}", inf_norm(&(&ops.z_op * &ops.x_op)));
    println!("|X Z|_inf = {:.2e}", inf_norm(&(&ops.x_op * &ops.z_op)));
    println!(
        "|D P - I|_inf = {:.2e}",
        inf_norm(&(&ops.d_matrix * ops.projected_y() - DenseMatrix::identity(4, 4)))
    );

    let limit = bias::limit_bias(&diffusion, &scenario.ensemble)?;
    println!("per-node limit = [{}]", row(&limit));
    for d in bias::verify_limit_convergence(&diffusion, &scenario.ensemble, &[1e-2, 1e-3, 1e-4, 1e-5])? {
        println!("mu_max={:e}: |bias - limit| = {:.3e}", d.mu_max, d.deviation);
    }
    Ok(())
}
