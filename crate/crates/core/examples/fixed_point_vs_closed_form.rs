//! Iterate the recursion to its fixed point and compare with the bias from
//! one direct linear solve.

use diffusion_pareto::bias::{self, stack_rows};
use diffusion_pareto::costs;
use diffusion_pareto::diffusion::run_to_fixed_point_traced;
use diffusion_pareto::experiment::{ExperimentConfig, Scenario, StepMode};
use diffusion_pareto::{CombinationRule, DenseMatrix, Strategy};

fn main() -> Result<(), diffusion_pareto::Error> {
    let mut cfg = ExperimentConfig::new(
        Strategy::Cta,
        CombinationRule::RelativeDegree,
        CombinationRule::Averaging,
        StepMode::UnequalUniformHalf,
    );
    cfg.n_nodes = 20;
    let scenario = Scenario::build(&cfg)?;
    let diffusion = scenario.diffusion_config(1e-2)?;

    let mut last_report = 0;
    let fp = run_to_fixed_point_traced(
        &diffusion,
        &scenario.ensemble,
        &DenseMatrix::zeros(20, 4),
        1e-14,
        1_000_000,
        |i, update| {
            if i >= 2 * last_report.max(1) {
                println!("iteration {i:>6}: update {update:.3e}");
                last_report = i;
            }
        },
    )?;
    let w_opt = costs::global_optimum(&scenario.ensemble)?;
    let iterated = stack_rows(&bias::empirical_bias(&w_opt, &fp.w_infinity));
    let closed = bias::closed_form_bias(&diffusion, &scenario.ensemble)?;
    println!("converged={} after {} iterations", fp.converged, fp.iterations_used);
    println!("|bias|² iterated = {:.12e}", iterated.norm_squared());
    println!("|bias|² direct   = {:.12e}", closed.norm_squared());
    println!(
        "relative gap     = {:.2e}",
        (&iterated - &closed).norm() / closed.norm()
    );
    Ok(())
}
