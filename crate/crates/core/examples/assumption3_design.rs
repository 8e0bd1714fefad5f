//! The condition under which the small-step bias vanishes: Metropolis with
//! equal steps satisfies it, averaging with unequal steps does not, and
//! designed per-node steps restore it for any primitive `A`.

use diffusion_pareto::experiment::step_shape;
use diffusion_pareto::experiment::StepMode;
use diffusion_pareto::network::{
    build_a, check_assumption3, design_step_sizes_for_assumption3, generate_topology, perron_theta, CombinationMatrix,
    CombinationRule, ASSUMPTION3_TOL,
};
use diffusion_pareto::DenseVector;

fn main() -> Result<(), diffusion_pareto::Error> {
    let n = 50;
    let topology = generate_topology(n, 4.0, 1)?;
    let eye = CombinationMatrix::identity(n);

    for (rule, mode) in [
        (CombinationRule::Metropolis, StepMode::Equal),
        (CombinationRule::Averaging, StepMode::UnequalUniformHalf),
    ] {
        let a = build_a(&topology, rule)?;
        let theta = perron_theta(&eye, &a)?.theta;
        let omega0 = step_shape(mode, n, 3);
        let report = check_assumption3(&theta, &a, &omega0, &eye, ASSUMPTION3_TOL)?;
        println!(
            "{} A, {} steps: satisfied={} c0={:.6} max deviation={:.2e}",
            rule.name(),
            mode.name(),
            report.satisfied,
            report.c0_estimate,
            report.max_deviation
        );
    }

    let a = build_a(&topology, CombinationRule::Averaging)?;
    let steps = design_step_sizes_for_assumption3(&eye, &a, 1e-2)?;
    let omega0: DenseVector = &steps / steps.max();
    let theta = perron_theta(&eye, &a)?.theta;
    let report = check_assumption3(&theta, &a, &omega0, &eye, ASSUMPTION3_TOL)?;
    println!(
        "averaging A, designed steps in [{:.4e}, {:.4e}]: satisfied={} max deviation={:.2e}",
        steps.min(),
        steps.max(),
        report.satisfied,
        report.max_deviation
    );
    Ok(())
}
