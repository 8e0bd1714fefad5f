//! A full sweep for one scenario with and without the vanishing-limit
//! condition, written as CSV and a gnuplot script in the temp directory.

use diffusion_pareto::experiment::{self, fit_loglog_slope, ExperimentConfig, SlopeField, StepMode};
use diffusion_pareto::{CombinationRule, Strategy};

fn main() -> Result<(), diffusion_pareto::Error> {
    let configs = [
        ExperimentConfig::new(
            Strategy::Atc,
            CombinationRule::Metropolis,
            CombinationRule::RelativeDegree,
            StepMode::Equal,
        ),
        ExperimentConfig::new(
            Strategy::Atc,
            CombinationRule::Averaging,
            CombinationRule::RelativeDegree,
            StepMode::UnequalUniformHalf,
        ),
    ];
    let rows = experiment::run_scenarios_with_progress(&configs, |id, r| {
        println!(
            "scenario {id} mu_max={:.2e}: |bias|²={:.4e} limit={:.4e}",
            r.mu_max, r.bias_sq_norm, r.limit_bias_sq_norm
        )
    })?;
    let first: Vec<_> = rows.iter().filter(|r| r.scenario_id == 0).cloned().collect();
    println!(
        "log-log slope, Metropolis equal steps: {:.3}",
        fit_loglog_slope(&first, SlopeField::BiasSqNorm)?
    );
    println!(
        "same, 1e-3 and below: {:.3}",
        fit_loglog_slope(&first[2..], SlopeField::BiasSqNorm)?
    );

    let dir = std::env::temp_dir();
    experiment::emit_csv(&rows, &dir.join("sweep.csv"))?;
    experiment::emit_plot_script(&rows, &dir.join("sweep.gp"))?;
    println!(
        "wrote {} and {}",
        dir.join("sweep.csv").display(),
        dir.join("sweep.gp").display()
    );
    Ok(())
}
