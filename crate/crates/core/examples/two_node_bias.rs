//! Two scalar nodes with costs (w−1)² and (w−3)², combining with a
//! non-doubly-stochastic matrix. The fixed point settles at 13/7 instead of
//! the optimum 2, so every node carries a bias of 1/7 as the step shrinks.

use diffusion_pareto::bias;
use diffusion_pareto::costs::{self, CostEnsemble, QuadraticCost};
use diffusion_pareto::diffusion::run_to_fixed_point;
use diffusion_pareto::{
    CombinationMatrix, CombinationRule, DenseMatrix, DenseVector, DiffusionConfig, StochasticKind, Strategy,
};

fn main() -> Result<(), diffusion_pareto::Error> {
    let a1 = CombinationMatrix::new(
        DenseMatrix::from_row_slice(2, 2, &[0.7, 0.4, 0.3, 0.6]),
        StochasticKind::LeftStochastic,
        CombinationRule::Custom,
    )?;
    let eye = CombinationMatrix::identity(2);
    let costs = [1.0, 3.0]
        .iter()
        .map(|&t| QuadraticCost::new(DenseMatrix::from_element(1, 1, 1.0), DenseVector::from_element(1, t)))
        .collect::<Result<Vec<_>, _>>()?;
    let ensemble = CostEnsemble::new(costs, 0)?;
    let w_opt = costs::global_optimum(&ensemble)?;
    println!("optimum w° = {}", w_opt[0]);

    for mu in [1e-1, 1e-2, 1e-3, 1e-4] {
        let cfg = DiffusionConfig::new(
            a1.clone(),
            eye.clone(),
            eye.clone(),
            DenseVector::from_element(2, mu),
            Strategy::General,
        )?;
        let fp = run_to_fixed_point(&cfg, &ensemble, &DenseMatrix::zeros(2, 1), 1e-14, 1_000_000)?;
        let b = bias::empirical_bias(&w_opt, &fp.w_infinity);
        println!(
            "mu={mu:e}: bias = [{:.6}, {:.6}] after {} iterations",
            b[(0, 0)],
            b[(1, 0)],
            fp.iterations_used
        );
        if mu == 1e-4 {
            println!(
                "small-step limit = {:.15} (1/7 = {:.15})",
                bias::limit_bias(&cfg, &ensemble)?[0],
                1.0 / 7.0
            );
        }
    }
    Ok(())
}
