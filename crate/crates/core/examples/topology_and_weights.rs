//! Random connected topology and the combination matrices built on it.

use diffusion_pareto::network::{build_a, build_c, check_primitive, generate_topology, CombinationRule};

fn main() -> Result<(), diffusion_pareto::Error> {
    let topology = generate_topology(12, 3.0, 42)?;
    println!(
        "{} nodes, {} edges, average degree {:.2}",
        topology.n_nodes(),
        topology.edges().len(),
        topology.average_degree()
    );
    print!("{}", topology.to_edge_list());

    for rule in [
        CombinationRule::Averaging,
        CombinationRule::RelativeDegree,
        CombinationRule::Metropolis,
    ] {
        let a = build_a(&topology, rule)?;
        let col_sums: Vec<String> = a.matrix().column_iter().map(|c| format!("{:.3}", c.sum())).collect();
        println!(
            "A ({}): kind={:?} primitive={} column sums [{}]",
            rule.name(),
            a.kind(),
            check_primitive(a.matrix())?,
            col_sums.join(" ")
        );
    }
    for rule in [
        CombinationRule::Averaging,
        CombinationRule::RelativeDegree,
        CombinationRule::Identity,
    ] {
        let c = build_c(&topology, rule)?;
        println!(
            "C ({}): kind={:?}, respects topology={}",
            rule.name(),
            c.kind(),
            c.respects(&topology)
        );
    }
    Ok(())
}
