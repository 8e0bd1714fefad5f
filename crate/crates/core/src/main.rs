use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{error::ErrorKind, Parser, Subcommand};
use diffusion_pareto::experiment::{self, ExperimentConfig, ExperimentError};
use diffusion_pareto::network::generate_topology;

#[derive(Parser)]
#[command(
    name = "diffusion-pareto",
    version,
    about = "Step-size sweeps and checks for diffusion optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every scenario in a config file and write the CSV results.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write a gnuplot script.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Print the structural and step-size checks for each scenario.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the four built-in figure sweeps into a directory.
    Figures {
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Generate a random connected topology as an edge list.
    Topo {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        deg: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load(path: &Path) -> Result<Vec<ExperimentConfig>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))?;
    Ok(experiment::parse_scenarios(&text)?)
}

fn progress(id: usize, row: &experiment::SweepRow) {
    eprintln!(
        "scenario {id} mu_max={:e}: bias^2={:e} iterations={}{}",
        row.mu_max,
        row.bias_sq_norm,
        row.iterations,
        if row.converged { "" } else { " (not converged)" }
    );
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Sweep { config, out, plot } => {
            let scenarios = load(&config)?;
            let rows = experiment::run_scenarios_with_progress(&scenarios, progress)?;
            experiment::emit_csv(&rows, &out)?;
            if let Some(plot) = plot {
                experiment::emit_plot_script(&rows, &plot)?;
            }
        }
        Command::Check { config } => {
            let mut all_passed = true;
            for (i, scenario) in load(&config)?.iter().enumerate() {
                let report = experiment::check_scenario(scenario)?;
                if i > 0 {
                    println!();
                }
                println!("{report}");
                all_passed &= report.passed();
            }
            if !all_passed {
                return Err(Failure::Validation("one or more checks failed".into()));
            }
        }
        Command::Figures { outdir } => {
            std::fs::create_dir_all(&outdir)
                .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", outdir.display())))?;
            for (name, scenarios) in experiment::figure_configs() {
                eprintln!("{name}");
                let rows = experiment::run_scenarios_with_progress(&scenarios, progress)?;
                experiment::emit_csv(&rows, &outdir.join(format!("{name}.csv")))?;
                experiment::emit_plot_script(&rows, &outdir.join(format!("{name}.gp")))?;
            }
        }
        Command::Topo { n, deg, seed, out } => {
            let topology = generate_topology(n, deg, seed).map_err(|e| Failure::Validation(e.to_string()))?;
            std::fs::write(&out, topology.to_edge_list())
                .map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", out.display())))?;
        }
    }
    Ok(())
}
