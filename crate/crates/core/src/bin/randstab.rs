use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use randstab::harness::{
    lemma1_scatter, read_trials, run_experiment, summarize, write_scatter, write_summary,
    AlgoSelection, ExperimentConfig, SystemSource, DEFAULT_EPISODES, DEFAULT_HORIZONS,
};
use randstab::{closed_loop_radius, solve_dare, Arithmetic, Error, SolverOptions};

#[derive(Parser)]
#[command(name = "randstab", version, about = "Randomized data-driven stabilization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Sf,
    Sp,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum ArithmeticArg {
    Extended,
    Double,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo campaign and write one CSV row per replication.
    Run {
        #[arg(long, value_enum, default_value = "both")]
        algo: AlgoArg,
        #[arg(long = "T", value_delimiter = ',')]
        horizons: Option<Vec<usize>>,
        #[arg(long = "k", value_delimiter = ',')]
        episodes: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',', default_value = "1")]
        sigma: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        reps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// `preset` or a JSON system file.
        #[arg(long, default_value = "preset")]
        system: String,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value = "extended")]
        arithmetic: ArithmeticArg,
    },
    /// Closed-loop radius of the preset under gains designed from perturbed parameters.
    Scatter {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.05,0.1,0.2,0.5,1")]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "scatter.csv")]
        out: PathBuf,
    },
    /// Solve the Riccati equation and print K, L and the closed-loop spectral radius.
    Dare {
        #[arg(long, default_value = "preset")]
        system: String,
    },
    /// Aggregate a trial CSV into medians, IQRs and stabilized percentages.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run {
            algo,
            horizons,
            episodes,
            sigma,
            reps,
            seed,
            system,
            out,
            threads,
            arithmetic,
        } => {
            let cfg = ExperimentConfig {
                algo: match algo {
                    AlgoArg::Sf => AlgoSelection::Sf,
                    AlgoArg::Sp => AlgoSelection::Sp,
                    AlgoArg::Both => AlgoSelection::Both,
                },
                horizons: horizons.unwrap_or_else(|| DEFAULT_HORIZONS.to_vec()),
                episode_counts: episodes.unwrap_or_else(|| DEFAULT_EPISODES.to_vec()),
                sigmas: sigma,
                replications: reps,
                master_seed: seed,
                system: SystemSource::parse(&system),
                output: Some(out.clone()),
                arithmetic: match arithmetic {
                    ArithmeticArg::Extended => Arithmetic::Extended,
                    ArithmeticArg::Double => Arithmetic::Double,
                },
                threads,
            };
            let records = run_experiment(&cfg)?;
            eprintln!("wrote {} trials to {}", records.len(), out.display());
        }
        Command::Scatter {
            samples,
            radii,
            seed,
            out,
        } => {
            if let Some(eps) = radii.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                return Err(Error::Config(format!("radius must be finite and non-negative, got {eps}")));
            }
            let (plant, costs) = SystemSource::Preset.load()?;
            let records = lemma1_scatter(&plant, &costs, samples, &radii, seed)?;
            write_scatter(&out, &records)?;
            eprintln!("wrote {} samples to {}", records.len(), out.display());
        }
        Command::Dare { system } => {
            let (plant, costs) = SystemSource::parse(&system).load()?;
            let sol = solve_dare(&plant, &costs, &SolverOptions::default())?;
            let rho = closed_loop_radius(&plant, &sol.gain)?;
            print_matrix("K", &sol.k);
            print_matrix("L", &sol.gain);
            println!("spectral_radius = {rho:.6}");
        }
        Command::Summarize { input, out } => {
            let rows = summarize(&read_trials(&input)?)?;
            write_summary(&out, &rows)?;
        }
    }
    Ok(())
}

fn print_matrix(name: &str, m: &DMatrix<f64>) {
    println!("{name} =");
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>10.6}")).collect();
        println!("{}", cells.join(" "));
    }
}
