//! A small Monte Carlo campaign, summarized per cell.

use randstab::harness::{run_experiment, summarize, AlgoSelection, ExperimentConfig};

fn main() -> randstab::Result<()> {
    let cfg = ExperimentConfig {
        algo: AlgoSelection::Both,
        horizons: vec![100, 400, 1600],
        episode_counts: vec![2, 3, 5],
        replications: 20,
        ..ExperimentConfig::new(5)
    };
    let rows = summarize(&run_experiment(&cfg)?)?;
    println!("algo     T  k  median error  IQR      stabilized");
    for r in rows {
        println!(
            "{:<4} {:>5} {:>2}  {:<12.4}  {:<8.4} {:>5.1}%",
            r.algo.label(),
            r.horizon,
            r.episodes,
            r.median_error,
            r.iqr_error(),
            r.stabilized_pct
        );
    }
    Ok(())
}
