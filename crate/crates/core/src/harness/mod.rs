//! Monte Carlo campaigns, the perturbation scatter, and CSV aggregation.

mod campaign;
mod csvio;
mod scatter;
mod summary;

pub use campaign::{
    run_experiment, run_trial, AlgoSelection, ExperimentConfig, Reason, SystemSource, TrialRecord,
    DEFAULT_EPISODES, DEFAULT_HORIZONS, DEFAULT_REPLICATIONS,
};
pub use csvio::{
    read_trials, write_scatter, write_summary, write_trials, TRIAL_HEADER, SCATTER_HEADER,
    SUMMARY_HEADER,
};
pub use scatter::{lemma1_scatter, ScatterRecord};
pub use summary::{quantile, summarize, SummaryRow};
