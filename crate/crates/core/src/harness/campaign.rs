use std::path::PathBuf;

use rayon::prelude::*;

use crate::algorithms::{mix_all, run, AlgoConfig, Algorithm, Arithmetic, RunSeeds};
use crate::error::{Error, Result};
use crate::estimation::{estimation_error, GainBasis};
use crate::riccati::{closed_loop_radius, solve_dare, CostPair, SolverOptions};
use crate::system::{preset_benchmark, DynamicsParameter, NoiseModel, SystemDescription};

pub const DEFAULT_HORIZONS: [usize; 6] = [100, 200, 400, 800, 1600, 3200];
pub const DEFAULT_EPISODES: [usize; 4] = [2, 3, 4, 5];
pub const DEFAULT_REPLICATIONS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgoSelection {
    Sf,
    Sp,
    Both,
}

impl AlgoSelection {
    pub fn algorithms(self) -> &'static [Algorithm] {
        match self {
            AlgoSelection::Sf => &[Algorithm::StochasticFeedback],
            AlgoSelection::Sp => &[Algorithm::StochasticParameter],
            AlgoSelection::Both => &[Algorithm::StochasticFeedback, Algorithm::StochasticParameter],
        }
    }
}

impl std::str::FromStr for AlgoSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sf" => Ok(AlgoSelection::Sf),
            "sp" => Ok(AlgoSelection::Sp),
            "both" => Ok(AlgoSelection::Both),
            other => Err(Error::Config(format!("unknown algorithm {other:?}; expected sf, sp or both"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SystemSource {
    Preset,
    File(PathBuf),
}

impl SystemSource {
    /// `"preset"` or a path to a JSON system description.
    pub fn parse(s: &str) -> Self {
        if s == "preset" {
            SystemSource::Preset
        } else {
            SystemSource::File(PathBuf::from(s))
        }
    }

    pub fn load(&self) -> Result<(DynamicsParameter, CostPair)> {
        match self {
            SystemSource::Preset => Ok(preset_benchmark()),
            SystemSource::File(path) => {
                let desc = SystemDescription::from_json_file(path)?;
                let costs = desc.costs_or_identity();
                Ok((desc.plant, costs))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algo: AlgoSelection,
    pub horizons: Vec<usize>,
    pub episode_counts: Vec<usize>,
    pub sigmas: Vec<f64>,
    pub replications: usize,
    pub master_seed: u64,
    pub system: SystemSource,
    /// Where to write the trial CSV, if anywhere.
    pub output: Option<PathBuf>,
    pub arithmetic: Arithmetic,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// Default grids on the preset plant with `σ = 1`.
    pub fn new(master_seed: u64) -> Self {
        Self {
            algo: AlgoSelection::Both,
            horizons: DEFAULT_HORIZONS.to_vec(),
            episode_counts: DEFAULT_EPISODES.to_vec(),
            sigmas: vec![1.0],
            replications: DEFAULT_REPLICATIONS,
            master_seed,
            system: SystemSource::Preset,
            output: None,
            arithmetic: Arithmetic::default(),
            threads: None,
        }
    }

    pub fn validate(&self, plant: &DynamicsParameter) -> Result<()> {
        if self.horizons.is_empty() || self.episode_counts.is_empty() || self.sigmas.is_empty() {
            return Err(Error::Config("T, k and sigma grids must be nonempty".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("sigma must be positive and finite, got {s}")));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        let min_k = GainBasis::min_episodes(plant.state_dim(), plant.input_dim());
        for &k in &self.episode_counts {
            if k < min_k {
                return Err(Error::Config(format!("k = {k} is below the minimum {min_k}")));
            }
            for &t in &self.horizons {
                if t < k {
                    return Err(Error::Config(format!("T = {t} is shorter than k = {k}")));
                }
            }
        }
        Ok(())
    }

    fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &algorithm in self.algo.algorithms() {
            for &horizon in &self.horizons {
                for &episodes in &self.episode_counts {
                    for &sigma in &self.sigmas {
                        for rep in 0..self.replications {
                            let seed = mix_all(&[
                                self.master_seed,
                                algorithm.id(),
                                horizon as u64,
                                episodes as u64,
                                sigma.to_bits(),
                                rep as u64,
                            ]);
                            cells.push(Cell {
                                algorithm,
                                horizon,
                                episodes,
                                sigma,
                                rep,
                                seed,
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    algorithm: Algorithm,
    horizon: usize,
    episodes: usize,
    sigma: f64,
    rep: usize,
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    Ok,
    Overflow,
    DareNoConvergence,
    RankDeficient,
    RedrawExhausted,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::Ok => "ok",
            Reason::Overflow => "overflow",
            Reason::DareNoConvergence => "dare_no_convergence",
            Reason::RankDeficient => "rank_deficient",
            Reason::RedrawExhausted => "redraw_exhausted",
        }
    }

    pub fn from_code(code: &str) -> Option<Self> {
        [
            Reason::Ok,
            Reason::Overflow,
            Reason::DareNoConvergence,
            Reason::RankDeficient,
            Reason::RedrawExhausted,
        ]
        .into_iter()
        .find(|r| r.code() == code)
    }
}

/// One replication. Values that could not be computed are `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub algo: Algorithm,
    pub horizon: usize,
    pub episodes: usize,
    pub sigma: f64,
    pub rep: usize,
    pub seed: u64,
    pub error_norm: f64,
    pub closed_loop_radius: f64,
    pub stabilized: bool,
    pub overflow: bool,
    pub redraws: usize,
    pub reason: Reason,
}

/// Runs one replication and scores `L(θ̂)` against the true plant.
#[allow(clippy::too_many_arguments)]
pub fn run_trial(
    plant: &DynamicsParameter,
    costs: &CostPair,
    noise: &NoiseModel,
    algorithm: Algorithm,
    horizon: usize,
    episodes: usize,
    sigma: f64,
    arithmetic: Arithmetic,
    rep: usize,
    seed: u64,
) -> Result<TrialRecord> {
    let mut record = TrialRecord {
        algo: algorithm,
        horizon,
        episodes,
        sigma,
        rep,
        seed,
        error_norm: f64::INFINITY,
        closed_loop_radius: f64::INFINITY,
        stabilized: false,
        overflow: false,
        redraws: 0,
        reason: Reason::Ok,
    };
    let cfg = AlgoConfig::new(algorithm, horizon, episodes, sigma).with_arithmetic(arithmetic);
    let result = match run(plant, noise, costs, &cfg, &RunSeeds::new(seed)) {
        Ok(result) => result,
        Err(Error::RankDeficientBasis { .. }) => {
            record.reason = Reason::RankDeficient;
            return Ok(record);
        }
        Err(Error::RedrawBudgetExhausted { attempts, .. }) => {
            record.reason = Reason::RedrawExhausted;
            record.redraws = attempts;
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    record.redraws = result.redraw_count;
    let Some(theta_hat) = result.theta_hat else {
        record.overflow = true;
        record.reason = Reason::Overflow;
        return Ok(record);
    };
    record.error_norm = estimation_error(&theta_hat, plant)?;
    match solve_dare(&theta_hat, costs, &SolverOptions::default()) {
        Ok(sol) => {
            record.closed_loop_radius = closed_loop_radius(plant, &sol.gain)?;
            record.stabilized = record.closed_loop_radius < 1.0;
        }
        Err(_) => record.reason = Reason::DareNoConvergence,
    }
    Ok(record)
}

/// Runs every `(algo, T, k, σ, rep)` cell and returns the records in cell
/// order, writing them to `cfg.output` when set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    let (plant, costs) = cfg.system.load()?;
    cfg.validate(&plant)?;
    let noise = NoiseModel::standard(plant.state_dim());
    let cells = cfg.cells();

    let work = || -> Result<Vec<TrialRecord>> {
        cells
            .par_iter()
            .map(|c| {
                run_trial(
                    &plant,
                    &costs,
                    &noise,
                    c.algorithm,
                    c.horizon,
                    c.episodes,
                    c.sigma,
                    cfg.arithmetic,
                    c.rep,
                    c.seed,
                )
            })
            .collect()
    };
    let records = match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)?,
        None => work()?,
    };

    if let Some(path) = &cfg.output {
        super::csvio::write_trials(path, &records)?;
    }
    Ok(records)
}
