//! The two randomized stabilization procedures.
//!
//! Both split a horizon of `T` steps into `k` episodes of `⌊T/k⌋` steps,
//! hold one randomized gain fixed per episode, estimate each episode's
//! closed-loop matrix by least squares, and recover `θ̂` from the `k`
//! estimates. Trailing `T − k⌊T/k⌋` steps are not simulated. The state is
//! carried from one episode into the next.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::estimation::{closed_loop_ls, recover_theta, ClosedLoopEstimate, GainBasis};
use crate::extended::{self, ExtendedState};
use crate::riccati::{solve_dare, CostPair, SolverOptions};
use crate::system::{simulate_episode, DynamicsParameter, NoiseModel, StateCap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    /// Random Gaussian feedback gains `L_i`.
    StochasticFeedback,
    /// Random Gaussian parameters `θ_i`, applying `L(θ_i)`.
    StochasticParameter,
}

impl Algorithm {
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::StochasticFeedback => "sf",
            Algorithm::StochasticParameter => "sp",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label {
            "sf" | "SF" => Some(Algorithm::StochasticFeedback),
            "sp" | "SP" => Some(Algorithm::StochasticParameter),
            _ => None,
        }
    }

    pub(crate) fn id(self) -> u64 {
        match self {
            Algorithm::StochasticFeedback => 1,
            Algorithm::StochasticParameter => 2,
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Number representation used to simulate episodes and fit `D̂_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// MPFR state and sufficient statistics; see [`crate::extended`].
    #[default]
    Extended,
    /// Plain `f64` trajectories fitted with [`closed_loop_ls`].
    Double,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    /// Horizon `T`.
    pub horizon: usize,
    /// Number of episodes `k`.
    pub episodes: usize,
    /// Standard deviation of the randomization.
    pub sigma: f64,
    /// Failed Riccati solves tolerated per episode before giving up (SP only).
    pub max_redraws: usize,
    /// `None` picks the default for the chosen arithmetic.
    pub overflow_cap: Option<StateCap>,
    pub arithmetic: Arithmetic,
    pub riccati: SolverOptions,
}

impl AlgoConfig {
    pub fn new(algorithm: Algorithm, horizon: usize, episodes: usize, sigma: f64) -> Self {
        Self {
            algorithm,
            horizon,
            episodes,
            sigma,
            max_redraws: 50,
            overflow_cap: None,
            arithmetic: Arithmetic::default(),
            riccati: SolverOptions::default(),
        }
    }

    pub fn with_arithmetic(mut self, arithmetic: Arithmetic) -> Self {
        self.arithmetic = arithmetic;
        self
    }

    pub fn with_overflow_cap(mut self, cap: StateCap) -> Self {
        self.overflow_cap = Some(cap);
        self
    }

    pub fn effective_cap(&self) -> StateCap {
        self.overflow_cap.unwrap_or(match self.arithmetic {
            Arithmetic::Extended => StateCap::default_extended(),
            Arithmetic::Double => StateCap::default_double(),
        })
    }

    /// Episode length `⌊T/k⌋`.
    pub fn episode_len(&self) -> usize {
        self.horizon / self.episodes.max(1)
    }

    pub fn validate(&self, state_dim: usize, input_dim: usize) -> Result<()> {
        let min_k = GainBasis::min_episodes(state_dim, input_dim);
        if self.episodes < min_k {
            return Err(Error::Config(format!(
                "k = {} episodes cannot identify θ with p = {state_dim}, r = {input_dim}; need k ≥ {min_k}",
                self.episodes
            )));
        }
        if self.horizon < self.episodes {
            return Err(Error::Config(format!(
                "horizon T = {} is shorter than k = {} episodes",
                self.horizon, self.episodes
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be finite and non-negative, got {}", self.sigma)));
        }
        if self.max_redraws == 0 {
            return Err(Error::Config("max_redraws must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seeds for one run: one stream for the plant noise and one per episode for
/// the randomized controller draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunSeeds {
    base: u64,
    overrides: Vec<(usize, u64)>,
}

const NOISE_STREAM: u64 = 0x006e_6f69_7365;
const EPISODE_STREAM: u64 = 0x0065_7069_736f_6465;

impl RunSeeds {
    pub fn new(base: u64) -> Self {
        Self {
            base,
            overrides: Vec::new(),
        }
    }

    /// Replaces the draw stream of one episode, leaving every other stream intact.
    pub fn with_episode_seed(mut self, episode: usize, seed: u64) -> Self {
        self.overrides.retain(|(e, _)| *e != episode);
        self.overrides.push((episode, seed));
        self
    }

    pub fn noise_seed(&self) -> u64 {
        mix_all(&[self.base, NOISE_STREAM])
    }

    pub fn episode_seed(&self, episode: usize) -> u64 {
        self.overrides
            .iter()
            .find(|(e, _)| *e == episode)
            .map(|&(_, s)| s)
            .unwrap_or_else(|| mix_all(&[self.base, EPISODE_STREAM, episode as u64]))
    }
}

/// SplitMix64 finalizer.
pub(crate) fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn mix_all(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |h, &w| mix64(h ^ mix64(w)))
}

#[derive(Debug, Clone)]
pub struct RunResult {
    /// `None` when the run overflowed before all episodes finished.
    pub theta_hat: Option<DynamicsParameter>,
    pub episode_estimates: Vec<ClosedLoopEstimate>,
    pub gains_applied: Vec<DMatrix<f64>>,
    /// Drawn `θ_i` (stochastic parameter only).
    pub sampled_parameters: Vec<DynamicsParameter>,
    /// Time indices `ℓ` whose transitions `x(ℓ) → x(ℓ+1)` fed each `D̂_i`.
    pub episode_ranges: Vec<Range<usize>>,
    pub redraw_count: usize,
    pub overflow: bool,
    pub peak_log10_state_norm: f64,
}

/// `r × p` gain whose columns are independent `N(0, σ²I_r)` draws.
pub fn draw_feedback<R: Rng + ?Sized>(rng: &mut R, sigma: f64, r: usize, p: usize) -> DMatrix<f64> {
    let mut gain = DMatrix::zeros(r, p);
    for j in 0..p {
        for i in 0..r {
            let z: f64 = rng.sample(StandardNormal);
            gain[(i, j)] = sigma * z;
        }
    }
    gain
}

/// `θ = [A, B]` (p × q) whose columns are independent `N(0, σ²I_p)` draws.
pub fn draw_parameter<R: Rng + ?Sized>(rng: &mut R, sigma: f64, p: usize, q: usize) -> Result<DynamicsParameter> {
    if q < p {
        return Err(Error::DimensionMismatch(format!("q = {q} must be at least p = {p}")));
    }
    let mut theta = DMatrix::zeros(p, q);
    for j in 0..q {
        for i in 0..p {
            let z: f64 = rng.sample(StandardNormal);
            theta[(i, j)] = sigma * z;
        }
    }
    DynamicsParameter::from_joined(&theta)
}

/// Runs whichever algorithm `cfg` names.
pub fn run(
    plant: &DynamicsParameter,
    noise: &NoiseModel,
    costs: &CostPair,
    cfg: &AlgoConfig,
    seeds: &RunSeeds,
) -> Result<RunResult> {
    match cfg.algorithm {
        Algorithm::StochasticFeedback => run_sf(plant, noise, cfg, seeds),
        Algorithm::StochasticParameter => run_sp(plant, noise, costs, cfg, seeds),
    }
}

/// Stochastic feedback.
pub fn run_sf(
    plant: &DynamicsParameter,
    noise: &NoiseModel,
    cfg: &AlgoConfig,
    seeds: &RunSeeds,
) -> Result<RunResult> {
    if cfg.algorithm != Algorithm::StochasticFeedback {
        return Err(Error::Config("run_sf called with a stochastic-parameter config".into()));
    }
    let (p, r) = (plant.state_dim(), plant.input_dim());
    execute(plant, noise, cfg, seeds, |_, rng| {
        Ok(Draw {
            gain: draw_feedback(rng, cfg.sigma, r, p),
            parameter: None,
            redraws: 0,
        })
    })
}

/// Stochastic parameter.
pub fn run_sp(
    plant: &DynamicsParameter,
    noise: &NoiseModel,
    costs: &CostPair,
    cfg: &AlgoConfig,
    seeds: &RunSeeds,
) -> Result<RunResult> {
    if cfg.algorithm != Algorithm::StochasticParameter {
        return Err(Error::Config("run_sp called with a stochastic-feedback config".into()));
    }
    let (p, q) = (plant.state_dim(), plant.joined_dim());
    execute(plant, noise, cfg, seeds, |episode, rng| {
        let mut failures = 0;
        loop {
            let theta = draw_parameter(rng, cfg.sigma, p, q)?;
            match solve_dare(&theta, costs, &cfg.riccati) {
                Ok(sol) => {
                    return Ok(Draw {
                        gain: sol.gain,
                        parameter: Some(theta),
                        redraws: failures,
                    })
                }
                Err(Error::NoConvergence { .. }) => {
                    failures += 1;
                    if failures >= cfg.max_redraws {
                        return Err(Error::RedrawBudgetExhausted {
                            episode,
                            attempts: failures,
                        });
                    }
                }
                Err(other) => return Err(other),
            }
        }
    })
}

struct Draw {
    gain: DMatrix<f64>,
    parameter: Option<DynamicsParameter>,
    redraws: usize,
}

enum Carry {
    Double(DVector<f64>),
    Extended(ExtendedState),
}

fn execute<F>(
    plant: &DynamicsParameter,
    noise: &NoiseModel,
    cfg: &AlgoConfig,
    seeds: &RunSeeds,
    mut draw: F,
) -> Result<RunResult>
where
    F: FnMut(usize, &mut ChaCha8Rng) -> Result<Draw>,
{
    let p = plant.state_dim();
    cfg.validate(p, plant.input_dim())?;
    if noise.dim() != p {
        return Err(Error::DimensionMismatch(format!(
            "noise has dimension {}, plant has p = {p}",
            noise.dim()
        )));
    }

    let n = cfg.episode_len();
    let cap = cfg.effective_cap();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(seeds.noise_seed());
    let mut stream = noise.stream(&mut noise_rng);
    let mut carry = match cfg.arithmetic {
        Arithmetic::Double => Carry::Double(DVector::zeros(p)),
        Arithmetic::Extended => Carry::Extended(ExtendedState::zeros(p)),
    };

    let mut result = RunResult {
        theta_hat: None,
        episode_estimates: Vec::with_capacity(cfg.episodes),
        gains_applied: Vec::with_capacity(cfg.episodes),
        sampled_parameters: Vec::new(),
        episode_ranges: Vec::with_capacity(cfg.episodes),
        redraw_count: 0,
        overflow: false,
        peak_log10_state_norm: f64::NEG_INFINITY,
    };

    for episode in 0..cfg.episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seeds.episode_seed(episode));
        let d = draw(episode, &mut rng).map_err(|e| match e {
            Error::RedrawBudgetExhausted { episode, attempts } => Error::RedrawBudgetExhausted {
                episode,
                attempts: attempts + result.redraw_count,
            },
            other => other,
        })?;
        result.redraw_count += d.redraws;

        let start = episode * n;
        let (estimate, transitions, overflow, peak) = match &mut carry {
            Carry::Double(x) => {
                let log = simulate_episode(plant, &d.gain, x, n, &mut stream, cap.value())?;
                let estimate = closed_loop_ls(&log)?;
                let peak = log
                    .states
                    .iter()
                    .map(|s| s.norm().log10())
                    .fold(f64::NEG_INFINITY, f64::max);
                *x = log.last_state().cloned().expect("log holds x(0)");
                (estimate, log.transitions(), log.overflow, peak)
            }
            Carry::Extended(state) => {
                let ep = extended::run_episode(plant, &d.gain, state, n, &mut stream, noise.min_std(), cap)?;
                (ep.estimate, ep.transitions, ep.overflow, ep.peak_log10_norm)
            }
        };

        result.peak_log10_state_norm = result.peak_log10_state_norm.max(peak);
        result.episode_ranges.push(start..start + transitions);
        result.episode_estimates.push(estimate);
        result.gains_applied.push(d.gain);
        if let Some(theta) = d.parameter {
            result.sampled_parameters.push(theta);
        }
        if overflow {
            result.overflow = true;
            return Ok(result);
        }
    }

    let basis = GainBasis::from_gains(&result.gains_applied)?;
    result.theta_hat = Some(recover_theta(&result.episode_estimates, &basis)?);
    Ok(result)
}
