//! The plant `x(t+1) = A x(t) + B u(t) + ξ(t+1)`, its disturbance models, and
//! trajectory simulation under linear state feedback.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::riccati::CostPair;

/// Dynamics parameter `θ = [A, B]` with `A` of size p×p and `B` of size p×r.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsParameter {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
}

impl DynamicsParameter {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        if b.nrows() != a.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "B has {} rows but A is {}x{}",
                b.nrows(),
                a.nrows(),
                a.ncols()
            )));
        }
        if !linalg::all_finite(&a) || !linalg::all_finite(&b) {
            return Err(Error::NonFinite("dynamics parameter"));
        }
        Ok(Self { a, b })
    }

    /// Splits a p×q matrix into `[A, B]` with `A` taking the first `p` columns.
    pub fn from_joined(theta: &DMatrix<f64>) -> Result<Self> {
        let p = theta.nrows();
        if theta.ncols() < p {
            return Err(Error::DimensionMismatch(format!(
                "joined parameter is {}x{}, need at least {} columns",
                p,
                theta.ncols(),
                p
            )));
        }
        let a = theta.columns(0, p).into_owned();
        let b = theta.columns(p, theta.ncols() - p).into_owned();
        Self::new(a, b)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    /// State dimension `p`.
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Input dimension `r`.
    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    /// `q = p + r`.
    pub fn joined_dim(&self) -> usize {
        self.state_dim() + self.input_dim()
    }

    /// The p×q matrix `[A, B]`.
    pub fn joined(&self) -> DMatrix<f64> {
        let p = self.state_dim();
        let mut theta = DMatrix::zeros(p, self.joined_dim());
        theta.columns_mut(0, p).copy_from(&self.a);
        theta.columns_mut(p, self.input_dim()).copy_from(&self.b);
        theta
    }

    /// Closed-loop transition matrix `A + B L`.
    pub fn closed_loop(&self, gain: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_gain(gain)?;
        Ok(&self.a + &self.b * gain)
    }

    pub(crate) fn check_gain(&self, gain: &DMatrix<f64>) -> Result<()> {
        if gain.shape() != (self.input_dim(), self.state_dim()) {
            return Err(Error::DimensionMismatch(format!(
                "gain must be {}x{}, got {}x{}",
                self.input_dim(),
                self.state_dim(),
                gain.nrows(),
                gain.ncols()
            )));
        }
        Ok(())
    }
}

/// One transition: `A x + B u + ξ`.
pub fn step(
    sys: &DynamicsParameter,
    x: &DVector<f64>,
    u: &DVector<f64>,
    xi: &DVector<f64>,
) -> Result<DVector<f64>> {
    let p = sys.state_dim();
    if x.len() != p || xi.len() != p || u.len() != sys.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "step expects x,ξ in R^{} and u in R^{}, got {}, {}, {}",
            p,
            sys.input_dim(),
            x.len(),
            xi.len(),
            u.len()
        )));
    }
    Ok(&sys.a * x + &sys.b * u + xi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Uniform,
}

/// Mean-zero disturbance with covariance `Σ`.
///
/// Samples are `C z` with `Σ = C Cᵀ` and `z` either standard normal or
/// component-wise uniform on `(−√3, √3)` (unit variance).
#[derive(Debug, Clone)]
pub struct NoiseModel {
    kind: NoiseKind,
    covariance: DMatrix<f64>,
    factor: DMatrix<f64>,
    min_eigenvalue: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, covariance: DMatrix<f64>) -> Result<Self> {
        if !covariance.is_square() {
            return Err(Error::DimensionMismatch("noise covariance must be square".into()));
        }
        if !linalg::all_finite(&covariance) {
            return Err(Error::NonFinite("noise covariance"));
        }
        if !linalg::is_symmetric(&covariance, 1e-12) {
            return Err(Error::NotPositiveDefinite("noise covariance is not symmetric".into()));
        }
        let min_eigenvalue = linalg::min_symmetric_eigenvalue(&covariance);
        if min_eigenvalue <= 1e-10 {
            return Err(Error::NotPositiveDefinite(format!(
                "noise covariance has smallest eigenvalue {min_eigenvalue:e}"
            )));
        }
        let factor = covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::NotPositiveDefinite("noise covariance".into()))?
            .l();
        Ok(Self {
            kind,
            covariance,
            factor,
            min_eigenvalue,
        })
    }

    pub fn gaussian(covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(NoiseKind::Gaussian, covariance)
    }

    pub fn uniform(covariance: DMatrix<f64>) -> Result<Self> {
        Self::new(NoiseKind::Uniform, covariance)
    }

    /// Gaussian noise with identity covariance.
    pub fn standard(dim: usize) -> Self {
        Self::gaussian(DMatrix::identity(dim, dim)).expect("identity is SPD")
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// Standard deviation along the least excited direction.
    pub fn min_std(&self) -> f64 {
        self.min_eigenvalue.sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let dim = self.dim();
        let z = match self.kind {
            NoiseKind::Gaussian => {
                DVector::from_fn(dim, |_, _| StandardNormal.sample(&mut *rng))
            }
            NoiseKind::Uniform => {
                let half = 3f64.sqrt();
                let u = Uniform::new(-half, half).expect("finite bounds");
                DVector::from_fn(dim, |_, _| u.sample(&mut *rng))
            }
        };
        &self.factor * z
    }

    pub fn stream<'a, R: Rng>(&'a self, rng: &'a mut R) -> NoiseStream<'a, R> {
        NoiseStream { model: self, rng }
    }
}

/// Source of the disturbance sequence `ξ(1), ξ(2), …`.
pub trait NoiseSource {
    fn next_noise(&mut self, dim: usize) -> DVector<f64>;
}

/// Draws from a [`NoiseModel`] with a caller-owned generator.
pub struct NoiseStream<'a, R> {
    model: &'a NoiseModel,
    rng: &'a mut R,
}

impl<R: Rng> NoiseSource for NoiseStream<'_, R> {
    fn next_noise(&mut self, dim: usize) -> DVector<f64> {
        debug_assert_eq!(dim, self.model.dim());
        self.model.sample(self.rng)
    }
}

/// Identically zero disturbance, for deterministic checks.
#[derive(Debug, Default, Clone, Copy)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn next_noise(&mut self, dim: usize) -> DVector<f64> {
        DVector::zeros(dim)
    }
}

/// Replays a fixed disturbance sequence, then zeros.
#[derive(Debug, Clone)]
pub struct ReplayNoise {
    draws: std::vec::IntoIter<DVector<f64>>,
}

impl ReplayNoise {
    pub fn new(draws: Vec<DVector<f64>>) -> Self {
        Self {
            draws: draws.into_iter(),
        }
    }
}

impl NoiseSource for ReplayNoise {
    fn next_noise(&mut self, dim: usize) -> DVector<f64> {
        self.draws.next().unwrap_or_else(|| DVector::zeros(dim))
    }
}

/// Upper bound on `‖x(t)‖` beyond which a run counts as exploded.
///
/// Stored as `log₁₀` so that bounds past the double-precision range can be
/// expressed for extended-precision runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateCap {
    log10: f64,
}

impl StateCap {
    /// Default for double-precision simulation: squares of the states must
    /// stay representable.
    pub const DOUBLE_DEFAULT_LOG10: f64 = 100.0;
    /// Default for extended-precision simulation.
    pub const EXTENDED_DEFAULT_LOG10: f64 = 2000.0;

    pub fn new(cap: f64) -> Result<Self> {
        if cap.is_nan() || cap <= 0.0 {
            return Err(Error::Config(format!("state cap must be positive, got {cap}")));
        }
        Ok(Self { log10: cap.log10() })
    }

    pub fn from_log10(log10: f64) -> Self {
        Self { log10 }
    }

    pub fn default_double() -> Self {
        Self::from_log10(Self::DOUBLE_DEFAULT_LOG10)
    }

    pub fn default_extended() -> Self {
        Self::from_log10(Self::EXTENDED_DEFAULT_LOG10)
    }

    pub fn log10(&self) -> f64 {
        self.log10
    }

    /// The cap as a double, `+∞` when it exceeds the double range.
    pub fn value(&self) -> f64 {
        10f64.powf(self.log10)
    }
}

/// States `x(0..=n)` and inputs `u(0..n)` of one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryLog {
    pub states: Vec<DVector<f64>>,
    pub inputs: Vec<DVector<f64>>,
    /// The state norm exceeded the cap and the episode stopped early.
    pub overflow: bool,
}

impl TrajectoryLog {
    /// Number of recorded transitions `x(ℓ) → x(ℓ+1)`.
    pub fn transitions(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn last_state(&self) -> Option<&DVector<f64>> {
        self.states.last()
    }
}

/// Runs `u(t) = L x(t)` for `n_steps` transitions from `x0`.
///
/// Stops early with `overflow = true` as soon as a state with norm above
/// `cap` has been stored. A step whose result is not finite is dropped and
/// also flags overflow.
pub fn simulate_episode<N: NoiseSource + ?Sized>(
    sys: &DynamicsParameter,
    gain: &DMatrix<f64>,
    x0: &DVector<f64>,
    n_steps: usize,
    noise: &mut N,
    cap: f64,
) -> Result<TrajectoryLog> {
    sys.check_gain(gain)?;
    let p = sys.state_dim();
    if x0.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, expected {}",
            x0.len(),
            p
        )));
    }
    if n_steps == 0 {
        return Err(Error::Config("episode needs at least one step".into()));
    }
    if !x0.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("initial state"));
    }

    let mut states = Vec::with_capacity(n_steps + 1);
    let mut inputs = Vec::with_capacity(n_steps);
    states.push(x0.clone());
    let mut overflow = x0.norm() > cap;

    let mut x = x0.clone();
    for _ in 0..n_steps {
        if overflow {
            break;
        }
        let u = gain * &x;
        let xi = noise.next_noise(p);
        let next = &sys.a * &x + &sys.b * &u + xi;
        if !next.iter().all(|v| v.is_finite()) {
            overflow = true;
            break;
        }
        overflow = next.norm() > cap;
        inputs.push(u);
        states.push(next.clone());
        x = next;
    }

    Ok(TrajectoryLog {
        states,
        inputs,
        overflow,
    })
}

/// Benchmark plant and cost matrices used throughout the experiments.
pub fn preset_benchmark() -> (DynamicsParameter, CostPair) {
    #[rustfmt::skip]
    let a = DMatrix::from_row_slice(3, 3, &[
        1.07,  0.00, -0.37,
        0.48, -0.88,  0.85,
        0.00,  0.03, -0.92,
    ]);
    #[rustfmt::skip]
    let b = DMatrix::from_row_slice(3, 3, &[
        -0.48, 0.44, -0.29,
        -0.51, 0.59,  0.26,
         0.29, 0.00, -0.74,
    ]);
    #[rustfmt::skip]
    let q = DMatrix::from_row_slice(3, 3, &[
         1.31, -0.17, -0.28,
        -0.17,  1.14,  0.51,
        -0.28,  0.51,  5.01,
    ]);
    #[rustfmt::skip]
    let r = DMatrix::from_row_slice(3, 3, &[
        2.01, 0.54, 0.77,
        0.54, 1.38, 0.42,
        0.77, 0.42, 2.38,
    ]);
    let sys = DynamicsParameter::new(a, b).expect("preset dimensions");
    let costs = CostPair::new(q, r).expect("preset costs are SPD");
    (sys, costs)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemFileRepr {
    p: usize,
    r: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    q: Option<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    r_cost: Option<Vec<Vec<f64>>>,
}

/// A plant loaded from a JSON description, with optional costs.
#[derive(Debug, Clone)]
pub struct SystemDescription {
    pub plant: DynamicsParameter,
    pub costs: Option<CostPair>,
}

impl SystemDescription {
    /// Costs to use for gain design; identity matrices when the file has none.
    pub fn costs_or_identity(&self) -> CostPair {
        self.costs.clone().unwrap_or_else(|| {
            CostPair::identity(self.plant.state_dim(), self.plant.input_dim())
        })
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let repr: SystemFileRepr = serde_json::from_str(text)?;
        let a = rows_to_matrix("A", &repr.a, repr.p, repr.p)?;
        let b = rows_to_matrix("B", &repr.b, repr.p, repr.r)?;
        let plant = DynamicsParameter::new(a, b)?;
        let costs = match (repr.q, repr.r_cost) {
            (Some(q), Some(r)) => Some(CostPair::new(
                rows_to_matrix("Q", &q, repr.p, repr.p)?,
                rows_to_matrix("R", &r, repr.r, repr.r)?,
            )?),
            (None, None) => None,
            _ => {
                return Err(Error::Config(
                    "system file must give both Q and R or neither".into(),
                ))
            }
        };
        Ok(Self { plant, costs })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }
}

fn rows_to_matrix(name: &str, rows: &[Vec<f64>], nrows: usize, ncols: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|row| row.len() != ncols) {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {nrows}x{ncols}"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}
