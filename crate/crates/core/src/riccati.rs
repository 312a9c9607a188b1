//! Discrete algebraic Riccati equation, certainty-equivalent feedback gains,
//! and spectral radii.
//!
//! `K(θ)` is the limit of the value iteration
//!
//! ```text
//! K₀ = Q,   K_{t+1} = Q + AᵀK_tA − AᵀK_tB (BᵀK_tB + R)⁻¹ BᵀK_tA
//! ```
//!
//! and `L(θ) = −(BᵀKB + R)⁻¹ BᵀKA`. The iteration diverges exactly when `θ`
//! has no stabilizing solution, so a blow-up past the divergence cap is
//! reported as [`Error::NoConvergence`].

use nalgebra::{linalg::Schur, DMatrix};

use crate::error::{Error, Result};
use crate::linalg;
use crate::system::DynamicsParameter;

/// Positive-definite state and input weights.
#[derive(Debug, Clone, PartialEq)]
pub struct CostPair {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
}

const PD_TOLERANCE: f64 = 1e-10;

impl CostPair {
    pub fn new(q: DMatrix<f64>, r: DMatrix<f64>) -> Result<Self> {
        check_spd("Q", &q)?;
        check_spd("R", &r)?;
        Ok(Self { q, r })
    }

    pub fn identity(p: usize, r: usize) -> Self {
        Self {
            q: DMatrix::identity(p, p),
            r: DMatrix::identity(r, r),
        }
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }
}

fn check_spd(name: &str, m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("{name} must be square")));
    }
    if !linalg::all_finite(m) {
        return Err(Error::NonFinite("cost matrix"));
    }
    if !linalg::is_symmetric(m, 1e-12) {
        return Err(Error::NotPositiveDefinite(format!("{name} is not symmetric")));
    }
    let min_eig = linalg::min_symmetric_eigenvalue(m);
    if min_eig <= PD_TOLERANCE {
        return Err(Error::NotPositiveDefinite(format!(
            "{name} has smallest eigenvalue {min_eig:e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Successive iterates must differ by less than `tolerance·max(1, ‖K‖)`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `‖K‖` above this is treated as divergence.
    pub divergence_cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_iterations: 10_000,
            divergence_cap: 1e12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub k: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub iterations: usize,
    /// Operator norm of `K − F(K)` where `F` is the Riccati map.
    pub residual: f64,
}

pub fn solve_dare(
    theta: &DynamicsParameter,
    costs: &CostPair,
    opts: &SolverOptions,
) -> Result<RiccatiSolution> {
    let p = theta.state_dim();
    let r = theta.input_dim();
    if costs.q.nrows() != p || costs.r.nrows() != r {
        return Err(Error::DimensionMismatch(format!(
            "costs are {}x{} / {}x{} but θ has p={p}, r={r}",
            costs.q.nrows(),
            costs.q.ncols(),
            costs.r.nrows(),
            costs.r.ncols()
        )));
    }

    let mut k = costs.q.clone();
    for iteration in 1..=opts.max_iterations {
        let next = riccati_map(theta, costs, &k)?;
        let norm = linalg::operator_norm(&next);
        if !norm.is_finite() || norm > opts.divergence_cap {
            return Err(Error::NoConvergence {
                iterations: iteration,
                reason: "iterate exceeded the divergence cap",
            });
        }
        let delta = linalg::operator_norm(&(&next - &k));
        k = next;
        if delta < opts.tolerance * norm.max(1.0) {
            let gain = feedback_gain(&k, theta, &costs.r)?;
            let residual = linalg::operator_norm(&(&k - riccati_map(theta, costs, &k)?));
            return Ok(RiccatiSolution {
                k,
                gain,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iterations,
        reason: "iteration limit reached",
    })
}

/// One application of the Riccati map, symmetrized.
fn riccati_map(theta: &DynamicsParameter, costs: &CostPair, k: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let a = theta.a();
    let b = theta.b();
    let kb = k * b;
    let ka = k * a;
    let inner = b.transpose() * &kb + &costs.r;
    let rhs = b.transpose() * &ka;
    let solved = solve_spd(inner, &rhs)?;
    let next = &costs.q + a.transpose() * &ka - (a.transpose() * &kb) * solved;
    Ok((&next + next.transpose()) * 0.5)
}

fn solve_spd(m: DMatrix<f64>, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if let Some(chol) = m.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    m.lu().solve(rhs).ok_or(Error::SingularInnerMatrix)
}

/// `L = −(BᵀKB + R)⁻¹ BᵀKA`.
pub fn feedback_gain(
    k: &DMatrix<f64>,
    theta: &DynamicsParameter,
    r: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let p = theta.state_dim();
    if k.shape() != (p, p) || r.shape() != (theta.input_dim(), theta.input_dim()) {
        return Err(Error::DimensionMismatch("feedback_gain: K or R has the wrong shape".into()));
    }
    let b = theta.b();
    let bt_k = b.transpose() * k;
    let inner = &bt_k * b + r;
    let rhs = &bt_k * theta.a();
    let solved = inner.lu().solve(&rhs).ok_or(Error::SingularInnerMatrix)?;
    if !linalg::all_finite(&solved) {
        return Err(Error::SingularInnerMatrix);
    }
    Ok(-solved)
}

/// Largest eigenvalue magnitude of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "spectral radius needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if !linalg::all_finite(m) {
        return Err(Error::NonFinite("matrix"));
    }
    if m.is_empty() {
        return Ok(0.0);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(Error::NoConvergence {
        iterations: 100_000,
        reason: "Schur decomposition did not converge",
    })?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max))
}

/// `ρ(A₀ + B₀ L)`.
pub fn closed_loop_radius(plant: &DynamicsParameter, gain: &DMatrix<f64>) -> Result<f64> {
    spectral_radius(&plant.closed_loop(gain)?)
}
