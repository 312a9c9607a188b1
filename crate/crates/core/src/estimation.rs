//! Least-squares identification of closed-loop matrices and recovery of the
//! open-loop parameter from several of them.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{self, RANK_TOLERANCE};
use crate::system::{DynamicsParameter, TrajectoryLog};

/// Least-squares estimate `D̂` of one episode's closed-loop matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoopEstimate {
    pub d_hat: DMatrix<f64>,
    pub sample_count: usize,
    pub regressor_rank: usize,
}

/// Regressor blocks `[I_p; L_i]` for the episodes of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct GainBasis {
    blocks: Vec<DMatrix<f64>>,
    state_dim: usize,
    input_dim: usize,
}

impl GainBasis {
    pub fn from_gains(gains: &[DMatrix<f64>]) -> Result<Self> {
        let first = gains
            .first()
            .ok_or_else(|| Error::Config("gain basis needs at least one gain".into()))?;
        let (r, p) = first.shape();
        let mut blocks = Vec::with_capacity(gains.len());
        for gain in gains {
            if gain.shape() != (r, p) {
                return Err(Error::DimensionMismatch(format!(
                    "gains must all be {r}x{p}, got {}x{}",
                    gain.nrows(),
                    gain.ncols()
                )));
            }
            let mut block = DMatrix::zeros(p + r, p);
            block.rows_mut(0, p).fill_with_identity();
            block.rows_mut(p, r).copy_from(gain);
            blocks.push(block);
        }
        Ok(Self {
            blocks,
            state_dim: p,
            input_dim: r,
        })
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Number of episodes `k`.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Smallest episode count that can identify `θ`: `1 + ⌈r/p⌉`.
    pub fn min_episodes(state_dim: usize, input_dim: usize) -> usize {
        1 + input_dim.div_ceil(state_dim)
    }

    /// The q × kp matrix `[block₁ … block_k]`.
    fn stacked(&self) -> DMatrix<f64> {
        let p = self.state_dim;
        let mut m = DMatrix::zeros(p + self.input_dim, p * self.blocks.len());
        for (i, block) in self.blocks.iter().enumerate() {
            m.columns_mut(i * p, p).copy_from(block);
        }
        m
    }
}

/// Minimizes `Σ_ℓ ‖x(ℓ+1) − D x(ℓ)‖²` over p×p matrices `D`.
///
/// Rank-deficient regressors give the minimum-norm minimizer.
pub fn closed_loop_ls(traj: &TrajectoryLog) -> Result<ClosedLoopEstimate> {
    let n = traj.transitions();
    if n == 0 {
        return Err(Error::EmptyTrajectory);
    }
    let p = traj.states[0].len();
    let mut regressors = DMatrix::zeros(n, p);
    let mut targets = DMatrix::zeros(n, p);
    for l in 0..n {
        regressors.row_mut(l).copy_from(&traj.states[l].transpose());
        targets.row_mut(l).copy_from(&traj.states[l + 1].transpose());
    }
    let (pinv, rank) = linalg::pseudo_inverse(&regressors, RANK_TOLERANCE);
    let d_hat = (pinv * targets).transpose();
    Ok(ClosedLoopEstimate {
        d_hat,
        sample_count: n,
        regressor_rank: rank,
    })
}

/// Minimizes `Σ_i ‖D̂_i − θ [I; L_i]‖²` over p×q matrices `θ`.
pub fn recover_theta(
    estimates: &[ClosedLoopEstimate],
    basis: &GainBasis,
) -> Result<DynamicsParameter> {
    if estimates.len() != basis.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} estimates for {} gains",
            estimates.len(),
            basis.len()
        )));
    }
    let p = basis.state_dim;
    let q = p + basis.input_dim;
    let mut stacked_d = DMatrix::zeros(p, p * estimates.len());
    for (i, est) in estimates.iter().enumerate() {
        if est.d_hat.shape() != (p, p) {
            return Err(Error::DimensionMismatch(format!(
                "estimate {i} is {}x{}, expected {p}x{p}",
                est.d_hat.nrows(),
                est.d_hat.ncols()
            )));
        }
        stacked_d.columns_mut(i * p, p).copy_from(&est.d_hat);
    }
    let m = basis.stacked();
    let (pinv, rank) = linalg::pseudo_inverse(&m, RANK_TOLERANCE);
    if rank < q {
        return Err(Error::RankDeficientBasis { rank, required: q });
    }
    DynamicsParameter::from_joined(&(stacked_d * pinv))
}

/// `‖θ̂ − θ‖` in operator norm.
pub fn estimation_error(theta_hat: &DynamicsParameter, theta_true: &DynamicsParameter) -> Result<f64> {
    let lhs = theta_hat.joined();
    let rhs = theta_true.joined();
    if lhs.shape() != rhs.shape() || theta_hat.state_dim() != theta_true.state_dim() {
        return Err(Error::DimensionMismatch(format!(
            "θ̂ is {}x{}, θ is {}x{}",
            lhs.nrows(),
            lhs.ncols(),
            rhs.nrows(),
            rhs.ncols()
        )));
    }
    Ok(linalg::operator_norm(&(lhs - rhs)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn log_of(states: &[&[f64]]) -> TrajectoryLog {
        let states: Vec<DVector<f64>> = states.iter().map(|s| DVector::from_column_slice(s)).collect();
        let inputs = vec![DVector::zeros(0); states.len() - 1];
        TrajectoryLog {
            states,
            inputs,
            overflow: false,
        }
    }

    #[test]
    fn single_scalar_sample() {
        let est = closed_loop_ls(&log_of(&[&[2.0], &[1.0]])).unwrap();
        assert!((est.d_hat[(0, 0)] - 0.5).abs() < 1e-15);
        assert_eq!(est.sample_count, 1);
        assert_eq!(est.regressor_rank, 1);
    }

    #[test]
    fn exact_two_by_two() {
        // Normal equations by hand: X = [[1,1],[0.5,0.25]] is invertible, so D̂ = Y X⁻¹.
        let est = closed_loop_ls(&log_of(&[&[1.0, 1.0], &[0.5, 0.25], &[0.25, 0.0625]])).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        assert!((est.d_hat - expected).amax() < 1e-10);
        assert_eq!(est.regressor_rank, 2);
    }

    #[test]
    fn unidentified_column_is_zero() {
        let est = closed_loop_ls(&log_of(&[&[1.0, 0.0], &[2.0, 0.0], &[4.0, 0.0]])).unwrap();
        assert_eq!(est.regressor_rank, 1);
        assert!(est.d_hat.column(1).amax() < 1e-15);
        assert!((est.d_hat[(0, 0)] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn empty_trajectory() {
        let log = TrajectoryLog {
            states: vec![DVector::zeros(2)],
            inputs: vec![],
            overflow: false,
        };
        assert!(matches!(closed_loop_ls(&log), Err(Error::EmptyTrajectory)));
    }

    #[test]
    fn scalar_recovery_from_two_gains() {
        // D̂₁ = a (L=0), D̂₂ = a + b (L=1).
        let (a, b) = (1.07, -0.48);
        let gains = [DMatrix::from_element(1, 1, 0.0), DMatrix::from_element(1, 1, 1.0)];
        let est = |d: f64| ClosedLoopEstimate {
            d_hat: DMatrix::from_element(1, 1, d),
            sample_count: 1,
            regressor_rank: 1,
        };
        let basis = GainBasis::from_gains(&gains).unwrap();
        let theta = recover_theta(&[est(a), est(a + b)], &basis).unwrap();
        assert!((theta.a()[(0, 0)] - a).abs() < 1e-12);
        assert!((theta.b()[(0, 0)] - b).abs() < 1e-12);
    }

    #[test]
    fn identical_gains_are_rank_deficient() {
        let gains = [DMatrix::zeros(1, 1), DMatrix::zeros(1, 1)];
        let est = ClosedLoopEstimate {
            d_hat: DMatrix::from_element(1, 1, 1.0),
            sample_count: 1,
            regressor_rank: 1,
        };
        let basis = GainBasis::from_gains(&gains).unwrap();
        let err = recover_theta(&[est.clone(), est], &basis);
        assert!(matches!(err, Err(Error::RankDeficientBasis { rank: 1, required: 2 })));
    }

    #[test]
    fn episode_bound() {
        assert_eq!(GainBasis::min_episodes(3, 3), 2);
        assert_eq!(GainBasis::min_episodes(2, 3), 3);
        assert_eq!(GainBasis::min_episodes(4, 1), 2);
    }

    #[test]
    fn error_norm_examples() {
        let base = DynamicsParameter::new(DMatrix::identity(2, 2), DMatrix::zeros(2, 1)).unwrap();
        assert_eq!(estimation_error(&base, &base).unwrap(), 0.0);

        let mut bumped = base.joined();
        bumped[(1, 2)] += 0.3;
        let bumped = DynamicsParameter::from_joined(&bumped).unwrap();
        assert!((estimation_error(&bumped, &base).unwrap() - 0.3).abs() < 1e-15);

        let mut diag = base.joined();
        diag[(0, 0)] += 3.0;
        diag[(1, 1)] += 4.0;
        let diag = DynamicsParameter::from_joined(&diag).unwrap();
        assert!((estimation_error(&diag, &base).unwrap() - 4.0).abs() < 1e-12);
    }
}
