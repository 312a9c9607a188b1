//! Episode simulation and closed-loop least squares in extended precision.
//!
//! Under the randomized controllers the closed loop is usually unstable, so
//! the state grows by hundreds of orders of magnitude within one run. Double
//! precision then loses the noise-driven components of `x(t)` that carry the
//! information about the non-dominant modes, and eventually overflows. Here
//! the state and the sufficient statistics `Σ x xᵀ`, `Σ x(ℓ+1) x(ℓ)ᵀ` are
//! carried in MPFR floats whose precision grows with the dynamic range, so
//! the recursion and the least-squares minimizer are evaluated as if in
//! exact arithmetic.

use nalgebra::{DMatrix, DVector};
use rug::{Assign, Float};

use crate::error::{Error, Result};
use crate::estimation::ClosedLoopEstimate;
use crate::linalg;
use crate::system::{DynamicsParameter, NoiseSource, StateCap};

const BASE_PRECISION: u32 = 128;
const GUARD_BITS: i64 = 192;
const PRECISION_STEP: u32 = 256;

/// Plant state carried across episodes.
#[derive(Debug, Clone)]
pub struct ExtendedState {
    x: Vec<Float>,
}

impl ExtendedState {
    pub fn zeros(dim: usize) -> Self {
        Self {
            x: (0..dim).map(|_| Float::new(BASE_PRECISION)).collect(),
        }
    }

    pub fn from_vector(x: &DVector<f64>) -> Self {
        Self {
            x: x.iter().map(|&v| Float::with_val(BASE_PRECISION, v)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// `log₁₀ ‖x‖`, or `-∞` at the origin.
    pub fn log10_norm(&self) -> f64 {
        log10_norm(&self.x)
    }

    /// Nearest double-precision vector; entries saturate to ±∞ when out of range.
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.x.len(), self.x.iter().map(Float::to_f64))
    }
}

/// Outcome of one extended-precision episode.
#[derive(Debug, Clone)]
pub struct ExtendedEpisode {
    pub estimate: ClosedLoopEstimate,
    pub transitions: usize,
    pub overflow: bool,
    /// Largest `log₁₀ ‖x(t)‖` seen in the episode.
    pub peak_log10_norm: f64,
}

/// Runs `u = L x` for up to `n_steps` transitions, continuing from `state`.
///
/// `noise_floor` is the smallest disturbance standard deviation; together
/// with the state norm it fixes the working precision. The episode stops
/// after the first state whose norm exceeds `cap`.
pub fn run_episode<N: NoiseSource + ?Sized>(
    plant: &DynamicsParameter,
    gain: &DMatrix<f64>,
    state: &mut ExtendedState,
    n_steps: usize,
    noise: &mut N,
    noise_floor: f64,
    cap: StateCap,
) -> Result<ExtendedEpisode> {
    plant.check_gain(gain)?;
    let p = plant.state_dim();
    let r = plant.input_dim();
    if state.dim() != p {
        return Err(Error::DimensionMismatch(format!(
            "state has length {}, expected {p}",
            state.dim()
        )));
    }
    if n_steps == 0 {
        return Err(Error::Config("episode needs at least one step".into()));
    }
    if !(noise_floor > 0.0 && noise_floor.is_finite()) {
        return Err(Error::Config(format!("noise floor must be positive, got {noise_floor}")));
    }

    let a = to_floats(plant.a());
    let b = to_floats(plant.b());
    let l = to_floats(gain);
    let floor_log2 = noise_floor.log2();

    let mut prec = required_precision(&state.x, floor_log2, BASE_PRECISION);
    let mut gram = vec![Float::new(prec); p * p];
    let mut cross = vec![Float::new(prec); p * p];
    let mut u = vec![Float::new(prec); r];
    let mut next = vec![Float::new(prec); p];
    for v in state.x.iter_mut() {
        v.set_prec(prec);
    }

    let mut peak = state.log10_norm();
    let mut overflow = peak > cap.log10();
    let mut transitions = 0;

    while transitions < n_steps && !overflow {
        let needed = required_precision(&state.x, floor_log2, prec);
        if needed > prec {
            prec = needed;
            for v in state
                .x
                .iter_mut()
                .chain(gram.iter_mut())
                .chain(cross.iter_mut())
                .chain(u.iter_mut())
                .chain(next.iter_mut())
            {
                v.set_prec(prec);
            }
        }

        let xi = noise.next_noise(p);
        for (j, uj) in u.iter_mut().enumerate() {
            uj.assign(0);
            for k in 0..p {
                *uj += &l[j * p + k] * &state.x[k];
            }
        }
        for (i, ni) in next.iter_mut().enumerate() {
            ni.assign(xi[i]);
            for k in 0..p {
                *ni += &a[i * p + k] * &state.x[k];
            }
            for (j, uj) in u.iter().enumerate() {
                *ni += &b[i * r + j] * uj;
            }
        }
        for i in 0..p {
            for j in i..p {
                gram[i * p + j] += &state.x[i] * &state.x[j];
            }
            for j in 0..p {
                cross[i * p + j] += &next[i] * &state.x[j];
            }
        }
        std::mem::swap(&mut state.x, &mut next);
        transitions += 1;

        let norm = state.log10_norm();
        peak = peak.max(norm);
        overflow = norm > cap.log10();
    }

    for i in 0..p {
        for j in 0..i {
            let upper = gram[j * p + i].clone();
            gram[i * p + j] = upper;
        }
    }

    let estimate = solve_normal_equations(&gram, &cross, p, transitions, prec)?;
    Ok(ExtendedEpisode {
        estimate,
        transitions,
        overflow,
        peak_log10_norm: peak,
    })
}

fn to_floats(m: &DMatrix<f64>) -> Vec<Float> {
    // Row-major; 53 bits hold every double exactly.
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(Float::with_val(53, m[(i, j)]));
        }
    }
    out
}

fn max_exponent(x: &[Float]) -> Option<i32> {
    x.iter().filter_map(Float::get_exp).max()
}

fn log10_norm(x: &[Float]) -> f64 {
    let Some(shift) = max_exponent(x) else {
        return f64::NEG_INFINITY;
    };
    // Scale by 2^-shift so the squares stay in double range.
    let sum: f64 = x
        .iter()
        .map(|v| {
            let (m, e) = v.to_f64_exp();
            let scaled = if v.is_zero() { 0.0 } else { m * 2f64.powi(e - shift) };
            scaled * scaled
        })
        .sum();
    (0.5 * sum.log2() + shift as f64) * std::f64::consts::LOG10_2
}

fn required_precision(x: &[Float], floor_log2: f64, current: u32) -> u32 {
    let range = match max_exponent(x) {
        Some(e) => (e as f64 - floor_log2).max(0.0),
        None => 0.0,
    };
    let bits = (2.0 * range).ceil() as i64 + GUARD_BITS;
    let bits = bits.max(current as i64) as u32;
    bits.div_ceil(PRECISION_STEP) * PRECISION_STEP
}

/// `D̂ = C G⁻¹` from the accumulated statistics.
///
/// A pivoted Cholesky factorization of `G` decides the rank; rank-deficient
/// systems fall back to the double-precision pseudo-inverse, which is only
/// reached in very short episodes where the values are small.
fn solve_normal_equations(
    gram: &[Float],
    cross: &[Float],
    p: usize,
    transitions: usize,
    prec: u32,
) -> Result<ClosedLoopEstimate> {
    if transitions == 0 {
        return Err(Error::EmptyTrajectory);
    }
    match pivoted_cholesky(gram, p, prec) {
        Some((factor, perm)) => {
            let mut d_hat = DMatrix::zeros(p, p);
            let mut rhs = vec![Float::new(prec); p];
            for i in 0..p {
                for (k, slot) in rhs.iter_mut().enumerate() {
                    slot.assign(&cross[i * p + perm[k]]);
                }
                let sol = cholesky_solve(&factor, &rhs, p, prec);
                for k in 0..p {
                    d_hat[(i, perm[k])] = sol[k].to_f64();
                }
            }
            if !linalg::all_finite(&d_hat) {
                return Err(Error::NonFinite("extended least-squares estimate"));
            }
            Ok(ClosedLoopEstimate {
                d_hat,
                sample_count: transitions,
                regressor_rank: p,
            })
        }
        None => Ok(rank_deficient_fallback(gram, cross, p, transitions)),
    }
}

/// Lower-triangular factor of `PᵀGP` and the permutation, or `None` when a
/// pivot falls below the rank threshold.
fn pivoted_cholesky(gram: &[Float], p: usize, prec: u32) -> Option<(Vec<Float>, Vec<usize>)> {
    let mut work: Vec<Float> = gram.iter().map(|v| Float::with_val(prec, v)).collect();
    let mut perm: Vec<usize> = (0..p).collect();
    let max_diag = (0..p).map(|i| work[i * p + i].clone()).max_by(|x, y| x.total_cmp(y))?;
    if max_diag.is_zero() {
        return None;
    }
    let threshold = Float::with_val(prec, &max_diag >> (prec as i32 - 96).max(0));

    let mut factor = vec![Float::new(prec); p * p];
    for s in 0..p {
        // Symmetric pivot on the largest remaining diagonal.
        let (pivot, _) = (s..p)
            .map(|i| (i, &work[perm[i] * p + perm[i]]))
            .max_by(|x, y| x.1.total_cmp(y.1))?;
        perm.swap(s, pivot);
        for c in 0..s {
            factor.swap(s * p + c, pivot * p + c);
        }
        let ps = perm[s];
        let diag = work[ps * p + ps].clone();
        if diag <= threshold {
            return None;
        }
        let root = diag.sqrt();
        for i in (s + 1)..p {
            let pi = perm[i];
            let l_is = Float::with_val(prec, &work[pi * p + ps] / &root);
            for &pj in &perm[(s + 1)..=i] {
                let l_js = Float::with_val(prec, &work[pj * p + ps] / &root);
                let upd = Float::with_val(prec, &l_is * &l_js);
                work[pi * p + pj] -= &upd;
                if pi != pj {
                    work[pj * p + pi] -= &upd;
                }
            }
            factor[i * p + s] = l_is;
        }
        factor[s * p + s] = root;
    }
    Some((factor, perm))
}

fn cholesky_solve(factor: &[Float], rhs: &[Float], p: usize, prec: u32) -> Vec<Float> {
    let mut y: Vec<Float> = Vec::with_capacity(p);
    for i in 0..p {
        let mut acc = Float::with_val(prec, &rhs[i]);
        for (k, yk) in y.iter().enumerate() {
            acc -= &factor[i * p + k] * yk;
        }
        y.push(acc / &factor[i * p + i]);
    }
    let mut x = vec![Float::new(prec); p];
    for i in (0..p).rev() {
        let mut acc = y[i].clone();
        for k in (i + 1)..p {
            acc -= &factor[k * p + i] * &x[k];
        }
        x[i] = acc / &factor[i * p + i];
    }
    x
}

fn rank_deficient_fallback(gram: &[Float], cross: &[Float], p: usize, transitions: usize) -> ClosedLoopEstimate {
    let shift = gram.iter().chain(cross.iter()).filter_map(Float::get_exp).max().unwrap_or(0);
    let scaled = |v: &Float| -> f64 {
        if v.is_zero() {
            0.0
        } else {
            let (m, e) = v.to_f64_exp();
            m * 2f64.powi(e - shift)
        }
    };
    let g = DMatrix::from_fn(p, p, |i, j| scaled(&gram[i * p + j]));
    let c = DMatrix::from_fn(p, p, |i, j| scaled(&cross[i * p + j]));
    // Gram singular values are squares of the regressor ones.
    let tol = linalg::RANK_TOLERANCE * linalg::RANK_TOLERANCE;
    let (g_pinv, rank) = linalg::pseudo_inverse(&g, tol);
    ClosedLoopEstimate {
        d_hat: c * g_pinv,
        sample_count: transitions,
        regressor_rank: rank,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::closed_loop_ls;
    use crate::system::{simulate_episode, NoiseModel, ReplayNoise, ZeroNoise};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plant2() -> DynamicsParameter {
        DynamicsParameter::new(
            DMatrix::from_row_slice(2, 2, &[0.5, 0.1, -0.2, 0.3]),
            DMatrix::from_row_slice(2, 1, &[1.0, 0.5]),
        )
        .unwrap()
    }

    #[test]
    fn agrees_with_double_precision_on_stable_episode() {
        let plant = plant2();
        let gain = DMatrix::from_row_slice(1, 2, &[-0.1, 0.2]);
        let model = NoiseModel::standard(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<_> = (0..200).map(|_| model.sample(&mut rng)).collect();

        let x0 = DVector::zeros(2);
        let log = simulate_episode(&plant, &gain, &x0, 200, &mut ReplayNoise::new(draws.clone()), 1e100).unwrap();
        let double = closed_loop_ls(&log).unwrap();

        let mut state = ExtendedState::zeros(2);
        let ext = run_episode(&plant, &gain, &mut state, 200, &mut ReplayNoise::new(draws), 1.0, StateCap::default_extended()).unwrap();
        assert_eq!(ext.transitions, 200);
        assert!(!ext.overflow);
        assert!((ext.estimate.d_hat - double.d_hat).amax() < 1e-9);
        assert!((state.to_vector() - log.last_state().unwrap()).amax() < 1e-9);
    }

    #[test]
    fn noiseless_krylov_data_is_fit_exactly() {
        // Without noise an explosive trajectory from a generic start still spans R².
        let plant = DynamicsParameter::new(
            DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 0.0, 1.5]),
            DMatrix::zeros(2, 1),
        )
        .unwrap();
        let gain = DMatrix::zeros(1, 2);
        let mut state = ExtendedState::from_vector(&DVector::from_vec(vec![0.3, 1.0]));
        let ext = run_episode(&plant, &gain, &mut state, 2000, &mut ZeroNoise, 1.0, StateCap::default_extended()).unwrap();
        assert_eq!(ext.transitions, 2000);
        assert!(ext.peak_log10_norm > 900.0);
        assert!((ext.estimate.d_hat - plant.a()).amax() < 1e-12);
    }

    #[test]
    fn cap_stops_episode() {
        let plant = DynamicsParameter::new(DMatrix::from_element(1, 1, 10.0), DMatrix::zeros(1, 1)).unwrap();
        let gain = DMatrix::zeros(1, 1);
        let mut state = ExtendedState::from_vector(&DVector::from_element(1, 1.0));
        let ext = run_episode(&plant, &gain, &mut state, 100, &mut ZeroNoise, 1.0, StateCap::from_log10(5.5)).unwrap();
        assert!(ext.overflow);
        assert_eq!(ext.transitions, 6);
        assert!((state.log10_norm() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_episode_matches_minimum_norm() {
        let plant = DynamicsParameter::new(DMatrix::identity(2, 2) * 2.0, DMatrix::zeros(2, 1)).unwrap();
        let gain = DMatrix::zeros(1, 2);
        let mut state = ExtendedState::from_vector(&DVector::from_vec(vec![1.0, 0.0]));
        let ext = run_episode(&plant, &gain, &mut state, 2, &mut ZeroNoise, 1.0, StateCap::default_extended()).unwrap();
        assert_eq!(ext.estimate.regressor_rank, 1);
        assert!((ext.estimate.d_hat[(0, 0)] - 2.0).abs() < 1e-12);
        assert_eq!(ext.estimate.d_hat.column(1).amax(), 0.0);
    }
}
