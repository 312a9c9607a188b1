use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::linalg::operator_norm;
use crate::riccati::{closed_loop_radius, solve_dare, CostPair, SolverOptions};
use crate::system::DynamicsParameter;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterRecord {
    pub perturbation_norm: f64,
    /// `+∞` when the Riccati iteration for the perturbed parameter diverged.
    pub closed_loop_radius: f64,
}

/// Closed-loop spectral radius of the true plant under `L(θ₀ + εU)` for
/// `n_samples` random directions `U` with `‖U‖₂ = 1`, at every `ε` in `radii`.
pub fn lemma1_scatter(
    plant: &DynamicsParameter,
    costs: &CostPair,
    n_samples: usize,
    radii: &[f64],
    seed: u64,
) -> Result<Vec<ScatterRecord>> {
    let theta0 = plant.joined();
    let (p, q) = theta0.shape();
    let opts = SolverOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n_samples * radii.len());
    for &eps in radii {
        for _ in 0..n_samples {
            let direction = loop {
                let g = DMatrix::from_fn(p, q, |_, _| rng.sample::<f64, _>(StandardNormal));
                let norm = operator_norm(&g);
                if norm > 0.0 {
                    break g / norm;
                }
            };
            let theta = DynamicsParameter::from_joined(&(&theta0 + direction * eps))?;
            let radius = match solve_dare(&theta, costs, &opts) {
                Ok(sol) => closed_loop_radius(plant, &sol.gain)?,
                Err(_) => f64::INFINITY,
            };
            records.push(ScatterRecord {
                perturbation_norm: eps,
                closed_loop_radius: radius,
            });
        }
    }
    Ok(records)
}
