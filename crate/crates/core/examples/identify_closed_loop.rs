//! Recovers `[A₀, B₀]` from three closed-loop episodes with known gains.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use randstab::{
    closed_loop_ls, closed_loop_radius, draw_feedback, estimation_error, preset_benchmark,
    recover_theta, simulate_episode, solve_dare, GainBasis, NoiseModel,
};

fn main() -> randstab::Result<()> {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Perturbations of the optimal gain keep every episode stable.
    let optimal = solve_dare(&plant, &costs, &Default::default())?.gain;
    let gains: Vec<DMatrix<f64>> = (0..3).map(|_| &optimal + draw_feedback(&mut rng, 0.2, 3, 3)).collect();
    let mut estimates = Vec::new();
    for gain in &gains {
        let log = simulate_episode(&plant, gain, &DVector::zeros(3), 2000, &mut noise.stream(&mut rng), 1e100)?;
        let est = closed_loop_ls(&log)?;
        let truth = plant.closed_loop(gain)?;
        println!(
            "rho = {:.3}, |D_hat - D| = {:.3}, rank {} over {} samples",
            closed_loop_radius(&plant, gain)?,
            (&est.d_hat - truth).norm(),
            est.regressor_rank,
            est.sample_count
        );
        estimates.push(est);
    }
    let theta_hat = recover_theta(&estimates, &GainBasis::from_gains(&gains)?)?;
    println!("|theta_hat - theta0| = {:.2e}", estimation_error(&theta_hat, &plant)?);
    Ok(())
}
