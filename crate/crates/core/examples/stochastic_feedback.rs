//! One stochastic-feedback run, then the certainty-equivalent gain.

use randstab::{
    closed_loop_radius, estimation_error, preset_benchmark, run_sf, solve_dare, AlgoConfig,
    Algorithm, NoiseModel, RunSeeds,
};

fn main() -> randstab::Result<()> {
    let (plant, costs) = preset_benchmark();
    let cfg = AlgoConfig::new(Algorithm::StochasticFeedback, 3200, 4, 1.0);
    let res = run_sf(&plant, &NoiseModel::standard(3), &cfg, &RunSeeds::new(2024))?;
    println!("peak log10 |x| = {:.0}", res.peak_log10_state_norm);
    let Some(theta_hat) = res.theta_hat else {
        println!("state exceeded the cap; no estimate");
        return Ok(());
    };
    println!("|theta_hat - theta0| = {:.4}", estimation_error(&theta_hat, &plant)?);
    let gain = solve_dare(&theta_hat, &costs, &Default::default())?.gain;
    println!("rho(A0 + B0 L(theta_hat)) = {:.4}", closed_loop_radius(&plant, &gain)?);
    Ok(())
}
