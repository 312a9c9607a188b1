//! One stochastic-parameter run, in both arithmetic modes.

use randstab::{
    closed_loop_radius, estimation_error, preset_benchmark, run_sp, solve_dare, AlgoConfig,
    Algorithm, Arithmetic, NoiseModel, RunSeeds,
};

fn main() -> randstab::Result<()> {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    for arithmetic in [Arithmetic::Extended, Arithmetic::Double] {
        let cfg = AlgoConfig::new(Algorithm::StochasticParameter, 1600, 4, 1.0).with_arithmetic(arithmetic);
        let res = run_sp(&plant, &noise, &costs, &cfg, &RunSeeds::new(11))?;
        print!("{arithmetic:?}: {} redraws, peak log10 |x| = {:.0}", res.redraw_count, res.peak_log10_state_norm);
        match res.theta_hat {
            Some(theta_hat) => {
                let gain = solve_dare(&theta_hat, &costs, &Default::default())?.gain;
                println!(
                    ", error {:.4}, rho {:.4}",
                    estimation_error(&theta_hat, &plant)?,
                    closed_loop_radius(&plant, &gain)?
                );
            }
            None => println!(", overflowed after {} episodes", res.episode_estimates.len()),
        }
    }
    Ok(())
}
