//! Simulates the benchmark plant under its optimal gain and under no control.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use randstab::{preset_benchmark, simulate_episode, solve_dare, NoiseModel};

fn main() -> randstab::Result<()> {
    let (plant, costs) = preset_benchmark();
    let noise = NoiseModel::standard(3);
    let optimal = solve_dare(&plant, &costs, &Default::default())?.gain;

    for (name, gain) in [("optimal", optimal), ("open loop", DMatrix::zeros(3, 3))] {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let log = simulate_episode(&plant, &gain, &DVector::zeros(3), 200, &mut noise.stream(&mut rng), 1e100)?;
        let norms: Vec<String> = log.states.iter().step_by(50).map(|x| format!("{:.3e}", x.norm())).collect();
        println!("{name:>9}: |x(t)| at t = 0, 50, 100, 150, 200: {}", norms.join(", "));
    }
    Ok(())
}
