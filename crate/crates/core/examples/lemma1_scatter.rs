//! Closed-loop radius under gains designed from perturbed parameters.

use randstab::harness::lemma1_scatter;
use randstab::preset_benchmark;

fn main() -> randstab::Result<()> {
    let (plant, costs) = preset_benchmark();
    let radii = [0.0, 0.01, 0.1, 0.3, 1.0, 3.0];
    let records = lemma1_scatter(&plant, &costs, 500, &radii, 1)?;
    for (eps, chunk) in radii.iter().zip(records.chunks(500)) {
        let worst = chunk.iter().map(|r| r.closed_loop_radius).fold(0.0, f64::max);
        let unstable = chunk.iter().filter(|r| r.closed_loop_radius >= 1.0).count();
        println!("eps = {eps:<5} worst rho = {worst:<8.4} destabilized {unstable}/500");
    }
    Ok(())
}
