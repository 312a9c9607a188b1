//! Riccati solution and optimal gain for the benchmark plant.

use randstab::{closed_loop_radius, preset_benchmark, solve_dare, SolverOptions};

fn main() -> randstab::Result<()> {
    let (plant, costs) = preset_benchmark();
    let sol = solve_dare(&plant, &costs, &SolverOptions::default())?;
    println!("K = {:.4}", sol.k);
    println!("L = {:.4}", sol.gain);
    println!("converged in {} iterations, residual {:.2e}", sol.iterations, sol.residual);
    println!("rho(A0 + B0 L) = {:.4}", closed_loop_radius(&plant, &sol.gain)?);
    Ok(())
}
