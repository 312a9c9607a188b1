//! Scalar plant `x⁺ = 2x + u` with unit costs, checked against the closed form.

use nalgebra::DMatrix;
use randstab::{solve_dare, CostPair, DynamicsParameter, SolverOptions};

fn main() -> randstab::Result<()> {
    let plant = DynamicsParameter::new(DMatrix::from_element(1, 1, 2.0), DMatrix::from_element(1, 1, 1.0))?;
    let sol = solve_dare(&plant, &CostPair::identity(1, 1), &SolverOptions::default())?;
    let k = sol.k[(0, 0)];
    let closed = 2.0 + sol.gain[(0, 0)];
    println!("K = {k:.12} (2 + sqrt 5 = {:.12})", 2.0 + 5f64.sqrt());
    println!("a + bL = {closed:.12} ((3 - sqrt 5)/2 = {:.12})", (3.0 - 5f64.sqrt()) / 2.0);
    Ok(())
}
