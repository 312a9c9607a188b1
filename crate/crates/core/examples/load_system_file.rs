//! Loads a plant from JSON and designs its optimal gain.

use randstab::{closed_loop_radius, solve_dare, SystemDescription};

const SYSTEM: &str = r#"{
  "p": 2,
  "r": 1,
  "A": [[1.2, 0.5], [0.0, 0.9]],
  "B": [[0.0], [1.0]],
  "Q": [[1.0, 0.0], [0.0, 1.0]],
  "R": [[0.5]]
}"#;

fn main() -> randstab::Result<()> {
    let desc = SystemDescription::from_json_str(SYSTEM)?;
    let costs = desc.costs_or_identity();
    let sol = solve_dare(&desc.plant, &costs, &Default::default())?;
    println!("L = {:.4}", sol.gain);
    println!("rho = {:.4}", closed_loop_radius(&desc.plant, &sol.gain)?);
    Ok(())
}
