//! Convergence of the wave solver against a standing-wave solution.

use wave_esc::verify::{wave_energy_drift, wave_oracle_error};

fn main() -> wave_esc::Result<()> {
    let mut prev: Option<f64> = None;
    for nodes in [51, 101, 201, 401] {
        let e = wave_oracle_error(7.5, nodes, 10.0)?;
        match prev {
            Some(p) => println!("N = {nodes:4}  error {e:.3e}  ratio {:.3}", p / e),
            None => println!("N = {nodes:4}  error {e:.3e}"),
        }
        prev = Some(e);
    }
    println!("undriven energy drift over 10 time units: {:.2e}", wave_energy_drift(201, 10.0)?);
    Ok(())
}
