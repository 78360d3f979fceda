//! Runs the property battery on the default configuration.

use wave_esc::simulation::SimConfig;
use wave_esc::verify::{run_battery, GROUPS};

fn main() -> wave_esc::Result<()> {
    let groups: Vec<String> = std::env::args().skip(1).collect();
    let checks = run_battery(&SimConfig::default(), &groups)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks over {:?}, {failed} failed", checks.len(), if groups.is_empty() { GROUPS.to_vec() } else { groups.iter().map(String::as_str).collect() });
    Ok(())
}
