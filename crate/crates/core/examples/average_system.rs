//! Averaged closed loop from a uniform and from a compatible initial state.

use wave_esc::simulation::{fit_exponential, run_average_system, AverageConfig, AverageInitial, SimConfig};

fn main() -> wave_esc::Result<()> {
    let cfg = AverageConfig::from_sim(&SimConfig::default(), 20.0)?;
    for (name, init) in [
        ("uniform", AverageInitial::uniform(1.0, &cfg.grid)),
        ("compatible", AverageInitial::compatible(1.0, &cfg.grid, &cfg.gains)),
    ] {
        let tr = run_average_system(&cfg, &init)?;
        let (kappa, rho) = fit_exponential(&tr.t, &tr.omega)?;
        println!("{name}:");
        println!("  Z error vs exp(-lambda t): {:.3e}", tr.z_decay_error(2.0));
        println!("  Omega ~ {kappa:.3} exp(-{rho:.3} t)");
        println!("  largest relative V increase: {:+.3e}", tr.max_lyapunov_increase(0.01));
        println!("  vartheta(T) = {:+.3e}", tr.vartheta[tr.vartheta.len() - 1]);
    }
    Ok(())
}
