//! Default closed loop; pass a directory to also write the run files.

use std::path::PathBuf;
use std::time::Instant;

use wave_esc::io::write_run;
use wave_esc::simulation::{consistency_report, run_closed_loop, ultimate_bounds_report, SimConfig};

fn main() -> wave_esc::Result<()> {
    let cfg = SimConfig::default();
    let start = Instant::now();
    let trace = run_closed_loop(&cfg)?;
    println!("{} rows in {:.2?}", trace.len(), start.elapsed());

    for k in (0..trace.len()).step_by(trace.len() / 10) {
        println!("t {:6.1}  y {:.5}  Theta {:.5}  theta_hat {:.5}", trace.t[k], trace.y[k], trace.input[k], trace.theta_hat[k]);
    }
    let b = ultimate_bounds_report(&trace, &cfg)?;
    println!("final 10%: sup|y-y*| {:.3e}  sup|Theta-Theta*| {:.3e}  sup|theta-Theta*| {:.3e}", b.sup_output, b.sup_input, b.sup_theta);
    let c = consistency_report(&trace, &cfg.grid);
    println!("vartheta route gap {:.3e}, flux route gap {:.3e}", c.vartheta_gap, c.flux_gap);

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        write_run(&trace, &cfg, &dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
