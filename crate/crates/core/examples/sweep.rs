//! Amplitude sweep showing the quadratic scaling of the output bound.

use wave_esc::config::ConfigEntries;
use wave_esc::sweep::{run_sweep, sweep_csv, worker_count, SweepAxis};

fn main() -> wave_esc::Result<()> {
    let axes: Vec<SweepAxis> = vec!["probe.amplitude=0.05,0.1,0.2,0.4".parse()?];
    let points = run_sweep(&ConfigEntries::default(), &axes, None, worker_count())?;
    print!("{}", sweep_csv(&axes, &points));

    let sups: Vec<f64> = points.iter().filter_map(|p| p.bounds.as_ref().ok()).map(|b| b.sup_output).collect();
    for w in sups.windows(2) {
        println!("doubling a: x{:.3}", w[1] / w[0]);
    }
    Ok(())
}
