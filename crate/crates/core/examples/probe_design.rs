//! Builds the boundary probe for a given frequency and prints the spatial
//! profile of the reference trajectory at a quarter period.

use wave_esc::probing::{beta, check_frequency, ProbeDesign};

fn main() -> wave_esc::Result<()> {
    let omega: f64 = std::env::args().nth(1).map_or(Ok(7.5), |s| s.parse()).expect("frequency");
    let verdict = check_frequency(omega, 1.0)?;
    let probe = ProbeDesign::new(0.1, omega, 1.0)?;
    println!("omega = {omega}, |cot(omega D)| = {:.4}", verdict.cot_magnitude);
    println!("boundary amplitude A = {:.5}, period = {:.5}", probe.coefficient(), probe.period());

    let t = probe.period() / 4.0;
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        println!("{x:4.1} {:+.6}", beta(&probe, x, t)?);
    }
    Ok(())
}
