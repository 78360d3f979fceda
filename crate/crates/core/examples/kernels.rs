//! Backstepping gain and kernel profiles, and the transformation applied to
//! a sample state.

use wave_esc::backstepping::{gain_g, kernel_profile, lyapunov_v, transform_w, transform_w_t, transform_z};
use wave_esc::simulation::SimConfig;

fn main() -> wave_esc::Result<()> {
    let cfg = SimConfig::default();
    let gains = cfg.ideal_gains()?;
    let grid = cfg.grid;
    println!("Kbar = {}, lambda = {}, r = {}", gains.effective_gain(), gains.lambda(), gains.ratio());

    let gamma = kernel_profile(&gains, &grid)?;
    for i in (0..grid.nodes()).step_by(grid.nodes() / 10) {
        let x = grid.x(i);
        println!("{x:4.2}  g {:.5}  gamma {:+.6}", gain_g(x, 1.0), gamma[i]);
    }

    let u = grid.sample(|x| 0.1 * (1.0 - x * x));
    let u_t = grid.sample(|x| 0.05 * x);
    let z = transform_z(0.2, &u, &u_t, &grid, &gains)?;
    let w = transform_w(&u, &u_t, z, &grid, &gains)?;
    let w_t = transform_w_t(&u, &u_t, &grid, &gains)?;
    println!("Z = {z:.6}, w(D) = {:.6}, V = {:.6}", w[w.len() - 1], lyapunov_v(z, &w, &w_t, &grid, &cfg.lyapunov)?);
    Ok(())
}
