//! Property battery behind `wave-esc verify`.
//!
//! Each group returns a list of [`Check`]s. The oracle functions are public
//! so tests and examples can reuse them with other parameters.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::backstepping::{gain_g, gain_g_prime, kernel_gamma, BacksteppingGains};
use crate::error::{Error, Result};
use crate::probing::{beta, beta_series, beta_x, perturbation_s, ProbeDesign};
use crate::simulation::{
    averaging_oracle, fit_exponential, run_average_system, AverageConfig, AverageInitial, SimConfig,
};
use crate::static_map::MapParams;
use crate::wave_field::{discrete_energy, init_field, spatial_integral, Grid, WaveField};

/// One line of the verification table.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `<= 1e-6`.
    pub rule: String,
    pub passed: bool,
}

impl Check {
    pub fn at_most(group: &'static str, name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self { group, name: name.into(), value, rule: format!("<= {limit:e}"), passed: value <= limit }
    }

    pub fn within(group: &'static str, name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { group, name: name.into(), value, rule: format!("in [{lo}, {hi}]"), passed: (lo..=hi).contains(&value) }
    }

    pub fn positive(group: &'static str, name: impl Into<String>, value: f64) -> Self {
        Self { group, name: name.into(), value, rule: "> 0".into(), passed: value > 0.0 }
    }

    pub fn holds(group: &'static str, name: impl Into<String>, ok: bool) -> Self {
        Self { group, name: name.into(), value: f64::from(u8::from(ok)), rule: "holds".into(), passed: ok }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<5} {:<10} {:<52} {:>12.4e}  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.group,
            self.name,
            self.value,
            self.rule
        )
    }
}

/// Names accepted by [`run_battery`].
pub const GROUPS: &[&str] = &["kernels", "trajectory", "wave", "averaging", "average-system"];

/// Runs the named groups (all of them when `groups` is empty).
pub fn run_battery(config: &SimConfig, groups: &[String]) -> Result<Vec<Check>> {
    for g in groups {
        if !GROUPS.contains(&g.as_str()) {
            return Err(Error::config(format!("unknown verify group {g:?}; expected one of {}", GROUPS.join(", "))));
        }
    }
    let wanted = |name: &str| groups.is_empty() || groups.iter().any(|g| g == name);
    let mut checks = Vec::new();
    if wanted("kernels") {
        checks.extend(kernel_checks(&config.ideal_gains()?)?);
    }
    if wanted("trajectory") {
        checks.extend(trajectory_checks(&config.probe)?);
    }
    if wanted("wave") {
        checks.extend(wave_checks(config.probe.frequency())?);
    }
    if wanted("averaging") {
        checks.extend(averaging_checks(&config.map, &config.probe)?);
    }
    if wanted("average-system") {
        checks.extend(average_system_checks(config)?);
    }
    Ok(checks)
}

/// Residuals of the `g` and `γ` boundary value problems and the guard cases.
pub fn kernel_checks(gains: &BacksteppingGains) -> Result<Vec<Check>> {
    const G: &str = "kernels";
    let d = gains.domain_length();
    let kb = gains.effective_gain();
    let lambda = gains.lambda();
    let mut out = Vec::new();

    out.push(Check::holds(G, "g(D) = 0", gain_g(d, d) == 0.0));
    out.push(Check::holds(G, "g'(0) = 0", gain_g_prime(0.0, d) == 0.0));
    let h = d / 8.0;
    let g_dd = (1..8)
        .map(|k| {
            let y = k as f64 * h;
            ((gain_g(y + h, d) - 2.0 * gain_g(y, d) + gain_g(y - h, d)) / (h * h) + 1.0).abs()
        })
        .fold(0.0, f64::max);
    out.push(Check::at_most(G, "g'' + 1 (central difference)", g_dd, 0.0));

    out.push(Check::holds(G, "gamma(D) = Kbar", kernel_gamma(gains, d)? == kb));
    let h = 1e-6;
    let slope0 = (kernel_gamma(gains, h)? - kernel_gamma(gains, -h)?) / (2.0 * h);
    let bc0 = (slope0 + gains.c0() * lambda * kernel_gamma(gains, 0.0)?).abs();
    out.push(Check::at_most(G, "gamma'(0) + c0 lambda gamma(0)", bc0, 1e-6 * kb.abs()));

    out.push(Check::at_most(
        G,
        "gamma'' - lambda^2 gamma (50 random x, h = 1e-3)",
        kernel_ode_residual(gains, 1e-3, 50, 51)?,
        1e-6 * kb.abs(),
    ));

    // c0 = 2 gives r = -3 and the excluded rate ln(3)/(2D)
    let excluded = 3f64.ln() / (2.0 * d);
    let lam_guard = matches!(BacksteppingGains::new(2.0, 1.0, -excluded / d, d), Err(Error::LambdaCondition { .. }));
    out.push(Check::holds(G, "lambda condition rejects the excluded rate", lam_guard));
    let singular = BacksteppingGains::unchecked(2.0, 1.0, -excluded / d, d);
    let sing_guard = matches!(kernel_gamma(&singular, 0.5 * d), Err(Error::KernelSingularity { .. }));
    out.push(Check::holds(G, "kernel singularity guard", sing_guard));
    out.push(Check::holds(
        G,
        &format!("lambda condition vacuous for c0 = {} < 1", gains.c0()),
        gains.c0() > 1.0 || gains.excluded_lambda().is_none(),
    ));
    Ok(out)
}

/// Largest `|Δₓₓγ − λ²γ|` at `points` random interior `x` with step `h`.
///
/// In double precision the probe is floored near `4·ulp(γ)/h²` by rounding
/// of the `γ` samples, about `1e-6` at `h = 1e-5` for the default gains.
pub fn kernel_ode_residual(gains: &BacksteppingGains, h: f64, points: usize, seed: u64) -> Result<f64> {
    let d = gains.domain_length();
    let lambda = gains.lambda();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = rng.gen_range(h..d - h);
        let dd = (kernel_gamma(gains, x + h)? - 2.0 * kernel_gamma(gains, x)? + kernel_gamma(gains, x - h)?) / (h * h);
        worst = worst.max((dd - lambda * lambda * kernel_gamma(gains, x)?).abs());
    }
    Ok(worst)
}

/// `sup_t |∫β − a sin ωt|` over two periods on an `nodes`-point grid.
pub fn trajectory_integral_error(probe: &ProbeDesign, nodes: usize) -> Result<f64> {
    let grid = Grid::new(probe.domain_length(), nodes)?;
    let samples = 2000;
    let mut worst = 0.0f64;
    for k in 0..=samples {
        let t = 2.0 * probe.period() * k as f64 / samples as f64;
        let field = grid.sample(|x| beta(probe, x, t).expect("x on grid"));
        let err = spatial_integral(&field, &grid)? - probe.amplitude() * (probe.frequency() * t).sin();
        worst = worst.max(err.abs());
    }
    Ok(worst)
}

/// Largest `|Δₜₜβ − Δₓₓβ|` over random interior points, step `h` in both variables.
pub fn trajectory_wave_residual(probe: &ProbeDesign, points: usize, h: f64, seed: u64) -> Result<f64> {
    let d = probe.domain_length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = rng.gen_range(h..d - h);
        let t = rng.gen_range(h..4.0 * probe.period());
        let b = beta(probe, x, t)?;
        let btt = (beta(probe, x, t + h)? - 2.0 * b + beta(probe, x, t - h)?) / (h * h);
        let bxx = (beta(probe, x + h, t)? - 2.0 * b + beta(probe, x - h, t)?) / (h * h);
        worst = worst.max((btt - bxx).abs());
    }
    Ok(worst)
}

/// Largest gap between the closed form and the truncated series.
pub fn trajectory_series_gap(probe: &ProbeDesign, terms: usize, points: usize, seed: u64) -> Result<f64> {
    let d = probe.domain_length();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..points {
        let x = rng.gen_range(0.0..=d);
        let t = rng.gen_range(0.0..probe.period());
        worst = worst.max((beta(probe, x, t)? - beta_series(probe, x, t, terms)?).abs());
    }
    Ok(worst)
}

pub fn trajectory_checks(probe: &ProbeDesign) -> Result<Vec<Check>> {
    const G: &str = "trajectory";
    let d = probe.domain_length();
    let mut out = vec![
        Check::at_most(G, "sup |trapz int beta - a sin wt|, N = 1001", trajectory_integral_error(probe, 1001)?, 1e-4),
        Check::at_most(G, "wave residual of beta, 100 random points", trajectory_wave_residual(probe, 100, 1e-3, 11)?, 1e-5),
        Check::at_most(G, "20-term series vs closed form", trajectory_series_gap(probe, 20, 200, 13)?, 1e-10),
    ];
    let mut neumann = 0.0f64;
    let mut dirichlet = 0.0f64;
    for k in 0..100 {
        let t = probe.period() * k as f64 / 100.0;
        neumann = neumann.max(beta_x(probe, 0.0, t)?.abs());
        dirichlet = dirichlet.max((beta(probe, d, t)? - perturbation_s(probe, t)).abs());
    }
    out.push(Check::at_most(G, "beta_x(0, t)", neumann, 0.0));
    out.push(Check::at_most(G, "beta(D, t) - S(t)", dirichlet, 1e-15));
    Ok(out)
}

/// L∞ error at `t_end` of the scheme against `cos(ωx) sin(ωt)` on `[0, 1]`
/// with `Δt = Δx/2`, driven through `α(1, t) = cos(ω) sin(ωt)`.
pub fn wave_oracle_error(omega: f64, nodes: usize, t_end: f64) -> Result<f64> {
    let grid = Grid::new(1.0, nodes)?;
    let dt = 0.5 * grid.spacing();
    let mut field = init_field(&grid, vec![0.0; nodes], grid.sample(|x| omega * (omega * x).cos()))?;
    let steps = (t_end / dt).round() as u64;
    for n in 1..=steps {
        let t = n as f64 * dt;
        field.advance(&grid, omega.cos() * (omega * t).sin(), dt)?;
    }
    let t = steps as f64 * dt;
    Ok((0..nodes)
        .map(|i| (field.displacement()[i] - (omega * grid.x(i)).cos() * (omega * t).sin()).abs())
        .fold(0.0, f64::max))
}

/// Relative energy drift `max |E(t) − E(0)| / E(0)` of the undriven scheme
/// (`α(1, t) = 0`) started from the first mode `cos(πx/2)`.
pub fn wave_energy_drift(nodes: usize, t_end: f64) -> Result<f64> {
    let grid = Grid::new(1.0, nodes)?;
    let dt = 0.5 * grid.spacing();
    let mut field = init_field(&grid, grid.sample(|x| (0.5 * PI * x).cos()), vec![0.0; nodes])?;
    let e0 = discrete_energy(&field, &grid);
    let steps = (t_end / dt).round() as u64;
    let mut worst = 0.0f64;
    for _ in 0..steps {
        field.advance(&grid, 0.0, dt)?;
        worst = worst.max((discrete_energy(&field, &grid) - e0).abs() / e0);
    }
    Ok(worst)
}

pub fn wave_checks(omega: f64) -> Result<Vec<Check>> {
    const G: &str = "wave";
    let coarse = wave_oracle_error(omega, 201, 10.0)?;
    let fine = wave_oracle_error(omega, 401, 10.0)?;
    Ok(vec![
        Check::at_most(G, "driven oracle L-inf error, t = 10, N = 201", coarse, 1e-3),
        Check::within(G, "error ratio under dx halving (201 -> 401)", coarse / fine, 3.5, 4.5),
        Check::at_most(G, "undriven energy drift over 10 time units", wave_energy_drift(201, 10.0)?, 1e-3),
        Check::holds(G, "zero state stays at rest", {
            let g = Grid::new(1.0, 21)?;
            let f = WaveField::zeros(&g).step(&g, 0.0, 0.5 * g.spacing())?;
            f.displacement().iter().chain(f.velocity()).all(|v| *v == 0.0)
        }),
    ])
}

/// Period means of `Ĝ = M y` and `Ĥ = N y` with `ϑ` frozen and the probe
/// entering the map directly: `Θ = Θ* + ϑ + a sin ωt`.
pub fn frozen_period_means(map: &MapParams, probe: &ProbeDesign, vartheta: f64, samples: usize) -> Result<(f64, f64)> {
    let a = probe.amplitude();
    let w = probe.frequency();
    let period = probe.period();
    let mut t = Vec::with_capacity(samples + 1);
    let mut g = Vec::with_capacity(samples + 1);
    let mut h = Vec::with_capacity(samples + 1);
    for k in 0..=samples {
        let tk = period * k as f64 / samples as f64;
        let y = map.eval_normalized(map.optimizer() + vartheta + a * (w * tk).sin());
        t.push(tk);
        g.push(crate::probing::demod_m(a, w, tk)? * y);
        h.push(crate::probing::demod_n(a, w, tk)? * y);
    }
    Ok((averaging_oracle(&t, &g, w)?, averaging_oracle(&t, &h, w)?))
}

pub fn averaging_checks(map: &MapParams, probe: &ProbeDesign) -> Result<Vec<Check>> {
    const G: &str = "averaging";
    let mut out = Vec::new();
    for vt in [-0.5, 0.0, 0.3] {
        let (gm, hm) = frozen_period_means(map, probe, vt, 1000)?;
        out.push(Check::at_most(G, format!("mean G_hat - H vartheta, vartheta = {vt}"), (gm - map.hessian() * vt).abs(), 1e-6));
        out.push(Check::at_most(G, format!("mean H_hat - H, vartheta = {vt}"), (hm - map.hessian()).abs(), 1e-6));
    }
    Ok(out)
}

pub fn average_system_checks(config: &SimConfig) -> Result<Vec<Check>> {
    const G: &str = "average";
    let avg = AverageConfig::from_sim(config, 20.0)?;
    let trace = run_average_system(&avg, &AverageInitial::uniform(1.0, &avg.grid))?;
    let (_, rho) = fit_exponential(&trace.t, &trace.omega)?;
    Ok(vec![
        Check::at_most(G, "Z(t) vs Z(0) exp(-lambda t), lambda t <= 2", trace.z_decay_error(2.0), 0.02),
        Check::positive(G, "fitted decay rate of Omega", rho),
    ])
}
