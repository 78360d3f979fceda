//! Closed-loop and average-system simulation.

use std::f64::consts::PI;

use sha2::{Digest, Sha256};

use crate::backstepping::{
    kernel_profile, lyapunov_v, omega_norm, transform_w_t_with, transform_w_with, transform_z, BacksteppingGains,
    LyapunovConfig, ResidualReport, TargetResiduals, TargetSnapshot,
};
use crate::controller::{
    average_control_with_flux, boundary_input, filtered_control_step, ControllerSettings, ControllerState, FluxRoute,
    Measurements,
};
use crate::error::{Error, Result};
use crate::probing::{beta, beta_t, spatial_profile, ProbeDesign};
use crate::static_map::MapParams;
use crate::wave_field::{
    boundary_slope, init_field, second_difference, spatial_integral, trapezoid, End, Grid, WaveField,
};

/// Magnitude above which a run is declared blown up.
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// Plant state at `t = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialState {
    /// `α = θ̂₀ + β(·, 0)`, `∂ₜα = ∂ₜβ(·, 0)`: the error fields start at zero.
    #[default]
    Trajectory,
    /// `α ≡ θ̂₀`, `∂ₜα ≡ 0`.
    Rest,
}

impl std::str::FromStr for InitialState {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "trajectory" => Ok(InitialState::Trajectory),
            "rest" => Ok(InitialState::Rest),
            other => Err(format!("expected trajectory|rest, got {other:?}")),
        }
    }
}

impl std::fmt::Display for InitialState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            InitialState::Trajectory => "trajectory",
            InitialState::Rest => "rest",
        })
    }
}

/// Everything a closed-loop run needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub map: MapParams,
    pub grid: Grid,
    pub probe: ProbeDesign,
    pub controller: ControllerSettings,
    pub lyapunov: LyapunovConfig,
    pub dt: f64,
    pub horizon: f64,
    pub stride: usize,
    pub initial: InitialState,
}

impl Default for SimConfig {
    fn default() -> Self {
        let grid = Grid::new(1.0, 101).expect("default grid");
        Self {
            map: MapParams::new(-2.0, 2.0, 5.0).expect("default map"),
            dt: 0.5 * grid.spacing(),
            grid,
            probe: ProbeDesign::new(0.1, 7.5, 1.0).expect("default probe"),
            controller: ControllerSettings::default(),
            lyapunov: LyapunovConfig::default(),
            horizon: 100.0,
            stride: 10,
            initial: InitialState::Trajectory,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.controller.validate()?;
        let dx = self.grid.spacing();
        if !(self.dt > 0.0 && self.dt <= dx * (1.0 + 1e-12)) {
            return Err(Error::Cfl { dt: self.dt, dx });
        }
        if (self.probe.domain_length() - self.grid.domain_length()).abs() > 1e-12 {
            return Err(Error::Validation("probe and grid disagree on the domain length".into()));
        }
        if !(self.horizon >= 10.0 * self.probe.period() * (1.0 - 1e-12)) {
            return Err(Error::Validation(format!(
                "horizon {} is shorter than 10 probe periods ({})",
                self.horizon,
                10.0 * self.probe.period()
            )));
        }
        if self.stride == 0 {
            return Err(Error::Validation("record stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.horizon / self.dt).round() as u64
    }

    /// Gains of the ideal system, used for the `Z`, `w`, `V` diagnostics.
    pub fn ideal_gains(&self) -> Result<BacksteppingGains> {
        let c = &self.controller;
        if c.gain > 0.0 {
            BacksteppingGains::ideal(c.c0, c.gain, self.map.hessian(), self.grid.domain_length())
        } else {
            Ok(BacksteppingGains::unchecked(c.c0, 0.0, 0.0, self.grid.domain_length()))
        }
    }

    /// Canonical `key = value` listing, one line per setting.
    pub fn canonical(&self) -> String {
        let c = &self.controller;
        let entries: [(&str, String); 19] = [
            ("control.c0", fmt_real(c.c0)),
            ("control.filter_c", fmt_real(c.filter_c)),
            ("control.flux", c.flux.to_string()),
            ("control.gain_K", fmt_real(c.gain)),
            ("control.hessian_filter", fmt_real(c.hessian_filter)),
            ("control.theta_hat0", fmt_real(c.theta_hat0)),
            ("control.washout", fmt_real(c.washout)),
            ("grid.domain_length", fmt_real(self.grid.domain_length())),
            ("grid.nodes", self.grid.nodes().to_string()),
            ("lyapunov.delta", fmt_real(self.lyapunov.delta)),
            ("map.hessian", fmt_real(self.map.user_hessian())),
            ("map.optimizer", fmt_real(self.map.optimizer())),
            ("map.optimum", fmt_real(self.map.optimum())),
            ("plant.initial", self.initial.to_string()),
            ("probe.amplitude", fmt_real(self.probe.amplitude())),
            ("probe.frequency", fmt_real(self.probe.frequency())),
            ("time.dt", fmt_real(self.dt)),
            ("time.horizon", fmt_real(self.horizon)),
            ("time.stride", self.stride.to_string()),
        ];
        entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// SHA-256 of [`SimConfig::canonical`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v:?}")
}

/// Recorded closed-loop trajectory.
///
/// The first ten columns form the `trace.csv` contract; the rest are
/// diagnostics for the consistency checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimTrace {
    pub t: Vec<f64>,
    pub y: Vec<f64>,
    /// Boundary actuation `θ = α(D)`.
    pub theta: Vec<f64>,
    /// Distributed input `Θ = ∫α`.
    pub input: Vec<f64>,
    pub control: Vec<f64>,
    pub gradient: Vec<f64>,
    pub hessian: Vec<f64>,
    /// `ϑ = ∫ᾱ − Θ*`.
    pub vartheta: Vec<f64>,
    pub omega: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// `Θ − a sin(ωt) − Θ*`, the second route to `ϑ`.
    pub vartheta_output: Vec<f64>,
    /// `∂ₓᾱ(D)`.
    pub flux_boundary: Vec<f64>,
    /// Trapezoid `∫∂ₜu`.
    pub flux_trapezoid: Vec<f64>,
    pub config_hash: String,
    pub steps: u64,
    pub stride: usize,
    pub dt: f64,
}

impl SimTrace {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// First record index inside the final `fraction` of the horizon.
    pub fn window_start(&self, fraction: f64) -> usize {
        let Some(&end) = self.t.last() else { return 0 };
        let from = end * (1.0 - fraction);
        self.t.iter().position(|&t| t >= from - 1e-12).unwrap_or(self.t.len())
    }
}

/// Error fields `ᾱ = α − β`, `u = ∂ₜᾱ`, `∂ₜu = ∂ₓₓᾱ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorFields {
    pub abar: Vec<f64>,
    pub u: Vec<f64>,
    pub u_t: Vec<f64>,
}

pub fn compute_error_fields(field: &WaveField, probe: &ProbeDesign, grid: &Grid) -> Result<ErrorFields> {
    let t = field.time();
    let mut abar = Vec::with_capacity(grid.nodes());
    let mut u = Vec::with_capacity(grid.nodes());
    for i in 0..grid.nodes() {
        let x = grid.x(i);
        abar.push(field.displacement()[i] - beta(probe, x, t)?);
        u.push(field.velocity()[i] - beta_t(probe, x, t)?);
    }
    let u_t = second_difference(&abar, grid)?;
    Ok(ErrorFields { abar, u, u_t })
}

fn initial_field(config: &SimConfig, profile: &[f64]) -> Result<WaveField> {
    let grid = &config.grid;
    let th0 = config.controller.theta_hat0;
    let velocity = match config.initial {
        InitialState::Trajectory => {
            let k = config.probe.coefficient() * config.probe.frequency();
            profile.iter().map(|c| k * c).collect()
        }
        InitialState::Rest => vec![0.0; grid.nodes()],
    };
    init_field(grid, vec![th0; grid.nodes()], velocity)
}

fn blowup(step: u64, time: f64, detail: String) -> Error {
    Error::NumericalBlowup { step, time, detail }
}

/// Runs plant, probe, demodulation and controller together.
///
/// Per step: `Θ = ∫α`, `y = Q(Θ)`, error fields, controller update,
/// `θ = θ̂ + S`, wave step. Records every `stride` steps including step 0
/// and the final one.
pub fn run_closed_loop(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let grid = config.grid;
    let probe = config.probe;
    let map = config.map;
    let oracle = map.oracle();
    let gains = config.ideal_gains()?;
    let gamma = kernel_profile(&gains, &grid)?;
    let dt = config.dt;
    let steps = config.steps();
    let n_nodes = grid.nodes();
    let a = probe.amplitude();
    let omega = probe.frequency();
    let coef = probe.coefficient();
    let profile = spatial_profile(&probe, &grid.positions());
    let optimizer = map.optimizer();

    let mut field = initial_field(config, &profile)?;
    let mut state = ControllerState::new(&config.controller);
    let mut trace = SimTrace {
        config_hash: config.hash(),
        steps,
        stride: config.stride,
        dt,
        ..SimTrace::default()
    };
    let mut abar = vec![0.0; n_nodes];
    let mut u = vec![0.0; n_nodes];

    for n in 0..=steps {
        let t = n as f64 * dt;
        let input = spatial_integral(field.displacement(), &grid)?;
        let y_measured = oracle.measure(input);
        let (s, c) = (omega * t).sin_cos();
        for i in 0..n_nodes {
            abar[i] = field.displacement()[i] - coef * profile[i] * s;
            u[i] = field.velocity()[i] - coef * omega * profile[i] * c;
        }
        let u_t = second_difference(&abar, &grid)?;
        let flux_boundary = boundary_slope(&abar, &grid, End::Right)?;
        let meas = Measurements { y: y_measured, input, u: &u, u_t: &u_t, boundary_flux: flux_boundary, time: t };
        let (next, terms) = filtered_control_step(&state, &meas, &probe, &config.controller, &grid, dt)
            .map_err(|e| match e {
                Error::ControllerBlowup { breakdown, .. } => Error::ControllerBlowup { step: n, breakdown },
                other => other,
            })?;
        for (name, v) in [("y", y_measured), ("U", next.output), ("theta_hat", next.theta_hat)] {
            if !(v.abs() <= BLOWUP_THRESHOLD) {
                return Err(blowup(n, t, format!("{name} = {v:e}")));
            }
        }

        if n % config.stride as u64 == 0 {
            let vartheta = trapezoid(&abar, grid.spacing()) - optimizer;
            let z = transform_z(vartheta, &u, &u_t, &grid, &gains)?;
            let w = transform_w_with(&u, &u_t, z, &grid, gains.c0(), &gamma)?;
            let w_t = transform_w_t_with(&u, &u_t, &grid, gains.c0(), &gamma)?;
            let v = lyapunov_v(z, &w, &w_t, &grid, &config.lyapunov)?;
            trace.t.push(t);
            trace.y.push(map.eval(input));
            trace.theta.push(field.boundary_value());
            trace.input.push(input);
            trace.control.push(next.output);
            trace.gradient.push(terms.gradient);
            trace.hessian.push(terms.hessian);
            trace.vartheta.push(vartheta);
            trace.omega.push(omega_norm(vartheta, &u, &u_t, &grid)?);
            trace.lyapunov.push(v);
            trace.theta_hat.push(state.theta_hat);
            trace.vartheta_output.push(input - a * s - optimizer);
            trace.flux_boundary.push(flux_boundary);
            trace.flux_trapezoid.push(spatial_integral(&u_t, &grid)?);
        }
        if n == steps {
            break;
        }
        state = next;
        let theta = boundary_input(&state, &probe, t + dt);
        field.advance(&grid, theta, dt)?;
    }
    Ok(trace)
}

/// Settings of the average-system run.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageConfig {
    pub grid: Grid,
    pub gains: BacksteppingGains,
    /// Map Hessian `H` (negative).
    pub hessian: f64,
    pub lyapunov: LyapunovConfig,
    pub dt: f64,
    pub horizon: f64,
    pub flux: FluxRoute,
}

impl AverageConfig {
    pub fn from_sim(config: &SimConfig, horizon: f64) -> Result<Self> {
        Ok(Self {
            grid: config.grid,
            gains: config.ideal_gains()?,
            hessian: config.map.hessian(),
            lyapunov: config.lyapunov,
            dt: config.dt,
            horizon,
            flux: config.controller.flux,
        })
    }

    pub fn with_nodes(&self, nodes: usize) -> Result<Self> {
        let grid = Grid::new(self.grid.domain_length(), nodes)?;
        let ratio = self.dt / self.grid.spacing();
        Ok(Self { grid, dt: ratio * grid.spacing(), ..self.clone() })
    }
}

/// Initial `(ᾱ, u)` of the average system. `ϑ = ∫ᾱ` and `θ̂ = ᾱ(D)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AverageInitial {
    pub abar: Vec<f64>,
    pub u: Vec<f64>,
}

impl AverageInitial {
    /// `ϑ(0) = vartheta` with `u ≡ 0` and `∂ₜu ≡ 0`.
    pub fn uniform(vartheta: f64, grid: &Grid) -> Self {
        let d = grid.domain_length();
        Self { abar: vec![vartheta / d; grid.nodes()], u: vec![0.0; grid.nodes()] }
    }

    /// `ϑ(0) = vartheta` with `u = b x²` chosen so that `u(D)` equals the
    /// ideal law at `t = 0`, which makes `w(D, 0) = 0`.
    pub fn compatible(vartheta: f64, grid: &Grid, gains: &BacksteppingGains) -> Self {
        let d = grid.domain_length();
        let kb = gains.effective_gain();
        let b = kb * vartheta / (d * d - kb * gains.c0() * d.powi(4) / 3.0);
        Self { abar: vec![vartheta / d; grid.nodes()], u: grid.sample(|x| b * x * x) }
    }
}

/// Average-system trajectory, recorded at every step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AverageTrace {
    pub t: Vec<f64>,
    pub vartheta: Vec<f64>,
    pub z: Vec<f64>,
    pub omega: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub control: Vec<f64>,
    pub residuals: ResidualReport,
    pub lambda: f64,
}

impl AverageTrace {
    /// `max |Z(t) / (Z(0) e^{−λt}) − 1|` over `λt ≤ horizon`.
    pub fn z_decay_error(&self, lambda_t_max: f64) -> f64 {
        let z0 = self.z[0];
        self.t
            .iter()
            .zip(&self.z)
            .filter(|(t, _)| self.lambda * **t <= lambda_t_max)
            .map(|(t, z)| (z / (z0 * (-self.lambda * t).exp()) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest relative one-step increase of `V` after skipping `skip_fraction` of the samples.
    pub fn max_lyapunov_increase(&self, skip_fraction: f64) -> f64 {
        let k0 = (self.lyapunov.len() as f64 * skip_fraction).floor() as usize;
        self.lyapunov[k0..]
            .windows(2)
            .map(|p| if p[0] > 0.0 { (p[1] - p[0]) / p[0] } else { p[1] - p[0] })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Simulates the average closed loop in the `ᾱ` formulation:
/// `ᾱₜₜ = ᾱₓₓ`, `∂ₓᾱ(0) = 0`, `ᾱ(D) = θ̂`, `θ̂̇ = U_av`.
///
/// `θ̂` is advanced with second-order Adams–Bashforth (Euler on the first step).
pub fn run_average_system(config: &AverageConfig, initial: &AverageInitial) -> Result<AverageTrace> {
    let grid = config.grid;
    let gains = &config.gains;
    let gamma = kernel_profile(gains, &grid)?;
    let dt = config.dt;
    let steps = (config.horizon / dt).round() as u64;
    let mut field = init_field(&grid, initial.abar.clone(), initial.u.clone())?;
    let mut theta_hat = field.boundary_value();
    let mut prev_control: Option<f64> = None;
    let mut residuals = TargetResiduals::new(grid, *gains);
    let mut trace = AverageTrace { lambda: gains.lambda(), ..AverageTrace::default() };

    for n in 0..=steps {
        let t = n as f64 * dt;
        let abar = field.displacement();
        let u = field.velocity();
        let u_t = second_difference(abar, &grid)?;
        let vartheta = spatial_integral(abar, &grid)?;
        let flux = match config.flux {
            FluxRoute::Boundary => boundary_slope(abar, &grid, End::Right)?,
            FluxRoute::Trapezoid => spatial_integral(&u_t, &grid)?,
        };
        let control = average_control_with_flux(vartheta, u, &u_t, flux, &grid, gains, config.hessian)?;
        let z = transform_z(vartheta, u, &u_t, &grid, gains)?;
        let w = transform_w_with(u, &u_t, z, &grid, gains.c0(), &gamma)?;
        let w_t = transform_w_t_with(u, &u_t, &grid, gains.c0(), &gamma)?;
        let v = lyapunov_v(z, &w, &w_t, &grid, &config.lyapunov)?;
        let om = omega_norm(vartheta, u, &u_t, &grid)?;
        if !(control.abs() <= BLOWUP_THRESHOLD && om <= BLOWUP_THRESHOLD) {
            return Err(blowup(n, t, format!("U = {control:e}, Omega = {om:e}")));
        }
        trace.t.push(t);
        trace.vartheta.push(vartheta);
        trace.z.push(z);
        trace.omega.push(om);
        trace.lyapunov.push(v);
        trace.control.push(control);
        residuals.push(TargetSnapshot { time: t, z, w })?;
        if n == steps {
            break;
        }
        let increment = match prev_control {
            Some(p) => 1.5 * control - 0.5 * p,
            None => control,
        };
        prev_control = Some(control);
        theta_hat += dt * increment;
        field.advance(&grid, theta_hat, dt)?;
    }
    trace.residuals = residuals.report();
    Ok(trace)
}

/// Least-squares fit of `ln v = ln κ − ρ t`; returns `(κ, ρ)`.
pub fn fit_exponential(t: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = t.iter().zip(v).filter(|(_, v)| **v > 0.0).map(|(t, v)| (*t, v.ln())).collect();
    if pts.len() < 2 {
        return Err(Error::Validation("exponential fit needs two positive samples".into()));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let slope = sxy / sxx;
    Ok(((ml - slope * mt).exp(), -slope))
}

/// Trapezoid mean over exactly one period `2π/ω` ending at the last sample.
/// Samples must be time-ordered; a partial first interval is interpolated.
pub fn averaging_oracle(times: &[f64], values: &[f64], omega: f64) -> Result<f64> {
    if times.len() != values.len() {
        return Err(Error::SizeMismatch { expected: times.len(), got: values.len() });
    }
    let period = 2.0 * PI / omega;
    let (Some(&end), Some(&first)) = (times.last(), times.first()) else {
        return Err(Error::Validation("no samples".into()));
    };
    let start = end - period;
    if first > start + 1e-9 * period {
        return Err(Error::Validation("samples span less than one period".into()));
    }
    let mut total = 0.0;
    for k in 1..times.len() {
        let (t0, t1) = (times[k - 1], times[k]);
        if t1 <= start {
            continue;
        }
        let (mut a, mut fa) = (t0, values[k - 1]);
        if t0 < start {
            let s = (start - t0) / (t1 - t0);
            fa += s * (values[k] - values[k - 1]);
            a = start;
        }
        total += 0.5 * (fa + values[k]) * (t1 - a);
    }
    Ok(total / period)
}

/// Sup-norm deviations over the final part of a run next to their
/// predicted scalings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub window_start: f64,
    pub sup_theta: f64,
    pub sup_input: f64,
    pub sup_output: f64,
    pub sup_vartheta: f64,
    /// `aω|cot(ωD)| + 1/ω`.
    pub envelope_theta: f64,
    /// `a + 1/ω`.
    pub envelope_input: f64,
    /// `a² + 1/ω²`.
    pub envelope_output: f64,
}

impl BoundsReport {
    pub fn c1(&self) -> f64 {
        self.sup_theta / self.envelope_theta
    }

    pub fn c2(&self) -> f64 {
        self.sup_input / self.envelope_input
    }

    pub fn c3(&self) -> f64 {
        self.sup_output / self.envelope_output
    }
}

/// Bounds over the final 10% of the horizon.
pub fn ultimate_bounds_report(trace: &SimTrace, config: &SimConfig) -> Result<BoundsReport> {
    if trace.is_empty() {
        return Err(Error::Validation("empty trace".into()));
    }
    let k0 = trace.window_start(0.1);
    let opt = config.map.optimizer();
    let sup = |v: &[f64], c: f64| v[k0..].iter().map(|x| (x - c).abs()).fold(0.0, f64::max);
    let a = config.probe.amplitude();
    let w = config.probe.frequency();
    let cot = ((w * config.probe.domain_length()).cos() / (w * config.probe.domain_length()).sin()).abs();
    Ok(BoundsReport {
        window_start: trace.t[k0],
        sup_theta: sup(&trace.theta, opt),
        sup_input: sup(&trace.input, opt),
        sup_output: sup(&trace.y, config.map.optimum()),
        sup_vartheta: sup(&trace.vartheta, 0.0),
        envelope_theta: a * w * cot + 1.0 / w,
        envelope_input: a + 1.0 / w,
        envelope_output: a * a + 1.0 / (w * w),
    })
}

/// Agreement of the redundant reconstructions along a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyReport {
    /// `max |ϑ(∫ᾱ) − ϑ(Θ − a sin ωt)|`.
    pub vartheta_gap: f64,
    /// `5 Δx²`.
    pub vartheta_tolerance: f64,
    /// `max |∫∂ₜu − ∂ₓᾱ(D)|`.
    pub flux_gap: f64,
    /// `flux_gap / Δx²`.
    pub flux_constant: f64,
}

pub fn consistency_report(trace: &SimTrace, grid: &Grid) -> ConsistencyReport {
    let dx2 = grid.spacing() * grid.spacing();
    let gap = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let flux_gap = gap(&trace.flux_trapezoid, &trace.flux_boundary);
    ConsistencyReport {
        vartheta_gap: gap(&trace.vartheta, &trace.vartheta_output),
        vartheta_tolerance: 5.0 * dx2,
        flux_gap,
        flux_constant: flux_gap / dx2,
    }
}
