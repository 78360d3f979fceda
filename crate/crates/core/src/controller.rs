//! Boundary controllers: the ideal full-state law, its average, and the
//! implementable demodulation-based law with a first-order output filter.
//!
//! The implementable law forms
//!
//! ```text
//! B = D c₀ ∫u + D θ̂ − Θ + a sin(ωt)            (equals ∫ g ∂ₜu along solutions)
//! T = K Ĝ + K Ĥ B − c₀ ∫∂ₜu
//! U̇ = −c (U − T),   θ̂̇ = U
//! ```
//!
//! Two optional prefilters condition the demodulated estimates: a washout
//! that removes the DC level of `y` before demodulation, and a low-pass on
//! the Hessian estimate. Setting either corner to zero disables it.

use crate::backstepping::{transform_z, BacksteppingGains};
use crate::error::{ControllerBreakdown, Error, Result};
use crate::probing::{demod_m, demod_n, perturbation_s, ProbeDesign};
use crate::wave_field::{spatial_integral, Grid};

/// How `∫₀ᴰ ∂ₜu dy` enters the law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FluxRoute {
    /// `∂ₓᾱ(D)`, which equals the integral because `∂ₜu = ∂ₓₓᾱ` and `∂ₓᾱ(0) = 0`.
    #[default]
    Boundary,
    /// Trapezoid rule over the reconstructed `∂ₜu` field.
    Trapezoid,
}

impl std::str::FromStr for FluxRoute {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "boundary" => Ok(FluxRoute::Boundary),
            "trapezoid" => Ok(FluxRoute::Trapezoid),
            other => Err(format!("expected boundary|trapezoid, got {other:?}")),
        }
    }
}

impl std::fmt::Display for FluxRoute {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FluxRoute::Boundary => "boundary",
            FluxRoute::Trapezoid => "trapezoid",
        })
    }
}

/// Tuning of the implementable controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSettings {
    /// Adaptation gain `K`.
    pub gain: f64,
    /// Output filter corner `c` (1/s); `f64::INFINITY` gives the unfiltered law.
    pub filter_c: f64,
    /// Coupling `c₀`.
    pub c0: f64,
    /// Initial estimate `θ̂(0)`.
    pub theta_hat0: f64,
    /// Washout corner on `y` (rad/s); 0 feeds `y` to the demodulators unchanged.
    pub washout: f64,
    /// Low-pass corner on `Ĥ` (rad/s); 0 uses the raw estimate.
    pub hessian_filter: f64,
    pub flux: FluxRoute,
}

impl Default for ControllerSettings {
    fn default() -> Self {
        Self {
            gain: 0.1,
            filter_c: 10.0,
            c0: 0.5,
            theta_hat0: 0.0,
            washout: 1.0,
            hessian_filter: 0.1,
            flux: FluxRoute::Boundary,
        }
    }
}

impl ControllerSettings {
    /// The law with both prefilters switched off.
    pub fn literal() -> Self {
        Self { washout: 0.0, hessian_filter: 0.0, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gain.is_finite() && self.gain >= 0.0) {
            return Err(Error::Validation(format!("gain K must be non-negative, got {}", self.gain)));
        }
        if !(self.filter_c > 0.0) {
            return Err(Error::Validation(format!("filter corner c must be positive, got {}", self.filter_c)));
        }
        if !(self.c0.is_finite() && self.c0 > 0.0) || (self.c0 - 1.0).abs() <= 1e-9 {
            return Err(Error::Validation(format!("c0 must be positive and different from 1, got {}", self.c0)));
        }
        if !self.theta_hat0.is_finite() {
            return Err(Error::Validation("theta_hat0 must be finite".into()));
        }
        for (name, v) in [("washout", self.washout), ("hessian_filter", self.hessian_filter)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Validation(format!("{name} corner must be non-negative, got {v}")));
            }
        }
        Ok(())
    }
}

/// Dynamic state of the implementable controller.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerState {
    /// Estimate `θ̂` of the optimizer.
    pub theta_hat: f64,
    /// Filter output `U = θ̂̇`.
    pub output: f64,
    /// Washout state; `None` until the first measurement arrives.
    pub washout: Option<f64>,
    /// Low-pass state of the Hessian estimate.
    pub hessian: f64,
    pub time: f64,
}

impl ControllerState {
    pub fn new(settings: &ControllerSettings) -> Self {
        Self { theta_hat: settings.theta_hat0, output: 0.0, washout: None, hessian: 0.0, time: 0.0 }
    }
}

/// What the controller reads at one instant.
#[derive(Debug, Clone, Copy)]
pub struct Measurements<'a> {
    /// Map output `y`.
    pub y: f64,
    /// Distributed input `Θ = ∫α`.
    pub input: f64,
    pub u: &'a [f64],
    pub u_t: &'a [f64],
    /// `∂ₓᾱ(D)`.
    pub boundary_flux: f64,
    pub time: f64,
}

/// Intermediates of one controller update.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControlTerms {
    pub gradient: f64,
    pub hessian_raw: f64,
    /// Hessian estimate that entered the law (filtered when enabled).
    pub hessian: f64,
    pub bracket: f64,
    pub flux: f64,
    pub target: f64,
}

/// `U = K̄ Z − c₀ ∫∂ₜu`.
pub fn ideal_control(vartheta: f64, u: &[f64], u_t: &[f64], grid: &Grid, gains: &BacksteppingGains) -> Result<f64> {
    let z = transform_z(vartheta, u, u_t, grid, gains)?;
    Ok(gains.effective_gain() * z - gains.c0() * spatial_integral(u_t, grid)?)
}

/// `K Ĝ_av + K Ĥ_av [−g'(D)c₀∫u + ∫g∂ₜu] − c₀∫∂ₜu` with `Ĝ_av = Hϑ` and `Ĥ_av = H`.
pub fn average_control(
    vartheta: f64,
    u: &[f64],
    u_t: &[f64],
    grid: &Grid,
    gains: &BacksteppingGains,
    hessian: f64,
) -> Result<f64> {
    average_control_with_flux(vartheta, u, u_t, spatial_integral(u_t, grid)?, grid, gains, hessian)
}

/// [`average_control`] with `∫∂ₜu` supplied by the caller.
pub fn average_control_with_flux(
    vartheta: f64,
    u: &[f64],
    u_t: &[f64],
    flux: f64,
    grid: &Grid,
    gains: &BacksteppingGains,
    hessian: f64,
) -> Result<f64> {
    let k = gains.gain();
    let rest = transform_z(0.0, u, u_t, grid, gains)?;
    Ok(k * hessian * vartheta + k * hessian * rest - gains.c0() * flux)
}

fn relax(state: f64, input: f64, corner: f64, dt: f64) -> f64 {
    input + (state - input) * (-corner * dt).exp()
}

/// One update of the implementable controller: filter step on `U` by the
/// exact exponential, then `θ̂⁺ = θ̂ + Δt U⁺`.
pub fn filtered_control_step(
    state: &ControllerState,
    meas: &Measurements<'_>,
    probe: &ProbeDesign,
    settings: &ControllerSettings,
    grid: &Grid,
    dt: f64,
) -> Result<(ControllerState, ControlTerms)> {
    let a = probe.amplitude();
    let omega = probe.frequency();
    let t = meas.time;
    let d = grid.domain_length();

    let (signal, washout) = if settings.washout > 0.0 {
        let eta = state.washout.unwrap_or(meas.y);
        (meas.y - eta, Some(relax(eta, meas.y, settings.washout, dt)))
    } else {
        (meas.y, state.washout)
    };
    let gradient = demod_m(a, omega, t)? * signal;
    let hessian_raw = demod_n(a, omega, t)? * signal;
    let (hessian, hessian_state) = if settings.hessian_filter > 0.0 {
        let h = relax(state.hessian, hessian_raw, settings.hessian_filter, dt);
        (h, h)
    } else {
        (hessian_raw, state.hessian)
    };

    let flux = match settings.flux {
        FluxRoute::Boundary => meas.boundary_flux,
        FluxRoute::Trapezoid => spatial_integral(meas.u_t, grid)?,
    };
    let bracket = d * settings.c0 * spatial_integral(meas.u, grid)? + d * state.theta_hat - meas.input + a * (omega * t).sin();
    let target = settings.gain * gradient + settings.gain * hessian * bracket - settings.c0 * flux;
    let output = relax(state.output, target, settings.filter_c, dt);

    let terms = ControlTerms { gradient, hessian_raw, hessian, bracket, flux, target };
    if ![gradient, hessian, bracket, target, output].iter().all(|v| v.is_finite()) {
        return Err(Error::ControllerBlowup {
            step: (t / dt).round() as u64,
            breakdown: ControllerBreakdown { gradient, hessian, bracket, target, output },
        });
    }
    let next = ControllerState {
        theta_hat: state.theta_hat + dt * output,
        output,
        washout,
        hessian: hessian_state,
        time: t + dt,
    };
    Ok((next, terms))
}

/// `θ(t) = θ̂(t) + S(t)`.
pub fn boundary_input(state: &ControllerState, probe: &ProbeDesign, t: f64) -> f64 {
    state.theta_hat + perturbation_s(probe, t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gains() -> BacksteppingGains {
        BacksteppingGains::ideal(0.5, 0.1, -2.0, 1.0).unwrap()
    }

    #[test]
    fn ideal_control_examples() {
        let grid = Grid::new(1.0, 201).unwrap();
        let zeros = vec![0.0; 201];
        let ones = vec![1.0; 201];
        assert_eq!(ideal_control(0.0, &zeros, &zeros, &grid, &gains()).unwrap(), 0.0);
        assert!((ideal_control(1.0, &zeros, &zeros, &grid, &gains()).unwrap() + 0.2).abs() < 1e-15);
        let u = ideal_control(0.0, &zeros, &ones, &grid, &gains()).unwrap();
        assert!((u + 0.2 / 3.0 + 0.5).abs() < 1e-5, "{u}");
    }

    #[test]
    fn average_control_examples() {
        let grid = Grid::new(1.0, 101).unwrap();
        let zeros = vec![0.0; 101];
        assert_eq!(average_control(0.0, &zeros, &zeros, &grid, &gains(), -2.0).unwrap(), 0.0);
        assert!((average_control(1.0, &zeros, &zeros, &grid, &gains(), -2.0).unwrap() + 0.2).abs() < 1e-15);
        let u = grid.sample(|x| (3.0 * x).sin());
        let ut = grid.sample(|x| x * x - 0.3);
        let a = average_control(0.4, &u, &ut, &grid, &gains(), -2.0).unwrap();
        let b = ideal_control(0.4, &u, &ut, &grid, &gains()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    fn frozen_meas<'a>(zeros: &'a [f64], t: f64) -> Measurements<'a> {
        Measurements { y: 0.0, input: 0.0, u: zeros, u_t: zeros, boundary_flux: 0.0, time: t }
    }

    #[test]
    fn step_response_of_the_output_filter() {
        // K = 0 leaves only the flux term, so the target is constant
        let grid = Grid::new(1.0, 11).unwrap();
        let probe = ProbeDesign::new(0.1, 7.5, 1.0).unwrap();
        let settings = ControllerSettings { gain: 0.0, ..ControllerSettings::literal() };
        let zeros = vec![0.0; 11];
        let mut state = ControllerState::new(&settings);
        let dt = 0.01;
        let target = -settings.c0 * -2.0;
        for n in 0..200 {
            let meas = Measurements { boundary_flux: -2.0, ..frozen_meas(&zeros, n as f64 * dt) };
            let (next, terms) = filtered_control_step(&state, &meas, &probe, &settings, &grid, dt).unwrap();
            assert_eq!(terms.target, target);
            state = next;
            let t = (n + 1) as f64 * dt;
            let exact = target * (1.0 - (-settings.filter_c * t).exp());
            assert!((state.output - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_corner_gives_the_unfiltered_law() {
        let grid = Grid::new(1.0, 11).unwrap();
        let probe = ProbeDesign::new(0.1, 7.5, 1.0).unwrap();
        let settings = ControllerSettings { filter_c: f64::INFINITY, ..ControllerSettings::literal() };
        let zeros = vec![0.0; 11];
        let state = ControllerState { output: 3.0, ..ControllerState::new(&settings) };
        let meas = Measurements { y: 4.5, input: 1.7, ..frozen_meas(&zeros, 0.3) };
        let (next, terms) = filtered_control_step(&state, &meas, &probe, &settings, &grid, 0.005).unwrap();
        assert_eq!(next.output, terms.target);
        assert_eq!(next.theta_hat, 0.005 * terms.target);
    }

    #[test]
    fn nan_measurement_reports_breakdown() {
        let grid = Grid::new(1.0, 11).unwrap();
        let probe = ProbeDesign::new(0.1, 7.5, 1.0).unwrap();
        let settings = ControllerSettings::literal();
        let zeros = vec![0.0; 11];
        let meas = Measurements { y: f64::NAN, ..frozen_meas(&zeros, 0.1) };
        let err = filtered_control_step(&ControllerState::new(&settings), &meas, &probe, &settings, &grid, 0.01)
            .unwrap_err();
        assert!(matches!(err, Error::ControllerBlowup { .. }));
        assert!(err.to_string().contains("G_hat=NaN"));
    }

    #[test]
    fn washout_starts_at_the_first_sample() {
        let grid = Grid::new(1.0, 11).unwrap();
        let probe = ProbeDesign::new(0.1, 7.5, 1.0).unwrap();
        let settings = ControllerSettings::default();
        let zeros = vec![0.0; 11];
        let meas = Measurements { y: 5.0, ..frozen_meas(&zeros, 0.2) };
        let (next, terms) =
            filtered_control_step(&ControllerState::new(&settings), &meas, &probe, &settings, &grid, 0.01).unwrap();
        assert_eq!(terms.gradient, 0.0);
        assert_eq!(next.washout, Some(5.0));
    }

    #[test]
    fn boundary_input_examples() {
        let probe = ProbeDesign::new(0.1, 7.5, 1.0).unwrap();
        let mut state = ControllerState::new(&ControllerSettings::default());
        assert_eq!(boundary_input(&state, &probe, 0.0), 0.0);
        state.theta_hat = 2.0;
        let amp = probe.perturbation_amplitude();
        let n = 2000;
        let mut mean = 0.0;
        for k in 0..n {
            let t = probe.period() * k as f64 / n as f64;
            let th = boundary_input(&state, &probe, t);
            assert!(th >= 2.0 - amp - 1e-12 && th <= 2.0 + amp + 1e-12);
            mean += th / n as f64;
        }
        assert!((mean - 2.0).abs() < 1e-12);
    }

    #[test]
    fn settings_validation() {
        assert!(ControllerSettings::default().validate().is_ok());
        assert!(ControllerSettings { filter_c: 0.0, ..Default::default() }.validate().is_err());
        assert!(ControllerSettings { c0: 1.0, ..Default::default() }.validate().is_err());
        assert!(ControllerSettings { washout: -1.0, ..Default::default() }.validate().is_err());
        assert!("trapezoid".parse::<FluxRoute>().is_ok());
        assert!("x".parse::<FluxRoute>().is_err());
    }
}
