//! Backstepping gains, kernels and transformations for the cascade
//! `ϑ̇ = ∫u`, `uₜₜ = uₓₓ`, `uₓ(0) = 0`, `u(D) = U`.
//!
//! The pair `(ϑ, u)` is mapped to `(Z, w)` with
//!
//! ```text
//! Z = ϑ − g'(D) c₀ ∫₀ᴰ u dy + ∫₀ᴰ g(y) ∂ₜu dy,          g(y) = (D² − y²)/2
//! w = u − γ(x) Z + c₀ ∫₀ˣ ∂ₜu dy,                       γ(x) = K̄ (e^{λx} + r e^{−λx}) / (e^{λD} + r e^{−λD})
//! ```
//!
//! and under `U = K̄Z − c₀∫∂ₜu` the target system is `Ż = −λZ` together with
//! a wave equation for `w` with `wₓ(0) = c₀ wₜ(0)` and `w(D) = 0`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::wave_field::{cumulative_integral, gradient, l2_norm_sq, spatial_integral, trapezoid, Grid};

/// `g(y) = (D² − y²)/2`.
pub fn gain_g(y: f64, domain_length: f64) -> f64 {
    0.5 * (domain_length * domain_length - y * y)
}

/// `g'(y) = −y`.
pub fn gain_g_prime(y: f64, _domain_length: f64) -> f64 {
    -y
}

/// Coupling, gains and derived kernel constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacksteppingGains {
    c0: f64,
    gain: f64,
    effective_gain: f64,
    lambda: f64,
    ratio: f64,
    domain_length: f64,
}

/// Tolerance of the `c₀ ≠ 1`, λ-condition and kernel-denominator guards.
pub const GUARD_TOLERANCE: f64 = 1e-9;

impl BacksteppingGains {
    /// Gains for the ideal system, `K̄ = K·H`.
    pub fn ideal(c0: f64, gain: f64, hessian: f64, domain_length: f64) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::Validation(format!("controller gain K must be positive, got {gain}")));
        }
        Self::new(c0, gain, gain * hessian, domain_length)
    }

    pub fn new(c0: f64, gain: f64, effective_gain: f64, domain_length: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::Validation(format!("c0 must be positive, got {c0}")));
        }
        if (c0 - 1.0).abs() <= GUARD_TOLERANCE {
            return Err(Error::Validation("c0 = 1 makes the kernel ratio undefined".into()));
        }
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::Validation(format!("domain length must be positive, got {domain_length}")));
        }
        if !(effective_gain.is_finite() && effective_gain < 0.0) {
            return Err(Error::Validation(format!("effective gain K̄ must be negative, got {effective_gain}")));
        }
        let gains = Self::unchecked(c0, gain, effective_gain, domain_length);
        if let Some(excluded) = gains.excluded_lambda() {
            if (gains.lambda - excluded).abs() <= GUARD_TOLERANCE {
                return Err(Error::LambdaCondition { lambda: gains.lambda, excluded, c0 });
            }
        }
        let den = gains.kernel_denominator();
        if den.abs() <= GUARD_TOLERANCE {
            return Err(Error::KernelSingularity { denominator: den });
        }
        Ok(gains)
    }

    /// Builds gains without any validation. Diagnostics use this to probe
    /// degenerate settings (for instance `K̄ = 0`).
    pub fn unchecked(c0: f64, gain: f64, effective_gain: f64, domain_length: f64) -> Self {
        Self {
            c0,
            gain,
            effective_gain,
            lambda: gain_g_prime(domain_length, domain_length) * effective_gain,
            ratio: (1.0 + c0) / (1.0 - c0),
            domain_length,
        }
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn effective_gain(&self) -> f64 {
        self.effective_gain
    }

    /// `λ = g'(D)·K̄ = −D·K̄`.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `r = (1 + c₀)/(1 − c₀)`.
    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// The value `ln(−r)/(2D)` that λ must avoid. `None` when `−r ≤ 0`,
    /// i.e. for `0 < c₀ < 1`, where the condition is vacuous.
    pub fn excluded_lambda(&self) -> Option<f64> {
        let arg = -self.ratio;
        (arg > 0.0).then(|| arg.ln() / (2.0 * self.domain_length))
    }

    pub fn kernel_denominator(&self) -> f64 {
        let ld = self.lambda * self.domain_length;
        ld.exp() + self.ratio * (-ld).exp()
    }
}

/// `γ(x) = K̄ (e^{λx} + r e^{−λx}) / (e^{λD} + r e^{−λD})`.
pub fn kernel_gamma(gains: &BacksteppingGains, x: f64) -> Result<f64> {
    let den = gains.kernel_denominator();
    if !(den.abs() >= 1e-12) {
        return Err(Error::KernelSingularity { denominator: den });
    }
    let lx = gains.lambda * x;
    Ok(gains.effective_gain * (lx.exp() + gains.ratio * (-lx).exp()) / den)
}

/// `γ` sampled on the grid.
pub fn kernel_profile(gains: &BacksteppingGains, grid: &Grid) -> Result<Vec<f64>> {
    (0..grid.nodes()).map(|i| kernel_gamma(gains, grid.x(i))).collect()
}

/// `g` sampled on the grid.
pub fn gain_profile(grid: &Grid) -> Vec<f64> {
    grid.sample(|y| gain_g(y, grid.domain_length()))
}

/// `Z = ϑ − g'(D) c₀ ∫u + ∫ g ∂ₜu`.
pub fn transform_z(vartheta: f64, u: &[f64], u_t: &[f64], grid: &Grid, gains: &BacksteppingGains) -> Result<f64> {
    let d = grid.domain_length();
    let int_u = spatial_integral(u, grid)?;
    grid.check_len(u_t)?;
    let weighted: Vec<f64> = u_t.iter().enumerate().map(|(i, v)| gain_g(grid.x(i), d) * v).collect();
    let int_gut = trapezoid(&weighted, grid.spacing());
    Ok(vartheta - gain_g_prime(d, d) * gains.c0 * int_u + int_gut)
}

/// `w(x) = u(x) − γ(x) Z + c₀ ∫₀ˣ ∂ₜu dy`.
pub fn transform_w(u: &[f64], u_t: &[f64], z: f64, grid: &Grid, gains: &BacksteppingGains) -> Result<Vec<f64>> {
    transform_w_with(u, u_t, z, grid, gains.c0, &kernel_profile(gains, grid)?)
}

pub(crate) fn transform_w_with(u: &[f64], u_t: &[f64], z: f64, grid: &Grid, c0: f64, gamma: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    let cum = cumulative_integral(u_t, grid)?;
    Ok(u.iter().zip(gamma).zip(&cum).map(|((u, g), c)| u - g * z + c0 * c).collect())
}

/// `∂ₜw` from a single snapshot.
///
/// Differentiating the transformation along the wave dynamics gives
/// `∂ₜw = ∂ₜu − γ Ż + c₀ ∂ₓu` with `Ż = D (u(D) + c₀ ∫∂ₜu)`, so no time
/// differencing is needed.
pub fn transform_w_t(u: &[f64], u_t: &[f64], grid: &Grid, gains: &BacksteppingGains) -> Result<Vec<f64>> {
    transform_w_t_with(u, u_t, grid, gains.c0, &kernel_profile(gains, grid)?)
}

pub(crate) fn transform_w_t_with(u: &[f64], u_t: &[f64], grid: &Grid, c0: f64, gamma: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(u)?;
    let flux = spatial_integral(u_t, grid)?;
    let z_dot = grid.domain_length() * (u[u.len() - 1] + c0 * flux);
    let u_x = gradient(u, grid)?;
    Ok((0..grid.nodes()).map(|i| u_t[i] - gamma[i] * z_dot + c0 * u_x[i]).collect())
}

/// `Ż = D (u(D) + c₀ ∫∂ₜu)`; equals `−λZ` exactly when `u(D)` is the ideal law.
pub fn z_rate(u: &[f64], u_t: &[f64], grid: &Grid, gains: &BacksteppingGains) -> Result<f64> {
    grid.check_len(u)?;
    let flux = spatial_integral(u_t, grid)?;
    Ok(grid.domain_length() * (u[u.len() - 1] + gains.c0 * flux))
}

/// Inverse of [`transform_w`]: recovers `u` from `(w, Z)` given `∂ₜu`.
pub fn inverse_transform_w(w: &[f64], u_t: &[f64], z: f64, grid: &Grid, gains: &BacksteppingGains) -> Result<Vec<f64>> {
    grid.check_len(w)?;
    let cum = cumulative_integral(u_t, grid)?;
    let gamma = kernel_profile(gains, grid)?;
    Ok(w.iter().zip(&gamma).zip(&cum).map(|((w, g), c)| w + g * z - gains.c0 * c).collect())
}

/// Weight `δ` of the cross term in the Lyapunov functional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovConfig {
    pub delta: f64,
}

impl Default for LyapunovConfig {
    fn default() -> Self {
        Self { delta: 0.05 }
    }
}

impl LyapunovConfig {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::Validation(format!("lyapunov delta must be non-negative, got {delta}")));
        }
        Ok(Self { delta })
    }

    /// Checks `V ≥ ¼(‖∂ₓw‖² + ‖∂ₜw‖²)` on `samples` random smooth fields.
    /// Returns the smallest observed ratio `(V − ½Z²) / (‖∂ₓw‖² + ‖∂ₜw‖²)`.
    pub fn probe_positive_definite(&self, grid: &Grid, samples: usize, seed: u64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = grid.domain_length();
        let mut worst = f64::INFINITY;
        for k in 0..samples {
            let w = random_smooth_field(&mut rng, grid, d);
            // every other sample aligns ∂ₜw with ∂ₓw, the worst case for the cross term
            let w_t = if k % 2 == 0 { gradient(&w, grid)? } else { random_smooth_field(&mut rng, grid, d) };
            let energy = l2_norm_sq(&gradient(&w, grid)?, grid)? + l2_norm_sq(&w_t, grid)?;
            let v = lyapunov_v(0.0, &w, &w_t, grid, self)?;
            if energy > 0.0 {
                worst = worst.min(v / energy);
            }
            if v < 0.25 * energy {
                return Err(Error::NotPositiveDefinite { value: v - 0.25 * energy, delta: self.delta });
            }
        }
        Ok(worst)
    }
}

fn random_smooth_field(rng: &mut ChaCha8Rng, grid: &Grid, d: f64) -> Vec<f64> {
    let modes: Vec<(f64, f64, f64)> = (1..=6)
        .map(|k| (rng.gen_range(-1.0..1.0) / k as f64, rng.gen_range(-1.0..1.0) / k as f64, k as f64))
        .collect();
    grid.sample(|x| {
        modes
            .iter()
            .map(|(a, b, k)| a * (k * std::f64::consts::PI * x / d).cos() + b * (k * std::f64::consts::PI * x / d).sin())
            .sum()
    })
}

/// `V = ½Z² + ½(‖∂ₓw‖² + ‖∂ₜw‖²) + δ ∫₀ᴰ (y − 2) ∂_y w ∂ₜw dy`.
pub fn lyapunov_v(z: f64, w: &[f64], w_t: &[f64], grid: &Grid, cfg: &LyapunovConfig) -> Result<f64> {
    let w_x = gradient(w, grid)?;
    grid.check_len(w_t)?;
    let energy = l2_norm_sq(&w_x, grid)? + l2_norm_sq(w_t, grid)?;
    let cross: Vec<f64> = (0..grid.nodes()).map(|i| (grid.x(i) - 2.0) * w_x[i] * w_t[i]).collect();
    let v = 0.5 * z * z + 0.5 * energy + cfg.delta * trapezoid(&cross, grid.spacing());
    if v < 0.0 {
        return Err(Error::NotPositiveDefinite { value: v, delta: cfg.delta });
    }
    Ok(v)
}

/// `Ω = |ϑ|² + ‖∂ₓu‖² + ‖∂ₜu‖²`.
pub fn omega_norm(vartheta: f64, u: &[f64], u_t: &[f64], grid: &Grid) -> Result<f64> {
    let u_x = gradient(u, grid)?;
    Ok(vartheta * vartheta + l2_norm_sq(&u_x, grid)? + l2_norm_sq(u_t, grid)?)
}

/// One `(t, Z, w)` sample of a transformed trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSnapshot {
    pub time: f64,
    pub z: f64,
    pub w: Vec<f64>,
}

/// Residuals of the target system along a trajectory.
///
/// Raw values are maxima over the trajectory; the `*_normalized` values
/// divide by the matching trajectory scale so runs of different size compare.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResidualReport {
    /// `max |Ż + λZ|` (central time differences).
    pub z_dynamics: f64,
    /// `max |∂ₓw(0) − c₀∂ₜw(0)|`.
    pub left_boundary: f64,
    /// `max |w(D)|`.
    pub right_boundary: f64,
    /// `max |∂ₜₜw − ∂ₓₓw|` over interior nodes.
    pub interior_wave: f64,
    pub z_scale: f64,
    pub w_scale: f64,
    pub w_x_scale: f64,
    pub w_tt_scale: f64,
    pub samples: usize,
}

impl ResidualReport {
    fn ratio(num: f64, den: f64) -> f64 {
        if den > 0.0 { num / den } else { num }
    }

    pub fn z_dynamics_normalized(&self) -> f64 {
        Self::ratio(self.z_dynamics, self.z_scale)
    }

    pub fn left_boundary_normalized(&self) -> f64 {
        Self::ratio(self.left_boundary, self.w_x_scale)
    }

    pub fn right_boundary_normalized(&self) -> f64 {
        Self::ratio(self.right_boundary, self.w_scale)
    }

    pub fn interior_wave_normalized(&self) -> f64 {
        Self::ratio(self.interior_wave, self.w_tt_scale)
    }
}

/// Streaming residual evaluator over equally spaced snapshots.
///
/// Keeps a three-snapshot window, so a long trajectory never has to be stored.
#[derive(Debug, Clone)]
pub struct TargetResiduals {
    grid: Grid,
    gains: BacksteppingGains,
    window: Vec<TargetSnapshot>,
    report: ResidualReport,
}

impl TargetResiduals {
    pub fn new(grid: Grid, gains: BacksteppingGains) -> Self {
        Self { grid, gains, window: Vec::with_capacity(3), report: ResidualReport::default() }
    }

    pub fn push(&mut self, snapshot: TargetSnapshot) -> Result<()> {
        self.grid.check_len(&snapshot.w)?;
        let r = &mut self.report;
        r.z_scale = r.z_scale.max(self.gains.lambda() * snapshot.z.abs());
        r.w_scale = r.w_scale.max(max_abs(&snapshot.w));
        r.right_boundary = r.right_boundary.max(snapshot.w.last().copied().unwrap_or(0.0).abs());
        if self.window.len() == 3 {
            self.window.remove(0);
        }
        self.window.push(snapshot);
        if self.window.len() == 3 {
            self.evaluate_center()?;
        }
        Ok(())
    }

    fn evaluate_center(&mut self) -> Result<()> {
        let [prev, mid, next] = [&self.window[0], &self.window[1], &self.window[2]];
        let dt_back = mid.time - prev.time;
        let dt_fwd = next.time - mid.time;
        let dt = 0.5 * (dt_back + dt_fwd);
        let lambda = self.gains.lambda();
        let c0 = self.gains.c0();
        let r = &mut self.report;

        let z_dot = (next.z - prev.z) / (2.0 * dt);
        r.z_dynamics = r.z_dynamics.max((z_dot + lambda * mid.z).abs());

        let w_x = gradient(&mid.w, &self.grid)?;
        let w_t0 = (next.w[0] - prev.w[0]) / (2.0 * dt);
        r.left_boundary = r.left_boundary.max((w_x[0] - c0 * w_t0).abs());
        r.w_x_scale = r.w_x_scale.max(max_abs(&w_x));

        let inv_dx2 = 1.0 / (self.grid.spacing() * self.grid.spacing());
        let inv_dt2 = 1.0 / (dt * dt);
        let n = mid.w.len();
        for i in 1..n - 1 {
            let w_tt = (next.w[i] - 2.0 * mid.w[i] + prev.w[i]) * inv_dt2;
            let w_xx = (mid.w[i + 1] - 2.0 * mid.w[i] + mid.w[i - 1]) * inv_dx2;
            r.interior_wave = r.interior_wave.max((w_tt - w_xx).abs());
            r.w_tt_scale = r.w_tt_scale.max(w_tt.abs());
        }
        r.samples += 1;
        Ok(())
    }

    pub fn report(&self) -> ResidualReport {
        self.report
    }
}

/// Residual report over a stored trajectory of `(Z, w)` snapshots.
pub fn target_residuals(trajectory: &[TargetSnapshot], grid: &Grid, gains: &BacksteppingGains) -> Result<ResidualReport> {
    let mut acc = TargetResiduals::new(*grid, *gains);
    for s in trajectory {
        acc.push(s.clone())?;
    }
    Ok(acc.report())
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
