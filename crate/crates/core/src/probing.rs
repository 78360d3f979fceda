//! Probing and demodulation signals.
//!
//! The additive perturbation is not a plain sinusoid: it is the boundary
//! trace `S(t) = β(D, t)` of the wave solution
//! `β(x, t) = A cos(ωx) sin(ωt)`, `A = aω / sin(ωD)`, whose spatial integral
//! over `[0, D]` is exactly `a sin(ωt)`. `A` diverges at the resonances
//! `ω = kπ/D`, which [`check_frequency`] excludes.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative guard band around each resonance `kπ/D`.
pub const RESONANCE_TOLERANCE: f64 = 1e-9;

/// Outcome of the frequency admissibility check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyVerdict {
    pub admissible: bool,
    /// Index of the nearest resonance `kπ/D` (k ≥ 1).
    pub nearest_k: u64,
    /// `|ω − kπ/D|` for the nearest resonance.
    pub distance: f64,
    /// `|cot(ωD)|`, the factor that scales the ultimate bound on `θ`.
    pub cot_magnitude: f64,
}

pub fn check_frequency(omega: f64, domain_length: f64) -> Result<FrequencyVerdict> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Validation(format!("probing frequency must be positive, got {omega}")));
    }
    if !(domain_length.is_finite() && domain_length > 0.0) {
        return Err(Error::Validation(format!("domain length must be positive, got {domain_length}")));
    }
    let unit = PI / domain_length;
    let ratio = omega / unit;
    let nearest_k = (ratio.round() as u64).max(1);
    let distance = (omega - nearest_k as f64 * unit).abs();
    let admissible = distance > RESONANCE_TOLERANCE * unit;
    let cot_magnitude = ((omega * domain_length).cos() / (omega * domain_length).sin()).abs();
    Ok(FrequencyVerdict { admissible, nearest_k, distance, cot_magnitude })
}

/// Probing amplitude/frequency together with the derived trajectory coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeDesign {
    amplitude: f64,
    frequency: f64,
    domain_length: f64,
    coefficient: f64,
}

impl ProbeDesign {
    pub fn new(amplitude: f64, frequency: f64, domain_length: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::Validation(format!("probing amplitude must be positive, got {amplitude}")));
        }
        let verdict = check_frequency(frequency, domain_length)?;
        if !verdict.admissible {
            return Err(Error::Resonance { omega: frequency, k: verdict.nearest_k, distance: verdict.distance });
        }
        let coefficient = amplitude * frequency / (frequency * domain_length).sin();
        Ok(Self { amplitude, frequency, domain_length, coefficient })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    /// `A = aω / sin(ωD)`.
    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }

    /// Probing period `Π = 2π/ω`.
    pub fn period(&self) -> f64 {
        2.0 * PI / self.frequency
    }

    /// Peak of `|S(t)|`, i.e. `|A cos(ωD)|`.
    pub fn perturbation_amplitude(&self) -> f64 {
        (self.coefficient * (self.frequency * self.domain_length).cos()).abs()
    }

    fn check_position(&self, x: f64) -> Result<()> {
        if !(0.0..=self.domain_length).contains(&x) {
            return Err(Error::Validation(format!("x = {x} outside [0, {}]", self.domain_length)));
        }
        Ok(())
    }
}

/// Reference trajectory `β(x, t) = A cos(ωx) sin(ωt)`.
pub fn beta(design: &ProbeDesign, x: f64, t: f64) -> Result<f64> {
    design.check_position(x)?;
    let w = design.frequency;
    Ok(design.coefficient * (w * x).cos() * (w * t).sin())
}

/// `∂ₜβ = Aω cos(ωx) cos(ωt)`.
pub fn beta_t(design: &ProbeDesign, x: f64, t: f64) -> Result<f64> {
    design.check_position(x)?;
    let w = design.frequency;
    Ok(design.coefficient * w * (w * x).cos() * (w * t).cos())
}

/// `∂ₓβ = −Aω sin(ωx) sin(ωt)`.
pub fn beta_x(design: &ProbeDesign, x: f64, t: f64) -> Result<f64> {
    design.check_position(x)?;
    let w = design.frequency;
    Ok(-design.coefficient * w * (w * x).sin() * (w * t).sin())
}

/// Truncated power series `A sin(ωt) Σₖ (−1)ᵏ (ωx)²ᵏ/(2k)!` of the reference
/// trajectory, the even-coefficient solution of `β_tt = β_xx`, `β_x(0) = 0`.
pub fn beta_series(design: &ProbeDesign, x: f64, t: f64, terms: usize) -> Result<f64> {
    design.check_position(x)?;
    let w = design.frequency;
    let z2 = (w * x) * (w * x);
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 0..terms {
        sum += term;
        let m = (2 * k + 1) as f64 * (2 * k + 2) as f64;
        term *= -z2 / m;
    }
    Ok(design.coefficient * (w * t).sin() * sum)
}

/// Boundary perturbation `S(t) = β(D, t) = A cos(ωD) sin(ωt)`.
pub fn perturbation_s(design: &ProbeDesign, t: f64) -> f64 {
    let w = design.frequency;
    design.coefficient * (w * design.domain_length).cos() * (w * t).sin()
}

/// Gradient demodulation signal `M(t) = (2/a) sin(ωt)`.
pub fn demod_m(amplitude: f64, omega: f64, t: f64) -> Result<f64> {
    check_amplitude(amplitude)?;
    Ok(2.0 / amplitude * (omega * t).sin())
}

/// Hessian demodulation signal `N(t) = −(8/a²) cos(2ωt)`.
pub fn demod_n(amplitude: f64, omega: f64, t: f64) -> Result<f64> {
    check_amplitude(amplitude)?;
    Ok(-8.0 / (amplitude * amplitude) * (2.0 * omega * t).cos())
}

fn check_amplitude(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Validation(format!("demodulation amplitude must be positive, got {a}")));
    }
    Ok(())
}

/// `Ĝ = M·y`.
pub fn grad_estimate(y: f64, m: f64) -> f64 {
    m * y
}

/// `Ĥ = N·y`.
pub fn hess_estimate(y: f64, n: f64) -> f64 {
    n * y
}

/// Node samples of `cos(ωx_i)`; the closed loop rebuilds `β` and `∂ₜβ` from these.
pub(crate) fn spatial_profile(design: &ProbeDesign, positions: &[f64]) -> Vec<f64> {
    positions.iter().map(|&x| (design.frequency * x).cos()).collect()
}
