//! The locally quadratic objective `y = y* + (H/2)(Θ − Θ*)²`.
//!
//! The controller never sees [`MapParams`]. It receives a [`MapOracle`], an
//! opaque `Θ ↦ y` handle, so the "unknown map" contract holds in code and
//! not just by convention. Diagnostics keep the full parameters.

use crate::error::{Error, Result};

/// Ground truth of the static map.
///
/// Internally the map is always stored in maximization form (`H < 0`). A
/// minimization problem (`H > 0`) is negated on construction and the flip is
/// recorded; [`MapParams::eval`] still reports values of the map as given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapParams {
    hessian: f64,
    optimizer: f64,
    optimum: f64,
    flipped: bool,
}

impl MapParams {
    pub fn new(hessian: f64, optimizer: f64, optimum: f64) -> Result<Self> {
        if !(hessian.is_finite() && optimizer.is_finite() && optimum.is_finite()) {
            return Err(Error::Validation("map parameters must be finite".into()));
        }
        if hessian == 0.0 {
            return Err(Error::Validation("map Hessian must be non-zero".into()));
        }
        let flipped = hessian > 0.0;
        let sign = if flipped { -1.0 } else { 1.0 };
        Ok(Self { hessian: sign * hessian, optimizer, optimum: sign * optimum, flipped })
    }

    /// Hessian as the controller's maximization logic sees it (always negative).
    pub fn hessian(&self) -> f64 {
        self.hessian
    }

    /// Hessian of the map as supplied by the user.
    pub fn user_hessian(&self) -> f64 {
        if self.flipped { -self.hessian } else { self.hessian }
    }

    pub fn optimizer(&self) -> f64 {
        self.optimizer
    }

    /// Extremum value of the map as supplied by the user.
    pub fn optimum(&self) -> f64 {
        if self.flipped { -self.optimum } else { self.optimum }
    }

    /// Whether the map was given as a minimization problem.
    pub fn is_flipped(&self) -> bool {
        self.flipped
    }

    /// Value of the user's map at `input`.
    pub fn eval(&self, input: f64) -> f64 {
        let y = self.eval_normalized(input);
        if self.flipped { -y } else { y }
    }

    /// Value of the maximization form at `input`.
    pub fn eval_normalized(&self, input: f64) -> f64 {
        let d = input - self.optimizer;
        self.optimum + 0.5 * self.hessian * d * d
    }

    /// Opaque evaluator for controller code paths.
    pub fn oracle(&self) -> MapOracle {
        MapOracle { params: *self }
    }
}

/// Evaluator handle: `Θ ↦ y` in maximization form, with no access to H, Θ*, y*.
#[derive(Clone, Copy)]
pub struct MapOracle {
    params: MapParams,
}

impl MapOracle {
    pub fn measure(&self, input: f64) -> f64 {
        self.params.eval_normalized(input)
    }
}

impl std::fmt::Debug for MapOracle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("MapOracle(..)")
    }
}

/// `y* + (H/2)(Θ − Θ*)²` for the user's map.
pub fn eval_map(params: &MapParams, input: f64) -> f64 {
    params.eval(input)
}
