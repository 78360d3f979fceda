use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Which intermediate of the filtered controller went non-finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBreakdown {
    pub gradient: f64,
    pub hessian: f64,
    pub bracket: f64,
    pub target: f64,
    pub output: f64,
}

impl fmt::Display for ControllerBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "G_hat={} H_hat={} bracket={} target={} U={}",
            self.gradient, self.hessian, self.bracket, self.target, self.output
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Bad configuration text or inconsistent settings. `line` is 1-based when known.
    #[error("configuration error{}: {message}", line_suffix(*.line))]
    Config { line: Option<usize>, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("array length mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("CFL violation: dt = {dt} exceeds dx = {dx} (unit wave speed)")]
    Cfl { dt: f64, dx: f64 },

    #[error("probing frequency {omega} is resonant: k = {k}, distance to k*pi/D is {distance:e}")]
    Resonance { omega: f64, k: u64, distance: f64 },

    #[error("kernel denominator {denominator:e} is singular")]
    KernelSingularity { denominator: f64 },

    #[error("decay rate {lambda} hits the excluded value {excluded} (c0 = {c0})")]
    LambdaCondition { lambda: f64, excluded: f64, c0: f64 },

    #[error("Lyapunov functional is not positive definite (V = {value:e}); use a smaller delta than {delta}")]
    NotPositiveDefinite { value: f64, delta: f64 },

    #[error("numerical blowup at step {step} (t = {time}): {detail}")]
    NumericalBlowup { step: u64, time: f64, detail: String },

    #[error("controller blowup at step {step}: {breakdown}")]
    ControllerBlowup { step: u64, breakdown: ControllerBreakdown },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_suffix(line: Option<usize>) -> String {
    line.map(|l| format!(" (line {l})")).unwrap_or_default()
}

impl Error {
    pub(crate) fn config(message: impl Into<String>) -> Self {
        Error::Config { line: None, message: message.into() }
    }

    pub(crate) fn at_line(line: usize, message: impl Into<String>) -> Self {
        Error::Config { line: Some(line), message: message.into() }
    }

    /// True for the failures a run can hit after a valid configuration.
    pub fn is_blowup(&self) -> bool {
        matches!(self, Error::NumericalBlowup { .. } | Error::ControllerBlowup { .. })
    }
}
