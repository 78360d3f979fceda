//! Unit-speed wave equation on `[0, D]`: Neumann at `x = 0`, Dirichlet
//! actuation at `x = D`, plus the quadrature and difference operators the
//! controller and diagnostics are built on.
//!
//! Time stepping is the leapfrog scheme written in kick-drift-kick form:
//! a half kick of the velocity by `∂ₓₓα`, a full drift of the displacement,
//! and a closing half kick. The displacement sequence is exactly that of the
//! staggered leapfrog with a half-step startup, while the stored velocity
//! stays synchronous with the displacement so a [`WaveField`] is a consistent
//! snapshot at a single time.

use crate::error::{Error, Result};

/// Uniform grid `x_i = i·Δx`, `i = 0..N`, with `x_{N−1} = D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    domain_length: f64,
    nodes: usize,
    spacing: f64,
}

impl Grid {
    pub fn new(domain_length: f64, nodes: usize) -> Result<Self> {
        if !(domain_length.is_finite() && domain_length > 0.0) {
            return Err(Error::Validation(format!("domain length must be positive, got {domain_length}")));
        }
        if nodes < 3 {
            return Err(Error::Validation(format!("grid needs at least 3 nodes, got {nodes}")));
        }
        Ok(Self { domain_length, nodes, spacing: domain_length / (nodes - 1) as f64 })
    }

    pub fn domain_length(&self) -> f64 {
        self.domain_length
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Position of node `i`. The last node is pinned to `D` exactly.
    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.nodes { self.domain_length } else { i as f64 * self.spacing }
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.nodes).map(|i| self.x(i)).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nodes).map(|i| f(self.x(i))).collect()
    }

    pub(crate) fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.nodes {
            return Err(Error::SizeMismatch { expected: self.nodes, got: values.len() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Displacement/velocity snapshot of the actuator state.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    displacement: Vec<f64>,
    velocity: Vec<f64>,
    time: f64,
    steps: u64,
    // boundary value one step before the current one, for the BDF2 boundary velocity
    prev_boundary: Option<f64>,
}

/// Builds the field at `t = 0` from initial displacement and velocity.
pub fn init_field(grid: &Grid, displacement: Vec<f64>, velocity: Vec<f64>) -> Result<WaveField> {
    grid.check_len(&displacement).map_err(|e| Error::config(e.to_string()))?;
    grid.check_len(&velocity).map_err(|e| Error::config(e.to_string()))?;
    if displacement.iter().chain(velocity.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Validation("initial field has a non-finite entry".into()));
    }
    Ok(WaveField { displacement, velocity, time: 0.0, steps: 0, prev_boundary: None })
}

impl WaveField {
    pub fn zeros(grid: &Grid) -> Self {
        WaveField {
            displacement: vec![0.0; grid.nodes()],
            velocity: vec![0.0; grid.nodes()],
            time: 0.0,
            steps: 0,
            prev_boundary: None,
        }
    }

    pub fn displacement(&self) -> &[f64] {
        &self.displacement
    }

    pub fn velocity(&self) -> &[f64] {
        &self.velocity
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Current actuation value `α(D, t)`.
    pub fn boundary_value(&self) -> f64 {
        *self.displacement.last().expect("grid has at least 3 nodes")
    }

    /// Returns the field advanced by `dt` with `α(D, t + dt) = boundary`.
    pub fn step(&self, grid: &Grid, boundary: f64, dt: f64) -> Result<WaveField> {
        let mut next = self.clone();
        next.advance(grid, boundary, dt)?;
        Ok(next)
    }

    /// In-place form of [`WaveField::step`].
    pub fn advance(&mut self, grid: &Grid, boundary: f64, dt: f64) -> Result<()> {
        let dx = grid.spacing();
        if !(dt > 0.0 && dt <= dx * (1.0 + 1e-12)) {
            return Err(Error::Cfl { dt, dx });
        }
        if !boundary.is_finite() {
            return Err(Error::NumericalBlowup {
                step: self.steps,
                time: self.time,
                detail: format!("boundary value {boundary}"),
            });
        }
        let n = grid.nodes();
        let last = n - 1;
        let half = 0.5 * dt;
        let inv_dx2 = 1.0 / (dx * dx);

        kick(&mut self.velocity, &self.displacement, half * inv_dx2);
        for i in 0..last {
            self.displacement[i] += dt * self.velocity[i];
        }
        let current = self.displacement[last];
        self.displacement[last] = boundary;
        kick(&mut self.velocity, &self.displacement, half * inv_dx2);

        self.velocity[last] = match self.prev_boundary {
            Some(prev) => (3.0 * boundary - 4.0 * current + prev) / (2.0 * dt),
            None => (boundary - current) / dt,
        };
        self.prev_boundary = Some(current);
        self.time += dt;
        self.steps += 1;

        if self.displacement.iter().chain(self.velocity.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup {
                step: self.steps,
                time: self.time,
                detail: "non-finite wave state".into(),
            });
        }
        Ok(())
    }
}

// velocity[i] += scale·(second difference of displacement) for every node but
// the Dirichlet one; node 0 uses the ghost value α_{−1} = α_1.
fn kick(velocity: &mut [f64], displacement: &[f64], scale: f64) {
    let n = displacement.len();
    velocity[0] += scale * 2.0 * (displacement[1] - displacement[0]);
    for i in 1..n - 1 {
        velocity[i] += scale * (displacement[i + 1] - 2.0 * displacement[i] + displacement[i - 1]);
    }
}

/// Composite trapezoid value of `∫₀ᴰ f dy`.
pub fn spatial_integral(values: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(values)?;
    Ok(trapezoid(values, grid.spacing()))
}

pub(crate) fn trapezoid(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    dx * (inner + 0.5 * (values[0] + values[n - 1]))
}

/// Running trapezoid integral `∫₀^{x_i} f dy` at every node.
pub fn cumulative_integral(values: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(values)?;
    let half = 0.5 * grid.spacing();
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for w in values.windows(2) {
        acc += half * (w[0] + w[1]);
        out.push(acc);
    }
    Ok(out)
}

/// Squared L² norm `∫₀ᴰ f² dy`.
pub fn l2_norm_sq(values: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_len(values)?;
    let sq: Vec<f64> = values.iter().map(|v| v * v).collect();
    Ok(trapezoid(&sq, grid.spacing()))
}

/// Map input `Θ(t) = ∫₀ᴰ α(y, t) dy`.
pub fn distributed_output(field: &WaveField, grid: &Grid) -> Result<f64> {
    spatial_integral(field.displacement(), grid)
}

/// Second-order one-sided estimate of `∂ₓf` at an endpoint.
pub fn boundary_slope(values: &[f64], grid: &Grid, end: End) -> Result<f64> {
    grid.check_len(values)?;
    let dx = grid.spacing();
    let n = values.len();
    Ok(match end {
        End::Left => (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx),
        End::Right => (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dx),
    })
}

/// `∂ₓf` at every node: central differences inside, second-order one-sided at the ends.
pub fn gradient(values: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(values)?;
    let dx = grid.spacing();
    let n = values.len();
    let mut out = vec![0.0; n];
    out[0] = boundary_slope(values, grid, End::Left)?;
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    out[n - 1] = boundary_slope(values, grid, End::Right)?;
    Ok(out)
}

/// `∂ₓₓf` at every node.
///
/// Interior nodes use the 3-point stencil. Node 0 uses the ghost value
/// `f_{−1} = f_1` (zero slope at `x = 0`). The last node uses a one-sided
/// stencil: 4 points (second order) when available, 3 points on a 3-node grid.
pub fn second_difference(values: &[f64], grid: &Grid) -> Result<Vec<f64>> {
    grid.check_len(values)?;
    let inv = 1.0 / (grid.spacing() * grid.spacing());
    let n = values.len();
    let f = values;
    let mut out = vec![0.0; n];
    out[0] = 2.0 * (f[1] - f[0]) * inv;
    for i in 1..n - 1 {
        out[i] = (f[i + 1] - 2.0 * f[i] + f[i - 1]) * inv;
    }
    out[n - 1] = if n >= 4 {
        (2.0 * f[n - 1] - 5.0 * f[n - 2] + 4.0 * f[n - 3] - f[n - 4]) * inv
    } else {
        (f[n - 1] - 2.0 * f[n - 2] + f[n - 3]) * inv
    };
    Ok(out)
}

/// Discrete energy `½‖αₜ‖² + ½Σ(Δα/Δx)²Δx` (trapezoid weights for velocity, cell sum for strain).
pub fn discrete_energy(field: &WaveField, grid: &Grid) -> f64 {
    let dx = grid.spacing();
    let sq: Vec<f64> = field.velocity.iter().map(|v| v * v).collect();
    let kinetic = trapezoid(&sq, dx);
    let strain: f64 = field
        .displacement
        .windows(2)
        .map(|w| {
            let s = (w[1] - w[0]) / dx;
            s * s
        })
        .sum::<f64>()
        * dx;
    0.5 * (kinetic + strain)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_layout() {
        let g = Grid::new(1.0, 5).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.x(0), 0.0);
        assert_eq!(g.x(4), 1.0);
        assert!(((g.nodes() - 1) as f64 * g.spacing() - 1.0).abs() < 1e-12);
        assert!(Grid::new(1.0, 2).is_err());
        assert!(Grid::new(0.0, 10).is_err());
    }

    #[test]
    fn init_checks_sizes_and_finiteness() {
        let g = Grid::new(1.0, 5).unwrap();
        let f = init_field(&g, vec![0.0; 5], vec![0.0; 5]).unwrap();
        assert!(f.displacement().iter().all(|&v| v == 0.0));
        let g4 = Grid::new(1.0, 4).unwrap();
        assert!(matches!(init_field(&g4, vec![0.0; 5], vec![0.0; 4]), Err(Error::Config { .. })));
        let mut bad = vec![0.0; 5];
        bad[2] = f64::NAN;
        assert!(matches!(init_field(&g, bad, vec![0.0; 5]), Err(Error::Validation(_))));
    }

    #[test]
    fn zero_field_is_an_equilibrium() {
        let g = Grid::new(1.0, 11).unwrap();
        let f = WaveField::zeros(&g).step(&g, 0.0, 0.05).unwrap();
        assert!(f.displacement().iter().chain(f.velocity()).all(|&v| v == 0.0));
        assert!((f.time() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn cfl_violation_rejected() {
        let g = Grid::new(1.0, 101).unwrap();
        let f = WaveField::zeros(&g);
        assert!(matches!(f.step(&g, 0.0, 1.5 * g.spacing()), Err(Error::Cfl { .. })));
        assert!(f.step(&g, 0.0, g.spacing()).is_ok());
    }

    #[test]
    fn boundary_node_tracks_supplied_value() {
        let g = Grid::new(1.0, 21).unwrap();
        let mut f = WaveField::zeros(&g);
        for k in 1..50 {
            let theta = (0.3 * k as f64).sin();
            f.advance(&g, theta, 0.5 * g.spacing()).unwrap();
            assert!((f.boundary_value() - theta).abs() < 1e-12);
        }
    }

    #[test]
    fn trapezoid_examples() {
        let g = Grid::new(1.0, 11).unwrap();
        assert!((spatial_integral(&vec![1.0; 11], &g).unwrap() - 1.0).abs() < 1e-14);
        for n in [3, 4, 17] {
            let g = Grid::new(1.0, n).unwrap();
            assert!((spatial_integral(&g.positions(), &g).unwrap() - 0.5).abs() < 1e-15);
        }
        let g = Grid::new(1.0, 1001).unwrap();
        let f = g.sample(|x| (7.5 * x).cos());
        let exact = 7.5f64.sin() / 7.5;
        assert!((spatial_integral(&f, &g).unwrap() - exact).abs() < 1e-6);
        assert!((exact - 0.125066).abs() < 1e-6);
        assert!(spatial_integral(&[1.0; 4], &g).is_err());
    }

    #[test]
    fn cumulative_integral_ends_at_total() {
        let g = Grid::new(2.0, 41).unwrap();
        let f = g.sample(|x| x * x);
        let c = cumulative_integral(&f, &g).unwrap();
        assert_eq!(c[0], 0.0);
        assert!((c[40] - spatial_integral(&f, &g).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn distributed_output_examples() {
        let g = Grid::new(1.0, 101).unwrap();
        let c = init_field(&g, vec![1.7; 101], vec![0.0; 101]).unwrap();
        assert!((distributed_output(&c, &g).unwrap() - 1.7).abs() < 1e-13);
        assert_eq!(distributed_output(&WaveField::zeros(&g), &g).unwrap(), 0.0);
    }

    #[test]
    fn boundary_slope_examples() {
        let g = Grid::new(1.0, 11).unwrap();
        let lin = g.positions();
        assert!((boundary_slope(&lin, &g, End::Right).unwrap() - 1.0).abs() < 1e-12);
        let c = vec![3.0; 11];
        assert_eq!(boundary_slope(&c, &g, End::Left).unwrap(), 0.0);
        assert_eq!(boundary_slope(&c, &g, End::Right).unwrap(), 0.0);
        let g = Grid::new(1.0, 1001).unwrap();
        let f = g.sample(|x| (7.5 * x).cos());
        let exact = -7.5 * 7.5f64.sin();
        assert!((boundary_slope(&f, &g, End::Right).unwrap() - exact).abs() < 1e-3);
        assert!((exact + 7.035).abs() < 1e-3);
    }

    #[test]
    fn second_difference_examples() {
        let g = Grid::new(1.0, 11).unwrap();
        let lin = second_difference(&g.positions(), &g).unwrap();
        assert!(lin[1..10].iter().all(|v| v.abs() < 1e-10));
        let quad = second_difference(&g.sample(|x| x * x), &g).unwrap();
        assert!(quad.iter().all(|v| (v - 2.0).abs() < 1e-9), "{quad:?}");
        let g = Grid::new(1.0, 1001).unwrap();
        let f = g.sample(|x| (7.5 * x).cos());
        let d2 = second_difference(&f, &g).unwrap();
        for i in 1..1000 {
            assert!((d2[i] + 56.25 * f[i]).abs() < 1e-2);
        }
    }

    #[test]
    fn three_node_grid_operators() {
        let g = Grid::new(1.0, 3).unwrap();
        let quad = second_difference(&g.sample(|x| x * x), &g).unwrap();
        assert!(quad.iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(boundary_slope(&[0.0, 0.5, 1.0], &g, End::Left).is_ok());
    }
}
