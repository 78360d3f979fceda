//! `section.key = value` configuration files.
//!
//! ```text
//! # probe
//! probe.amplitude = 0.05
//! time.horizon = 200
//! ```
//!
//! Missing keys take the defaults of [`SimConfig::default`]. Every error
//! carries the 1-based line of the offending entry when there is one.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::backstepping::{BacksteppingGains, LyapunovConfig};
use crate::controller::{ControllerSettings, FluxRoute};
use crate::error::{Error, Result};
use crate::probing::ProbeDesign;
use crate::simulation::{InitialState, SimConfig};
use crate::static_map::MapParams;
use crate::wave_field::Grid;

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "control.c0",
    "control.filter_c",
    "control.flux",
    "control.gain_K",
    "control.hessian_filter",
    "control.theta_hat0",
    "control.washout",
    "grid.domain_length",
    "grid.nodes",
    "lyapunov.delta",
    "map.hessian",
    "map.optimizer",
    "map.optimum",
    "plant.initial",
    "probe.amplitude",
    "probe.frequency",
    "time.dt",
    "time.horizon",
    "time.stride",
];

/// Raw entries of a configuration file, before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigEntries {
    entries: BTreeMap<String, (String, Option<usize>)>,
}

impl ConfigEntries {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(Error::at_line(line, format!("expected `section.key = value`, got {content:?}")));
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(Error::at_line(line, format!("unknown key {key:?}")));
            }
            if value.is_empty() {
                return Err(Error::at_line(line, format!("missing value for {key}")));
            }
            if entries.insert(key.to_string(), (value.to_string(), Some(line))).is_some() {
                return Err(Error::at_line(line, format!("duplicate key {key}")));
            }
        }
        Ok(Self { entries })
    }

    /// Sets `key` to `value`, replacing any file entry. Used for sweep points.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::config(format!("unknown key {key:?}")));
        }
        self.entries.insert(key.to_string(), (value.to_string(), None));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn line(&self, key: &str) -> Option<usize> {
        self.entries.get(key).and_then(|(_, l)| *l)
    }

    fn first_line(&self, keys: &[&str]) -> Option<usize> {
        keys.iter().filter_map(|k| self.line(k)).min()
    }

    fn value<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(default),
            Some((raw, line)) => raw.parse::<T>().map_err(|e| Error::Config {
                line: *line,
                message: format!("{key}: cannot parse {raw:?}: {e}"),
            }),
        }
    }

    fn blame(&self, keys: &[&str], err: Error) -> Error {
        let message = match err {
            Error::Config { message, .. } => message,
            other => other.to_string(),
        };
        Error::Config { line: self.first_line(keys), message }
    }

    /// Validates the entries and fills in defaults.
    pub fn build(&self) -> Result<SimConfig> {
        let d = SimConfig::default();
        let dc = d.controller;

        let map_keys = ["map.hessian", "map.optimizer", "map.optimum"];
        let map = MapParams::new(
            self.value("map.hessian", d.map.user_hessian())?,
            self.value("map.optimizer", d.map.optimizer())?,
            self.value("map.optimum", d.map.optimum())?,
        )
        .map_err(|e| self.blame(&map_keys, e))?;

        let grid_keys = ["grid.nodes", "grid.domain_length"];
        let length: f64 = self.value("grid.domain_length", d.grid.domain_length())?;
        let nodes: usize = self.value("grid.nodes", d.grid.nodes())?;
        let grid = Grid::new(length, nodes).map_err(|e| self.blame(&grid_keys, e))?;

        let probe_keys = ["probe.frequency", "probe.amplitude", "grid.domain_length"];
        let probe = ProbeDesign::new(
            self.value("probe.amplitude", d.probe.amplitude())?,
            self.value("probe.frequency", d.probe.frequency())?,
            length,
        )
        .map_err(|e| self.blame(&probe_keys, e))?;
        if let Some(raw) = self.get("probe.frequency") {
            literal_resonance(raw, probe.frequency(), length).map_err(|e| self.blame(&probe_keys, e))?;
        }

        let controller = ControllerSettings {
            gain: self.value("control.gain_K", dc.gain)?,
            filter_c: self.value("control.filter_c", dc.filter_c)?,
            c0: self.value("control.c0", dc.c0)?,
            theta_hat0: self.value("control.theta_hat0", dc.theta_hat0)?,
            washout: self.value("control.washout", dc.washout)?,
            hessian_filter: self.value("control.hessian_filter", dc.hessian_filter)?,
            flux: self.value::<FluxRoute>("control.flux", dc.flux)?,
        };
        let control_keys = [
            "control.gain_K",
            "control.filter_c",
            "control.c0",
            "control.theta_hat0",
            "control.washout",
            "control.hessian_filter",
        ];
        controller.validate().map_err(|e| self.blame(&control_keys, e))?;
        if controller.gain > 0.0 {
            BacksteppingGains::ideal(controller.c0, controller.gain, map.hessian(), length)
                .map_err(|e| self.blame(&["control.c0", "control.gain_K"], e))?;
        }

        let lyapunov = LyapunovConfig::new(self.value("lyapunov.delta", d.lyapunov.delta)?)
            .map_err(|e| self.blame(&["lyapunov.delta"], e))?;
        lyapunov.probe_positive_definite(&grid, 100, 0).map_err(|e| self.blame(&["lyapunov.delta"], e))?;

        let config = SimConfig {
            map,
            grid,
            probe,
            controller,
            lyapunov,
            dt: self.value("time.dt", 0.5 * grid.spacing())?,
            horizon: self.value("time.horizon", d.horizon)?,
            stride: self.value("time.stride", d.stride)?,
            initial: self.value::<InitialState>("plant.initial", d.initial)?,
        };
        config.validate().map_err(|e| {
            let keys: &[&str] = match e {
                Error::Cfl { .. } => &["time.dt", "grid.nodes"],
                _ => &["time.horizon", "time.stride", "probe.frequency"],
            };
            self.blame(keys, e)
        })?;
        Ok(config)
    }
}

/// Rejects a frequency literal that cannot be told apart from a resonance
/// `kπ/D` at the precision it was written with: `3.14159265` is π to eight
/// decimals even though it sits just outside the relative guard band.
fn literal_resonance(raw: &str, omega: f64, length: f64) -> Result<()> {
    if raw.contains(['e', 'E']) {
        return Ok(());
    }
    let decimals = raw.split_once('.').map_or(0, |(_, frac)| frac.len()) as i32;
    let half_ulp = 0.5 * 10f64.powi(-decimals);
    let unit = std::f64::consts::PI / length;
    let k = (omega / unit).round().max(1.0);
    let distance = (omega - k * unit).abs();
    if distance <= half_ulp {
        return Err(Error::Resonance { omega, k: k as u64, distance });
    }
    Ok(())
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    ConfigEntries::parse(text)?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_of(err: Error) -> Option<usize> {
        match err {
            Error::Config { line, .. } => line,
            other => panic!("expected a configuration error, got {other}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(parse_config("").unwrap(), SimConfig::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), SimConfig::default());
    }

    #[test]
    fn values_override_defaults() {
        let c = parse_config("probe.amplitude = 0.05  # halved\ncontrol.flux = trapezoid\ngrid.nodes = 201\n").unwrap();
        assert_eq!(c.probe.amplitude(), 0.05);
        assert_eq!(c.controller.flux, FluxRoute::Trapezoid);
        assert_eq!(c.dt, 0.5 * c.grid.spacing());
    }

    #[test]
    fn resonant_frequency_rejected_with_line() {
        let err = parse_config("\nprobe.frequency = 3.14159265\n").unwrap_err();
        assert!(err.to_string().contains("resonant"), "{err}");
        assert_eq!(line_of(err), Some(2));
        assert!(parse_config("probe.frequency = 3.15").is_ok());
        assert!(parse_config("probe.frequency = 6.283").is_err());
    }

    #[test]
    fn too_few_nodes_rejected() {
        assert_eq!(line_of(parse_config("grid.nodes = 2").unwrap_err()), Some(1));
    }

    #[test]
    fn unknown_key_and_type_errors_carry_lines() {
        assert_eq!(line_of(parse_config("a = 1\n").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("\n\nmap.hessian = two\n").unwrap_err()), Some(3));
        assert_eq!(line_of(parse_config("grid.nodes = 10.5").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("no equals sign").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("time.stride = 1\ntime.stride = 2").unwrap_err()), Some(2));
    }

    #[test]
    fn invariant_violations_carry_lines() {
        assert_eq!(line_of(parse_config("time.horizon = 1").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("\ntime.dt = 0.5").unwrap_err()), Some(2));
        assert_eq!(line_of(parse_config("control.c0 = 1").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("map.hessian = 0").unwrap_err()), Some(1));
        assert_eq!(line_of(parse_config("lyapunov.delta = 3").unwrap_err()), Some(1));
    }

    #[test]
    fn overrides_are_applied() {
        let mut e = ConfigEntries::parse("probe.amplitude = 0.1").unwrap();
        e.set("probe.amplitude", "0.2").unwrap();
        assert_eq!(e.build().unwrap().probe.amplitude(), 0.2);
        assert!(e.set("probe.bogus", "1").is_err());
    }

    #[test]
    fn canonical_listing_round_trips() {
        let c = parse_config("probe.frequency = 12.5\ncontrol.washout = 0\nplant.initial = rest").unwrap();
        assert_eq!(parse_config(&c.canonical()).unwrap(), c);
    }
}
