//! Cartesian parameter sweeps over configuration keys.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{ConfigEntries, KEYS};
use crate::error::{Error, Result};
use crate::io::write_run;
use crate::simulation::{run_closed_loop, ultimate_bounds_report, BoundsReport, SimConfig};

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "WAVE_ESC_THREADS";

/// One swept key with its values, written `key=v1,v2,...`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<String>,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (key, list) = s
            .split_once('=')
            .ok_or_else(|| Error::config(format!("sweep axis {s:?} is not of the form key=v1,v2")))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(Error::config(format!("sweep axis names unknown key {key:?}")));
        }
        let values: Vec<String> = list.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
        if values.is_empty() {
            return Err(Error::config(format!("sweep axis {key} has no values")));
        }
        Ok(Self { key: key.to_string(), values })
    }
}

/// Outcome of one sweep point.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub assignment: Vec<(String, String)>,
    pub config: SimConfig,
    /// `Err` holds the failure message of a point that blew up.
    pub bounds: std::result::Result<BoundsReport, String>,
}

/// Every combination of axis values, first axis varying slowest.
pub fn cartesian(axes: &[SweepAxis]) -> Vec<Vec<(String, String)>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push((axis.key.clone(), v.clone()));
                    p
                })
            })
            .collect()
    })
}

/// Pool size: `WAVE_ESC_THREADS` if set and positive, else available parallelism.
pub fn worker_count() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs every point. Configuration errors abort before any run starts;
/// blowups are recorded per point. With `out`, each point writes its run
/// files to `point_NNN/` and the aggregate goes to `sweep.csv`.
pub fn run_sweep(base: &ConfigEntries, axes: &[SweepAxis], out: Option<&Path>, threads: usize) -> Result<Vec<SweepPoint>> {
    let assignments = cartesian(axes);
    let mut configs = Vec::with_capacity(assignments.len());
    for a in &assignments {
        let mut entries = base.clone();
        for (k, v) in a {
            entries.set(k, v)?;
        }
        let config = entries.build().map_err(|e| {
            let desc: Vec<String> = a.iter().map(|(k, v)| format!("{k}={v}")).collect();
            Error::config(format!("sweep point {}: {e}", desc.join(" ")))
        })?;
        configs.push(config);
    }
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;
    let points: Vec<Result<SweepPoint>> = pool.install(|| {
        configs
            .into_par_iter()
            .zip(assignments.into_par_iter())
            .enumerate()
            .map(|(index, (config, assignment))| {
                let bounds = match run_closed_loop(&config) {
                    Ok(trace) => {
                        if let Some(dir) = out {
                            write_run(&trace, &config, &point_dir(dir, index))?;
                        }
                        Ok(ultimate_bounds_report(&trace, &config)?)
                    }
                    Err(e) if e.is_blowup() => Err(e.to_string()),
                    Err(e) => return Err(e),
                };
                Ok(SweepPoint { index, assignment, config, bounds })
            })
            .collect()
    });
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    if let Some(dir) = out {
        fs::write(dir.join("sweep.csv"), sweep_csv(axes, &points))?;
    }
    Ok(points)
}

pub fn point_dir(out: &Path, index: usize) -> PathBuf {
    out.join(format!("point_{index:03}"))
}

/// Aggregate table: one row per point with the ultimate-bound sups.
pub fn sweep_csv(axes: &[SweepAxis], points: &[SweepPoint]) -> String {
    let mut s = String::from("point");
    for a in axes {
        s.push(',');
        s.push_str(&a.key);
    }
    s.push_str(",status,sup_theta_err,sup_Theta_err,sup_y_err,sup_vartheta,c1,c2,c3\n");
    for p in points {
        let _ = write!(s, "{}", p.index);
        for (_, v) in &p.assignment {
            let _ = write!(s, ",{v}");
        }
        match &p.bounds {
            Ok(b) => {
                let _ = writeln!(
                    s,
                    ",ok,{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                    b.sup_theta,
                    b.sup_input,
                    b.sup_output,
                    b.sup_vartheta,
                    b.c1(),
                    b.c2(),
                    b.c3()
                );
            }
            Err(_) => s.push_str(",blowup,,,,,,,\n"),
        }
    }
    s
}
