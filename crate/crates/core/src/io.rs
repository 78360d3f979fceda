//! `trace.csv` and `key=value` report output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;
use crate::simulation::{consistency_report, ultimate_bounds_report, SimConfig, SimTrace};

pub const TRACE_HEADER: &str = "t,y,theta,Theta,U,G_hat,H_hat,vartheta,Omega,V";

/// Plain decimal with `digits` significant digits, never in exponent form.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // rounding can carry into a new leading digit (9.99… → 10.0…)
    let sig = s.chars().filter(|c| c.is_ascii_digit()).skip_while(|c| *c == '0').count();
    if sig > digits && decimals > 0 {
        format!("{v:.prec$}", prec = decimals - 1)
    } else {
        s
    }
}

pub fn trace_csv(trace: &SimTrace) -> String {
    let mut out = String::with_capacity(trace.len() * 160);
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for k in 0..trace.len() {
        let row = [
            trace.t[k],
            trace.y[k],
            trace.theta[k],
            trace.input[k],
            trace.control[k],
            trace.gradient[k],
            trace.hessian[k],
            trace.vartheta[k],
            trace.omega[k],
            trace.lyapunov[k],
        ];
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&format_significant(*v, 12));
        }
        out.push('\n');
    }
    out
}

pub fn write_trace_csv(trace: &SimTrace, path: &Path) -> Result<()> {
    fs::write(path, trace_csv(trace))?;
    Ok(())
}

/// Run summary as `key=value` lines: metadata, ultimate bounds and the
/// consistency measurements.
pub fn run_report(trace: &SimTrace, config: &SimConfig) -> Result<String> {
    let b = ultimate_bounds_report(trace, config)?;
    let c = consistency_report(trace, &config.grid);
    let last = trace.len() - 1;
    let mut out = String::new();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(out, "{k}={v}");
    };
    kv("config_hash", trace.config_hash.clone());
    kv("steps", trace.steps.to_string());
    kv("stride", trace.stride.to_string());
    kv("rows", trace.len().to_string());
    kv("dt", format!("{:e}", trace.dt));
    kv("final_t", format!("{}", trace.t[last]));
    kv("final_y", format!("{:e}", trace.y[last]));
    kv("final_theta_hat", format!("{:e}", trace.theta_hat[last]));
    kv("window_start", format!("{}", b.window_start));
    kv("sup_theta_err", format!("{:e}", b.sup_theta));
    kv("sup_Theta_err", format!("{:e}", b.sup_input));
    kv("sup_y_err", format!("{:e}", b.sup_output));
    kv("sup_vartheta", format!("{:e}", b.sup_vartheta));
    kv("envelope_theta", format!("{:e}", b.envelope_theta));
    kv("envelope_Theta", format!("{:e}", b.envelope_input));
    kv("envelope_y", format!("{:e}", b.envelope_output));
    kv("c1", format!("{:e}", b.c1()));
    kv("c2", format!("{:e}", b.c2()));
    kv("c3", format!("{:e}", b.c3()));
    kv("cot_omega_D", format!("{:e}", crate::probing::check_frequency(config.probe.frequency(), config.probe.domain_length())?.cot_magnitude));
    kv("vartheta_route_gap", format!("{:e}", c.vartheta_gap));
    kv("vartheta_route_tolerance", format!("{:e}", c.vartheta_tolerance));
    kv("flux_route_gap", format!("{:e}", c.flux_gap));
    kv("flux_route_constant", format!("{:e}", c.flux_constant));
    Ok(out)
}

/// Writes `trace.csv` and `report.txt` into `dir`, creating it if needed.
pub fn write_run(trace: &SimTrace, config: &SimConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_trace_csv(trace, &dir.join("trace.csv"))?;
    fs::write(dir.join("report.txt"), run_report(trace, config)?)?;
    fs::write(dir.join("config.txt"), config.canonical())?;
    Ok(())
}
