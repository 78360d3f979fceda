use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use wave_esc::config::ConfigEntries;
use wave_esc::io::write_run;
use wave_esc::simulation::{run_closed_loop, ultimate_bounds_report};
use wave_esc::sweep::{run_sweep, sweep_csv, worker_count, SweepAxis};
use wave_esc::verify::run_battery;
use wave_esc::Error;

/// Extremum seeking through a distributed wave actuator.
#[derive(Parser)]
#[command(name = "wave-esc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the closed loop and write trace.csv, report.txt and config.txt.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the closed loop over the Cartesian product of the given axes.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `key=v1,v2,...`; repeat for more axes.
        #[arg(long = "axis", required = true)]
        axes: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the property battery; optionally restrict to some groups.
    Verify {
        /// kernels, trajectory, wave, averaging, average-system
        groups: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(path: Option<&Path>) -> wave_esc::Result<ConfigEntries> {
    match path {
        Some(p) => ConfigEntries::parse(&std::fs::read_to_string(p)?),
        None => Ok(ConfigEntries::default()),
    }
}

fn exit_for(err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(if err.is_blowup() { 2 } else { 1 })
}

fn run(config: Option<&Path>, out: &Path) -> wave_esc::Result<()> {
    let config = load(config)?.build()?;
    let start = Instant::now();
    let trace = run_closed_loop(&config)?;
    write_run(&trace, &config, out)?;
    let b = ultimate_bounds_report(&trace, &config)?;
    println!(
        "{} rows in {:.2?}; final 10%: sup|y-y*| = {:.4e}, sup|Theta-Theta*| = {:.4e}, sup|theta-Theta*| = {:.4e}",
        trace.len(),
        start.elapsed(),
        b.sup_output,
        b.sup_input,
        b.sup_theta
    );
    Ok(())
}

fn sweep(config: Option<&Path>, axes: &[String], out: &Path) -> wave_esc::Result<bool> {
    let base = load(config)?;
    let axes = axes.iter().map(|a| a.parse()).collect::<wave_esc::Result<Vec<SweepAxis>>>()?;
    let points = run_sweep(&base, &axes, Some(out), worker_count())?;
    print!("{}", sweep_csv(&axes, &points));
    Ok(points.iter().all(|p| p.bounds.is_ok()))
}

fn verify(config: Option<&Path>, groups: &[String]) -> wave_esc::Result<bool> {
    let config = load(config)?.build()?;
    let checks = run_battery(&config, groups)?;
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} checks, {} failed", checks.len(), failed);
    Ok(failed == 0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Run { config, out } => run(config.as_deref(), out).map(|_| ExitCode::SUCCESS),
        Command::Sweep { config, axes, out } => sweep(config.as_deref(), axes, out)
            .map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(2) }),
        Command::Verify { groups, config } => verify(config.as_deref(), groups)
            .map(|ok| if ok { ExitCode::SUCCESS } else { ExitCode::from(1) }),
    };
    result.unwrap_or_else(|e| exit_for(&e))
}
