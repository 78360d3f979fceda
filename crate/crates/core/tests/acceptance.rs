//! Acceptance suite. Prints one PASS/FAIL line per criterion, with the
//! measured quantities underneath, and exits non-zero if any criterion fails.

use std::time::Instant;

use wave_esc::backstepping::BacksteppingGains;
use wave_esc::config::ConfigEntries;
use wave_esc::simulation::{
    consistency_report, fit_exponential, run_average_system, run_closed_loop, AverageConfig, AverageInitial,
    AverageTrace, SimConfig, SimTrace,
};
use wave_esc::sweep::{run_sweep, worker_count, SweepAxis, SweepPoint};
use wave_esc::verify::{
    averaging_checks, kernel_checks, kernel_ode_residual, trajectory_integral_error, trajectory_series_gap,
    trajectory_wave_residual, wave_energy_drift, wave_oracle_error, Check,
};

/// Grid for the frequency sweep, fine enough that the spatial error of the
/// fastest probe stays below the ripple being compared.
const OMEGA_SWEEP_NODES: usize = 2001;

struct Criterion {
    id: u8,
    title: &'static str,
    lines: Vec<String>,
    passed: bool,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self { id, title, lines: Vec::new(), passed: true }
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        self.passed &= ok;
        self.lines.push(format!("    [{}] {name}: {detail}", if ok { "ok" } else { "FAIL" }));
    }

    fn note(&mut self, text: String) {
        self.lines.push(format!("    (info) {text}"));
    }

    fn absorb(&mut self, checks: &[Check]) {
        for c in checks {
            self.check(&c.name, c.passed, format!("{:.4e} {}", c.value, c.rule));
        }
    }

    fn print(&self) {
        println!("{} criterion {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.id, self.title);
        for l in &self.lines {
            println!("{l}");
        }
    }
}

fn range(v: &[f64]) -> (f64, f64) {
    v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(*x), hi.max(*x)))
}

fn sup_dev(v: &[f64], c: f64) -> f64 {
    v.iter().map(|x| (x - c).abs()).fold(0.0, f64::max)
}

fn criterion_1(trace: &SimTrace, elapsed: f64) -> Criterion {
    let mut c = Criterion::new(1, "closed loop at the default parameters");
    let k0 = trace.window_start(0.1);
    let y = &trace.y[k0..];
    let input = &trace.input[k0..];
    let theta = &trace.theta[k0..];
    let (ylo, yhi) = range(y);
    c.check("|y - 5| <= 0.05 over the final 10%", sup_dev(y, 5.0) <= 0.05, format!("sup {:.5e}, y in [{ylo:.6}, {yhi:.6}]", sup_dev(y, 5.0)));
    c.check("|Theta - 2| <= 0.15", sup_dev(input, 2.0) <= 0.15, format!("sup {:.5e}", sup_dev(input, 2.0)));
    c.check("|theta - 2| <= 0.35", sup_dev(theta, 2.0) <= 0.35, format!("sup {:.5e}", sup_dev(theta, 2.0)));
    c.check("runtime <= 5 s", elapsed <= 5.0, format!("{elapsed:.3} s"));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new(2, "trajectory generation");
    let probe = SimConfig::default().probe;
    let e = trajectory_integral_error(&probe, 1001).unwrap();
    c.check("sup_t |trapz int beta - a sin wt|, t in [0, 2 Pi], N = 1001", e <= 1e-4, format!("{e:.4e} <= 1e-4"));
    let r = trajectory_wave_residual(&probe, 100, 1e-3, 2).unwrap();
    c.check("discrete wave residual of beta at 100 random points", r <= 1e-5, format!("{r:.4e} <= 1e-5"));
    let s = trajectory_series_gap(&probe, 20, 100, 3).unwrap();
    c.check("20-term series vs closed form", s <= 1e-10, format!("{s:.4e} <= 1e-10"));
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new(3, "wave solver oracle");
    let e201 = wave_oracle_error(7.5, 201, 10.0).unwrap();
    let e401 = wave_oracle_error(7.5, 401, 10.0).unwrap();
    c.check("L-inf error at t = 10, N = 201, dt = dx/2", e201 <= 1e-3, format!("{e201:.4e} <= 1e-3"));
    let ratio = e201 / e401;
    c.check(
        "error ratio under dx halving in [3.5, 4.5]",
        (3.5..=4.5).contains(&ratio),
        format!("{ratio:.4} (N = 401 error {e401:.4e})"),
    );
    let drift = wave_energy_drift(201, 10.0).unwrap();
    c.check("undriven energy drift over 10 time units <= 0.1%", drift <= 1e-3, format!("{:.4e} %", 100.0 * drift));
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new(4, "kernel boundary value problems and guards");
    let gains = SimConfig::default().ideal_gains().unwrap();
    c.absorb(&kernel_checks(&gains).unwrap());
    let fine = kernel_ode_residual(&gains, 1e-5, 50, 51).unwrap();
    c.note(format!(
        "gamma ODE probe at h = 1e-5: {fine:.3e}; double-precision rounding floor 4 ulp(gamma)/h^2 = {:.3e}",
        4.0 * f64::EPSILON * 0.25 / 1e-10
    ));
    let mut rejects = true;
    for c0 in [1.5, 2.0, 3.0] {
        let r: f64 = (1.0 + c0) / (1.0 - c0);
        let excluded = (-r).ln() / 2.0;
        rejects &= BacksteppingGains::new(c0, 1.0, -excluded, 1.0).is_err();
    }
    c.check("lambda condition rejects excluded rates for c0 in {1.5, 2, 3}", rejects, "3 of 3 rejected".into());
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new(5, "average-system exponential stability");
    let base = AverageConfig::from_sim(&SimConfig::default(), 20.0).unwrap();
    let run = |nodes: usize, compatible: bool| -> (AverageConfig, AverageTrace) {
        let cfg = base.with_nodes(nodes).unwrap();
        let init = if compatible {
            AverageInitial::compatible(1.0, &cfg.grid, &cfg.gains)
        } else {
            AverageInitial::uniform(1.0, &cfg.grid)
        };
        let tr = run_average_system(&cfg, &init).unwrap();
        (cfg, tr)
    };
    let (_, tr) = run(101, false);
    let zerr = tr.z_decay_error(2.0);
    c.check("Z(t) vs Z(0) exp(-lambda t) within 2% for lambda t <= 2", zerr <= 0.02, format!("{zerr:.4e}"));
    let (kappa, rho) = fit_exponential(&tr.t, &tr.omega).unwrap();
    c.check("Omega fits an exponential with rho > 0", rho > 0.0, format!("kappa {kappa:.4}, rho {rho:.4}"));
    let inc = tr.max_lyapunov_increase(0.01);
    c.check(
        "V nonincreasing after the first 1% of steps (relative slack 1e-6)",
        inc <= 1e-6,
        format!("largest relative one-step increase {inc:.4e}"),
    );

    let mut reports = Vec::new();
    for nodes in [101, 201, 401] {
        let (cfg, tr) = run(nodes, false);
        let dx = cfg.grid.spacing();
        let tol = 5.0 * (dx * dx + cfg.dt * cfg.dt);
        reports.push((nodes, tol, tr.residuals));
    }
    for (nodes, tol, r) in &reports {
        let worst = [
            r.z_dynamics_normalized(),
            r.left_boundary_normalized(),
            r.right_boundary_normalized(),
            r.interior_wave_normalized(),
        ];
        let ok = worst.iter().all(|v| *v <= *tol);
        c.check(
            &format!("target residuals <= 5(dx^2 + dt^2), N = {nodes}"),
            ok,
            format!(
                "Z {:.3e}, w_x(0)-c0 w_t(0) {:.3e}, w(D) {:.3e}, interior {:.3e} vs {tol:.3e}",
                worst[0], worst[1], worst[2], worst[3]
            ),
        );
    }
    let order = |a: f64, b: f64| (a / b).log2();
    let (r1, r2) = (&reports[1].2, &reports[2].2);
    c.note(format!(
        "observed orders 201 -> 401: Z {:.2}, left {:.2}, right {:.2}, interior {:.2}",
        order(r1.z_dynamics, r2.z_dynamics),
        order(r1.left_boundary, r2.left_boundary),
        order(r1.right_boundary, r2.right_boundary),
        order(r1.interior_wave, r2.interior_wave)
    ));

    let (_, comp) = run(101, true);
    c.note(format!(
        "supplementary, not counted: with compatible data (w(D, 0) = 0) the largest relative V increase is {:.3e} and the Z error {:.3e}",
        comp.max_lyapunov_increase(0.01),
        comp.z_decay_error(2.0)
    ));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new(6, "averaging identities");
    let cfg = SimConfig::default();
    c.absorb(&averaging_checks(&cfg.map, &cfg.probe).unwrap());
    c
}

fn sweep(axis: &str, extra: &[(&str, &str)]) -> (Vec<SweepPoint>, f64) {
    let mut base = ConfigEntries::default();
    for (k, v) in extra {
        base.set(k, v).unwrap();
    }
    let axes: Vec<SweepAxis> = vec![axis.parse().unwrap()];
    let start = Instant::now();
    let points = run_sweep(&base, &axes, None, worker_count()).unwrap();
    (points, start.elapsed().as_secs_f64())
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new(7, "ultimate-bound scaling laws");

    let (points, secs) = sweep("probe.amplitude=0.05,0.1,0.2", &[]);
    let sups: Vec<f64> = points.iter().map(|p| p.bounds.as_ref().map_or(f64::NAN, |b| b.sup_output)).collect();
    c.check(
        "sup|y - y*| monotone increasing in a",
        sups.windows(2).all(|w| w[1] > w[0]),
        format!("a = 0.05, 0.1, 0.2 -> {:.4e}, {:.4e}, {:.4e}", sups[0], sups[1], sups[2]),
    );
    let (q1, q2) = (sups[1] / sups[0], sups[2] / sups[1]);
    c.check(
        "halving a shrinks sup|y - y*| by a factor in [3, 5]",
        (3.0..=5.0).contains(&q1) && (3.0..=5.0).contains(&q2),
        format!("0.1 -> 0.05: {q1:.3}, 0.2 -> 0.1: {q2:.3}"),
    );
    c.check("amplitude sweep <= 60 s", secs <= 60.0, format!("{secs:.2} s"));

    let nodes = OMEGA_SWEEP_NODES.to_string();
    let (points, secs) = sweep("probe.frequency=7.5,12.5,20.5", &[("grid.nodes", &nodes)]);
    let sups: Vec<f64> = points.iter().map(|p| p.bounds.as_ref().map_or(f64::NAN, |b| b.sup_vartheta)).collect();
    c.check(
        "sup|vartheta| at higher omega does not exceed its value at omega = 7.5",
        sups[1..].iter().all(|s| *s <= sups[0]),
        format!("omega = 7.5, 12.5, 20.5 -> {:.4e}, {:.4e}, {:.4e} (N = {nodes})", sups[0], sups[1], sups[2]),
    );
    c.note(format!(
        "successive values nonincreasing: {}",
        sups.windows(2).all(|w| w[1] <= w[0])
    ));
    c.check("frequency sweep <= 60 s", secs <= 60.0, format!("{secs:.2} s"));
    c
}

fn criterion_8(trace: &SimTrace, config: &SimConfig) -> Criterion {
    let mut c = Criterion::new(8, "consistency invariants");
    let r = consistency_report(trace, &config.grid);
    c.check(
        "two vartheta reconstructions agree within 5 dx^2 at every record",
        r.vartheta_gap <= r.vartheta_tolerance,
        format!("{:.4e} <= {:.4e}", r.vartheta_gap, r.vartheta_tolerance),
    );
    let fine_cfg = ConfigEntries::parse("grid.nodes = 201").unwrap().build().unwrap();
    let fine = consistency_report(&run_closed_loop(&fine_cfg).unwrap(), &fine_cfg.grid);
    let order = (r.flux_gap / fine.flux_gap).log2();
    c.check(
        "int u_t vs boundary slope gap is O(dx^2) (observed order >= 1.8)",
        order >= 1.8,
        format!(
            "gap {:.4e} (N = 101), {:.4e} (N = 201); order {order:.3}; constant {:.2} / {:.2}",
            r.flux_gap, fine.flux_gap, r.flux_constant, fine.flux_constant
        ),
    );
    c
}

fn main() {
    let config = SimConfig::default();
    let start = Instant::now();
    let trace = run_closed_loop(&config).expect("default closed loop");
    let elapsed = start.elapsed().as_secs_f64();

    let criteria = vec![
        criterion_1(&trace, elapsed),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
        criterion_8(&trace, &config),
    ];
    println!();
    for c in &criteria {
        c.print();
    }
    let failed: Vec<u8> = criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    println!("\nacceptance: {} of {} criteria pass", criteria.len() - failed.len(), criteria.len());
    if !failed.is_empty() {
        println!("failing: {failed:?}");
        std::process::exit(1);
    }
}
