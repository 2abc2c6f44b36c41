//! Timing harness comparing the Floquet solver against the direct
//! Lindblad integration.
//!
//! Solution time covers the integration alone. Total time adds basis
//! construction, rate-term building and reconstruction of lab-frame
//! states for FLiME, and Liouvillian assembly plus unpacking for the
//! reference. Each configuration gets one untimed warm-up run.

use std::path::Path;
use std::time::Instant;

use serde_json::json;

use crate::config::{RunConfig, SolverKind, TimeGrid};
use crate::output::{fmt_float, prepare, write_json, Table};
use crate::run::{Solver, VERSION};
use crate::system::{initial_state, ode_tol, System};
use crate::CliError;

/// Mean and sample standard deviation of repeated timings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timing {
    pub mean: f64,
    pub std: f64,
}

impl Timing {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub n_periods: usize,
    pub solver: SolverKind,
    pub solution_time_s: Timing,
    pub total_time_s: Timing,
    pub repeats: usize,
}

/// One timed run: (solution seconds, total seconds).
fn time_once(kind: SolverKind, system: &System, cfg: &RunConfig, times: &[f64]) -> Result<(f64, f64), CliError> {
    let rho0 = initial_state(cfg);
    let tol = ode_tol(cfg);
    let start = Instant::now();
    let solver = Solver::build(kind, system, cfg)?;
    let res = solver.evolve(&rho0, times, &tol)?;
    let total = start.elapsed().as_secs_f64();
    std::hint::black_box(&res.states);
    Ok((res.diagnostics.solution_time.as_secs_f64(), total))
}

/// Times both solvers at each period count.
pub fn run_bench(cfg: &RunConfig, periods: &[usize], repeats: usize) -> Result<Vec<BenchRecord>, CliError> {
    if repeats < 3 {
        return Err(CliError::Config(crate::ConfigError::Invalid(format!("repeats must be >= 3, got {repeats}"))));
    }
    let system = System::from_config(cfg)?;
    let mut records = Vec::new();
    for &n_periods in periods {
        let grid = TimeGrid { n_periods: Some(n_periods), samples_per_period: Some(cfg.time.samples()), times: None };
        let times = grid.resolve(system.period());
        for kind in [SolverKind::Flime, SolverKind::Reference] {
            time_once(kind, &system, cfg, &times)?;
            let mut solution = Vec::with_capacity(repeats);
            let mut total = Vec::with_capacity(repeats);
            for _ in 0..repeats {
                let (s, t) = time_once(kind, &system, cfg, &times)?;
                solution.push(s);
                total.push(t);
            }
            records.push(BenchRecord {
                n_periods,
                solver: kind,
                solution_time_s: Timing::of(&solution),
                total_time_s: Timing::of(&total),
                repeats,
            });
        }
    }
    Ok(records)
}

/// One row per period count: FLiME solution and total time, reference
/// solution and total time (each mean and std), then the reference/FLiME
/// quotients of the means.
pub fn bench_table(records: &[BenchRecord]) -> Table {
    let mut table = Table::new([
        "n_periods",
        "flime_solution_mean_s",
        "flime_solution_std_s",
        "flime_total_mean_s",
        "flime_total_std_s",
        "reference_solution_mean_s",
        "reference_solution_std_s",
        "reference_total_mean_s",
        "reference_total_std_s",
        "solution_quotient",
        "total_quotient",
        "repeats",
    ]);
    let mut periods: Vec<usize> = records.iter().map(|r| r.n_periods).collect();
    periods.dedup();
    for n in periods {
        let find = |kind| records.iter().find(|r| r.n_periods == n && r.solver == kind);
        let (Some(f), Some(r)) = (find(SolverKind::Flime), find(SolverKind::Reference)) else {
            continue;
        };
        let mut row = vec![n.to_string()];
        for t in [f.solution_time_s, f.total_time_s, r.solution_time_s, r.total_time_s] {
            row.push(fmt_float(t.mean));
            row.push(fmt_float(t.std));
        }
        row.push(fmt_float(r.solution_time_s.mean / f.solution_time_s.mean));
        row.push(fmt_float(r.total_time_s.mean / f.total_time_s.mean));
        row.push(f.repeats.min(r.repeats).to_string());
        table.push(row);
    }
    table
}

/// Runs the configured benchmark and writes `bench.csv` and `bench.json`.
pub fn run_bench_command(cfg: &RunConfig, out: &Path) -> Result<(Vec<BenchRecord>, Table), CliError> {
    let records = run_bench(cfg, &cfg.bench.periods, cfg.bench.repeats)?;
    let table = bench_table(&records);
    table.write(&prepare(out, "bench.csv")?)?;
    let meta = json!({
        "command": "bench",
        "version": VERSION,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "clock": "monotonic",
        "warmup_runs_per_configuration": 1,
        "solution_time": "integration only",
        "total_time": "setup, integration and lab-frame reconstruction",
        "records": records.iter().map(|r| json!({
            "n_periods": r.n_periods,
            "solver": r.solver.label(),
            "solution_time_s": {"mean": r.solution_time_s.mean, "std": r.solution_time_s.std},
            "total_time_s": {"mean": r.total_time_s.mean, "std": r.total_time_s.std},
            "repeats": r.repeats,
        })).collect::<Vec<_>>(),
    });
    write_json(&prepare(out, "bench.json")?, &meta)?;
    Ok((records, table))
}
