//! The evolve, compare, ness and spectrum commands.

use std::path::{Path, PathBuf};
use std::time::Instant;

use flime_core::analysis::{
    correlation_g1, evolve_to_ness, spectrum, tau_grid, CorrelationOptions, NessOptions, NessResult, SpectrumResult, Window,
};
use flime_core::master::{EvolutionDiagnostics, StateHealth};
use flime_core::ode::StepStats;
use flime_core::qops::{trace_distance, two_level};
use flime_core::{DensityMatrix, EvolutionResult, FlimeSolver, LindbladSolver, LiouvillianSpec, MasterEquation, OdeTol};
use serde_json::{json, Value};

use crate::config::{RunConfig, SolverChoice, SolverKind, WindowChoice};
use crate::output::{prepare, write_json, Table};
use crate::system::{evaluate, flime_options, initial_state, observable_operator, ode_tol, System};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A constructed solver of either kind.
pub enum Solver {
    Flime(Box<FlimeSolver>),
    Reference(LindbladSolver),
}

impl Solver {
    pub fn build(kind: SolverKind, system: &System, cfg: &RunConfig) -> Result<Self, CliError> {
        Ok(match kind {
            SolverKind::Flime => {
                Self::Flime(Box::new(FlimeSolver::new(&system.hamiltonian, &system.channels, &flime_options(cfg)?)?))
            }
            SolverKind::Reference => {
                let spec = LiouvillianSpec::new(system.hamiltonian.clone(), system.channels.clone())?;
                Self::Reference(LindbladSolver::new(&spec))
            }
        })
    }

    pub fn kind(&self) -> SolverKind {
        match self {
            Self::Flime(_) => SolverKind::Flime,
            Self::Reference(_) => SolverKind::Reference,
        }
    }

    pub fn equation(&self) -> &dyn MasterEquation {
        match self {
            Self::Flime(s) => s.as_ref(),
            Self::Reference(s) => s,
        }
    }

    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64], tol: &OdeTol) -> Result<EvolutionResult, CliError> {
        Ok(match self {
            Self::Flime(s) => s.evolve(rho0, times, tol)?,
            Self::Reference(s) => s.evolve(rho0, times, tol)?,
        })
    }

    /// Static facts about the solver for metadata.
    pub fn describe(&self) -> Value {
        match self {
            Self::Flime(s) => json!({
                "quasienergies": s.basis().quasienergies(),
                "periodicity_defect": s.basis().periodicity_defect(),
                "kept_terms": s.terms().kept_count(),
                "dropped_terms": s.terms().dropped_count(),
                "oscillating_groups": s.terms().oscillating().len(),
                "setup_time_s": s.setup_time().as_secs_f64(),
            }),
            Self::Reference(s) => json!({ "setup_time_s": s.setup_time().as_secs_f64() }),
        }
    }
}

fn steps_json(s: &StepStats) -> Value {
    json!({ "accepted": s.accepted, "rejected": s.rejected, "rhs_evals": s.rhs_evals })
}

fn health_json(h: &StateHealth) -> Value {
    json!({
        "max_trace_defect": h.max_trace_defect,
        "max_hermiticity_defect": h.max_hermiticity_defect,
        "min_eigenvalue": h.min_eigenvalue,
        "samples": h.count,
        "physical": h.is_physical(),
    })
}

fn diagnostics_json(d: &EvolutionDiagnostics) -> Value {
    json!({
        "steps": steps_json(&d.steps),
        "solution_time_s": d.solution_time.as_secs_f64(),
        "total_time_s": d.total_time.as_secs_f64(),
    })
}

fn header(cfg: &RunConfig, command: &str, system: &System) -> Value {
    json!({
        "command": command,
        "version": VERSION,
        "config": serde_json::to_value(cfg).expect("config serializes"),
        "period": system.period(),
        "warnings": system.hamiltonian.warnings(),
    })
}

/// Time column followed by one column per configured observable.
fn observable_table(cfg: &RunConfig, times: &[f64], states: &[DensityMatrix]) -> Table {
    let mut table = Table::new(std::iter::once("time").chain(cfg.outputs.iter().map(|o| o.name())));
    for (t, rho) in times.iter().zip(states) {
        table.push_floats(std::iter::once(*t).chain(cfg.outputs.iter().map(|&o| evaluate(o, rho))));
    }
    table
}

/// Paths and headline numbers of an evolve run.
#[derive(Debug, Clone)]
pub struct EvolveReport {
    pub tables: Vec<(SolverKind, PathBuf)>,
    pub metadata: PathBuf,
    /// Present when both solvers ran.
    pub agreement: Option<Agreement>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Agreement {
    pub max_trace_distance: f64,
    pub max_observable_difference: f64,
}

/// Evolves the configured system and writes `evolve_<solver>.csv` plus
/// `<command>.json`; with both solvers also `agreement.json`.
pub fn run_evolve(cfg: &RunConfig, out: &Path) -> Result<EvolveReport, CliError> {
    run_evolve_as(cfg, out, "evolve")
}

/// Evolve with both solvers and report their agreement.
pub fn run_compare(cfg: &RunConfig, out: &Path) -> Result<EvolveReport, CliError> {
    let cfg = RunConfig { solver: SolverChoice::Both, ..cfg.clone() };
    run_evolve_as(&cfg, out, "compare")
}

fn run_evolve_as(cfg: &RunConfig, out: &Path, command: &str) -> Result<EvolveReport, CliError> {
    let system = System::from_config(cfg)?;
    let times = cfg.time.resolve(system.period());
    let rho0 = initial_state(cfg);
    let tol = ode_tol(cfg);
    let mut meta = header(cfg, command, &system);
    let mut results = Vec::new();
    let mut tables = Vec::new();
    for &kind in cfg.solver.kinds() {
        let start = Instant::now();
        let solver = Solver::build(kind, &system, cfg)?;
        let res = solver.evolve(&rho0, &times, &tol)?;
        let wall = start.elapsed();
        let path = prepare(out, &format!("evolve_{kind}.csv"))?;
        observable_table(cfg, &times, &res.states).write(&path)?;
        meta[kind.label()] = json!({
            "solver": solver.describe(),
            "diagnostics": diagnostics_json(&res.diagnostics),
            "health": health_json(&StateHealth::of(&res.states)),
            "wall_time_s": wall.as_secs_f64(),
        });
        tables.push((kind, path));
        results.push(res);
    }
    let agreement = if let [a, b] = &results[..] {
        let max_trace_distance = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| trace_distance(x, y).expect("same dimension"))
            .fold(0.0, f64::max);
        let max_observable_difference = a
            .states
            .iter()
            .zip(&b.states)
            .flat_map(|(x, y)| cfg.outputs.iter().map(move |&o| (evaluate(o, x) - evaluate(o, y)).abs()))
            .fold(0.0, f64::max);
        let agreement = Agreement { max_trace_distance, max_observable_difference };
        let report = json!({
            "solvers": ["flime", "reference"],
            "samples": times.len(),
            "max_trace_distance": max_trace_distance,
            "max_observable_difference": max_observable_difference,
        });
        write_json(&prepare(out, "agreement.json")?, &report)?;
        meta["agreement"] = report;
        Some(agreement)
    } else {
        None
    };
    let metadata = prepare(out, &format!("{command}.json"))?;
    write_json(&metadata, &meta)?;
    Ok(EvolveReport { tables, metadata, agreement })
}

pub fn ness_options(cfg: &RunConfig) -> NessOptions {
    NessOptions {
        conv_tol: cfg.ness.conv_tol,
        max_periods: cfg.ness.max_periods,
        samples_per_period: cfg.ness.samples_per_period,
        consecutive: cfg.ness.consecutive,
        tol: ode_tol(cfg),
    }
}

fn ness_json(n: &NessResult) -> Value {
    json!({
        "converged": n.converged,
        "periods_to_converge": n.periods_to_converge,
        "period_mean": n.period_mean,
        "peak_to_trough": n.peak_to_trough(),
        "residual": n.residual,
        "health": health_json(&n.health),
        "steps": steps_json(&n.steps),
    })
}

fn ness_for(solver: &Solver, cfg: &RunConfig) -> Result<NessResult, CliError> {
    let obs = observable_operator(cfg.ness.observable)
        .ok_or_else(|| CliError::Config(crate::ConfigError::Invalid("ness.observable must be linear; purity is not".into())))?;
    Ok(evolve_to_ness(solver.equation(), &initial_state(cfg), &obs, &ness_options(cfg))?)
}

#[derive(Debug, Clone)]
pub struct NessReport {
    pub results: Vec<(SolverKind, NessResult)>,
    pub metadata: PathBuf,
}

/// Integrates to the periodic steady state and writes the final cycle to
/// `ness_<solver>.csv`; convergence data go to `ness.json`.
pub fn run_ness(cfg: &RunConfig, out: &Path) -> Result<NessReport, CliError> {
    let system = System::from_config(cfg)?;
    let mut meta = header(cfg, "ness", &system);
    let mut results = Vec::new();
    for &kind in cfg.solver.kinds() {
        let start = Instant::now();
        let solver = Solver::build(kind, &system, cfg)?;
        let ness = ness_for(&solver, cfg)?;
        observable_table(cfg, &ness.cycle_times, &ness.cycle).write(&prepare(out, &format!("ness_{kind}.csv"))?)?;
        meta[kind.label()] = json!({
            "solver": solver.describe(),
            "ness": ness_json(&ness),
            "wall_time_s": start.elapsed().as_secs_f64(),
        });
        results.push((kind, ness));
    }
    let metadata = prepare(out, "ness.json")?;
    write_json(&metadata, &meta)?;
    Ok(NessReport { results, metadata })
}

#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub results: Vec<(SolverKind, SpectrumResult)>,
    pub metadata: PathBuf,
}

/// Emission spectrum of `sigma_minus` in the steady state, written as
/// `(detuning, intensity)` to `spectrum_<solver>.csv`.
pub fn run_spectrum(cfg: &RunConfig, out: &Path) -> Result<SpectrumReport, CliError> {
    let system = System::from_config(cfg)?;
    let sc = &cfg.spectrum;
    let mut meta = header(cfg, "spectrum", &system);
    let mut results = Vec::new();
    for &kind in cfg.solver.kinds() {
        let start = Instant::now();
        let solver = Solver::build(kind, &system, cfg)?;
        let ness = ness_for(&solver, cfg)?;
        let n = ness.cycle.len();
        let starts: Vec<(f64, DensityMatrix)> = (0..sc.starts.min(n))
            .map(|j| {
                let i = (j * n / sc.starts.min(n) + n - 1) % n;
                (ness.cycle_times[i], ness.cycle[i].clone())
            })
            .collect();
        let taus = tau_grid(sc.tau_max, sc.n_tau);
        let copts = CorrelationOptions { tol: ode_tol(cfg), incoherent: sc.incoherent, demodulate: sc.demodulate };
        let g1 = correlation_g1(solver.equation(), &starts, &two_level::sigma_minus(), &taus, &copts)?;
        let window = match sc.window {
            WindowChoice::Hann => Window::Hann,
            WindowChoice::Rectangular => Window::Rectangular,
        };
        let spec = spectrum(&g1, &taus, window, sc.fft_len)?;
        let mut table = Table::new(["detuning", "intensity"]);
        for (d, s) in spec.detunings.iter().zip(&spec.intensities) {
            table.push_floats([*d, *s]);
        }
        table.write(&prepare(out, &format!("spectrum_{kind}.csv"))?)?;
        let peaks: Vec<f64> = spec.peaks(sc.peak_threshold).into_iter().map(|i| spec.detunings[i]).collect();
        meta[kind.label()] = json!({
            "solver": solver.describe(),
            "ness": ness_json(&ness),
            "resolution": spec.resolution(),
            "negativity": spec.negativity(),
            "peaks": peaks,
            "start_times": starts.iter().map(|s| s.0).collect::<Vec<_>>(),
            "wall_time_s": start.elapsed().as_secs_f64(),
        });
        results.push((kind, spec));
    }
    let metadata = prepare(out, "spectrum.json")?;
    write_json(&metadata, &meta)?;
    Ok(SpectrumReport { results, metadata })
}
