//! The interface shared by the Floquet-Lindblad and the direct Lindblad
//! solvers, and the evolution driver built on it.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{check_dim, Result};
use crate::ode::{integrate, OdeTol, StepStats};
use crate::qops::{DensityMatrix, Operator, C64};

/// A linear master equation `dv/dt = L(t) v` on vectorized operators in some
/// native frame, with maps to and from the lab frame.
pub trait MasterEquation {
    fn dim(&self) -> usize;

    /// Driving period `T`.
    fn period(&self) -> f64;

    /// Step-size cap the equation itself requires, if any.
    fn max_step(&self) -> Option<f64>;

    /// Lab-frame operator at time `t` into a native-frame supervector.
    fn to_native(&self, op: &Operator, t: f64) -> Vec<C64>;

    /// Native-frame supervector at time `t` back into the lab frame.
    fn to_lab(&self, v: &[C64], t: f64) -> Operator;

    /// `out = L(t) v`.
    fn rhs(&self, t: f64, v: &[C64], out: &mut [C64]);
}

/// Counters and timings of one evolution.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvolutionDiagnostics {
    pub steps: StepStats,
    /// Rate terms kept and dropped by the negligibility filter (zero for the
    /// direct solver).
    pub kept_terms: usize,
    pub dropped_terms: usize,
    /// Distinct oscillation frequencies in the rate superoperator.
    pub oscillating_groups: usize,
    /// Integration only.
    pub solution_time: Duration,
    /// Setup, integration and lab-frame reconstruction.
    pub total_time: Duration,
}

/// Lab-frame states at the requested times.
#[derive(Debug, Clone)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    /// Native-frame states, kept when the native frame differs from the lab.
    pub native_states: Option<Vec<Operator>>,
    pub diagnostics: EvolutionDiagnostics,
}

impl EvolutionResult {
    /// `Tr(A rho(t))` at every output time.
    pub fn expectation(&self, a: &Operator) -> Result<Vec<C64>> {
        self.states.iter().map(|s| crate::qops::expect(a, s)).collect()
    }
}

/// Integrates a master equation from `rho0` at `t0`, returning native-frame
/// supervectors at `times` together with step statistics and the
/// integration wall time.
pub fn propagate_native<M: MasterEquation + ?Sized>(
    eq: &M,
    t0: f64,
    v0: &[C64],
    times: &[f64],
    tol: &OdeTol,
) -> Result<(Vec<Vec<C64>>, StepStats, Duration)> {
    let n2 = eq.dim() * eq.dim();
    check_dim(n2, v0.len())?;
    let mut h_max = eq.max_step();
    if let Some(frac) = tol.max_step {
        let cap = frac * eq.period();
        h_max = Some(h_max.map_or(cap, |h| h.min(cap)));
    }
    let mut out = Vec::with_capacity(times.len());
    let start = Instant::now();
    let stats = integrate(|t, v, dv| eq.rhs(t, v, dv), t0, v0, times, tol, h_max, |_, _, v| out.push(v.to_vec()))?;
    Ok((out, stats, start.elapsed()))
}

/// Full evolution of a density matrix from `t0`, reconstructed in the lab
/// frame. `setup_time` is added to the reported total time.
pub fn evolve_with<M: MasterEquation + ?Sized>(
    eq: &M,
    rho0: &DensityMatrix,
    t0: f64,
    times: &[f64],
    tol: &OdeTol,
    setup_time: Duration,
    keep_native: bool,
) -> Result<EvolutionResult> {
    let start = Instant::now();
    check_dim(eq.dim(), rho0.dim())?;
    let v0 = eq.to_native(rho0, t0);
    let (native, steps, solution_time) = propagate_native(eq, t0, &v0, times, tol)?;
    let n = eq.dim();
    let states = native
        .iter()
        .zip(times)
        .map(|(v, &t)| DensityMatrix::from_operator_unchecked(eq.to_lab(v, t)))
        .collect();
    let native_states = keep_native.then(|| {
        native
            .iter()
            .map(|v| Operator::from_matrix(DMatrix::from_column_slice(n, n, v)).expect("square"))
            .collect()
    });
    let diagnostics = EvolutionDiagnostics {
        steps,
        solution_time,
        total_time: setup_time + start.elapsed(),
        ..Default::default()
    };
    Ok(EvolutionResult { times: times.to_vec(), states, native_states, diagnostics })
}

/// Worst-case deviations of a set of states from being density matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateHealth {
    pub max_trace_defect: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub count: usize,
}

impl Default for StateHealth {
    fn default() -> Self {
        Self { max_trace_defect: 0.0, max_hermiticity_defect: 0.0, min_eigenvalue: f64::INFINITY, count: 0 }
    }
}

impl StateHealth {
    pub fn observe(&mut self, rho: &Operator) {
        self.max_trace_defect = self.max_trace_defect.max((rho.trace() - C64::new(1.0, 0.0)).norm());
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(rho.hermiticity_defect());
        self.min_eigenvalue = self.min_eigenvalue.min(rho.hermitian_part().hermitian_eigenvalues()[0]);
        self.count += 1;
    }

    pub fn of<'a>(states: impl IntoIterator<Item = &'a DensityMatrix>) -> Self {
        let mut h = Self::default();
        for s in states {
            h.observe(s);
        }
        h
    }

    pub fn merge(&mut self, other: &StateHealth) {
        self.max_trace_defect = self.max_trace_defect.max(other.max_trace_defect);
        self.max_hermiticity_defect = self.max_hermiticity_defect.max(other.max_hermiticity_defect);
        self.min_eigenvalue = self.min_eigenvalue.min(other.min_eigenvalue);
        self.count += other.count;
    }

    /// Trace and Hermiticity within 1e-8, eigenvalues above -1e-7.
    pub fn is_physical(&self) -> bool {
        self.max_trace_defect < 1e-8 && self.max_hermiticity_defect < 1e-8 && self.min_eigenvalue > -1e-7
    }
}
