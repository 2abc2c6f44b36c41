//! Direct integration of the time-dependent Lindblad equation in the lab
//! frame. Used as a correctness reference and as the timing baseline.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{check_dim, Result};
use crate::flime::CollapseChannel;
use crate::hamiltonians::PeriodicHamiltonian;
use crate::master::{evolve_with, EvolutionResult, MasterEquation};
use crate::ode::OdeTol;
use crate::qops::{sandwich_superop, DensityMatrix, Operator, SparseSuperOperator, SuperOperator, C64, I};

/// A Hamiltonian together with its collapse channels.
#[derive(Debug, Clone)]
pub struct LiouvillianSpec {
    h: PeriodicHamiltonian,
    channels: Vec<CollapseChannel>,
}

impl LiouvillianSpec {
    pub fn new(h: PeriodicHamiltonian, channels: Vec<CollapseChannel>) -> Result<Self> {
        for c in &channels {
            check_dim(h.dim(), c.op().dim())?;
        }
        Ok(Self { h, channels })
    }

    pub fn hamiltonian(&self) -> &PeriodicHamiltonian {
        &self.h
    }

    pub fn channels(&self) -> &[CollapseChannel] {
        &self.channels
    }

    /// Harmonic components `L_k` with `L(t) = sum_k e^{ikwt} L_k`; the
    /// dissipators sit in `L_0`.
    pub fn components(&self) -> Vec<(i32, SuperOperator)> {
        let n = self.h.dim();
        let id = Operator::identity(n);
        let mut out: Vec<(i32, SuperOperator)> = self
            .h
            .components()
            .iter()
            .map(|(k, hk)| {
                let comm = &sandwich_superop(hk, &id).expect("dim") - &sandwich_superop(&id, hk).expect("dim");
                let mut l = SuperOperator::zeros(n);
                l.add_scaled(&comm, -I).expect("dim");
                (*k, l)
            })
            .collect();
        for c in &self.channels {
            let s = c.op();
            let sd = s.dagger();
            let sds = &sd * s;
            let l0 = &mut out[0].1;
            let g = C64::new(c.rate(), 0.0);
            l0.add_scaled(&sandwich_superop(s, &sd).expect("dim"), g).expect("dim");
            l0.add_scaled(&sandwich_superop(&sds, &id).expect("dim"), -0.5 * g).expect("dim");
            l0.add_scaled(&sandwich_superop(&id, &sds).expect("dim"), -0.5 * g).expect("dim");
        }
        out
    }

    /// `L(t)` such that `L(t) unfold(rho) = unfold(-i[H(t), rho] + D(rho))`.
    pub fn liouvillian_at(&self, t: f64) -> SuperOperator {
        let w = self.h.omega();
        let mut comps = self.components().into_iter();
        let mut l = comps.next().expect("static component").1;
        for (k, lk) in comps {
            l.add_scaled(&lk, C64::from_polar(1.0, k as f64 * w * t)).expect("dim");
        }
        l
    }
}

/// The direct Lindblad master equation, integrated on lab-frame supervectors.
#[derive(Debug, Clone)]
pub struct LindbladSolver {
    dim: usize,
    omega: f64,
    components: Vec<(f64, SparseSuperOperator)>,
    setup_time: Duration,
}

impl LindbladSolver {
    pub fn new(spec: &LiouvillianSpec) -> Self {
        let start = Instant::now();
        let omega = spec.hamiltonian().omega();
        let components = spec
            .components()
            .into_iter()
            .map(|(k, l)| (k as f64 * omega, sparse(&l)))
            .collect();
        Self { dim: spec.hamiltonian().dim(), omega, components, setup_time: start.elapsed() }
    }

    pub fn setup_time(&self) -> Duration {
        self.setup_time
    }

    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64], tol: &OdeTol) -> Result<EvolutionResult> {
        self.evolve_from(0.0, rho0, times, tol)
    }

    pub fn evolve_from(&self, t0: f64, rho0: &DensityMatrix, times: &[f64], tol: &OdeTol) -> Result<EvolutionResult> {
        evolve_with(self, rho0, t0, times, tol, self.setup_time, false)
    }
}

fn sparse(l: &SuperOperator) -> SparseSuperOperator {
    let m = l.matrix();
    let touched: Vec<bool> = m.iter().map(|x| *x != C64::new(0.0, 0.0)).collect();
    SparseSuperOperator::from_dense_buffer(l.dim(), m.as_slice(), &touched)
}

impl MasterEquation for LindbladSolver {
    fn dim(&self) -> usize {
        self.dim
    }

    fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    fn max_step(&self) -> Option<f64> {
        (self.components.len() > 1).then(|| self.period() / 8.0)
    }

    fn to_native(&self, op: &Operator, _t: f64) -> Vec<C64> {
        op.matrix().as_slice().to_vec()
    }

    fn to_lab(&self, v: &[C64], _t: f64) -> Operator {
        Operator::from_matrix(DMatrix::from_column_slice(self.dim, self.dim, v)).expect("square")
    }

    fn rhs(&self, t: f64, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
        for (freq, l) in &self.components {
            l.apply_add(C64::from_polar(1.0, freq * t), v, out);
        }
    }
}
