//! One-period propagator, quasienergies and Floquet modes, and Fourier
//! coefficients of system operators in the Floquet mode basis.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use rustfft::FftPlanner;

use crate::error::{check_dim, Error, Result};
use crate::hamiltonians::PeriodicHamiltonian;
use crate::ode::{integrate, OdeTol};
use crate::qops::{Operator, C64, I, ZERO};

/// Unitarity defect accepted as is; up to `REUNITARIZE_MAX` the propagator is
/// projected back onto the unitary group.
const UNITARY_TOL: f64 = 1e-9;
const REUNITARIZE_MAX: f64 = 1e-6;
const EIGEN_RESIDUAL_TOL: f64 = 1e-8;
/// Mode harmonics below this magnitude are dropped from the interpolant.
const HARMONIC_FLOOR: f64 = 1e-15;

/// Construction parameters for [`FloquetBasis::compute`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    /// Samples per period; a power of two.
    pub n_samples: usize,
    pub tol: OdeTol,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        Self { n_samples: 256, tol: OdeTol::new(1e-12, 1e-14) }
    }
}

/// Writes `H(t)` into a preallocated buffer.
#[derive(Debug, Clone)]
pub(crate) struct HamiltonianSampler {
    components: Vec<(f64, DMatrix<C64>)>,
    buffer: DMatrix<C64>,
}

impl HamiltonianSampler {
    pub(crate) fn new(h: &PeriodicHamiltonian) -> Self {
        let components = h
            .components()
            .iter()
            .map(|(k, op)| (*k as f64 * h.omega(), op.matrix().clone()))
            .collect();
        Self { components, buffer: DMatrix::zeros(h.dim(), h.dim()) }
    }

    pub(crate) fn at(&mut self, t: f64) -> &DMatrix<C64> {
        self.buffer.copy_from(&self.components[0].1);
        for (freq, m) in &self.components[1..] {
            let phase = C64::from_polar(1.0, freq * t);
            self.buffer.zip_apply(m, |a, b| *a += b * phase);
        }
        &self.buffer
    }
}

/// Propagators `U(t, 0)` at the requested times, from `dU/dt = -i H(t) U`.
pub fn propagators(h: &PeriodicHamiltonian, times: &[f64], tol: &OdeTol) -> Result<Vec<Operator>> {
    let n = h.dim();
    let mut sampler = HamiltonianSampler::new(h);
    let u0 = DMatrix::<C64>::identity(n, n);
    let mut out = Vec::with_capacity(times.len());
    let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
        let hm = sampler.at(t);
        let u = DMatrixView::from_slice(y, n, n);
        let mut du = DMatrixViewMut::from_slice(dy, n, n);
        du.gemm(-I, hm, &u, ZERO);
    };
    let h_max = tol.max_step.map(|f| f * h.period());
    integrate(rhs, 0.0, u0.as_slice(), times, tol, h_max, |_, _, y| {
        out.push(Operator::from_matrix(DMatrix::from_column_slice(n, n, y)).expect("square"));
    })?;
    Ok(out)
}

fn reunitarize(u: Operator) -> Result<Operator> {
    let defect = u.unitarity_defect();
    if defect < UNITARY_TOL {
        Ok(u)
    } else if defect <= REUNITARIZE_MAX {
        Ok(u.polar_unitary())
    } else {
        Err(Error::NonUnitary { defect })
    }
}

/// The one-period propagator `U(T, 0)`.
pub fn monodromy(h: &PeriodicHamiltonian, tol: &OdeTol) -> Result<Operator> {
    let u = propagators(h, &[h.period()], tol)?.pop().expect("one output");
    reunitarize(u)
}

/// Folds a quasienergy into `(-w/2, w/2]`.
pub fn fold_quasienergy(eps: f64, omega: f64) -> f64 {
    let e = eps.rem_euclid(omega);
    if e > omega / 2.0 {
        e - omega
    } else {
        e
    }
}

/// Eigendecomposition of the monodromy: quasienergies in ascending order and
/// the matching orthonormal modes `|phi_b(0)>` as columns.
pub fn floquet_decompose(u_t: &Operator, omega: f64) -> Result<(Vec<f64>, Operator)> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter("base frequency must be positive".into()));
    }
    let defect = u_t.unitarity_defect();
    if defect > UNITARY_TOL {
        return Err(Error::NonUnitary { defect });
    }
    let n = u_t.dim();
    let period = TAU / omega;
    // Schur vectors of a normal matrix are eigenvectors, and they come out
    // orthonormal even inside degenerate eigenspaces.
    let (q, t) = nalgebra::Schur::new(u_t.matrix().clone()).unpack();
    let mut modes: Vec<(f64, nalgebra::DVector<C64>)> = Vec::with_capacity(n);
    for b in 0..n {
        let lambda = t[(b, b)];
        if (lambda.norm() - 1.0).abs() > 1e-8 {
            return Err(Error::NonUnitary { defect: (lambda.norm() - 1.0).abs() });
        }
        let mut v = q.column(b).into_owned();
        let residual = (u_t.matrix() * &v - &v * lambda).norm();
        if residual > EIGEN_RESIDUAL_TOL {
            return Err(Error::DefectiveEigenbasis { residual });
        }
        fix_phase(&mut v);
        let eps = fold_quasienergy(-lambda.arg() / period, omega);
        modes.push((eps, v));
    }
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eps = modes.iter().map(|m| m.0).collect();
    let cols: Vec<_> = modes.into_iter().map(|m| m.1).collect();
    let m = DMatrix::from_columns(&cols);
    let residual = (m.adjoint() * &m - DMatrix::identity(n, n)).camax();
    if residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::DefectiveEigenbasis { residual });
    }
    Ok((eps, Operator::from_matrix(m)?))
}

/// Makes the largest-magnitude component real and positive; ties go to the
/// lowest index.
fn fix_phase(v: &mut nalgebra::DVector<C64>) {
    let max = v.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v.iter().position(|c| c.norm() >= max - 1e-8).expect("nonempty");
    let phase = v[pivot].conj() / v[pivot].norm();
    *v *= phase;
}

/// Quasienergies, Floquet modes sampled over one period, and the sampled
/// propagators.
#[derive(Debug, Clone)]
pub struct FloquetBasis {
    omega: f64,
    quasienergies: Vec<f64>,
    modes0: Operator,
    grid_times: Vec<f64>,
    mode_grid: Vec<Operator>,
    propagators: Vec<Operator>,
    /// Fourier series of the mode matrix, `Phi(t) = sum_k C_k e^{ikwt}`.
    harmonics: Vec<(i32, DMatrix<C64>)>,
    periodicity_defect: f64,
}

impl FloquetBasis {
    /// Monodromy, decomposition and mode grid from one integration pass.
    pub fn compute(h: &PeriodicHamiltonian, opts: &FloquetOptions) -> Result<Self> {
        let (grid, mut props) = sample_period(h, opts)?;
        let u_t = reunitarize(props.pop().expect("period endpoint"))?;
        let (eps, modes0) = floquet_decompose(&u_t, h.omega())?;
        Self::from_propagators(h.omega(), eps, modes0, grid, props, &u_t)
    }

    /// Samples the modes for given quasienergies and initial modes.
    pub fn with_modes(
        h: &PeriodicHamiltonian,
        quasienergies: Vec<f64>,
        modes0: Operator,
        opts: &FloquetOptions,
    ) -> Result<Self> {
        check_dim(h.dim(), modes0.dim())?;
        check_dim(h.dim(), quasienergies.len())?;
        let (grid, mut props) = sample_period(h, opts)?;
        let u_t = props.pop().expect("period endpoint");
        Self::from_propagators(h.omega(), quasienergies, modes0, grid, props, &u_t)
    }

    fn from_propagators(
        omega: f64,
        quasienergies: Vec<f64>,
        modes0: Operator,
        grid_times: Vec<f64>,
        propagators: Vec<Operator>,
        u_t: &Operator,
    ) -> Result<Self> {
        let propagators = propagators.into_iter().map(reunitarize).collect::<Result<Vec<_>>>()?;
        let mode_grid: Vec<Operator> = grid_times
            .iter()
            .zip(&propagators)
            .map(|(&t, u)| with_phases(&(u * &modes0), &quasienergies, t, 1.0))
            .collect();
        let period = TAU / omega;
        let closed = with_phases(&(u_t * &modes0), &quasienergies, period, 1.0);
        let periodicity_defect = (&closed - &modes0).max_abs();
        let harmonics = mode_harmonics(&mode_grid);
        Ok(Self { omega, quasienergies, modes0, grid_times, mode_grid, propagators, harmonics, periodicity_defect })
    }

    pub fn dim(&self) -> usize {
        self.modes0.dim()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn quasienergies(&self) -> &[f64] {
        &self.quasienergies
    }

    /// Columns are the modes `|phi_b(0)>`.
    pub fn modes0(&self) -> &Operator {
        &self.modes0
    }

    pub fn n_samples(&self) -> usize {
        self.grid_times.len()
    }

    pub fn grid_times(&self) -> &[f64] {
        &self.grid_times
    }

    /// Mode matrices (columns `|phi_b(t_j)>`) at the grid times.
    pub fn mode_grid(&self) -> &[Operator] {
        &self.mode_grid
    }

    /// `U(t_j, 0)` at the grid times.
    pub fn propagators(&self) -> &[Operator] {
        &self.propagators
    }

    /// Max deviation of `|phi_b(T)>` from `|phi_b(0)>`.
    pub fn periodicity_defect(&self) -> f64 {
        self.periodicity_defect
    }

    /// Mode matrix at any time by Fourier interpolation of the grid.
    pub fn modes_at(&self, t: f64) -> Operator {
        let tau = t.rem_euclid(self.period());
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (k, c) in &self.harmonics {
            let phase = C64::from_polar(1.0, *k as f64 * self.omega * tau);
            m.zip_apply(c, |a, b| *a += b * phase);
        }
        Operator::from_matrix(m).expect("square")
    }

    /// Floquet states `|Psi_b(t)> = |phi_b(t)> e^{-i eps_b t}` as columns;
    /// equal to `U(t, 0) |phi_b(0)>`.
    pub fn states_at(&self, t: f64) -> Operator {
        with_phases(&self.modes_at(t), &self.quasienergies, t, -1.0)
    }

    /// `U(t, 0)` for any `t`, assembled from the Floquet states.
    pub fn propagator_at(&self, t: f64) -> Operator {
        &self.states_at(t) * &self.modes0.dagger()
    }

    /// Shifts quasienergy `b` by `m` Brillouin zones and multiplies its mode
    /// by `e^{imwt}`; the physical evolution is unchanged.
    pub fn shift_zone(&self, b: usize, m: i32) -> Self {
        let mut out = self.clone();
        out.quasienergies[b] += m as f64 * self.omega;
        for (grid, &t) in out.mode_grid.iter_mut().zip(&self.grid_times) {
            let phase = C64::from_polar(1.0, m as f64 * self.omega * t);
            let mut g = grid.matrix().clone();
            g.column_mut(b).iter_mut().for_each(|x| *x *= phase);
            *grid = Operator::from_matrix(g).expect("square");
        }
        out.harmonics = mode_harmonics(&out.mode_grid);
        out
    }
}

fn sample_period(h: &PeriodicHamiltonian, opts: &FloquetOptions) -> Result<(Vec<f64>, Vec<Operator>)> {
    let ns = opts.n_samples;
    if ns < 2 || !ns.is_power_of_two() {
        return Err(Error::InvalidParameter(format!("n_samples must be a power of two >= 2, got {ns}")));
    }
    let period = h.period();
    let grid: Vec<f64> = (0..ns).map(|j| period * j as f64 / ns as f64).collect();
    let mut times = grid.clone();
    times.push(period);
    let props = propagators(h, &times, &opts.tol)?;
    Ok((grid, props))
}

/// Multiplies column `b` by `e^{sign * i eps_b t}`.
fn with_phases(m: &Operator, eps: &[f64], t: f64, sign: f64) -> Operator {
    let mut out = m.matrix().clone();
    for (b, e) in eps.iter().enumerate() {
        let phase = C64::from_polar(1.0, sign * e * t);
        out.column_mut(b).iter_mut().for_each(|x| *x *= phase);
    }
    Operator::from_matrix(out).expect("square")
}

/// Discrete Fourier transforms of each matrix entry over the grid;
/// `result[k mod N_s] = (1/N_s) sum_j x_j e^{-2 pi i jk / N_s}`.
fn entrywise_dft(samples: &[DMatrix<C64>]) -> Vec<DMatrix<C64>> {
    let ns = samples.len();
    let (rows, cols) = samples[0].shape();
    let fft = FftPlanner::new().plan_fft_forward(ns);
    let mut out = vec![DMatrix::zeros(rows, cols); ns];
    let mut buf = vec![ZERO; ns];
    let scale = 1.0 / ns as f64;
    for c in 0..cols {
        for r in 0..rows {
            for (b, s) in buf.iter_mut().zip(samples) {
                *b = s[(r, c)];
            }
            fft.process(&mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                o[(r, c)] = b * scale;
            }
        }
    }
    out
}

fn mode_harmonics(grid: &[Operator]) -> Vec<(i32, DMatrix<C64>)> {
    let ns = grid.len() as i32;
    let samples: Vec<_> = grid.iter().map(|g| g.matrix().clone()).collect();
    let dft = entrywise_dft(&samples);
    let half = ns / 2;
    let mut out = Vec::new();
    // The Nyquist bin is ambiguous in sign and is dropped.
    for k in -(half - 1)..=(half - 1) {
        let c = &dft[k.rem_euclid(ns) as usize];
        if k == 0 || c.camax() > HARMONIC_FLOOR {
            out.push((k, c.clone()));
        }
    }
    out
}

/// Fourier coefficients `S_ab(k)` of `<phi_a(t)| S |phi_b(t)>`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierOperator {
    source: Operator,
    omega: f64,
    k_max: usize,
    /// Entry `k + k_max` is the matrix of coefficients at harmonic `k`.
    coeffs: Vec<Operator>,
}

impl FourierOperator {
    pub fn source(&self) -> &Operator {
        &self.source
    }

    pub fn dim(&self) -> usize {
        self.source.dim()
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// `S_ab(k)`; zero outside `|k| <= k_max`.
    pub fn get(&self, a: usize, b: usize, k: i32) -> C64 {
        if k.unsigned_abs() as usize > self.k_max {
            return ZERO;
        }
        self.coeffs[(k + self.k_max as i32) as usize].get(a, b)
    }

    pub fn harmonic(&self, k: i32) -> &Operator {
        &self.coeffs[(k + self.k_max as i32) as usize]
    }

    /// Largest coefficient magnitude at `k = +-k_max`.
    pub fn tail(&self) -> f64 {
        self.coeffs[0].max_abs().max(self.coeffs[2 * self.k_max].max_abs())
    }

    /// `sum_k S(k) e^{ikwt}`, which approximates `Phi(t)^dag S Phi(t)`.
    pub fn reconstruct(&self, t: f64) -> Operator {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx as f64 - self.k_max as f64;
            let phase = C64::from_polar(1.0, k * self.omega * t);
            m.zip_apply(c.matrix(), |a, b| *a += b * phase);
        }
        Operator::from_matrix(m).expect("square")
    }
}

/// Discrete Fourier analysis of `S` in the Floquet mode basis.
pub fn fourier_coefficients(basis: &FloquetBasis, s: &Operator, k_max: usize) -> Result<FourierOperator> {
    check_dim(basis.dim(), s.dim())?;
    let ns = basis.n_samples();
    if k_max >= ns / 2 {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} needs more than {ns} samples per period"
        )));
    }
    let samples: Vec<DMatrix<C64>> =
        basis.mode_grid.iter().map(|phi| phi.matrix().adjoint() * s.matrix() * phi.matrix()).collect();
    let dft = entrywise_dft(&samples);
    let coeffs = (-(k_max as i64)..=k_max as i64)
        .map(|k| Operator::from_matrix(dft[k.rem_euclid(ns as i64) as usize].clone()).expect("square"))
        .collect();
    Ok(FourierOperator { source: s.clone(), omega: basis.omega, k_max, coeffs })
}
