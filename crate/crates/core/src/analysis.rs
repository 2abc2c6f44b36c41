//! Steady-state detection, period-averaged observables, two-time
//! correlations and emission spectra.

use std::f64::consts::PI;

use rustfft::FftPlanner;

use crate::error::{check_dim, Error, Result};
use crate::master::{propagate_native, MasterEquation, StateHealth};
use crate::ode::{OdeTol, StepStats};
use crate::qops::{expect, DensityMatrix, Operator, C64, ZERO};

/// Steady-state excited population of the driven two-level system in the
/// rotating wave approximation, `W^2 / (4 D^2 + g^2 + 2 W^2)`.
pub fn rwa_steady_state(rabi: f64, detuning: f64, gamma: f64) -> Result<f64> {
    if gamma < 0.0 {
        return Err(Error::InvalidParameter(format!("decay rate must be >= 0, got {gamma}")));
    }
    let denominator = 4.0 * detuning * detuning + gamma * gamma + 2.0 * rabi * rabi;
    if denominator == 0.0 {
        return Err(Error::UndefinedInput("steady state undefined without drive, detuning or decay".into()));
    }
    Ok(rabi * rabi / denominator)
}

/// Controls for [`evolve_to_ness`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NessOptions {
    /// Threshold on the max change of the within-period profile.
    pub conv_tol: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
    /// Consecutive periods below `conv_tol` required.
    pub consecutive: usize,
    pub tol: OdeTol,
}

impl Default for NessOptions {
    fn default() -> Self {
        Self { conv_tol: 1e-6, max_periods: 5000, samples_per_period: 20, consecutive: 3, tol: OdeTol::default() }
    }
}

/// The periodic steady state reached by an evolution.
#[derive(Debug, Clone)]
pub struct NessResult {
    pub converged: bool,
    /// Periods integrated before the convergence test passed.
    pub periods_to_converge: usize,
    /// Sample times of the final period, `t_p + jT/n` for `j = 1..=n`.
    pub cycle_times: Vec<f64>,
    pub cycle: Vec<DensityMatrix>,
    /// Observable at the cycle times.
    pub profile: Vec<f64>,
    pub period_mean: f64,
    /// Last profile difference.
    pub residual: f64,
    /// Health of every state sampled on the way.
    pub health: StateHealth,
    pub steps: StepStats,
}

impl NessResult {
    /// Peak-to-trough variation of the profile.
    pub fn peak_to_trough(&self) -> f64 {
        let max = self.profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = self.profile.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    }

    /// Max absolute profile difference against another steady state.
    pub fn profile_distance(&self, other: &NessResult) -> f64 {
        self.profile.iter().zip(&other.profile).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Evolves period by period until the within-period profile of
/// `observable` stops changing.
pub fn evolve_to_ness<M: MasterEquation + ?Sized>(
    eq: &M,
    rho0: &DensityMatrix,
    observable: &Operator,
    opts: &NessOptions,
) -> Result<NessResult> {
    check_dim(eq.dim(), rho0.dim())?;
    check_dim(eq.dim(), observable.dim())?;
    if !(opts.conv_tol > 0.0) || opts.samples_per_period == 0 || opts.consecutive == 0 {
        return Err(Error::InvalidParameter(format!("invalid steady-state options: {opts:?}")));
    }
    let period = eq.period();
    let spp = opts.samples_per_period;
    let mut v = eq.to_native(rho0, 0.0);
    let mut previous: Option<Vec<f64>> = None;
    let mut streak = 0;
    let mut health = StateHealth::default();
    let mut steps = StepStats::default();
    let mut residual = f64::INFINITY;
    let mut last = (Vec::new(), Vec::new(), Vec::new());
    let mut periods = 0;
    let mut converged = false;
    while periods < opts.max_periods {
        let t_p = periods as f64 * period;
        let times: Vec<f64> = (1..=spp).map(|j| t_p + period * j as f64 / spp as f64).collect();
        let (native, st, _) = propagate_native(eq, t_p, &v, &times, &opts.tol)?;
        steps.merge(st);
        periods += 1;
        let states: Vec<DensityMatrix> = native
            .iter()
            .zip(&times)
            .map(|(x, &t)| DensityMatrix::from_operator_unchecked(eq.to_lab(x, t)))
            .collect();
        let mut profile = Vec::with_capacity(spp);
        for s in &states {
            health.observe(s);
            profile.push(expect(observable, s)?.re);
        }
        if let Some(prev) = &previous {
            residual = prev.iter().zip(&profile).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            streak = if residual < opts.conv_tol { streak + 1 } else { 0 };
        }
        v = native.last().expect("samples").clone();
        previous = Some(profile.clone());
        last = (times, states, profile);
        if streak >= opts.consecutive {
            converged = true;
            break;
        }
    }
    let (cycle_times, cycle, profile) = last;
    let period_mean = profile.iter().sum::<f64>() / profile.len() as f64;
    Ok(NessResult {
        converged,
        periods_to_converge: periods,
        cycle_times,
        cycle,
        profile,
        period_mean,
        residual,
        health,
        steps,
    })
}

/// Options of [`correlation_g1`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorrelationOptions {
    pub tol: OdeTol,
    /// Subtract the coherent part `<S+(t)><S-(t + tau)>`.
    pub incoherent: bool,
    /// Multiply by `e^{i w_ref tau}`, shifting a line at `w_ref` to zero.
    pub demodulate: Option<f64>,
}

/// First-order correlation `g1(tau) = <S+(t) S-(t + tau)>`, computed by the
/// quantum regression theorem as `Tr[S- L(t + tau, t){rho(t) S+}]` and
/// averaged over the given start states.
pub fn correlation_g1<M: MasterEquation + ?Sized>(
    eq: &M,
    starts: &[(f64, DensityMatrix)],
    lower: &Operator,
    taus: &[f64],
    opts: &CorrelationOptions,
) -> Result<Vec<C64>> {
    check_dim(eq.dim(), lower.dim())?;
    if starts.is_empty() {
        return Err(Error::InvalidParameter("correlation needs at least one start state".into()));
    }
    let raising = lower.dagger();
    let mut acc = vec![ZERO; taus.len()];
    for (t0, rho) in starts {
        check_dim(eq.dim(), rho.dim())?;
        let times: Vec<f64> = taus.iter().map(|tau| t0 + tau).collect();
        let seed = rho.as_operator() * &raising;
        let (native, _, _) = propagate_native(eq, *t0, &eq.to_native(&seed, *t0), &times, &opts.tol)?;
        let coherent = if opts.incoherent {
            let mean_raising = expect(&raising, rho)?;
            let (states, _, _) = propagate_native(eq, *t0, &eq.to_native(rho, *t0), &times, &opts.tol)?;
            Some((mean_raising, states))
        } else {
            None
        };
        for (j, (v, &t)) in native.iter().zip(&times).enumerate() {
            let mut g = expect(lower, &eq.to_lab(v, t))?;
            if let Some((mean_raising, states)) = &coherent {
                g -= mean_raising * expect(lower, &eq.to_lab(&states[j], t))?;
            }
            acc[j] += g;
        }
    }
    let scale = 1.0 / starts.len() as f64;
    Ok(acc
        .into_iter()
        .zip(taus)
        .map(|(g, &tau)| {
            let phase = opts.demodulate.map_or(C64::new(1.0, 0.0), |w| C64::from_polar(1.0, w * tau));
            g * scale * phase
        })
        .collect())
}

/// Apodization applied to `g1` before the transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    /// Half of a Hann window, one at `tau = 0` and zero at `tau_max`.
    #[default]
    Hann,
    Rectangular,
}

/// One-sided Fourier transform of a correlation function.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    pub detunings: Vec<f64>,
    pub intensities: Vec<f64>,
    pub tau_max: f64,
    pub n_tau: usize,
}

impl SpectrumResult {
    /// Frequency spacing of the grid.
    pub fn resolution(&self) -> f64 {
        self.detunings[1] - self.detunings[0]
    }

    /// Most negative intensity relative to the maximum (zero when none).
    pub fn negativity(&self) -> f64 {
        let max = self.intensities.iter().cloned().fold(0.0, f64::max);
        let min = self.intensities.iter().cloned().fold(0.0, f64::min);
        if max > 0.0 {
            -min / max
        } else {
            0.0
        }
    }

    /// Indices of strict local maxima above `threshold * max`.
    pub fn peaks(&self, threshold: f64) -> Vec<usize> {
        let max = self.intensities.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let s = &self.intensities;
        (1..s.len().saturating_sub(1))
            .filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1] && s[i] > threshold * max)
            .collect()
    }
}

/// `S(d) = Re sum_j g1(tau_j) e^{i d tau_j} dtau w_j` on the grid of
/// `fft_len` frequencies spanning `[-pi/dtau, pi/dtau)`; `tau_0` gets the
/// trapezoid half weight. `fft_len` is raised to at least the number of
/// samples.
pub fn spectrum(g1: &[C64], taus: &[f64], window: Window, fft_len: usize) -> Result<SpectrumResult> {
    let n = g1.len();
    if n < 2 || taus.len() != n {
        return Err(Error::MalformedInput(format!("need matching g1 and tau grids of length >= 2, got {n} and {}", taus.len())));
    }
    if taus[0] != 0.0 {
        return Err(Error::MalformedInput("tau grid must start at zero".into()));
    }
    let dtau = taus[1] - taus[0];
    let uniform = dtau > 0.0
        && taus.iter().enumerate().all(|(j, &t)| (t - j as f64 * dtau).abs() <= 1e-9 * dtau.max(t.abs() * 1e-3));
    if !uniform {
        return Err(Error::MalformedInput("tau grid is not uniform".into()));
    }
    let m = fft_len.max(n);
    let mut buf = vec![ZERO; m];
    for (j, (g, b)) in g1.iter().zip(buf.iter_mut()).enumerate() {
        let w = match window {
            Window::Hann => 0.5 * (1.0 + (PI * j as f64 / (n - 1) as f64).cos()),
            Window::Rectangular => 1.0,
        };
        let trapezoid = if j == 0 { 0.5 } else { 1.0 };
        *b = g * (w * trapezoid * dtau);
    }
    FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
    let half = (m / 2) as i64;
    let (detunings, intensities) = (-half..m as i64 - half)
        .map(|k| {
            let d = 2.0 * PI * k as f64 / (m as f64 * dtau);
            (d, buf[k.rem_euclid(m as i64) as usize].re)
        })
        .unzip();
    Ok(SpectrumResult { detunings, intensities, tau_max: taus[n - 1], n_tau: n })
}

/// Uniform grid `0, dtau, ..., (n-1) dtau`.
pub fn tau_grid(tau_max: f64, n_tau: usize) -> Vec<f64> {
    let dtau = tau_max / (n_tau - 1) as f64;
    (0..n_tau).map(|j| j as f64 * dtau).collect()
}
