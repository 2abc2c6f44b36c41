//! Time-periodic Hamiltonians as finite harmonic series, and builders for
//! the driven, bichromatic and pulse-train two-level systems.

mod units;

pub use units::{FrequencyUnit, TimeUnit, HBAR_EV_S};

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use crate::error::{check_dim, Error, Result};
use crate::qops::{two_level, Operator, C64, ZERO};

/// One harmonic contribution `amplitude * exp(i k w t) * matrix` to `H(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicTerm {
    pub matrix: Operator,
    pub harmonic: i32,
    pub amplitude: C64,
}

impl HarmonicTerm {
    pub fn new(matrix: Operator, harmonic: i32, amplitude: C64) -> Self {
        Self { matrix, harmonic, amplitude }
    }
}

/// `H(t) = H_0 + sum_j a_j exp(i k_j w t) M_j`, periodic with `T = 2 pi / w`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicHamiltonian {
    omega: f64,
    static_part: Operator,
    terms: Vec<HarmonicTerm>,
    components: Vec<(i32, Operator)>,
    warnings: Vec<String>,
}

const HERMITIAN_TOL: f64 = 1e-12;

impl PeriodicHamiltonian {
    /// Validates dimensions, `w > 0`, and Hermiticity: the aggregated
    /// harmonic `-k` must be the conjugate transpose of harmonic `k`.
    pub fn new(omega: f64, static_part: Operator, terms: Vec<HarmonicTerm>) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!("base frequency must be positive, got {omega}")));
        }
        let dim = static_part.dim();
        let mut by_k: BTreeMap<i32, Operator> = BTreeMap::new();
        for term in &terms {
            check_dim(dim, term.matrix.dim())?;
            let contribution = term.matrix.scale(term.amplitude);
            let entry = by_k.entry(term.harmonic).or_insert_with(|| Operator::zeros(dim));
            *entry = &*entry + &contribution;
        }
        let zero_part = by_k.remove(&0);
        let full_static = match &zero_part {
            Some(z) => &static_part + z,
            None => static_part.clone(),
        };
        let scale = full_static.max_abs().max(1.0);
        if full_static.hermiticity_defect() > HERMITIAN_TOL * scale {
            return Err(Error::InvalidParameter("static part is not Hermitian".into()));
        }
        for (&k, op) in &by_k {
            let partner = by_k.get(&-k).map(|p| p.dagger()).unwrap_or_else(|| Operator::zeros(dim));
            let s = op.max_abs().max(1.0);
            if (op - &partner).max_abs() > HERMITIAN_TOL * s {
                return Err(Error::InvalidParameter(format!(
                    "harmonic {k} has no conjugate-transpose partner at harmonic {}",
                    -k
                )));
            }
        }
        let mut components: Vec<(i32, Operator)> = vec![(0, full_static)];
        components.extend(by_k.into_iter().filter(|(_, op)| op.max_abs() > 0.0));
        Ok(Self { omega, static_part, terms, components, warnings: Vec::new() })
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn terms(&self) -> &[HarmonicTerm] {
        &self.terms
    }

    /// Aggregated matrices per harmonic, harmonic 0 first; the static part
    /// includes any harmonic-0 terms.
    pub fn components(&self) -> &[(i32, Operator)] {
        &self.components
    }

    pub fn is_static(&self) -> bool {
        self.components.len() == 1
    }

    pub fn max_harmonic(&self) -> i32 {
        self.components.iter().map(|(k, _)| k.abs()).max().unwrap_or(0)
    }

    /// Non-fatal construction diagnostics (e.g. an under-resolved pulse).
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn eval(&self, t: f64) -> Operator {
        let mut h = self.components[0].1.matrix().clone();
        for (k, op) in &self.components[1..] {
            let phase = C64::from_polar(1.0, *k as f64 * self.omega * t);
            h += op.matrix() * phase;
        }
        Operator::from_matrix(h).expect("square")
    }
}

/// Resonantly or near-resonantly driven two-level system in the rotating
/// wave approximation: `H = diag(-w0/2, w0/2) + (Omega/2)|0><1| e^{iwt} + h.c.`
pub fn driven_2ls_rwa(omega0: f64, omega: f64, rabi: C64) -> Result<PeriodicHamiltonian> {
    driven_2ls_full(omega0, omega, rabi, ZERO)
}

/// Driven two-level system without the rotating wave approximation.
/// Harmonic +1 carries `(Omega/2)|0><1| + (conj(Omega~)/2)|1><0|`, harmonic -1
/// its conjugate transpose.
pub fn driven_2ls_full(omega0: f64, omega: f64, rabi: C64, rabi_counter: C64) -> Result<PeriodicHamiltonian> {
    let h0 = free_atom(omega0);
    let plus = &two_level::sigma_minus().scale(rabi * 0.5) + &two_level::sigma_plus().scale(rabi_counter.conj() * 0.5);
    let minus = plus.dagger();
    PeriodicHamiltonian::new(
        omega,
        h0,
        vec![HarmonicTerm::new(plus, 1, C64::new(1.0, 0.0)), HarmonicTerm::new(minus, -1, C64::new(1.0, 0.0))],
    )
}

/// Two-level system driven by two lasers, written in the frame rotating at
/// the mean laser frequency. `delta_bar = w0 - (w1 + w2)/2` and
/// `beat_b = w2 - w1`; the base frequency is `|b|/2`.
pub fn bichromatic(delta_bar: f64, beat_b: f64, rabi1: C64, rabi2: C64) -> Result<PeriodicHamiltonian> {
    if beat_b == 0.0 || !beat_b.is_finite() {
        return Err(Error::InvalidParameter("beat frequency must be nonzero".into()));
    }
    let h0 = free_atom(delta_bar);
    let half = C64::new(-0.5, 0.0);
    // Coefficient of exp(+i b t / 2) and of exp(-i b t / 2).
    let h_plus = &two_level::sigma_minus().scale(rabi2 * half) + &two_level::sigma_plus().scale(rabi1.conj() * half);
    let h_minus = &two_level::sigma_minus().scale(rabi1 * half) + &two_level::sigma_plus().scale(rabi2.conj() * half);
    let (k_plus, k_minus) = if beat_b > 0.0 { (1, -1) } else { (-1, 1) };
    PeriodicHamiltonian::new(
        beat_b.abs() / 2.0,
        h0,
        vec![
            HarmonicTerm::new(h_plus, k_plus, C64::new(1.0, 0.0)),
            HarmonicTerm::new(h_minus, k_minus, C64::new(1.0, 0.0)),
        ],
    )
}

/// Parameters of a periodic train of Gaussian pulses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseTrain {
    /// Detuning `Delta` of the static part `diag(-Delta, Delta)/2`.
    pub delta: f64,
    pub period: f64,
    /// Gaussian standard deviation of each pulse.
    pub sigma: f64,
    pub n_harmonics: usize,
    /// Rotation angle `integral of f(t) dt` delivered by one pulse.
    pub pulse_area: f64,
    /// Time of the pulse centre within the period.
    pub center: f64,
}

impl PulseTrain {
    /// Pulse width `T/16`, 40 harmonics, area pi, centred at `t = 0`.
    pub fn new(delta: f64, period: f64) -> Self {
        Self { delta, period, sigma: period / 16.0, n_harmonics: 40, pulse_area: PI, center: 0.0 }
    }

    /// Fourier coefficient `c_k` of the envelope, for `k >= 0`.
    pub fn coefficient(&self, k: i32) -> C64 {
        let w = TAU / self.period;
        let x = k as f64 * w * self.sigma;
        let magnitude = self.pulse_area / self.period * (-0.5 * x * x).exp();
        C64::from_polar(magnitude, -(k as f64) * w * self.center)
    }

    /// Envelope evaluated from the exact Gaussian comb, summing `2m+1` images.
    pub fn envelope_exact(&self, t: f64, images: i32) -> f64 {
        let norm = self.pulse_area / (self.sigma * (2.0 * PI).sqrt());
        (-images..=images)
            .map(|n| {
                let d = t - self.center - n as f64 * self.period;
                norm * (-d * d / (2.0 * self.sigma * self.sigma)).exp()
            })
            .sum()
    }

    pub fn build(&self) -> Result<PeriodicHamiltonian> {
        if !(self.sigma > 0.0 && self.period > 0.0 && self.n_harmonics >= 1) {
            return Err(Error::InvalidParameter(format!(
                "pulse train needs sigma > 0, period > 0 and at least one harmonic: {self:?}"
            )));
        }
        let drive = two_level::sigma_x().scale(C64::new(0.5, 0.0));
        let c0 = self.coefficient(0);
        let h0 = &free_atom(self.delta) + &drive.scale(c0);
        let mut terms = Vec::with_capacity(2 * self.n_harmonics);
        for k in 1..=self.n_harmonics as i32 {
            let ck = self.coefficient(k);
            terms.push(HarmonicTerm::new(drive.clone(), k, ck));
            terms.push(HarmonicTerm::new(drive.clone(), -k, ck.conj()));
        }
        let mut h = PeriodicHamiltonian::new(TAU / self.period, h0, terms)?;
        let ratio = self.coefficient(self.n_harmonics as i32).norm() / c0.norm();
        if ratio > 1e-3 {
            h.warnings.push(format!(
                "pulse train under-resolved: |c_{}|/|c_0| = {ratio:.3e} exceeds 1e-3",
                self.n_harmonics
            ));
        }
        Ok(h)
    }
}

/// `diag(-w/2, w/2)`.
fn free_atom(w: f64) -> Operator {
    two_level::sigma_z().scale(C64::new(w / 2.0, 0.0))
}
