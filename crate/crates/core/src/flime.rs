//! Floquet-Lindblad rate superoperator: term construction, negligibility
//! filtering, grouping by oscillation frequency, and time evolution.
//!
//! States are integrated in the interaction frame spanned by the Floquet
//! states `|Psi_b(t)> = U(t, 0) |phi_b(0)>`. In that frame the Hamiltonian
//! drops out entirely: every dissipator term carries its full oscillation
//! frequency, quasienergy differences included, so the generator has no
//! separate coherent part.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::floquet::{fourier_coefficients, FloquetBasis, FloquetOptions, FourierOperator};
use crate::hamiltonians::PeriodicHamiltonian;
use crate::master::{evolve_with, EvolutionResult, MasterEquation};
use crate::ode::OdeTol;
use crate::qops::{DensityMatrix, Operator, SparseSuperOperator, SuperOperator, C64, ZERO};

/// A system operator coupled to a white-noise bath with rate `gamma`.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseChannel {
    op: Operator,
    rate: f64,
}

impl CollapseChannel {
    pub fn new(op: Operator, rate: f64) -> Result<Self> {
        if !(rate >= 0.0 && rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("collapse rate must be finite and >= 0, got {rate}")));
        }
        Ok(Self { op, rate })
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Threshold on the negligibility factor `|delta| / |S S'|` above which a
/// term is dropped. Zero is the secular approximation, infinity keeps all.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SecularCutoff(f64);

impl SecularCutoff {
    pub const SECULAR: Self = Self(0.0);
    pub const NONE: Self = Self(f64::INFINITY);

    pub fn new(value: f64) -> Result<Self> {
        if value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter(format!("secular cutoff must be >= 0, got {value}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn keeps(self, negligibility: f64) -> bool {
        negligibility <= self.0
    }
}

impl Default for SecularCutoff {
    fn default() -> Self {
        Self::SECULAR
    }
}

/// Parameters of the rate-term construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TermOptions {
    pub k_max: usize,
    pub secular_cutoff: SecularCutoff,
    /// Terms with `|S_ab(k) S_a'b'(k')|` below this are never built.
    pub coeff_floor: f64,
}

impl Default for TermOptions {
    fn default() -> Self {
        Self { k_max: 20, secular_cutoff: SecularCutoff::SECULAR, coeff_floor: 1e-12 }
    }
}

/// One product `S_ab(k) conj(S_a'b'(k'))` of the expanded dissipator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateTerm {
    pub channel: usize,
    pub alpha: usize,
    pub beta: usize,
    pub k: i32,
    pub alpha_p: usize,
    pub beta_p: usize,
    pub k_p: i32,
    pub delta: f64,
    pub weight: C64,
    pub negligibility: f64,
    pub is_static: bool,
    group: GroupKey,
}

impl RateTerm {
    pub fn kept_at(&self, cutoff: SecularCutoff) -> bool {
        self.is_static || cutoff.keeps(self.negligibility)
    }
}

/// Oscillation frequency `sign * reps[cluster] + j w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct GroupKey {
    cluster: usize,
    sign: i8,
    j: i64,
}

/// Rate superoperator terms sharing one oscillation frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillatingGroup {
    pub delta: f64,
    pub superop: SparseSuperOperator,
}

/// Static and oscillating parts of the Floquet-frame rate superoperator,
/// `R(t) = R_0 + sum_d e^{i d t} R_d`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTermSet {
    dim: usize,
    secular_cutoff: SecularCutoff,
    static_part: SparseSuperOperator,
    oscillating: Vec<OscillatingGroup>,
    kept: usize,
    dropped: usize,
}

impl RateTermSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn secular_cutoff(&self) -> SecularCutoff {
        self.secular_cutoff
    }

    pub fn static_part(&self) -> SuperOperator {
        self.static_part.to_dense()
    }

    pub fn oscillating(&self) -> &[OscillatingGroup] {
        &self.oscillating
    }

    pub fn kept_count(&self) -> usize {
        self.kept
    }

    pub fn dropped_count(&self) -> usize {
        self.dropped
    }

    /// `R(t)` as a dense superoperator.
    pub fn assemble(&self, t: f64) -> SuperOperator {
        let mut r = self.static_part.to_dense();
        for g in &self.oscillating {
            r.add_scaled(&g.superop.to_dense(), C64::from_polar(1.0, g.delta * t)).expect("same dim");
        }
        r
    }

    /// `out = R(t) v`.
    pub fn apply(&self, t: f64, v: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|x| *x = ZERO);
        self.static_part.apply_add(C64::new(1.0, 0.0), v, out);
        for g in &self.oscillating {
            g.superop.apply_add(C64::from_polar(1.0, g.delta * t), v, out);
        }
    }
}

/// Quasienergy-difference combinations `(e_a - e_b) - (e_a' - e_b')`,
/// reduced modulo `w` and clustered so that numerically equal frequencies
/// share one representative.
struct FrequencyTable {
    n: usize,
    omega: f64,
    /// Per quadruple `(a, b, a', b')`: signed cluster and zone offset.
    quad: Vec<(usize, i8, i64)>,
    reps: Vec<f64>,
}

impl FrequencyTable {
    fn new(eps: &[f64], omega: f64) -> Self {
        let n = eps.len();
        let tol = 1e-12 * omega;
        let mut raw = Vec::with_capacity(n.pow(4));
        for bp in 0..n {
            for ap in 0..n {
                for b in 0..n {
                    for a in 0..n {
                        let d = (eps[a] - eps[b]) - (eps[ap] - eps[bp]);
                        let j = (d / omega).round();
                        raw.push((d - j * omega, j as i64));
                    }
                }
            }
        }
        // Cluster magnitudes so that d and -d always get opposite
        // representatives.
        let mut mags: Vec<f64> = raw.iter().map(|(d, _)| d.abs()).collect();
        mags.sort_by(f64::total_cmp);
        let mut clusters: Vec<Vec<f64>> = Vec::new();
        for m in mags {
            match clusters.last_mut() {
                Some(c) if m - c[c.len() - 1] <= tol => c.push(m),
                _ => clusters.push(vec![m]),
            }
        }
        let reps: Vec<f64> = clusters
            .iter()
            .map(|c| {
                if c[0] <= tol {
                    0.0
                } else if (c[c.len() - 1] - omega / 2.0).abs() <= tol {
                    omega / 2.0
                } else {
                    c.iter().sum::<f64>() / c.len() as f64
                }
            })
            .collect();
        let bounds: Vec<f64> = clusters.iter().map(|c| c[c.len() - 1]).collect();
        let quad = raw
            .iter()
            .map(|&(d, j)| {
                let cluster = bounds.partition_point(|&b| b < d.abs());
                let rep = reps[cluster];
                if rep == 0.0 {
                    (cluster, 0, j)
                } else if rep == omega / 2.0 && d < 0.0 {
                    // -w/2 + j w is the same frequency as w/2 + (j - 1) w.
                    (cluster, 1, j - 1)
                } else {
                    (cluster, if d < 0.0 { -1 } else { 1 }, j)
                }
            })
            .collect();
        Self { n, omega, quad, reps }
    }

    fn get(&self, a: usize, b: usize, ap: usize, bp: usize) -> (usize, i8, i64) {
        let n = self.n;
        self.quad[a + n * (b + n * (ap + n * bp))]
    }

    fn frequency(&self, key: GroupKey) -> f64 {
        key.sign as f64 * self.reps[key.cluster] + key.j as f64 * self.omega
    }
}

/// Every term of the expanded dissipator whose coefficient product clears
/// `coeff_floor`, annotated with frequency, weight and negligibility.
pub fn enumerate_terms(
    basis: &FloquetBasis,
    channels: &[CollapseChannel],
    opts: &TermOptions,
) -> Result<(Vec<RateTerm>, usize)> {
    let n = basis.dim();
    if n == 0 {
        return Err(Error::InvalidParameter("empty Floquet basis".into()));
    }
    if !(opts.coeff_floor >= 0.0) {
        return Err(Error::InvalidParameter("coeff_floor must be >= 0".into()));
    }
    let table = FrequencyTable::new(basis.quasienergies(), basis.omega());
    let mut terms = Vec::new();
    let mut floored = 0usize;
    for (c, channel) in channels.iter().enumerate() {
        check_dim(n, channel.op().dim())?;
        if channel.rate() == 0.0 {
            continue;
        }
        let f = fourier_coefficients(basis, channel.op(), opts.k_max)?;
        let entries = coefficient_list(&f);
        for &(a, b, k, s) in &entries {
            for &(ap, bp, kp, sp) in &entries {
                let magnitude = s.norm() * sp.norm();
                if magnitude < opts.coeff_floor {
                    floored += 1;
                    continue;
                }
                let (cluster, sign, j_off) = table.get(a, b, ap, bp);
                let group = GroupKey { cluster, sign, j: j_off + (k - kp) as i64 };
                let is_static = sign == 0 && group.j == 0;
                let delta = table.frequency(group);
                let negligibility = if is_static { 0.0 } else { delta.abs() / magnitude };
                terms.push(RateTerm {
                    channel: c,
                    alpha: a,
                    beta: b,
                    k,
                    alpha_p: ap,
                    beta_p: bp,
                    k_p: kp,
                    delta,
                    weight: s * sp.conj() * channel.rate(),
                    negligibility,
                    is_static,
                    group,
                });
            }
        }
    }
    Ok((terms, floored))
}

fn coefficient_list(f: &FourierOperator) -> Vec<(usize, usize, i32, C64)> {
    let n = f.dim();
    let k_max = f.k_max() as i32;
    let mut out = Vec::with_capacity(n * n * (2 * k_max as usize + 1));
    for k in -k_max..=k_max {
        for b in 0..n {
            for a in 0..n {
                out.push((a, b, k, f.get(a, b, k)));
            }
        }
    }
    out
}

/// Dense accumulator of one frequency group.
struct Accumulator {
    values: Vec<C64>,
    touched: Vec<bool>,
}

impl Accumulator {
    fn new(n2: usize) -> Self {
        Self { values: vec![ZERO; n2 * n2], touched: vec![false; n2 * n2] }
    }

    fn add(&mut self, n2: usize, row: usize, col: usize, w: C64) {
        let idx = row + n2 * col;
        self.values[idx] += w;
        self.touched[idx] = true;
    }

    /// Adds the vectorized `w (A rho A'^dag - {A'^dag A, rho}/2)` with
    /// `A = |a><b|`, `A' = |a'><b'|`.
    fn add_term(&mut self, n: usize, t: &RateTerm) {
        let n2 = n * n;
        let w = t.weight;
        self.add(n2, t.alpha + n * t.alpha_p, t.beta + n * t.beta_p, w);
        if t.alpha == t.alpha_p {
            let half = -0.5 * w;
            for m in 0..n {
                self.add(n2, t.beta_p + n * m, t.beta + n * m, half);
                self.add(n2, m + n * t.beta, m + n * t.beta_p, half);
            }
        }
    }
}

/// Builds the rate superoperator, filtering by negligibility and grouping
/// the kept terms by oscillation frequency.
pub fn build_terms(basis: &FloquetBasis, channels: &[CollapseChannel], opts: &TermOptions) -> Result<RateTermSet> {
    let n = basis.dim();
    let n2 = n * n;
    let (terms, _) = enumerate_terms(basis, channels, opts)?;
    let mut static_acc = Accumulator::new(n2);
    let mut groups: BTreeMap<GroupKey, (f64, Accumulator)> = BTreeMap::new();
    let (mut kept, mut dropped) = (0, 0);
    for t in &terms {
        if !t.kept_at(opts.secular_cutoff) {
            dropped += 1;
            continue;
        }
        kept += 1;
        if t.weight == ZERO {
            continue;
        }
        if t.is_static {
            static_acc.add_term(n, t);
        } else {
            groups.entry(t.group).or_insert_with(|| (t.delta, Accumulator::new(n2))).1.add_term(n, t);
        }
    }
    let static_part = SparseSuperOperator::from_dense_buffer(n, &static_acc.values, &static_acc.touched);
    let oscillating = groups
        .into_values()
        .map(|(delta, acc)| OscillatingGroup {
            delta,
            superop: SparseSuperOperator::from_dense_buffer(n, &acc.values, &acc.touched),
        })
        .filter(|g| g.superop.nnz() > 0)
        .collect();
    Ok(RateTermSet { dim: n, secular_cutoff: opts.secular_cutoff, static_part, oscillating, kept, dropped })
}

/// Direct evaluation of the Floquet-frame dissipator acting on `rho`: sums
/// every term with its time-dependent operators and no filtering.
pub fn dissipator_bruteforce(
    basis: &FloquetBasis,
    channels: &[CollapseChannel],
    k_max: usize,
    rho: &Operator,
    t: f64,
) -> Result<Operator> {
    let n = basis.dim();
    check_dim(n, rho.dim())?;
    let eps = basis.quasienergies();
    let w = basis.omega();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for channel in channels {
        if channel.rate() == 0.0 {
            continue;
        }
        let f = fourier_coefficients(basis, channel.op(), k_max)?;
        let ops: Vec<DMatrix<C64>> = coefficient_list(&f)
            .into_iter()
            .map(|(a, b, k, s)| {
                let mut m = DMatrix::zeros(n, n);
                m[(a, b)] = s * C64::from_polar(1.0, (eps[a] - eps[b] + k as f64 * w) * t);
                m
            })
            .collect();
        for x in &ops {
            for y in &ops {
                let yd = y.adjoint();
                let yx = &yd * x;
                let term = x * rho.matrix() * &yd - (&yx * rho.matrix() + rho.matrix() * &yx) * C64::new(0.5, 0.0);
                out += term * C64::new(channel.rate(), 0.0);
            }
        }
    }
    Operator::from_matrix(out)
}

/// Floquet basis and rate-term construction parameters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FlimeOptions {
    pub floquet: FloquetOptions,
    pub terms: TermOptions,
}

/// The Floquet-Lindblad master equation for one system and set of channels.
#[derive(Debug, Clone)]
pub struct FlimeSolver {
    basis: FloquetBasis,
    terms: RateTermSet,
    setup_time: Duration,
}

impl FlimeSolver {
    pub fn new(h: &PeriodicHamiltonian, channels: &[CollapseChannel], opts: &FlimeOptions) -> Result<Self> {
        let start = Instant::now();
        let basis = FloquetBasis::compute(h, &opts.floquet)?;
        let mut solver = Self::with_basis(basis, channels, &opts.terms)?;
        solver.setup_time = start.elapsed();
        Ok(solver)
    }

    pub fn with_basis(basis: FloquetBasis, channels: &[CollapseChannel], opts: &TermOptions) -> Result<Self> {
        let start = Instant::now();
        let terms = build_terms(&basis, channels, opts)?;
        Ok(Self { basis, terms, setup_time: start.elapsed() })
    }

    pub fn basis(&self) -> &FloquetBasis {
        &self.basis
    }

    pub fn terms(&self) -> &RateTermSet {
        &self.terms
    }

    /// Wall time spent on the Floquet basis and the rate terms.
    pub fn setup_time(&self) -> Duration {
        self.setup_time
    }

    /// Evolves `rho0` from `t = 0`; `times` must be strictly increasing and
    /// non-negative.
    pub fn evolve(&self, rho0: &DensityMatrix, times: &[f64], tol: &OdeTol) -> Result<EvolutionResult> {
        self.evolve_from(0.0, rho0, times, tol)
    }

    pub fn evolve_from(&self, t0: f64, rho0: &DensityMatrix, times: &[f64], tol: &OdeTol) -> Result<EvolutionResult> {
        let mut result = evolve_with(self, rho0, t0, times, tol, self.setup_time, true)?;
        let d = &mut result.diagnostics;
        d.kept_terms = self.terms.kept_count();
        d.dropped_terms = self.terms.dropped_count();
        d.oscillating_groups = self.terms.oscillating().len();
        Ok(result)
    }
}

impl MasterEquation for FlimeSolver {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn period(&self) -> f64 {
        self.basis.period()
    }

    fn max_step(&self) -> Option<f64> {
        (!self.terms.oscillating().is_empty()).then(|| self.basis.period() / 8.0)
    }

    fn to_native(&self, op: &Operator, t: f64) -> Vec<C64> {
        let psi = self.basis.states_at(t);
        (psi.matrix().adjoint() * op.matrix() * psi.matrix()).as_slice().to_vec()
    }

    fn to_lab(&self, v: &[C64], t: f64) -> Operator {
        let n = self.dim();
        let psi = self.basis.states_at(t);
        let rho = DMatrix::from_column_slice(n, n, v);
        Operator::from_matrix(psi.matrix() * rho * psi.matrix().adjoint()).expect("square")
    }

    fn rhs(&self, t: f64, v: &[C64], out: &mut [C64]) {
        self.terms.apply(t, v, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{driven_2ls_full, driven_2ls_rwa};
    use crate::qops::{fold, two_level, unfold};

    fn lowering(gamma: f64) -> Vec<CollapseChannel> {
        vec![CollapseChannel::new(two_level::sigma_minus(), gamma).unwrap()]
    }

    fn basis_full() -> FloquetBasis {
        let h = driven_2ls_full(1.0, 1.0, C64::new(0.5, 0.0), C64::new(0.5, 0.0)).unwrap();
        FloquetBasis::compute(&h, &FloquetOptions::default()).unwrap()
    }

    fn all_terms(k_max: usize) -> TermOptions {
        TermOptions { k_max, secular_cutoff: SecularCutoff::NONE, coeff_floor: 0.0 }
    }

    #[test]
    fn rejects_negative_rates_and_cutoffs() {
        assert!(CollapseChannel::new(two_level::sigma_minus(), -1.0).is_err());
        assert!(SecularCutoff::new(-0.1).is_err());
        assert!(SecularCutoff::new(f64::NAN).is_err());
    }

    #[test]
    fn secular_cutoff_has_no_oscillating_terms() {
        let set = build_terms(&basis_full(), &lowering(0.1), &TermOptions::default()).unwrap();
        assert!(set.oscillating().is_empty());
        assert!(set.dropped_count() > 0);
    }

    #[test]
    fn infinite_cutoff_keeps_everything_above_floor() {
        let basis = basis_full();
        let opts = TermOptions { secular_cutoff: SecularCutoff::NONE, ..Default::default() };
        let (terms, _) = enumerate_terms(&basis, &lowering(0.1), &opts).unwrap();
        let set = build_terms(&basis, &lowering(0.1), &opts).unwrap();
        assert_eq!(set.kept_count(), terms.len());
        assert_eq!(set.dropped_count(), 0);
    }

    #[test]
    fn identical_index_tuples_have_zero_frequency() {
        let (terms, _) = enumerate_terms(&basis_full(), &lowering(0.1), &all_terms(5)).unwrap();
        for t in terms.iter().filter(|t| (t.alpha, t.beta, t.k) == (t.alpha_p, t.beta_p, t.k_p)) {
            assert!(t.is_static && t.delta == 0.0);
        }
    }

    #[test]
    fn assemble_matches_bruteforce() {
        let basis = basis_full();
        let channels = lowering(0.3);
        let set = build_terms(&basis, &channels, &all_terms(10)).unwrap();
        let rho = DensityMatrix::maximally_mixed(2);
        let other = Operator::from_rows(2, &[C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)])
            .unwrap();
        for &t in &[0.0, 0.37, 1.9, 12.3] {
            for r in [rho.as_operator(), &other] {
                let direct = dissipator_bruteforce(&basis, &channels, 10, r, t).unwrap();
                let via = set.assemble(t).apply_to(r).unwrap();
                assert!((&direct - &via).max_abs() < 1e-10, "t = {t}");
                assert!(direct.trace().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bruteforce_matches_lab_frame_dissipator() {
        // Independent of the Fourier expansion: D[S] evaluated in the lab
        // frame and rotated into the Floquet frame.
        let basis = basis_full();
        let gamma = 0.3;
        let s = two_level::sigma_minus();
        let rho = Operator::from_rows(2, &[C64::new(0.6, 0.0), C64::new(0.2, 0.1), C64::new(0.2, -0.1), C64::new(0.4, 0.0)])
            .unwrap();
        for &t in &[0.2, 3.3] {
            let psi = basis.states_at(t);
            let lab = &(&psi * &rho) * &psi.dagger();
            let sd = s.dagger();
            let sds = &sd * &s;
            let d = &(&(&s * &lab) * &sd) - &(&(&sds * &lab) + &(&lab * &sds)).scale(C64::new(0.5, 0.0));
            let expected = (&(&psi.dagger() * &d) * &psi).scale(C64::new(gamma, 0.0));
            let got = dissipator_bruteforce(&basis, &lowering(gamma), 20, &rho, t).unwrap();
            assert!((&expected - &got).max_abs() < 1e-9);
        }
    }

    #[test]
    fn zero_rate_gives_zero_generator() {
        let basis = basis_full();
        let set = build_terms(&basis, &lowering(0.0), &all_terms(10)).unwrap();
        assert!(set.assemble(0.4).max_abs_diff(&SuperOperator::zeros(2)) == 0.0);
        let d = dissipator_bruteforce(&basis, &lowering(0.0), 10, &Operator::identity(2), 1.0).unwrap();
        assert_eq!(d.max_abs(), 0.0);
    }

    #[test]
    fn single_frequency_periodicity() {
        let basis = basis_full();
        let set = build_terms(&basis, &lowering(0.2), &all_terms(3)).unwrap();
        let g = &set.oscillating()[0];
        let single = RateTermSet { oscillating: vec![g.clone()], ..set.clone() };
        let t = 0.77;
        let shifted = t + std::f64::consts::TAU / g.delta.abs();
        assert!(single.assemble(t).max_abs_diff(&single.assemble(shifted)) < 1e-10);
        let expected = &single.static_part() + &g.superop.to_dense();
        assert!(single.assemble(0.0).max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn frequencies_are_distinct_across_groups() {
        let set = build_terms(&basis_full(), &lowering(0.2), &all_terms(10)).unwrap();
        let mut deltas: Vec<f64> = set.oscillating().iter().map(|g| g.delta).collect();
        deltas.sort_by(f64::total_cmp);
        for w in deltas.windows(2) {
            assert!(w[1] - w[0] > 1e-12 * w[1].abs().max(1.0));
        }
        assert!(deltas.iter().all(|d| *d != 0.0));
    }

    #[test]
    fn kept_sets_are_nested_in_cutoff() {
        let (terms, _) = enumerate_terms(&basis_full(), &lowering(0.2), &TermOptions::default()).unwrap();
        let cutoffs = [0.0, 0.1, 1.0, 10.0, 1e3, f64::INFINITY].map(|c| SecularCutoff::new(c).unwrap());
        for pair in cutoffs.windows(2) {
            for t in &terms {
                assert!(!t.kept_at(pair[0]) || t.kept_at(pair[1]));
            }
        }
    }

    #[test]
    fn free_decay_matches_exponential() {
        let h = driven_2ls_rwa(1.0, 0.8, ZERO).unwrap();
        let gamma = 0.25;
        let opts = FlimeOptions { terms: all_terms(5), ..Default::default() };
        let solver = FlimeSolver::new(&h, &lowering(gamma), &opts).unwrap();
        let psi = [C64::new(0.6, 0.0), C64::new(0.8, 0.0)];
        let rho0 = DensityMatrix::pure(&psi).unwrap();
        let times: Vec<f64> = (1..=20).map(|i| i as f64 * 0.5).collect();
        let res = solver.evolve(&rho0, &times, &OdeTol::default()).unwrap();
        for (rho, &t) in res.states.iter().zip(&times) {
            assert!((rho.get(1, 1).re - 0.64 * (-gamma * t).exp()).abs() < 1e-8);
            assert!(rho.trace_defect() < 1e-8);
        }
    }

    #[test]
    fn closed_system_preserves_purity() {
        let h = driven_2ls_full(1.0, 1.0, C64::new(0.5, 0.0), C64::new(0.5, 0.0)).unwrap();
        let solver = FlimeSolver::new(&h, &lowering(0.0), &FlimeOptions::default()).unwrap();
        assert_eq!(solver.terms().static_part().max_abs_diff(&SuperOperator::zeros(2)), 0.0);
        let rho0 = DensityMatrix::basis_state(2, 1);
        let times: Vec<f64> = (1..=30).map(|i| i as f64 * 0.7).collect();
        let res = solver.evolve(&rho0, &times, &OdeTol::default()).unwrap();
        for s in &res.states {
            assert!((s.purity() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn native_roundtrip() {
        let solver = FlimeSolver::new(
            &driven_2ls_full(1.0, 1.0, C64::new(0.5, 0.0), C64::new(0.2, 0.0)).unwrap(),
            &lowering(0.1),
            &FlimeOptions::default(),
        )
        .unwrap();
        let rho = DensityMatrix::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        for &t in &[0.0, 1.3, 40.0] {
            let v = solver.to_native(&rho, t);
            let back = solver.to_lab(&v, t);
            assert!((&back - rho.as_operator()).max_abs() < 1e-12);
        }
        let v = unfold(&rho);
        assert_eq!(fold(&v).unwrap(), *rho.as_operator());
    }
}
