#![allow(dead_code)]

use flime_core::hamiltonians::{HarmonicTerm, PeriodicHamiltonian};
use flime_core::qops::{Operator, C64};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub fn random_op(rng: &mut impl Rng, n: usize, scale: f64) -> Operator {
    let e: Vec<C64> = (0..n * n)
        .map(|_| C64::new(rng.random_range(-scale..scale), rng.random_range(-scale..scale)))
        .collect();
    Operator::from_rows(n, &e).unwrap()
}

/// Random Hermitian static part plus one harmonic pair.
pub fn random_single_harmonic(rng: &mut impl Rng, n: usize) -> PeriodicHamiltonian {
    let omega = rng.random_range(0.8..1.6);
    let h0 = random_op(rng, n, 1.0).hermitian_part();
    let v = random_op(rng, n, 0.25);
    PeriodicHamiltonian::new(
        omega,
        h0,
        vec![
            HarmonicTerm::new(v.clone(), 1, C64::new(1.0, 0.0)),
            HarmonicTerm::new(v.dagger(), -1, C64::new(1.0, 0.0)),
        ],
    )
    .unwrap()
}

/// Classical fixed-step fourth-order Runge-Kutta for `dpsi/dt = -i H(t) psi`
/// over `[t0, t0 + span]`, with `psi` a matrix of column states.
pub fn rk4_schrodinger(h: &PeriodicHamiltonian, psi0: &DMatrix<C64>, t0: f64, span: f64, steps: usize) -> DMatrix<C64> {
    let f = |t: f64, y: &DMatrix<C64>| h.eval(t).matrix() * y * C64::new(0.0, -1.0);
    let dt = span / steps as f64;
    let mut y = psi0.clone();
    for s in 0..steps {
        let t = t0 + s as f64 * dt;
        let k1 = f(t, &y);
        let k2 = f(t + dt / 2.0, &(&y + &k1 * C64::new(dt / 2.0, 0.0)));
        let k3 = f(t + dt / 2.0, &(&y + &k2 * C64::new(dt / 2.0, 0.0)));
        let k4 = f(t + dt, &(&y + &k3 * C64::new(dt, 0.0)));
        y += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
    }
    y
}

/// Projectors onto the RK4-propagated pure state at each of `times`.
pub fn rk4_trajectory(h: &PeriodicHamiltonian, psi0: &DVector<C64>, times: &[f64], steps_per_unit: usize) -> Vec<Operator> {
    let mut out = Vec::new();
    let mut psi = DMatrix::from_column_slice(psi0.len(), 1, psi0.as_slice());
    let mut t_prev = 0.0;
    for &t in times {
        let span = t - t_prev;
        let steps = ((span * steps_per_unit as f64).ceil() as usize).max(1);
        psi = rk4_schrodinger(h, &psi, t_prev, span, steps);
        t_prev = t;
        let v = psi.column(0).into_owned();
        out.push(Operator::outer(&v, &v));
    }
    out
}
