//! Adaptive Dormand-Prince 5(4) integrator for complex linear systems.
//!
//! Both master-equation solvers and the propagator integration share this
//! implementation. The integrator steps onto every requested output time
//! exactly rather than interpolating.

use crate::error::{Error, Result};
use crate::qops::C64;

/// Integration tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeTol {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed step as a fraction of the driving period.
    pub max_step: Option<f64>,
}

impl Default for OdeTol {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_step: None }
    }
}

impl OdeTol {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, max_step: None }
    }

    pub fn with_max_step(mut self, fraction_of_period: f64) -> Self {
        self.max_step = Some(fraction_of_period);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.rtol > 0.0 && self.atol > 0.0 && self.max_step.is_none_or(|m| m > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("tolerances must be positive: {self:?}")))
        }
    }
}

/// Step statistics of one integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl StepStats {
    pub fn merge(&mut self, other: StepStats) {
        self.accepted += other.accepted;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

struct Stages {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
}

impl Stages {
    fn new(n: usize) -> Self {
        Self {
            k: std::array::from_fn(|_| vec![C64::default(); n]),
            tmp: vec![C64::default(); n],
            y_new: vec![C64::default(); n],
        }
    }
}

fn error_norm(y: &[C64], y_new: &[C64], err: &[C64], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for ((a, b), e) in y.iter().zip(y_new).zip(err) {
        let sc = atol + rtol * a.norm().max(b.norm());
        let r = e.norm() / sc;
        acc += r * r;
    }
    (acc / y.len() as f64).sqrt()
}

/// Zeroes subnormal parts. Decaying components otherwise settle on
/// subnormal values, where every later operation is many times slower.
fn flush_subnormal(y: &mut [C64]) {
    for z in y {
        if z.re.is_subnormal() {
            z.re = 0.0;
        }
        if z.im.is_subnormal() {
            z.im = 0.0;
        }
    }
}

fn rms(v: &[C64], y: &[C64], rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for (z, s) in v.iter().zip(y) {
        let r = z.norm() / (atol + rtol * s.norm());
        acc += r * r;
    }
    (acc / v.len() as f64).sqrt()
}

/// Integrates `dy/dt = f(t, y)` from `t0`, calling `on_output(i, t_i, y(t_i))`
/// for every requested time. `times` must be non-decreasing from `t0` and
/// strictly increasing among themselves.
pub fn integrate<F, O>(
    mut rhs: F,
    t0: f64,
    y0: &[C64],
    times: &[f64],
    tol: &OdeTol,
    h_max: Option<f64>,
    mut on_output: O,
) -> Result<StepStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, f64, &[C64]),
{
    tol.validate()?;
    if times.first().is_some_and(|&t| t < t0) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidTimes);
    }
    let n = y0.len();
    let mut stats = StepStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut st = Stages::new(n);
    let (rtol, atol) = (tol.rtol, tol.atol);
    let h_cap = h_max.unwrap_or(f64::INFINITY);

    let mut next = 0;
    while next < times.len() && times[next] == t0 {
        on_output(next, t0, &y);
        next += 1;
    }
    if next == times.len() {
        return Ok(stats);
    }

    rhs(t, &y, &mut st.k[0]);
    stats.rhs_evals += 1;

    // Initial step guess following Hairer, Norsett & Wanner.
    let mut h_free = {
        let d0 = rms(&y, &y, rtol, atol);
        let d1 = rms(&st.k[0], &y, rtol, atol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(h_cap).min(times[times.len() - 1] - t0);
        for ((x, yi), k) in st.tmp.iter_mut().zip(&y).zip(&st.k[0]) {
            *x = yi + k * h0;
        }
        rhs(t + h0, &st.tmp, &mut st.k[1]);
        stats.rhs_evals += 1;
        let acc: f64 = st.k[1]
            .iter()
            .zip(&st.k[0])
            .zip(&y)
            .map(|((a, b), yi)| ((a - b).norm() / (atol + rtol * yi.norm())).powi(2))
            .sum();
        let d2 = (acc / n as f64).sqrt() / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(h_cap)
    };

    let mut last_rejected = false;
    while next < times.len() {
        let target = times[next];
        let remaining = target - t;
        let clamped = h_free >= remaining;
        let h = if clamped { remaining } else { h_free };
        if h <= 1e-14 * t.abs().max(1.0) && !clamped {
            return Err(Error::StepUnderflow { t_reached: t, step: h });
        }

        let (k, tmp, y_new) = (&mut st.k, &mut st.tmp, &mut st.y_new);
        for i in 0..n {
            tmp[i] = y[i] + k[0][i] * (h * A21);
        }
        rhs(t + C2 * h, tmp, &mut k[1]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A31 + k[1][i] * A32) * h;
        }
        rhs(t + C3 * h, tmp, &mut k[2]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A41 + k[1][i] * A42 + k[2][i] * A43) * h;
        }
        rhs(t + C4 * h, tmp, &mut k[3]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A51 + k[1][i] * A52 + k[2][i] * A53 + k[3][i] * A54) * h;
        }
        rhs(t + C5 * h, tmp, &mut k[4]);
        for i in 0..n {
            tmp[i] = y[i] + (k[0][i] * A61 + k[1][i] * A62 + k[2][i] * A63 + k[3][i] * A64 + k[4][i] * A65) * h;
        }
        rhs(t + h, tmp, &mut k[5]);
        for i in 0..n {
            y_new[i] = y[i] + (k[0][i] * A71 + k[2][i] * A73 + k[3][i] * A74 + k[4][i] * A75 + k[5][i] * A76) * h;
        }
        rhs(t + h, y_new, &mut k[6]);
        stats.rhs_evals += 6;

        for i in 0..n {
            tmp[i] = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
        }
        let err = error_norm(&y, y_new, tmp, rtol, atol);
        if !err.is_finite() {
            return Err(Error::NonFinite { t_reached: t });
        }

        if err <= 1.0 {
            stats.accepted += 1;
            let mut factor = if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
            if last_rejected {
                factor = factor.min(1.0);
            }
            let proposal = (h * factor).min(h_cap);
            // A step shortened to land on an output time must not shrink the
            // controller's step size.
            h_free = if clamped { h_free.max(proposal).min(h_cap) } else { proposal };
            t = if clamped { target } else { t + h };
            std::mem::swap(&mut y, &mut st.y_new);
            flush_subnormal(&mut y);
            let (first, rest) = st.k.split_at_mut(1);
            std::mem::swap(&mut first[0], &mut rest[5]);
            last_rejected = false;
            if clamped {
                on_output(next, t, &y);
                next += 1;
            }
        } else {
            stats.rejected += 1;
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h_free = h * factor;
            last_rejected = true;
            if h_free <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t_reached: t, step: h_free });
            }
        }
    }
    Ok(stats)
}
