//! Turns a [`RunConfig`] into solver inputs.

use flime_core::flime::{FlimeOptions, TermOptions};
use flime_core::floquet::FloquetOptions;
use flime_core::hamiltonians::{FrequencyUnit, TimeUnit};
use flime_core::hamiltonians::{bichromatic, driven_2ls_full, driven_2ls_rwa, PulseTrain};
use flime_core::qops::{expect, two_level};
use flime_core::{CollapseChannel, DensityMatrix, OdeTol, Operator, PeriodicHamiltonian, SecularCutoff, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConfigError, InitialState, Observable, OperatorName, Quantity, RunConfig, SystemConfig};

/// The Hamiltonian and channels of a run, in run units.
#[derive(Debug, Clone)]
pub struct System {
    pub hamiltonian: PeriodicHamiltonian,
    pub channels: Vec<CollapseChannel>,
    pub unit: TimeUnit,
}

fn invalid(e: impl std::fmt::Display) -> ConfigError {
    ConfigError::Invalid(e.to_string())
}

fn frequency(unit: &TimeUnit, q: Quantity, what: &str) -> Result<f64, ConfigError> {
    match q {
        Quantity::Native(v) => Ok(v),
        Quantity::WithUnit { value, unit: u } if !u.is_duration() => {
            let fu = FrequencyUnit::parse(u.as_str()).map_err(invalid)?;
            Ok(unit.angular_frequency(value, fu))
        }
        Quantity::WithUnit { unit: u, .. } => {
            Err(invalid(format!("{what} is a frequency; unit {} is a duration", u.as_str())))
        }
    }
}

fn duration(unit: &TimeUnit, q: Quantity, what: &str) -> Result<f64, ConfigError> {
    match q {
        Quantity::Native(v) => Ok(v),
        Quantity::WithUnit { value, unit: u } if u.is_duration() || u.as_str() == "native" => {
            unit.duration(value, u.as_str()).map_err(invalid)
        }
        Quantity::WithUnit { unit: u, .. } => {
            Err(invalid(format!("{what} is a duration; unit {} is a frequency", u.as_str())))
        }
    }
}

pub fn operator(name: OperatorName) -> Operator {
    match name {
        OperatorName::SigmaMinus => two_level::sigma_minus(),
        OperatorName::SigmaPlus => two_level::sigma_plus(),
        OperatorName::SigmaX => two_level::sigma_x(),
        OperatorName::SigmaY => two_level::sigma_y(),
        OperatorName::SigmaZ => two_level::sigma_z(),
        OperatorName::ExcitedProjector => two_level::excited_projector(),
        OperatorName::GroundProjector => two_level::ground_projector(),
    }
}

impl System {
    pub fn from_config(cfg: &RunConfig) -> Result<Self, ConfigError> {
        let unit = TimeUnit::named(&cfg.unit)
            .map_err(|_| invalid(format!("unknown unit {:?}; expected one of 1, s, ns, ps, fs", cfg.unit)))?;
        let f = |q, what| frequency(&unit, q, what);
        let real = |v: f64| C64::new(v, 0.0);
        let hamiltonian = match &cfg.system {
            SystemConfig::DrivenRwa { omega0, omega, rabi } => {
                driven_2ls_rwa(f(*omega0, "omega0")?, f(*omega, "omega")?, real(f(*rabi, "rabi")?))
            }
            SystemConfig::DrivenFull { omega0, omega, rabi, rabi_counter } => {
                let r = f(*rabi, "rabi")?;
                let rc = rabi_counter.map(|q| f(q, "rabi_counter")).transpose()?.unwrap_or(r);
                driven_2ls_full(f(*omega0, "omega0")?, f(*omega, "omega")?, real(r), real(rc))
            }
            SystemConfig::Bichromatic { delta_bar, beat, rabi1, rabi2 } => bichromatic(
                f(*delta_bar, "delta_bar")?,
                f(*beat, "beat")?,
                real(f(*rabi1, "rabi1")?),
                real(f(*rabi2, "rabi2")?),
            ),
            SystemConfig::PulseTrain { delta, period, sigma, n_harmonics, pulse_area, center } => {
                let period = duration(&unit, *period, "period")?;
                let mut train = PulseTrain::new(f(*delta, "delta")?, period);
                if let Some(s) = sigma {
                    train.sigma = duration(&unit, *s, "sigma")?;
                }
                train.n_harmonics = *n_harmonics;
                train.pulse_area = *pulse_area;
                train.center = duration(&unit, *center, "center")?;
                train.build()
            }
        }
        .map_err(invalid)?;
        let channels = cfg
            .channels
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let rate = match (c.rate, c.lifetime) {
                    (Some(r), None) => f(r, "rate")?,
                    (None, Some(tau)) => {
                        let tau = duration(&unit, tau, "lifetime")?;
                        if !(tau > 0.0) {
                            return Err(invalid(format!("channels[{i}]: lifetime must be positive")));
                        }
                        1.0 / tau
                    }
                    _ => return Err(invalid(format!("channels[{i}]: give exactly one of rate and lifetime"))),
                };
                CollapseChannel::new(operator(c.operator), rate).map_err(|e| invalid(format!("channels[{i}]: {e}")))
            })
            .collect::<Result<_, _>>()?;
        Ok(Self { hamiltonian, channels, unit })
    }

    pub fn period(&self) -> f64 {
        self.hamiltonian.period()
    }
}

pub fn flime_options(cfg: &RunConfig) -> Result<FlimeOptions, ConfigError> {
    Ok(FlimeOptions {
        floquet: FloquetOptions { n_samples: cfg.n_samples, ..Default::default() },
        terms: TermOptions {
            k_max: cfg.k_max,
            secular_cutoff: SecularCutoff::new(cfg.secular_cutoff.0).map_err(invalid)?,
            coeff_floor: cfg.coeff_floor,
        },
    })
}

pub fn ode_tol(cfg: &RunConfig) -> OdeTol {
    OdeTol { max_step: cfg.tolerances.max_step, ..OdeTol::new(cfg.tolerances.rtol, cfg.tolerances.atol) }
}

pub fn initial_state(cfg: &RunConfig) -> DensityMatrix {
    match cfg.initial_state {
        InitialState::Ground => DensityMatrix::basis_state(2, 0),
        InitialState::Excited => DensityMatrix::basis_state(2, 1),
        InitialState::MaximallyMixed => DensityMatrix::maximally_mixed(2),
        InitialState::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut psi: Vec<C64> = (0..2)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            psi.iter_mut().for_each(|z| *z /= norm);
            DensityMatrix::pure(&psi).expect("normalized two-level state")
        }
    }
}

/// Observable operator, or `None` for the nonlinear ones.
pub fn observable_operator(o: Observable) -> Option<Operator> {
    match o {
        Observable::ExcitedPopulation => Some(two_level::excited_projector()),
        Observable::GroundPopulation => Some(two_level::ground_projector()),
        Observable::SigmaX => Some(two_level::sigma_x()),
        Observable::SigmaY => Some(two_level::sigma_y()),
        Observable::SigmaZ => Some(two_level::sigma_z()),
        Observable::CoherenceRe | Observable::CoherenceIm => Some(two_level::sigma_minus()),
        Observable::Trace => Some(Operator::identity(2)),
        Observable::Purity => None,
    }
}

pub fn evaluate(o: Observable, rho: &DensityMatrix) -> f64 {
    match (o, observable_operator(o)) {
        (Observable::Purity, _) => rho.purity(),
        (Observable::CoherenceIm, Some(op)) => expect(&op, rho).expect("two-level state").im,
        (_, Some(op)) => expect(&op, rho).expect("two-level state").re,
        (_, None) => unreachable!("only purity lacks an operator"),
    }
}
