//! Floquet-Lindblad master equation solver for periodically driven open
//! quantum systems, with a direct Lindblad integrator as reference.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod flime;
pub mod floquet;
pub mod hamiltonians;
pub mod lindblad;
pub mod master;
pub mod ode;
pub mod qops;

pub use error::{Error, Result};
pub use flime::{CollapseChannel, FlimeSolver, RateTermSet, SecularCutoff, TermOptions};
pub use floquet::{FloquetBasis, FourierOperator};
pub use hamiltonians::{HarmonicTerm, PeriodicHamiltonian};
pub use lindblad::{LindbladSolver, LiouvillianSpec};
pub use master::{EvolutionResult, MasterEquation};
pub use ode::OdeTol;
pub use qops::{DensityMatrix, Operator, SuperOperator, SuperVector, C64};
