mod common;

use common::{random_op, random_single_harmonic};
use flime_core::flime::{build_terms, dissipator_bruteforce, enumerate_terms, CollapseChannel, FlimeSolver, SecularCutoff, TermOptions};
use flime_core::floquet::{FloquetBasis, FloquetOptions};
use flime_core::master::StateHealth;
use flime_core::ode::OdeTol;
use flime_core::qops::DensityMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn system(seed: u64, n: usize) -> (FloquetBasis, Vec<CollapseChannel>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = random_single_harmonic(&mut rng, n);
    let channels = vec![CollapseChannel::new(random_op(&mut rng, n, 0.5), 0.2).unwrap()];
    let basis = FloquetBasis::compute(&h, &FloquetOptions::default()).unwrap();
    (basis, channels, h.period())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn assemble_equals_bruteforce(seed in 0u64..1000, n in 2usize..=3, t in 0.0..50.0f64) {
        let (basis, channels, _) = system(seed, n);
        let opts = TermOptions { k_max: 8, secular_cutoff: SecularCutoff::NONE, coeff_floor: 0.0 };
        let set = build_terms(&basis, &channels, &opts).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let rho = random_op(&mut rng, n, 1.0);
        let direct = dissipator_bruteforce(&basis, &channels, 8, &rho, t).unwrap();
        let via = set.assemble(t).apply_to(&rho).unwrap();
        prop_assert!((&direct - &via).max_abs() < 1e-10);
        prop_assert!(direct.trace().norm() < 1e-12);
    }

    #[test]
    fn evolution_preserves_trace_and_hermiticity(seed in 0u64..1000, n in 2usize..=3, cutoff in prop_oneof![Just(0.0), 0.0..10.0f64, Just(f64::INFINITY)]) {
        let (basis, channels, period) = system(seed, n);
        let opts = TermOptions { secular_cutoff: SecularCutoff::new(cutoff).unwrap(), ..Default::default() };
        let solver = FlimeSolver::with_basis(basis, &channels, &opts).unwrap();
        let times: Vec<f64> = (1..=30).map(|j| j as f64 * period / 3.0).collect();
        let res = solver.evolve(&DensityMatrix::basis_state(n, 0), &times, &OdeTol::default()).unwrap();
        let health = StateHealth::of(&res.states);
        prop_assert!(health.max_trace_defect < 1e-8 && health.max_hermiticity_defect < 1e-8, "{health:?}");
    }

    #[test]
    fn kept_terms_grow_with_cutoff(seed in 0u64..1000, c1 in 0.0..5.0f64, extra in 0.0..5.0f64) {
        let (basis, channels, _) = system(seed, 2);
        let (terms, _) = enumerate_terms(&basis, &channels, &TermOptions::default()).unwrap();
        let (lo, hi) = (SecularCutoff::new(c1).unwrap(), SecularCutoff::new(c1 + extra).unwrap());
        for t in &terms {
            prop_assert!(!t.kept_at(lo) || t.kept_at(hi));
        }
    }
}
