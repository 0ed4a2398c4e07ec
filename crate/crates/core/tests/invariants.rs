//! Property tests over seeded random instances.

use bosonlab_core::architecture::{build_kaleidoscope, circuit_unitary};
use bosonlab_core::cayley::{big_q, cayley_direct, cayley_transform, perturb_circuit, q_upper_bound};
use bosonlab_core::linalg::{haar_gate, haar_unitary_global};
use bosonlab_core::probability::{
    full_distribution, hafnian, hafnian_permutation_sum, permanent, permanent_naive, OutcomeConfig,
};
use bosonlab_core::routing::{embed_grid, route_permutation, verify_embedding, GridSpec};
use bosonlab_core::sampling::{boson_sample, sample_collision_free_outcome};
use bosonlab_core::{CMatrix, Circuit, Complex64, Permutation, RngHandle};
use proptest::prelude::*;
use rand::Rng;

fn random_matrix(n: usize, rng: &mut RngHandle) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn routing_reproduces_permutations(seed in any::<u64>(), log_m in 1usize..6) {
        let m = 1 << log_m;
        let mut rng = RngHandle::new(seed);
        let p = Permutation::random(m, &mut rng);
        let c = route_permutation(&p).unwrap();
        prop_assert_eq!(c.gates().len(), m * log_m);
        prop_assert_eq!(circuit_unitary(&c).max_abs_diff(&p.matrix()).unwrap(), 0.0);
    }

    #[test]
    fn grid_embedding_residual(seed in any::<u64>(), dims in prop::collection::vec(1usize..3, 1..3)) {
        let mut rng = RngHandle::new(seed);
        let spec = GridSpec::random(dims, &mut rng).unwrap();
        let e = embed_grid(&spec).unwrap();
        prop_assert!(verify_embedding(&spec.unitary(), &e.permutation, &e.circuit).unwrap() <= 1e-10);
    }

    #[test]
    fn ryser_matches_definition(seed in any::<u64>(), n in 1usize..8) {
        let mut rng = RngHandle::new(seed);
        let a = random_matrix(n, &mut rng);
        let diff = (permanent(&a).unwrap() - permanent_naive(&a).unwrap()).norm();
        prop_assert!(diff <= 1e-10);
    }

    #[test]
    fn hafnian_matches_matchings(seed in any::<u64>(), half in 1usize..4) {
        let mut rng = RngHandle::new(seed);
        let b = random_matrix(2 * half, &mut rng);
        let a = CMatrix::from_fn(2 * half, 2 * half, |i, j| b[(i, j)] + b[(j, i)]);
        let diff = (hafnian(&a).unwrap() - hafnian_permutation_sum(&a).unwrap()).norm();
        prop_assert!(diff <= 1e-10);
    }

    #[test]
    fn distributions_sum_to_one(seed in any::<u64>(), m in 2usize..6, n in 1usize..4) {
        let mut rng = RngHandle::new(seed);
        let u = haar_unitary_global(m, &mut rng).unwrap();
        let t = OutcomeConfig::first_modes(m, n.min(m)).unwrap();
        let total: f64 = full_distribution(&u, &t).unwrap().iter().map(|(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn cayley_forms_agree(seed in any::<u64>(), theta in 0.0f64..=1.0) {
        let mut rng = RngHandle::new(seed);
        let h = haar_gate(&mut rng);
        let a = cayley_transform(&h, theta).unwrap();
        prop_assert!(a.unitarity_deviation() <= 1e-10);
        prop_assert!(a.max_abs_diff(&cayley_direct(&h, theta).unwrap()) <= 1e-9);
    }

    #[test]
    fn q_stays_in_bounds(seed in any::<u64>(), theta in 0.0f64..=1.0, n in 1usize..4) {
        let mut rng = RngHandle::new(seed);
        let arch = build_kaleidoscope(4, 1).unwrap();
        let worst = Circuit::random(arch, &mut rng);
        let haar: Vec<_> = (0..worst.gates().len()).map(|_| haar_gate(&mut rng)).collect();
        let q = big_q(&haar, theta, n).unwrap();
        prop_assert!(q <= q_upper_bound(theta, haar.len(), n) * (1.0 + 1e-12));
        prop_assert!(q <= 1.0 + 1e-12);
        let v = perturb_circuit(&worst, &haar, theta).unwrap();
        prop_assert!(circuit_unitary(&v).matrix().unitarity_deviation() <= 1e-10);
    }

    #[test]
    fn samples_conserve_photons(seed in any::<u64>(), m in 2usize..10, n in 1usize..5) {
        let mut rng = RngHandle::new(seed);
        let n = n.min(m);
        let u = haar_unitary_global(m, &mut rng).unwrap();
        let t = sample_collision_free_outcome(m, n, &mut rng).unwrap();
        prop_assert!(t.is_collision_free());
        let s = boson_sample(&u, &t, &mut rng).unwrap();
        prop_assert_eq!(s.total(), n);
        prop_assert_eq!(s.modes(), m);
    }

    #[test]
    fn outcome_text_roundtrip(occ in prop::collection::vec(0usize..5, 1..10)) {
        let s = OutcomeConfig::new(occ);
        prop_assert_eq!(s.to_string().parse::<OutcomeConfig>().unwrap(), s);
    }
}
