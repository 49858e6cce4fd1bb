use std::collections::BTreeMap;
use std::f64::consts::PI;

use proptest::prelude::*;

use plkks::matcore::uu_dagger_factor;
use plkks::reduction::kks_vector_from_minors;
use plkks::sampling::{random_borel, random_phase_point, seeded};
use plkks::{
    decompose_to_slice, kks_vector, lax_components, lax_reduced, nu, reduced_hamiltonian, rs_hamiltonian, slice_point,
    Coupling, MuWeights, PhasePoint, Tolerances,
};

fn tol() -> Tolerances {
    Tolerances::default()
}

fn coupling() -> impl Strategy<Value = f64> {
    prop_oneof![-2.0..-0.1f64, 0.1..2.0f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mu_weights_display_round_trips(entries in prop::collection::btree_map(
        prop_oneof![-4i32..0, 1i32..5], -10.0..10.0f64, 0..4)
    ) {
        let mu = MuWeights::new(entries.clone()).unwrap();
        let back: MuWeights = mu.to_string().parse().unwrap();
        prop_assert_eq!(back.iter().collect::<BTreeMap<_, _>>(), entries);
    }

    #[test]
    fn canonical_chart_is_idempotent(
        q in prop::collection::vec(-10.0..10.0f64, 1..6),
        p in prop::collection::vec(-2.0..2.0f64, 6),
    ) {
        let p = &p[..q.len()];
        if let Ok(pt) = PhasePoint::canonical(&q, p, &tol()) {
            prop_assert!(pt.angles().iter().all(|&v| (0.0..PI).contains(&v)));
            prop_assert!(pt.angles().windows(2).all(|w| w[0] > w[1]));
            let again = PhasePoint::canonical(pt.angles(), pt.p(), &tol()).unwrap();
            prop_assert_eq!(again, pt);
        }
    }

    #[test]
    fn borel_factor_is_unique(seed in any::<u64>(), n in 1usize..7) {
        let b = random_borel(&mut seeded(seed), n);
        let h = b.matrix() * b.matrix().adjoint();
        let f = uu_dagger_factor(&h, &tol()).unwrap();
        prop_assert!((f.matrix() - b.matrix()).norm() < 1e-10 * b.matrix().norm().max(1.0));
    }

    #[test]
    fn dense_minor_solve_recovers_kks_vector(x in coupling(), n in 1usize..6) {
        let x = Coupling::new(x).unwrap();
        let b = nu(x, n);
        let v = kks_vector_from_minors(&(b.matrix() * b.matrix().adjoint()), x, &tol()).unwrap();
        for (a, e) in v.iter().zip(kks_vector(x, n)) {
            prop_assert!((a - e).abs() < 1e-9);
        }
    }

    #[test]
    fn reduced_lax_formulas_agree(seed in any::<u64>(), n in 1usize..6, x in coupling()) {
        let pt = random_phase_point(&mut seeded(seed), n, 0.2, 1.5);
        let x = Coupling::new(x).unwrap();
        prop_assert!((lax_reduced(&pt, x) - lax_components(&pt, x)).norm() < 1e-9);
        let h = reduced_hamiltonian(&pt, x, &MuWeights::relativistic(), &tol()).unwrap();
        prop_assert!((h - rs_hamiltonian(&pt, x)).abs() < 1e-9 * h.abs().max(1.0));
    }

    #[test]
    fn slice_decomposes_to_itself(seed in any::<u64>(), n in 1usize..6, x in coupling()) {
        let pt = random_phase_point(&mut seeded(seed), n, 0.2, 1.5);
        let x = Coupling::new(x).unwrap();
        let (g, back) = decompose_to_slice(&slice_point(&pt, x), x, &tol()).unwrap();
        prop_assert!((g.matrix() - plkks::matcore::identity(n)).norm() < 1e-8);
        for (a, b) in back.angles().iter().zip(pt.angles()).chain(back.p().iter().zip(pt.p())) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }
}
