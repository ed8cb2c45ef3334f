//! Universal EPR properties on randomized circuits.

mod common;

use eprq_core::epr::verify_universal_properties;
use eprq_core::{eigensolve, epr_from_modes, operating_point};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sum_rule_orthogonality_and_bounds(seed in any::<u64>(), n in 1usize..=8, j in 1usize..=3) {
        let j = j.min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let circuit = common::random_circuit(&mut rng, n, j);
        let op = operating_point(&circuit).unwrap();
        let basis = eigensolve(&circuit, &op).unwrap();
        let table = epr_from_modes(&op.dipoles, &basis);
        prop_assert!(table.complete);
        for jj in 0..j {
            let s: f64 = table.p.column(jj).sum();
            prop_assert!((s - 1.0).abs() < 1e-9, "sum rule {s}");
            for jk in (jj + 1)..j {
                let o: f64 = (0..n)
                    .map(|m| table.s[(m, jj)] * table.s[(m, jk)] * (table.p[(m, jj)] * table.p[(m, jk)]).sqrt())
                    .sum();
                prop_assert!(o.abs() < 1e-9, "orthogonality {o}");
            }
        }
        for m in 0..n {
            prop_assert!(table.p.row(m).sum() <= 1.0 + 1e-9);
        }
        prop_assert!(table.p.iter().all(|&p| (0.0..=1.0).contains(&p)));
        let diag = verify_universal_properties(&table, true);
        prop_assert!(diag.all_passed(), "{:?}", diag);
    }

    #[test]
    fn mode_sign_flip_is_a_gauge(seed in any::<u64>(), n in 2usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let circuit = common::random_circuit(&mut rng, n, 2);
        let op = operating_point(&circuit).unwrap();
        let mut basis = eigensolve(&circuit, &op).unwrap();
        let a = epr_from_modes(&op.dipoles, &basis);
        basis.e_matrix.column_mut(0).neg_mut();
        let b = epr_from_modes(&op.dipoles, &basis);
        prop_assert_eq!(&a.p, &b.p);
        for j in 0..2 {
            prop_assert_eq!(a.s[(0, j)], -b.s[(0, j)]);
            prop_assert_eq!(a.s[(1, j)], b.s[(1, j)]);
        }
    }
}
