use proptest::prelude::*;

use randpur::algebra::{decompose, Fixture};
use randpur::boson::passive_unitary_sector;
use randpur::fermion::{covariance_pure, pure_gaussian_overlap, random_pure_gaussian, FermionSystem, Parity};
use randpur::linalg::{haar_unitary, partial_trace, random_density_matrix, DenseOperator, RngStream};
use randpur::purification::PurificationChannel;
use randpur::tomography::{dimension_ratio, ratio_f64, rep_dimension};

fn small_fixture() -> impl Strategy<Value = Fixture> {
    prop_oneof![
        (1usize..=4).prop_map(Fixture::Diagonal),
        (1usize..=3).prop_map(Fixture::Full),
        (2usize..=3).prop_map(|n| Fixture::Permutation { d: 2, n }),
        Just(Fixture::UnitaryTensor { d: 2, n: 2 }),
        Just(Fixture::SymmetricWerner { d: 2, n: 2 }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn dimension_formula_edges(m in 1usize..=12) {
        prop_assert_eq!(rep_dimension(0, m).value, 1.into());
        prop_assert_eq!(rep_dimension(1, m).value, (1u64 << (m - 1)).into());
    }

    #[test]
    fn dimension_ratios_chain(n in 0usize..30, m in 1usize..8, k in 1usize..5) {
        let whole = dimension_ratio(n, m, k);
        let mut chained = dimension_ratio(n, m, 1);
        for j in 1..k {
            chained *= dimension_ratio(n + j, m, 1);
        }
        prop_assert_eq!(&whole, &chained);
        let r = ratio_f64(&whole);
        prop_assert!(r > 0.0 && r <= 1.0);
    }

    #[test]
    fn channel_is_state_valued_with_conditional_marginal(f in small_fixture(), seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 0).rng();
        let dec = decompose(&f.algebra().unwrap(), &mut rng).unwrap();
        let ch = PurificationChannel::build(dec, None).unwrap();
        let dims = f.ambient_dims();
        let rho = random_density_matrix(ch.input_dim(), &mut rng).with_dims(dims.clone()).unwrap();
        let out = ch.apply(&rho).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-10);
        prop_assert!(out.hermitian_residual() < 1e-10);
        prop_assert!(out.matrix().symmetric_eigenvalues().min() > -1e-10);
        let keep: Vec<usize> = (0..dims.len()).collect();
        let marginal = partial_trace(&out, &keep).unwrap();
        let expected = ch.dec().commutant_expectation(rho.matrix());
        prop_assert!((marginal.matrix() - expected).norm() < 1e-9);
    }

    #[test]
    fn passive_sectors_are_representations(k in 0usize..=4, seed in any::<u64>()) {
        let mut rng = RngStream::new(seed, 1).rng();
        let a = haar_unitary(2, &mut rng);
        let b = haar_unitary(2, &mut rng);
        let sa = passive_unitary_sector(&a, k).unwrap();
        let sb = passive_unitary_sector(&b, k).unwrap();
        let sab = passive_unitary_sector(&(&a * &b), k).unwrap();
        prop_assert!(sab.max_abs_diff(&DenseOperator::from_matrix(sa.matrix() * sb.matrix())) < 1e-10);
        prop_assert!(sa.unitarity_residual() < 1e-10);
    }

    #[test]
    fn gaussian_overlap_formula(m in 1usize..=3, seed in any::<u64>()) {
        let sys = FermionSystem::new(m);
        let mut rng = RngStream::new(seed, 2).rng();
        let (a, _) = random_pure_gaussian(&sys, Parity::Even, &mut rng);
        let (b, _) = random_pure_gaussian(&sys, Parity::Even, &mut rng);
        let ma = covariance_pure(m, a.amplitudes());
        let mb = covariance_pure(m, b.amplitudes());
        let formula = pure_gaussian_overlap(ma.matrix(), mb.matrix());
        prop_assert!((formula - a.inner(&b).norm_sqr()).abs() < 1e-9);
    }
}
