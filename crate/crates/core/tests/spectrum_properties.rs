mod common;

use capdual_core::haar::sample_haar_unitary;
use capdual_core::repr::{partitions_of, BigNat, ProbVector};
use capdual_core::spectrum::{
    duffield_rate, keyl_rate, kl_divergence, kw_rate, quantum_relative_entropy, schur_weyl_measure, HermitianState,
};
use common::rng;
use num_traits::One;
use proptest::prelude::*;

fn sorted_prob(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, len).prop_map(|mut x| {
        let total: f64 = x.iter().sum();
        x.iter_mut().for_each(|v| *v /= total);
        x.sort_by(|a, b| b.total_cmp(a));
        x
    })
}

// f^λ as the sum over removable corners
fn tableaux_by_recursion(parts: &[u64]) -> BigNat {
    let parts: Vec<u64> = parts.iter().copied().filter(|&p| p > 0).collect();
    if parts.iter().sum::<u64>() <= 1 {
        return BigNat::one();
    }
    let mut total = BigNat::default();
    for i in 0..parts.len() {
        let is_corner = i + 1 == parts.len() || parts[i + 1] < parts[i];
        if is_corner {
            let mut smaller = parts.clone();
            smaller[i] -= 1;
            total += tableaux_by_recursion(&smaller);
        }
    }
    total
}

#[test]
fn hook_length_matches_corner_recursion() {
    for k in 0..=12 {
        for lambda in partitions_of(k, k as usize) {
            assert_eq!(lambda.standard_tableaux(), tableaux_by_recursion(lambda.parts()), "{:?}", lambda.parts());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn schur_weyl_measure_is_normalized(q in (1usize..=4).prop_flat_map(sorted_prob), k in 1u64..=40) {
        let q = ProbVector::new(q).unwrap();
        let total: f64 = schur_weyl_measure(&q, k).unwrap().iter().map(|row| row.prob.to_f64()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-8, "Σ P(λ) = {total}");
    }

    #[test]
    fn keyl_rate_below_relative_entropy(seed in any::<u64>(), n in 1usize..=3, p in sorted_prob(3), q in sorted_prob(3)) {
        let mut r = rng(seed);
        let renorm = |x: &[f64]| -> Vec<f64> {
            let s: f64 = x[..n].iter().sum();
            x[..n].iter().map(|v| v / s).collect()
        };
        let rho = HermitianState::from_spectrum(&renorm(&p), &sample_haar_unitary(n, &mut r).unwrap()).unwrap();
        let sigma = HermitianState::from_spectrum(&renorm(&q), &sample_haar_unitary(n, &mut r).unwrap()).unwrap();
        let keyl = keyl_rate(&rho, &sigma).unwrap();
        let qre = quantum_relative_entropy(&rho, &sigma).unwrap();
        prop_assert!(keyl <= qre + 1e-9, "{keyl} > {qre}");
    }

    #[test]
    fn keyl_rate_is_kl_on_commuting_sorted_pairs(p in sorted_prob(3), q in sorted_prob(3)) {
        let rho = HermitianState::from_diagonal(&p).unwrap();
        let sigma = HermitianState::from_diagonal(&q).unwrap();
        let keyl = keyl_rate(&rho, &sigma).unwrap();
        prop_assert!((keyl - kl_divergence(&p, &q)).abs() <= 1e-10);
    }

    #[test]
    fn duffield_qubit_is_kw(theta in 0.0f64..0.999) {
        let d = duffield_rate(&[1, -1], theta).unwrap();
        let p = ProbVector::new(vec![(1.0 + theta) / 2.0, (1.0 - theta) / 2.0]).unwrap();
        let half = ProbVector::new(vec![0.5, 0.5]).unwrap();
        prop_assert!((d - kw_rate(&p, &half).unwrap()).abs() <= 1e-9);
    }
}

