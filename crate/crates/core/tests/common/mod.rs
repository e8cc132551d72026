#![allow(dead_code)]

use std::collections::BTreeSet;

use capdual_core::repr::{rat, Rational, WeightVector, WeightedVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A unit vector with `1..=max_weights` distinct weights in `[-bound, bound]^n`
/// and random complex amplitudes of modulus at least 0.1.
pub fn random_vector(rng: &mut ChaCha8Rng, n: usize, max_weights: usize, bound: i64) -> WeightedVector {
    let count = rng.gen_range(1..=max_weights);
    let mut weights = BTreeSet::new();
    for _ in 0..count {
        weights.insert((0..n).map(|_| rng.gen_range(-bound..=bound)).collect::<Vec<i64>>());
    }
    let terms = weights
        .into_iter()
        .map(|w| {
            let c = Complex64::from_polar(rng.gen_range(0.1..1.0), rng.gen_range(0.0..std::f64::consts::TAU));
            (WeightVector::new(w).unwrap(), c)
        })
        .collect();
    WeightedVector::new(n, terms).unwrap().normalized().unwrap()
}

pub fn support_weights(v: &WeightedVector) -> Vec<Vec<i64>> {
    v.terms().iter().map(|(w, _)| w.coords().to_vec()).collect()
}

/// `Σ a_j ω_j / Σ a_j` for random integer `a_j ∈ [0, max_coeff]`, not all zero.
pub fn random_hull_point(rng: &mut ChaCha8Rng, weights: &[Vec<i64>], max_coeff: i64) -> Vec<Rational> {
    let mut a: Vec<i64> = weights.iter().map(|_| rng.gen_range(0..=max_coeff)).collect();
    if a.iter().all(|&x| x == 0) {
        let j = rng.gen_range(0..a.len());
        a[j] = 1;
    }
    let total: i64 = a.iter().sum();
    let n = weights[0].len();
    (0..n)
        .map(|i| rat(weights.iter().zip(&a).map(|(w, &x)| w[i] * x).sum(), total))
        .collect()
}

pub fn theta_f64(theta: &[Rational]) -> Vec<f64> {
    theta.iter().map(capdual_core::repr::rational::to_f64).collect()
}
