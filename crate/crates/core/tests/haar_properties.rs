mod common;

use capdual_core::haar::{mc_invariant_norm, mc_weight_norm, sample_haar_unitary, unitarity_defect, GroupAction};
use capdual_core::projection::projection_norm_table;
use common::{random_vector, rng};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn estimates_agree_with_projection_table() {
    // 100 seeded runs; a 4σ miss has probability ~6e-5 per run
    let mut hits = 0;
    for seed in 0..100u64 {
        let mut r = rng(900 + seed);
        let n = r.gen_range(1..=2);
        let v = random_vector(&mut r, n, 4, 2);
        let k = r.gen_range(1..=6u32);
        let table = projection_norm_table(&v, k as usize).unwrap();
        let entries: Vec<_> = table.slice(k as usize).unwrap().entries().collect();
        let (lambda, exact) = &entries[r.gen_range(0..entries.len())];
        let est = mc_weight_norm(&v, k, lambda, 20_000, seed).unwrap();
        hits += est.within(exact.to_f64(), 4.0) as usize;
    }
    assert!(hits >= 95, "{hits}/100 within 4σ");
}

#[test]
fn same_seed_same_bits() {
    let mut r = rng(3);
    let v = random_vector(&mut r, 2, 4, 2);
    let action = GroupAction::Torus(v);
    let a = mc_invariant_norm(&action, 4, 50_000, 11).unwrap();
    let b = mc_invariant_norm(&action, 4, 50_000, 11).unwrap();
    assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
    assert_eq!(a.mean.im.to_bits(), b.mean.im.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = mc_invariant_norm(&action, 4, 50_000, 12).unwrap();
    assert_ne!(a.mean, c.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_matrices_are_unitary(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let u = sample_haar_unitary(n, &mut r).unwrap();
        prop_assert!(unitarity_defect(&u) <= 1e-12);
    }
}
