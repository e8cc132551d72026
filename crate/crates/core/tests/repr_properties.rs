use capdual_core::repr::{binomial, factorial, log_sum_exp, BigNat, LogValue};
use num_bigint::BigUint;
use proptest::prelude::*;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

proptest! {
    #[test]
    fn log_value_arithmetic_matches_doubles(a in -1e6f64..1e6, b in -1e6f64..1e6, p in -6i64..=6) {
        let (x, y) = (LogValue::from_f64(a), LogValue::from_f64(b));
        prop_assert!(close((x * y).to_f64(), a * b));
        if b != 0.0 {
            prop_assert!(close((x / y).to_f64(), a / b));
        }
        if a != 0.0 {
            prop_assert!(close(x.powi(p).to_f64(), a.powi(p as i32)));
        }
        // sums lose relative precision only through cancellation
        let sum = x.add(&y).to_f64();
        prop_assert!((sum - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()));
    }

    #[test]
    fn log_sum_exp_is_order_free(mut xs in prop::collection::vec(-700.0f64..700.0, 1..12), rot in 0usize..12) {
        let values: Vec<LogValue> = xs.iter().map(|&l| LogValue::from_ln(l)).collect();
        let whole = log_sum_exp(&values);
        let len = xs.len();
        xs.rotate_left(rot % len);
        xs.reverse();
        let shuffled: Vec<LogValue> = xs.iter().map(|&l| LogValue::from_ln(l)).collect();
        prop_assert!(close(log_sum_exp(&shuffled).log_mag(), whole.log_mag()));
        let mid = shuffled.len() / 2;
        let nested = log_sum_exp(&[log_sum_exp(&shuffled[..mid]), log_sum_exp(&shuffled[mid..])]);
        prop_assert!((nested.log_mag() - whole.log_mag()).abs() <= 1e-12 * whole.log_mag().abs().max(1.0));
    }

    #[test]
    fn big_naturals_match_machine_integers(a in 0u64..(1 << 62), b in 0u64..(1 << 62)) {
        let (x, y): (BigNat, BigNat) = (a.into(), b.into());
        prop_assert_eq!(&x + &y, BigUint::from(a as u128 + b as u128));
        prop_assert_eq!(&x * &y, BigUint::from(a as u128 * b as u128));
        if a >= b {
            prop_assert_eq!(&x - &y, BigUint::from(a - b));
        }
    }

    #[test]
    fn binomials_match_pascal(k in 0u64..=60, j in 0u64..=60) {
        let j = j.min(k);
        let mut row = vec![1u64];
        for _ in 0..k {
            let mut next = vec![1u64; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        prop_assert_eq!(binomial(k, j), BigUint::from(row[j as usize]));
        prop_assert_eq!(factorial(k.min(20)), BigUint::from((1..=k.min(20)).product::<u64>()));
    }
}
