//! Exact nonnegative integers and the log-gamma bridge to floating point.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision nonnegative integer.
pub type BigNat = BigUint;

/// Natural log of a positive big integer; `-∞` for zero.
pub fn ln_big(x: &BigNat) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigNat = x >> shift;
    top.to_f64().unwrap_or(f64::INFINITY).ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln |x|` of an exact rational; `-∞` for zero.
pub fn ln_rational(x: &BigRational) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    ln_big(num) - ln_big(den)
}

pub fn factorial(n: u64) -> BigNat {
    (1..=n).fold(BigNat::one(), |acc, i| acc * i)
}

/// Exact binomial coefficient; zero outside `0 ≤ j ≤ k`.
pub fn binomial(k: u64, j: u64) -> BigNat {
    if j > k {
        return BigNat::zero();
    }
    let j = j.min(k - j);
    let mut acc = BigNat::one();
    for i in 0..j {
        acc *= k - i;
        acc /= i + 1;
    }
    acc
}

/// `ln C(k, j)` through log-gamma.
pub fn log_binomial(k: u64, j: u64) -> Result<f64> {
    if j > k {
        return Err(Error::InvalidInput(format!(
            "binomial index {j} outside 0..={k}"
        )));
    }
    Ok(statrs::function::factorial::ln_binomial(k, j))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_binomials() {
        assert!((log_binomial(2, 1).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(log_binomial(17, 0).unwrap(), 0.0);
        assert!(log_binomial(3, 4).is_err());
        assert_eq!(binomial(5, 2), BigNat::from(10u32));
        assert_eq!(binomial(5, 7), BigNat::zero());
    }

    #[test]
    fn log_binomial_matches_exact() {
        for &(k, j) in &[(200u64, 100u64), (1000, 333), (10_000, 5000), (60, 30)] {
            let exact = ln_big(&binomial(k, j));
            let approx = log_binomial(k, j).unwrap();
            assert!(
                ((exact - approx) / exact).abs() < 1e-10,
                "({k},{j}): {exact} vs {approx}"
            );
        }
    }

    #[test]
    fn ln_big_handles_huge_values() {
        let x = factorial(1000);
        let expected = statrs::function::factorial::ln_factorial(1000);
        assert!((ln_big(&x) - expected).abs() / expected < 1e-12);
    }

    #[test]
    fn matches_machine_integers() {
        use proptest::prelude::*;
        proptest!(|(a in 0u64..(1 << 62), b in 0u64..(1 << 62))| {
            let (x, y) = (BigNat::from(a), BigNat::from(b));
            prop_assert_eq!(&x + &y, BigNat::from(a as u128 + b as u128));
            prop_assert_eq!(&x * &y, BigNat::from(a as u128 * b as u128));
            if b > 0 {
                prop_assert_eq!(&x / &y, BigNat::from(a / b));
            }
        });
    }
}
