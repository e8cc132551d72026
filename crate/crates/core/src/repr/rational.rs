//! Rational targets `θ`: exact input as `p/q` strings or rationalized doubles.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{invalid, Result};

/// Tolerance used when turning a double into a rational target.
pub const RATIONALIZE_TOLERANCE: f64 = 1e-9;

pub type Rational = BigRational;

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn rat_int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"p/q"`, `"p"`, or a decimal literal such as `"0.25"` (exactly).
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad(s))?;
        let q: BigInt = q.trim().parse().map_err(|_| bad(s))?;
        if q.is_zero() {
            return invalid(format!("zero denominator in {s:?}"));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let num: BigInt = digits.parse().map_err(|_| bad(s))?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        let r = Rational::new(num, den);
        return Ok(if neg { -r } else { r });
    }
    s.parse::<BigInt>().map(Rational::from_integer).map_err(|_| bad(s))
}

fn bad(s: &str) -> crate::error::Error {
    crate::error::Error::InvalidInput(format!("cannot parse {s:?} as a rational"))
}

/// Smallest-denominator continued-fraction convergent within `tol` of `x`.
pub fn rationalize(x: f64, tol: f64) -> Result<Rational> {
    if !x.is_finite() {
        return invalid(format!("{x} is not finite"));
    }
    let (mut h0, mut h1) = (BigInt::zero(), BigInt::one());
    let (mut k0, mut k1) = (BigInt::one(), BigInt::zero());
    let mut rest = x;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = BigInt::from(a as i64);
        let h2 = &ai * &h1 + &h0;
        let k2 = &ai * &k1 + &k0;
        let approx = Rational::new(h2.clone(), k2.clone());
        if (to_f64(&approx) - x).abs() <= tol {
            return Ok(approx);
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = rest - a;
        if frac == 0.0 {
            break;
        }
        rest = 1.0 / frac;
    }
    Ok(Rational::new(h1, k1))
}

pub fn rationalize_vec(xs: &[f64]) -> Result<Vec<Rational>> {
    xs.iter().map(|&x| rationalize(x, RATIONALIZE_TOLERANCE)).collect()
}

/// Least common multiple of the denominators.
pub fn common_denominator(xs: &[Rational]) -> BigInt {
    xs.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()))
}

pub fn is_integral(x: &Rational) -> bool {
    x.denom().abs().is_one()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        assert_eq!(parse_rational("3/5").unwrap(), rat(3, 5));
        assert_eq!(parse_rational(" -7 ").unwrap(), rat_int(-7));
        assert_eq!(parse_rational("0.25").unwrap(), rat(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn rationalization() {
        assert_eq!(rationalize(0.6, 1e-9).unwrap(), rat(3, 5));
        assert_eq!(rationalize(-0.125, 1e-9).unwrap(), rat(-1, 8));
        assert_eq!(rationalize(2.0, 1e-9).unwrap(), rat_int(2));
        let pi = rationalize(std::f64::consts::PI, 1e-9).unwrap();
        assert!((to_f64(&pi) - std::f64::consts::PI).abs() <= 1e-9);
        assert_eq!(common_denominator(&[rat(1, 4), rat(5, 6)]), BigInt::from(12));
    }
}
