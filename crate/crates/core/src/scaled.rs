//! Nonnegative reals as `mantissa · 2^exponent` with a 64-bit exponent.
//!
//! Used as the accumulator of the projection DP: it has the range of a
//! `LogValue` but additions cost a few integer operations instead of an
//! `exp` and a `ln`.

use std::f64::consts::LN_2;

use crate::repr::LogValue;

const EXP_MASK: u64 = 0x7ff << 52;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct Scaled {
    // in [0.5, 1) or exactly 0
    mant: f64,
    exp: i64,
}

#[inline]
fn pow2(e: i64) -> f64 {
    // valid for -1022 <= e <= 1023
    f64::from_bits(((e + 1023) as u64) << 52)
}

impl Scaled {
    pub const ZERO: Scaled = Scaled { mant: 0.0, exp: 0 };

    #[inline]
    fn normalize(mant: f64, exp: i64) -> Scaled {
        if mant == 0.0 {
            return Self::ZERO;
        }
        let mut m = mant;
        let mut e = exp;
        let mut bits = m.to_bits();
        if bits & EXP_MASK == 0 {
            // subnormal
            m *= pow2(64);
            e -= 64;
            bits = m.to_bits();
        }
        let raw = ((bits & EXP_MASK) >> 52) as i64;
        let m = f64::from_bits((bits & !EXP_MASK) | (1022u64 << 52));
        Scaled { mant: m, exp: e + raw - 1022 }
    }

    pub fn from_f64(x: f64) -> Scaled {
        debug_assert!(x >= 0.0 && x.is_finite());
        Self::normalize(x, 0)
    }

    #[cfg(test)]
    pub fn from_ln(l: f64) -> Scaled {
        if l == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let e = (l / LN_2).floor();
        let m = (l - e * LN_2).exp();
        Self::normalize(m, e as i64)
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    #[inline]
    pub fn mul(self, other: Scaled) -> Scaled {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self::normalize(self.mant * other.mant, self.exp + other.exp)
    }

    #[inline]
    pub fn add(self, other: Scaled) -> Scaled {
        if other.is_zero() {
            return self;
        }
        if self.is_zero() {
            return other;
        }
        let (hi, lo) = if self.exp >= other.exp { (self, other) } else { (other, self) };
        let d = hi.exp - lo.exp;
        if d > 60 {
            return hi;
        }
        Self::normalize(hi.mant + lo.mant * pow2(-d), hi.exp)
    }

    pub fn ln(self) -> f64 {
        if self.is_zero() {
            f64::NEG_INFINITY
        } else {
            self.mant.ln() + self.exp as f64 * LN_2
        }
    }

    pub fn to_log_value(self) -> LogValue {
        LogValue::from_ln(self.ln())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_f64() {
        let xs = [0.0, 1.0, 0.75, 3.5e-7, 1234.5, 1e-310];
        for &a in &xs {
            for &b in &xs {
                let s = Scaled::from_f64(a).add(Scaled::from_f64(b));
                let p = Scaled::from_f64(a).mul(Scaled::from_f64(b));
                if a + b > 0.0 {
                    assert!(((s.ln() - (a + b).ln()) / (a + b).ln().abs().max(1.0)).abs() < 1e-14);
                }
                if a * b > 1e-300 {
                    assert!((p.ln() - (a * b).ln()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn extended_range() {
        let half = Scaled::from_f64(0.5);
        let mut x = Scaled::from_f64(1.0);
        for _ in 0..10_000 {
            x = x.mul(half);
        }
        assert!((x.ln() + 10_000.0 * LN_2).abs() < 1e-9);
        let y = Scaled::from_ln(-12345.678);
        assert!((y.ln() + 12345.678).abs() < 1e-9);
        assert!((x.add(x).ln() - (x.ln() + LN_2)).abs() < 1e-9);
    }
}
