use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, Neg};

/// A real number stored as a sign and the natural log of its magnitude.
///
/// Quantities such as `‖Π_k v^⊗k‖²` decay like `e^{-ck}` and leave the range
/// of `f64` long before `k = 10⁴`; carrying them as `LogValue` keeps products,
/// powers and signed sums exact in sign and accurate in relative terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    sign: i8,
    log_mag: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogValue = LogValue {
        sign: 1,
        log_mag: 0.0,
    };

    /// Builds a value from a sign and `ln |x|`. A sign of zero, or a
    /// `log_mag` of `-∞`, gives exact zero.
    pub fn new(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            LogValue {
                sign: sign.signum(),
                log_mag,
            }
        }
    }

    /// Positive value `e^{log_mag}`.
    pub fn from_ln(log_mag: f64) -> Self {
        Self::new(1, log_mag)
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            Self::new(if x > 0.0 { 1 } else { -1 }, x.abs().ln())
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// `ln |x|`; `-∞` for zero.
    pub fn log_mag(&self) -> f64 {
        if self.sign == 0 {
            f64::NEG_INFINITY
        } else {
            self.log_mag
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// `ln x` for positive values, `None` otherwise.
    pub fn ln(&self) -> Option<f64> {
        (self.sign > 0).then_some(self.log_mag)
    }

    pub fn to_f64(&self) -> f64 {
        match self.sign {
            0 => 0.0,
            s => f64::from(s) * self.log_mag.exp(),
        }
    }

    pub fn abs(&self) -> Self {
        Self::new(self.sign.abs(), self.log_mag)
    }

    /// `x^p` for integer `p`; `0^0 = 1`.
    pub fn powi(&self, p: i64) -> Self {
        if p == 0 {
            return Self::ONE;
        }
        if self.sign == 0 {
            return if p > 0 { Self::ZERO } else { Self::new(1, f64::INFINITY) };
        }
        let sign = if self.sign < 0 && p % 2 != 0 { -1 } else { 1 };
        Self::new(sign, self.log_mag * p as f64)
    }

    /// `|x|^p` for real `p`, keeping the sign only for positive inputs.
    pub fn powf(&self, p: f64) -> Self {
        if self.sign == 0 {
            return if p > 0.0 { Self::ZERO } else { Self::ONE };
        }
        Self::new(1, self.log_mag * p)
    }

    pub fn recip(&self) -> Self {
        self.powi(-1)
    }

    /// Signed sum of two values.
    pub fn add(&self, other: &Self) -> Self {
        log_sum_exp(&[*self, *other])
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&-*other)
    }
}

impl Mul for LogValue {
    type Output = LogValue;
    fn mul(self, rhs: LogValue) -> LogValue {
        if self.sign == 0 || rhs.sign == 0 {
            LogValue::ZERO
        } else {
            LogValue::new(self.sign * rhs.sign, self.log_mag + rhs.log_mag)
        }
    }
}

impl std::ops::Div for LogValue {
    type Output = LogValue;
    fn div(self, rhs: LogValue) -> LogValue {
        self * rhs.recip()
    }
}

impl Neg for LogValue {
    type Output = LogValue;
    fn neg(self) -> LogValue {
        LogValue::new(-self.sign, self.log_mag)
    }
}

impl PartialOrd for LogValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.log_mag.partial_cmp(&other.log_mag),
                _ => other.log_mag.partial_cmp(&self.log_mag),
            },
            ord => Some(ord),
        }
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            1 => write!(f, "exp({})", self.log_mag),
            _ => write!(f, "-exp({})", self.log_mag),
        }
    }
}

/// Sum of `(sign, log_mag)` terms of one sign, shifted by the largest.
fn accumulate<'a>(values: impl Iterator<Item = &'a LogValue> + Clone) -> f64 {
    let max = values
        .clone()
        .map(|v| v.log_mag)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = values.map(|v| (v.log_mag - max).exp()).sum();
    max + s.ln()
}

/// Signed sum of log-domain values.
///
/// Positive and negative parts are accumulated separately with a max shift
/// and combined once, so exact cancellation yields an exact zero.
pub fn log_sum_exp(values: &[LogValue]) -> LogValue {
    let pos = accumulate(values.iter().filter(|v| v.sign > 0));
    let neg = accumulate(values.iter().filter(|v| v.sign < 0));
    match (pos == f64::NEG_INFINITY, neg == f64::NEG_INFINITY) {
        (true, true) => LogValue::ZERO,
        (false, true) => LogValue::from_ln(pos),
        (true, false) => LogValue::new(-1, neg),
        (false, false) => {
            let (hi, lo, sign) = if pos >= neg { (pos, neg, 1) } else { (neg, pos, -1) };
            if hi == lo {
                return LogValue::ZERO;
            }
            // ln(e^hi - e^lo) = hi + ln(1 - e^{lo - hi})
            LogValue::new(sign, hi + (-(lo - hi).exp_m1()).ln())
        }
    }
}
