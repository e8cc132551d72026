use std::fmt;

use num_traits::One;

use super::bignat::{factorial, BigNat};
use crate::error::{invalid, Result};

/// A non-increasing tuple of nonnegative integers with a fixed number of
/// rows (trailing zeros are significant only as the row count).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<u64>,
}

impl Partition {
    pub fn new(parts: Vec<u64>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return invalid(format!("{parts:?} is not non-increasing"));
        }
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[u64] {
        &self.parts
    }

    /// Number of rows allowed.
    pub fn rows(&self) -> usize {
        self.parts.len()
    }

    /// Number of nonzero parts.
    pub fn length(&self) -> usize {
        self.parts.iter().take_while(|&&p| p > 0).count()
    }

    pub fn size(&self) -> u64 {
        self.parts.iter().sum()
    }

    /// Number of standard Young tableaux, by the hook-length formula.
    pub fn standard_tableaux(&self) -> BigNat {
        let parts: Vec<u64> = self.parts.iter().copied().filter(|&p| p > 0).collect();
        if parts.is_empty() {
            return BigNat::one();
        }
        let mut hooks = BigNat::one();
        for (i, &row) in parts.iter().enumerate() {
            for j in 0..row {
                let arm = row - j - 1;
                let leg = parts[i + 1..].iter().take_while(|&&r| r > j).count() as u64;
                hooks *= arm + leg + 1;
            }
        }
        factorial(self.size()) / hooks
    }

    /// Dimension of the `GL(n)` irrep with this highest weight, `n = rows()`,
    /// by the Weyl dimension formula.
    pub fn weyl_dimension(&self) -> BigNat {
        let n = self.parts.len();
        let mut num = BigNat::one();
        let mut den = BigNat::one();
        for i in 0..n {
            for j in i + 1..n {
                num *= self.parts[i] - self.parts[j] + (j - i) as u64;
                den *= (j - i) as u64;
            }
        }
        num / den
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.parts.iter().map(u64::to_string).collect();
        write!(f, "({})", s.join(","))
    }
}

/// All partitions of `k` with at most `rows` parts, padded to `rows`
/// entries, in lexicographically decreasing order (a linear extension of
/// the dominance order).
pub fn partitions_of(k: u64, rows: usize) -> Vec<Partition> {
    fn rec(rem: u64, max: u64, rows: usize, cur: &mut Vec<u64>, out: &mut Vec<Partition>) {
        if cur.len() == rows {
            if rem == 0 {
                out.push(Partition { parts: cur.clone() });
            }
            return;
        }
        let slots = (rows - cur.len()) as u64;
        // the remaining parts are at most `first`, so `first * slots >= rem`
        let lo = rem.div_ceil(slots);
        for first in (lo..=max.min(rem)).rev() {
            cur.push(first);
            rec(rem - first, first, rows, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if rows == 0 {
        if k == 0 {
            out.push(Partition { parts: vec![] });
        }
        return out;
    }
    rec(k, k, rows, &mut Vec::with_capacity(rows), &mut out);
    out
}
