use crate::repr::{LogValue, Rational};

/// One finite-`k` comparison between an exact quantity and its analytic
/// limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub k: u64,
    /// Lattice point or partition the quantity is evaluated at.
    pub point: Vec<i64>,
    /// The exact finite-`k` quantity (a squared norm, `k!·perm`, or a
    /// probability).
    pub log_value: LogValue,
    /// `(1/k)·ln value`, or `-(1/k)·ln value` for probability reports.
    pub rate: f64,
    /// The analytic limit the rate is compared with.
    pub target: f64,
    /// Signed distance to the target; the report kind fixes the sign.
    pub gap: f64,
}

/// Per-`k` records comparing the exact finite side of a duality with the
/// analytic side.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub theta: Vec<Rational>,
    /// Rows are reported for multiples of this period only.
    pub period: u64,
    /// `cap_θ` in log form where a capacity is involved; `ONE` otherwise.
    pub log_cap: LogValue,
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceReport {
    pub fn last(&self) -> Option<&ConvergenceRow> {
        self.rows.last()
    }

    pub fn row(&self, k: u64) -> Option<&ConvergenceRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}
