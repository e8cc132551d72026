use crate::error::{invalid, Result};

/// Tolerance on the total mass of a probability vector.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A probability mass function on `{0, …, n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return invalid("probability vector is empty");
        }
        if let Some(x) = entries.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            return invalid(format!("entry {x} is not a nonnegative number"));
        }
        let total: f64 = entries.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return invalid(format!("entries sum to {total}, not 1"));
        }
        Ok(ProbVector(entries))
    }

    /// Normalizes nonnegative weights to unit mass.
    pub fn normalize(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0 && total.is_finite()) {
            return invalid("weights must have positive finite total");
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_sorted_decreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] >= w[1])
    }
}
