use std::collections::HashSet;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Largest absolute weight coordinate accepted by default.
pub const DEFAULT_MAX_WEIGHT: i64 = 1_000_000;

/// Squared amplitudes below this are pruned from the support.
pub const SUPPORT_CUTOFF: f64 = 1e-30;

/// A point of the weight lattice `Zⁿ` of the torus `Tⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WeightVector(Vec<i64>);

impl WeightVector {
    pub fn new(coords: Vec<i64>) -> Result<Self> {
        Self::with_bound(coords, DEFAULT_MAX_WEIGHT)
    }

    pub fn with_bound(coords: Vec<i64>, max_abs: i64) -> Result<Self> {
        if coords.is_empty() {
            return invalid("weight vectors need at least one coordinate");
        }
        if let Some(c) = coords.iter().find(|c| c.abs() > max_abs) {
            return invalid(format!("weight coordinate {c} exceeds bound {max_abs}"));
        }
        Ok(WeightVector(coords))
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(&w, &xi)| w as f64 * xi).sum()
    }
}

/// A vector in a torus representation, stored as its weight decomposition.
///
/// The torus acts on the term with weight `ω` by `e^{⟨ω, x + iy⟩}`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedVector {
    n: usize,
    terms: Vec<(WeightVector, Complex64)>,
}

impl WeightedVector {
    /// Validates and builds a vector; weights must be distinct and of rank
    /// `n`, amplitudes finite, and at least one amplitude nonzero.
    pub fn new(n: usize, terms: Vec<(WeightVector, Complex64)>) -> Result<Self> {
        let v = Self::new_unchecked_nonzero(n, terms)?;
        if v.norm_sq() == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(v)
    }

    /// The zero vector of a rank-`n` torus representation.
    pub fn zero(n: usize) -> Self {
        WeightedVector {
            n,
            terms: Vec::new(),
        }
    }

    fn new_unchecked_nonzero(n: usize, terms: Vec<(WeightVector, Complex64)>) -> Result<Self> {
        if n == 0 {
            return invalid("torus rank must be at least 1");
        }
        let mut seen = HashSet::new();
        for (i, (w, c)) in terms.iter().enumerate() {
            if w.rank() != n {
                return invalid(format!("weight {i} has rank {}, expected {n}", w.rank()));
            }
            if !(c.re.is_finite() && c.im.is_finite()) {
                return Err(Error::NonFiniteAmplitude(i));
            }
            if !seen.insert(w.clone()) {
                return invalid(format!("weight {:?} appears twice", w.coords()));
            }
        }
        let v = WeightedVector { n, terms };
        if !v.norm_sq().is_finite() {
            return invalid("squared amplitudes do not sum to a finite number");
        }
        Ok(v)
    }

    /// Convenience constructor from integer weights and real amplitudes.
    pub fn from_real(weights: &[Vec<i64>], amplitudes: &[f64]) -> Result<Self> {
        if weights.len() != amplitudes.len() {
            return invalid("weights and amplitudes differ in length");
        }
        let n = weights.first().map(Vec::len).unwrap_or(0);
        let terms = weights
            .iter()
            .zip(amplitudes)
            .map(|(w, &a)| Ok((WeightVector::new(w.clone())?, Complex64::new(a, 0.0))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, terms)
    }

    /// A vector whose squared amplitudes are `q` on the given weights.
    pub fn from_born_weights(weights: &[Vec<i64>], q: &[f64]) -> Result<Self> {
        if let Some(x) = q.iter().find(|x| !(**x >= 0.0)) {
            return invalid(format!("squared amplitude {x} is negative"));
        }
        let amps: Vec<f64> = q.iter().map(|x| x.sqrt()).collect();
        Self::from_real(weights, &amps)
    }

    pub fn rank(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(WeightVector, Complex64)] {
        &self.terms
    }

    pub fn norm_sq(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(_, c)| c.norm_sqr() == 0.0)
    }

    /// Support weights with their squared amplitudes, pruning entries below
    /// [`SUPPORT_CUTOFF`].
    pub fn support(&self) -> Vec<(&WeightVector, f64)> {
        self.terms
            .iter()
            .map(|(w, c)| (w, c.norm_sqr()))
            .filter(|(_, q)| *q >= SUPPORT_CUTOFF)
            .collect()
    }

    /// Errors unless the vector is nonzero after support pruning.
    pub(crate) fn require_nonzero(&self) -> Result<()> {
        if self.support().is_empty() {
            Err(Error::ZeroVector)
        } else {
            Ok(())
        }
    }

    /// The vector scaled to unit norm.
    pub fn normalized(&self) -> Result<Self> {
        self.require_nonzero()?;
        let s = self.norm_sq().sqrt();
        Ok(WeightedVector {
            n: self.n,
            terms: self.terms.iter().map(|(w, c)| (w.clone(), c / s)).collect(),
        })
    }

    /// Applies the real torus element `e^{x}`: `c_ω ← e^{⟨ω, x⟩} c_ω`.
    pub fn act_real(&self, x: &[f64]) -> Self {
        WeightedVector {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c * w.dot(x).exp()))
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert!(WeightVector::new(vec![]).is_err());
        assert!(WeightVector::new(vec![2_000_000]).is_err());
        assert!(WeightVector::with_bound(vec![2_000_000], i64::MAX).is_ok());
        assert!(WeightedVector::from_real(&[vec![1], vec![1]], &[1.0, 1.0]).is_err());
        assert!(WeightedVector::from_real(&[vec![1], vec![1, 0]], &[1.0, 1.0]).is_err());
        assert!(matches!(
            WeightedVector::from_real(&[vec![1]], &[f64::NAN]),
            Err(Error::NonFiniteAmplitude(0))
        ));
        assert!(matches!(
            WeightedVector::from_real(&[vec![1]], &[0.0]),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn support_prunes_tiny_amplitudes() {
        let v = WeightedVector::from_real(&[vec![1], vec![-1]], &[1.0, 1e-16]).unwrap();
        assert_eq!(v.support().len(), 1);
        assert!(WeightedVector::zero(2).require_nonzero().is_err());
    }
}
