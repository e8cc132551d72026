//! Exact isotypic projection norms `‖Π_{k,λ} v^⊗k‖²` for torus actions.
//!
//! For a torus the isotypic components of `V^⊗k` are its weight spaces, and
//! `‖Π_{k,λ} v^⊗k‖²` is the coefficient of `t^λ` in `(Σ_ω |c_ω|² t^ω)^k`.
//! The coefficients are computed by repeated convolution over a dense box of
//! the weight lattice, with an extended-exponent accumulator so that entries
//! far below `f64::MIN_POSITIVE` are kept exactly in log form.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{echelon_basis, order_modulo};
use crate::report::{ConvergenceReport, ConvergenceRow};
use crate::repr::rational::is_integral;
use crate::repr::{log_sum_exp, LogValue, Rational, WeightedVector};
use crate::scaled::Scaled;
use crate::torus::{moment_map, theta_capacity};

/// Upper limit on memory held by DP slices.
pub const MEMORY_BUDGET_BYTES: usize = 2 << 30;

const ENTRY_BYTES: usize = std::mem::size_of::<Scaled>();

/// Coefficients of `(Σ_ω q_ω t^ω)^k` on a dense box of the lattice.
#[derive(Clone, Debug)]
pub struct Slice {
    k: usize,
    lo: Vec<i64>,
    dims: Vec<usize>,
    values: Vec<Scaled>,
}

impl Slice {
    fn unit(n: usize) -> Slice {
        Slice {
            k: 0,
            lo: vec![0; n],
            dims: vec![1; n],
            values: vec![Scaled::from_f64(1.0)],
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    fn index(&self, lambda: &[i64]) -> Option<usize> {
        let mut idx = 0usize;
        for ((&l, &lo), &d) in lambda.iter().zip(&self.lo).zip(&self.dims) {
            let off = l - lo;
            if off < 0 || off as usize >= d {
                return None;
            }
            idx = idx * d + off as usize;
        }
        Some(idx)
    }

    /// `‖Π_{k,λ} v^⊗k‖²`; zero for weights outside the reachable box.
    pub fn get(&self, lambda: &[i64]) -> LogValue {
        if lambda.len() != self.lo.len() {
            return LogValue::ZERO;
        }
        self.index(lambda)
            .map_or(LogValue::ZERO, |i| self.values[i].to_log_value())
    }

    /// Nonzero entries as `(λ, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (Vec<i64>, LogValue)> + '_ {
        self.values.iter().enumerate().filter(|(_, v)| !v.is_zero()).map(|(i, v)| {
            let mut rest = i;
            let mut lambda = vec![0i64; self.dims.len()];
            for axis in (0..self.dims.len()).rev() {
                lambda[axis] = self.lo[axis] + (rest % self.dims[axis]) as i64;
                rest /= self.dims[axis];
            }
            (lambda, v.to_log_value())
        })
    }

    /// Sum of all entries.
    pub fn total(&self) -> LogValue {
        let terms: Vec<LogValue> = self.values.iter().map(|v| v.to_log_value()).collect();
        log_sum_exp(&terms)
    }
}

/// Streaming convolution DP producing one slice per `k`.
pub struct ProjectionDp {
    weights: Vec<Vec<i64>>,
    q: Vec<Scaled>,
    wmin: Vec<i64>,
    wmax: Vec<i64>,
    current: Slice,
}

impl ProjectionDp {
    pub fn new(v: &WeightedVector) -> Result<Self> {
        v.require_nonzero()?;
        let n = v.rank();
        let support = v.support();
        let weights: Vec<Vec<i64>> = support.iter().map(|(w, _)| w.coords().to_vec()).collect();
        let q = support.iter().map(|(_, q)| Scaled::from_f64(*q)).collect();
        let wmin = (0..n).map(|i| weights.iter().map(|w| w[i]).min().unwrap()).collect();
        let wmax = (0..n).map(|i| weights.iter().map(|w| w[i]).max().unwrap()).collect();
        Ok(ProjectionDp {
            weights,
            q,
            wmin,
            wmax,
            current: Slice::unit(n),
        })
    }

    pub fn current(&self) -> &Slice {
        &self.current
    }

    /// Number of entries in the dense box at step `k`.
    pub fn slice_len(&self, k: usize) -> Result<usize> {
        let mut len = 1usize;
        for (a, b) in self.wmin.iter().zip(&self.wmax) {
            let extent = (k as u128) * ((b - a) as u128) + 1;
            len = usize::try_from(extent)
                .ok()
                .and_then(|e| len.checked_mul(e))
                .ok_or_else(|| self.budget_error(k))?;
        }
        Ok(len)
    }

    fn budget_error(&self, k: usize) -> Error {
        let extents: Vec<String> = self
            .wmin
            .iter()
            .zip(&self.wmax)
            .map(|(a, b)| format!("{}", k as i64 * (b - a) + 1))
            .collect();
        Error::MemoryBudget(format!(
            "lattice box at k = {k} has extent {} (limit {} bytes)",
            extents.join(" x "),
            MEMORY_BUDGET_BYTES
        ))
    }

    /// Advances to `k + 1`.
    pub fn step(&mut self) -> Result<&Slice> {
        let n = self.wmin.len();
        let old = &self.current;
        let k = old.k + 1;
        let len = self.slice_len(k)?;
        if len.saturating_mul(ENTRY_BYTES) > MEMORY_BUDGET_BYTES {
            return Err(self.budget_error(k));
        }
        let dims: Vec<usize> = (0..n)
            .map(|i| old.dims[i] + (self.wmax[i] - self.wmin[i]) as usize)
            .collect();
        let lo: Vec<i64> = (0..n).map(|i| old.lo[i] + self.wmin[i]).collect();
        let mut strides = vec![1usize; n];
        for i in (0..n.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let offsets: Vec<usize> = self
            .weights
            .iter()
            .map(|w| (0..n).map(|i| (w[i] - self.wmin[i]) as usize * strides[i]).sum())
            .collect();
        let mut values = vec![Scaled::ZERO; len];
        let mut idx = vec![0usize; n];
        for &x in &old.values {
            if !x.is_zero() {
                let base: usize = idx.iter().zip(&strides).map(|(a, s)| a * s).sum();
                for (off, q) in offsets.iter().zip(&self.q) {
                    let slot = &mut values[base + off];
                    *slot = slot.add(x.mul(*q));
                }
            }
            // row-major odometer over the old box
            for axis in (0..n).rev() {
                idx[axis] += 1;
                if idx[axis] < old.dims[axis] {
                    break;
                }
                idx[axis] = 0;
            }
        }
        self.current = Slice { k, lo, dims, values };
        Ok(&self.current)
    }
}

/// All slices `k = 0..=k_max`.
#[derive(Clone, Debug)]
pub struct ProjectionTable {
    k_max: usize,
    slices: Vec<Slice>,
}

impl ProjectionTable {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn slice(&self, k: usize) -> Option<&Slice> {
        self.slices.get(k)
    }

    pub fn get(&self, k: usize, lambda: &[i64]) -> LogValue {
        self.slices.get(k).map_or(LogValue::ZERO, |s| s.get(lambda))
    }
}

/// `‖Π_{k,λ} v^⊗k‖²` for all `k ≤ k_max` and all weights `λ`.
pub fn projection_norm_table(v: &WeightedVector, k_max: usize) -> Result<ProjectionTable> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let mut dp = ProjectionDp::new(v)?;
    let mut total = 0usize;
    for k in 0..=k_max {
        total = total.saturating_add(dp.slice_len(k)?.saturating_mul(ENTRY_BYTES));
        if total > MEMORY_BUDGET_BYTES {
            return Err(dp.budget_error(k));
        }
    }
    let mut slices = Vec::with_capacity(k_max + 1);
    slices.push(dp.current().clone());
    for _ in 0..k_max {
        slices.push(dp.step()?.clone());
    }
    Ok(ProjectionTable { k_max, slices })
}

fn support_points(v: &WeightedVector) -> Vec<Vec<i64>> {
    v.support().iter().map(|(w, _)| w.coords().to_vec()).collect()
}

/// Differences `ω - ω₀` of support weights.
fn differences(points: &[Vec<i64>]) -> Vec<Vec<i64>> {
    points[1..]
        .iter()
        .map(|w| w.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect()
}

/// Least `m ≥ 1` such that `m·θ` lies in the coset `m·ω₀ + Λ_diff` reached by
/// `m`-fold tensor powers; `None` when `θ` is off the affine span.
fn subsemigroup_period(points: &[Vec<i64>], theta: &[Rational]) -> Option<u64> {
    let basis = echelon_basis(&differences(points));
    let shift: Vec<Rational> = theta
        .iter()
        .zip(&points[0])
        .map(|(t, &w)| t - Rational::from_integer(BigInt::from(w)))
        .collect();
    order_modulo(&basis, &shift).and_then(|m| m.to_u64())
}

/// Compares `(1/k) ln ‖Π_{k,kθ} v^⊗k‖²` with `ln cap_θ(v)²` over the
/// subsemigroup of `k` for which `kθ` is reachable.
///
/// Rows carry `gap = 2 ln cap_θ - (1/k) ln ‖Π_{k,kθ}‖²`, which is
/// nonnegative by weak duality and tends to zero.
pub fn duality_report(v: &WeightedVector, theta: &[Rational], k_max: usize) -> Result<ConvergenceReport> {
    let cap = theta_capacity(v, theta)?;
    let mut report = ConvergenceReport {
        theta: theta.to_vec(),
        period: 0,
        log_cap: cap.log_cap,
        rows: Vec::new(),
    };
    if !cap.is_stable() {
        return Ok(report);
    }
    let points = support_points(v);
    let Some(period) = subsemigroup_period(&points, theta) else {
        return Ok(report);
    };
    report.period = period;
    let target = 2.0 * cap.ln_cap();
    let mut dp = ProjectionDp::new(v)?;
    for k in 1..=k_max as u64 {
        let slice = dp.step()?;
        if k % period != 0 {
            continue;
        }
        let point: Vec<i64> = theta
            .iter()
            .map(|t| {
                let p = t * Rational::from_integer(BigInt::from(k));
                debug_assert!(is_integral(&p));
                p.to_integer().to_i64().expect("lattice point fits in i64")
            })
            .collect();
        let log_value = slice.get(&point);
        let rate = log_value.log_mag() / k as f64;
        report.rows.push(ConvergenceRow {
            k,
            point,
            log_value,
            rate,
            target,
            gap: target - rate,
        });
    }
    Ok(report)
}

impl ConvergenceRow {
    /// `‖Π_{k,kθ} v^⊗k‖^{1/k} / cap_θ(v)` for duality rows.
    pub fn norm_ratio(&self) -> f64 {
        (-self.gap / 2.0).exp()
    }
}

/// `k^{d/2}·‖Π_k v^⊗k‖²` along the period subsemigroup, for a unit vector
/// with `μ(v) = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct PrefactorSequence {
    /// `dim K - dim K_[v]`: the rank of the lattice of weight differences.
    pub exponent_dim: usize,
    pub period: u64,
    pub rows: Vec<(u64, f64)>,
}

fn prefactor_setup(v: &WeightedVector) -> Result<(usize, u64)> {
    v.require_nonzero()?;
    let norm = v.norm_sq();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!("‖v‖² = {norm}, expected 1")));
    }
    let mu = moment_map(v)?;
    if mu.iter().any(|m| m.abs() > 1e-10) {
        return Err(Error::Precondition(format!("μ(v) = {mu:?} is not zero")));
    }
    let points = support_points(v);
    let d = echelon_basis(&differences(&points)).len();
    let zero = vec![Rational::zero(); v.rank()];
    let period = subsemigroup_period(&points, &zero)
        .ok_or_else(|| Error::Precondition("0 is not in the affine span of the support".into()))?;
    Ok((d, period))
}

/// Prefactor sequence for every `k ≤ k_max` in the period subsemigroup,
/// from the exact DP.
pub fn prefactor_sequence(v: &WeightedVector, k_max: usize) -> Result<PrefactorSequence> {
    let (d, period) = prefactor_setup(v)?;
    let zero = vec![0i64; v.rank()];
    let mut dp = ProjectionDp::new(v)?;
    let mut rows = Vec::new();
    for k in 1..=k_max as u64 {
        let slice = dp.step()?;
        if k % period == 0 {
            let scale = (k as f64).ln() * d as f64 / 2.0;
            rows.push((k, (slice.get(&zero).log_mag() + scale).exp()));
        }
    }
    Ok(PrefactorSequence {
        exponent_dim: d,
        period,
        rows,
    })
}

/// `‖Π_k v^⊗k‖²` as the Haar average `∫ ⟨v, φ(u)v⟩^k du` over `U(1)ⁿ`,
/// evaluated exactly (up to rounding) by the trapezoid rule on a grid fine
/// enough that no nonzero Fourier mode of the integrand aliases onto 0.
pub fn invariant_norm_by_quadrature(v: &WeightedVector, k: u64) -> Result<f64> {
    v.require_nonzero()?;
    let n = v.rank();
    let norm = v.norm_sq();
    let support = v.support();
    let weights: Vec<&[i64]> = support.iter().map(|(w, _)| w.coords()).collect();
    let q: Vec<f64> = support.iter().map(|(_, q)| q / norm).collect();
    let grid: Vec<usize> = (0..n)
        .map(|i| {
            let reach = weights.iter().map(|w| w[i].unsigned_abs()).max().unwrap_or(0);
            (k * reach + 1) as usize
        })
        .collect();
    let points = grid.iter().try_fold(1usize, |a, &g| a.checked_mul(g));
    if points.is_none_or(|p| p > 1 << 34) {
        return Err(Error::MemoryBudget(format!("quadrature grid {grid:?} too large")));
    }
    // phases[i][g][j] = e^{i ω_{j,i} φ_g} on axis i
    let phases: Vec<Vec<Vec<Complex64>>> = (0..n)
        .map(|i| {
            (0..grid[i])
                .map(|g| {
                    let phi = 2.0 * std::f64::consts::PI * g as f64 / grid[i] as f64;
                    weights
                        .iter()
                        .map(|w| Complex64::from_polar(1.0, w[i] as f64 * phi))
                        .collect()
                })
                .collect()
        })
        .collect();
    let inner: usize = grid[1..].iter().product();
    let kf = k as f64;
    // each outer grid line is reduced separately, then summed in order
    let partials: Vec<f64> = (0..grid[0])
        .into_par_iter()
        .map(|g0| {
            let mut idx = vec![0usize; n];
            idx[0] = g0;
            let mut acc = 0.0;
            for _ in 0..inner {
                let mut f = Complex64::zero();
                for (j, qj) in q.iter().enumerate() {
                    let mut term = Complex64::new(*qj, 0.0);
                    for (axis, &g) in idx.iter().enumerate() {
                        term *= phases[axis][g][j];
                    }
                    f += term;
                }
                let (r, arg) = f.to_polar();
                acc += r.powf(kf) * (kf * arg).cos();
                for axis in (1..n).rev() {
                    idx[axis] += 1;
                    if idx[axis] < grid[axis] {
                        break;
                    }
                    idx[axis] = 0;
                }
            }
            acc
        })
        .collect();
    let total: usize = grid.iter().product();
    Ok(partials.iter().sum::<f64>() / total as f64 * norm.powf(kf))
}

/// Prefactor values at selected `k` (which must lie in the period
/// subsemigroup) via [`invariant_norm_by_quadrature`]. Scales to lattice
/// extents where the dense DP would not fit.
pub fn prefactor_at(v: &WeightedVector, ks: &[u64]) -> Result<PrefactorSequence> {
    let (d, period) = prefactor_setup(v)?;
    let rows = ks
        .iter()
        .map(|&k| {
            if k == 0 || k % period != 0 {
                return Err(Error::InvalidInput(format!(
                    "k = {k} is not a positive multiple of the period {period}"
                )));
            }
            let value = invariant_norm_by_quadrature(v, k)?;
            Ok((k, value * (k as f64).powf(d as f64 / 2.0)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PrefactorSequence {
        exponent_dim: d,
        period,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{log_binomial, rat_int};
    use std::collections::HashMap;

    fn binomial_vector() -> WeightedVector {
        let s = 0.5f64.sqrt();
        WeightedVector::from_real(&[vec![1], vec![-1]], &[s, s]).unwrap()
    }

    // enumerate all k-tuples of support weights
    fn brute_force(v: &WeightedVector, k: usize) -> HashMap<Vec<i64>, f64> {
        let support = v.support();
        let mut out = HashMap::new();
        let m = support.len();
        let mut idx = vec![0usize; k];
        loop {
            let mut lambda = vec![0i64; v.rank()];
            let mut prod = 1.0;
            for &j in &idx {
                for (l, w) in lambda.iter_mut().zip(support[j].0.coords()) {
                    *l += w;
                }
                prod *= support[j].1;
            }
            *out.entry(lambda).or_insert(0.0) += prod;
            let mut axis = k;
            loop {
                if axis == 0 {
                    return out;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < m {
                    break;
                }
                idx[axis] = 0;
            }
        }
    }

    #[test]
    fn binomial_examples() {
        let t = projection_norm_table(&binomial_vector(), 7).unwrap();
        assert!((t.get(2, &[0]).to_f64() - 0.5).abs() < 1e-15);
        for k in [1usize, 3, 5, 7] {
            assert!(t.get(k, &[0]).is_zero());
        }
        for k in 1..=7usize {
            assert!((t.get(k, &[k as i64]).log_mag() - k as f64 * 0.5f64.ln()).abs() < 1e-13);
        }
        assert!(t.get(3, &[5]).is_zero());
    }

    #[test]
    fn table_matches_enumeration() {
        let v = WeightedVector::from_real(
            &[vec![1, 0], vec![0, 2], vec![-1, -1], vec![2, -1]],
            &[0.3, 1.1, 0.7, 0.2],
        )
        .unwrap();
        let t = projection_norm_table(&v, 5).unwrap();
        for k in 1..=5 {
            let exact = brute_force(&v, k);
            let slice = t.slice(k).unwrap();
            assert_eq!(slice.entries().count(), exact.len());
            for (lambda, val) in slice.entries() {
                let e = exact[&lambda];
                assert!((val.to_f64() - e).abs() <= 1e-13 * e, "{lambda:?}");
            }
        }
    }

    #[test]
    fn deep_tails_stay_representable() {
        let t = projection_norm_table(&binomial_vector(), 1200).unwrap();
        let v = t.get(1200, &[1200]);
        assert_eq!(v.sign(), 1);
        assert!((v.log_mag() - 1200.0 * 0.5f64.ln()).abs() < 1e-9);
        let completeness = t.slice(1200).unwrap().total();
        assert!(completeness.log_mag().abs() < 1e-10);
    }

    #[test]
    fn memory_budget_error_names_extent() {
        let v = WeightedVector::from_real(&[vec![1000, 1000, 1000], vec![-1000, -1000, -1000]], &[1.0, 1.0])
            .unwrap();
        match projection_norm_table(&v, 50) {
            Err(Error::MemoryBudget(msg)) => assert!(msg.contains("extent"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duality_examples() {
        let r = duality_report(&binomial_vector(), &[rat_int(0)], 200).unwrap();
        assert_eq!(r.period, 2);
        let last = r.last().unwrap();
        assert_eq!(last.k, 200);
        let expected = (log_binomial(200, 100).unwrap() - 200.0 * 2f64.ln()) / 200.0;
        assert!((last.rate - expected).abs() < 1e-12);
        // (‖Π‖²)^{1/k} / cap² = C(200,100)^{1/200} / 2
        assert!(((-last.gap).exp() - 0.98572).abs() < 1e-5);
        for w in r.rows.windows(2) {
            assert!(w[1].gap <= w[0].gap + 1e-12);
        }

        let v = WeightedVector::from_real(&[vec![1]], &[1.0]).unwrap();
        let r = duality_report(&v, &[rat_int(1)], 20).unwrap();
        assert_eq!(r.rows.len(), 20);
        assert!(r.rows.iter().all(|row| row.gap.abs() < 1e-14));
    }

    #[test]
    fn infeasible_duality_report_is_empty() {
        let v = WeightedVector::from_real(&[vec![1]], &[1.0]).unwrap();
        let r = duality_report(&v, &[rat_int(0)], 10).unwrap();
        assert!(r.rows.is_empty());
        assert!(r.log_cap.is_zero());
    }

    #[test]
    fn prefactor_binomial() {
        let p = prefactor_sequence(&binomial_vector(), 400).unwrap();
        assert_eq!((p.exponent_dim, p.period), (1, 2));
        let (k, val) = *p.rows.last().unwrap();
        assert_eq!(k, 400);
        let exact = (0.5 * 400f64.ln() + log_binomial(400, 200).unwrap() - 400.0 * 2f64.ln()).exp();
        assert!((val - exact).abs() < 1e-12);
    }

    #[test]
    fn prefactor_single_weight() {
        let v = WeightedVector::from_real(&[vec![0, 0]], &[1.0]).unwrap();
        let p = prefactor_sequence(&v, 10).unwrap();
        assert_eq!((p.exponent_dim, p.period), (0, 1));
        assert!(p.rows.iter().all(|(_, x)| (x - 1.0).abs() < 1e-15));
    }

    #[test]
    fn prefactor_preconditions() {
        let v = WeightedVector::from_real(&[vec![1], vec![-1]], &[0.9f64.sqrt(), 0.1f64.sqrt()]).unwrap();
        assert!(matches!(prefactor_sequence(&v, 10), Err(Error::Precondition(_))));
        let v = WeightedVector::from_real(&[vec![1], vec![-1]], &[1.0, 1.0]).unwrap();
        assert!(matches!(prefactor_sequence(&v, 10), Err(Error::Precondition(_))));
    }

    #[test]
    fn quadrature_matches_dp() {
        let v = WeightedVector::from_born_weights(
            &[vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]],
            &[0.25; 4],
        )
        .unwrap();
        let dp = prefactor_sequence(&v, 60).unwrap();
        let quad = prefactor_at(&v, &[2, 10, 40, 60]).unwrap();
        assert_eq!(dp.exponent_dim, 2);
        for (k, val) in quad.rows {
            let exact = dp.rows.iter().find(|r| r.0 == k).unwrap().1;
            assert!((val - exact).abs() < 1e-11 * exact.max(1.0), "k={k}: {val} vs {exact}");
        }
        assert!(prefactor_at(&v, &[3]).is_err());
    }
}
