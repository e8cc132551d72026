//! Spectrum estimation and tensor-power multiplicities: the Schur–Weyl
//! measure `P(λ) = f^λ s_λ(q)`, the Keyl rate function, and `SU(2)`
//! multiplicities with the Legendre-transform (Duffield) rate.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::haar::sample_haar_unitary;
use crate::report::{ConvergenceReport, ConvergenceRow};
use crate::repr::{
    binomial, ln_big, ln_rational, log_sum_exp, partitions_of, BigNat, LogValue, Partition, ProbVector, Rational,
};

/// Tolerance for Hermiticity, unit trace and positivity of states.
pub const STATE_TOLERANCE: f64 = 1e-12;
/// Bialternant evaluation is used when `Π_{i<j} (1 − q_j/q_i)` is at least
/// this; the relative rounding error is then below `1e-12`.
pub const SEPARATION_THRESHOLD: f64 = 1e-3;
pub const MAX_MEASURE_K: u64 = 400;
pub const MAX_MEASURE_ROWS: usize = 4;
pub const MAX_SU2_K: u64 = 1000;

// ---------------------------------------------------------------------------
// Schur polynomials

/// Evaluates `s_λ(q)` for a fixed nonnegative `q` and many `λ`.
pub struct SchurEvaluator {
    /// Positive entries of `q`, decreasing.
    q: Vec<f64>,
    mode: Mode,
}

enum Mode {
    /// `det(q_i^{λ_j + m − j}) / Π_{i<j}(q_i − q_j)`.
    Bialternant { ln_q: Vec<f64>, ln_vandermonde: f64 },
    /// Jacobi–Trudi `det(h_{λ_i − i + j})` in exact rational arithmetic.
    Exact { q: Vec<Rational>, h: Vec<Rational> },
}

fn permutations(m: usize) -> Vec<(Vec<usize>, i8)> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], sign: i8, out: &mut Vec<(Vec<usize>, i8)>) {
        let m = used.len();
        if prefix.len() == m {
            out.push((prefix.clone(), sign));
            return;
        }
        for i in 0..m {
            if !used[i] {
                // inversions created by placing i after the larger used entries
                let inv = (i + 1..m).filter(|&j| used[j]).count();
                used[i] = true;
                prefix.push(i);
                go(prefix, used, if inv % 2 == 0 { sign } else { -sign }, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; m], 1, &mut out);
    out
}

fn rational_det(mut a: Vec<Vec<Rational>>) -> Rational {
    let n = a.len();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return Rational::zero();
        };
        if p != col {
            a.swap(p, col);
            det = -det;
        }
        let pivot = a[col][col].clone();
        det *= &pivot;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &pivot;
            for c in col..n {
                let sub = &f * &a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    det
}

impl SchurEvaluator {
    /// `q` must be nonnegative; its order is irrelevant.
    pub fn new(q: &[f64]) -> Result<Self> {
        if q.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return invalid("Schur polynomial arguments must be finite and nonnegative");
        }
        let mut qs: Vec<f64> = q.iter().copied().filter(|&x| x > 0.0).collect();
        qs.sort_by(|a, b| b.total_cmp(a));
        let m = qs.len();
        let mut separation = 1.0;
        let mut ln_vandermonde = 0.0;
        for i in 0..m {
            for j in i + 1..m {
                separation *= 1.0 - qs[j] / qs[i];
                ln_vandermonde += (qs[i] - qs[j]).ln();
            }
        }
        let mode = if separation >= SEPARATION_THRESHOLD && m <= 6 {
            Mode::Bialternant {
                ln_q: qs.iter().map(|x| x.ln()).collect(),
                ln_vandermonde,
            }
        } else {
            Mode::Exact {
                q: qs.iter().map(|&x| Rational::from_float(x).expect("finite")).collect(),
                h: vec![Rational::one()],
            }
        };
        Ok(SchurEvaluator { q: qs, mode })
    }

    /// Extends the table of complete homogeneous polynomials to degree `d`.
    pub fn prepare(&mut self, d: u64) {
        if let Mode::Exact { q, h } = &mut self.mode {
            if h.len() as u64 > d {
                return;
            }
            // h^{(j)}_e = h^{(j-1)}_e + q_j h^{(j)}_{e-1}, one variable at a time
            let mut table = vec![Rational::zero(); d as usize + 1];
            table[0] = Rational::one();
            for qj in q.iter() {
                for e in 1..=d as usize {
                    let add = qj * &table[e - 1];
                    table[e] += add;
                }
            }
            *h = table;
        }
    }

    pub fn uses_exact_arithmetic(&self) -> bool {
        matches!(self.mode, Mode::Exact { .. })
    }

    pub fn eval(&self, lambda: &Partition) -> LogValue {
        let m = self.q.len();
        let parts: Vec<u64> = lambda.parts().iter().copied().filter(|&p| p > 0).collect();
        if parts.len() > m {
            return LogValue::ZERO;
        }
        if parts.is_empty() {
            return LogValue::ONE;
        }
        match &self.mode {
            Mode::Bialternant { ln_q, ln_vandermonde } => {
                let exps: Vec<f64> = (0..m)
                    .map(|j| (parts.get(j).copied().unwrap_or(0) + (m - 1 - j) as u64) as f64)
                    .collect();
                let terms: Vec<LogValue> = permutations(m)
                    .into_iter()
                    .map(|(perm, sign)| {
                        let l: f64 = perm.iter().zip(&exps).map(|(&i, e)| e * ln_q[i]).sum();
                        LogValue::new(sign, l)
                    })
                    .collect();
                let num = log_sum_exp(&terms);
                if num.sign() <= 0 {
                    return self.eval_exact(&parts);
                }
                LogValue::from_ln(num.log_mag() - ln_vandermonde)
            }
            Mode::Exact { .. } => self.eval_exact(&parts),
        }
    }

    fn eval_exact(&self, parts: &[u64]) -> LogValue {
        let l = parts.len();
        let degree = parts[0] + l as u64;
        let owned;
        let h = match &self.mode {
            Mode::Exact { h, .. } if h.len() as u64 > degree => h,
            _ => {
                let mut e = SchurEvaluator {
                    q: self.q.clone(),
                    mode: Mode::Exact {
                        q: self.q.iter().map(|&x| Rational::from_float(x).expect("finite")).collect(),
                        h: vec![Rational::one()],
                    },
                };
                e.prepare(degree);
                owned = e;
                match &owned.mode {
                    Mode::Exact { h, .. } => h,
                    Mode::Bialternant { .. } => unreachable!(),
                }
            }
        };
        let a: Vec<Vec<Rational>> = (0..l)
            .map(|i| {
                (0..l)
                    .map(|j| {
                        let idx = parts[i] as i64 - i as i64 + j as i64;
                        if idx < 0 {
                            Rational::zero()
                        } else {
                            h[idx as usize].clone()
                        }
                    })
                    .collect()
            })
            .collect();
        let det = rational_det(a);
        if det.is_positive() {
            LogValue::from_ln(ln_rational(&det))
        } else {
            LogValue::ZERO
        }
    }
}

/// `s_λ(q)` in log form.
pub fn schur_polynomial(lambda: &Partition, q: &[f64]) -> Result<LogValue> {
    let mut e = SchurEvaluator::new(q)?;
    e.prepare(lambda.parts().first().copied().unwrap_or(0) + lambda.rows() as u64);
    Ok(e.eval(lambda))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchurWeylRow {
    pub lambda: Partition,
    /// Number of standard Young tableaux of shape `λ`.
    pub f_lambda: BigNat,
    pub s_lambda: LogValue,
    pub prob: LogValue,
}

fn require_sorted(q: &ProbVector, name: &str) -> Result<()> {
    if !q.is_sorted_decreasing() {
        return invalid(format!("{name} must be sorted decreasingly"));
    }
    Ok(())
}

/// `P(λ) = f^λ s_λ(q)` for every partition of `k` with at most `len(q)`
/// parts, in lexicographically decreasing order of `λ`.
pub fn schur_weyl_measure(q: &ProbVector, k: u64) -> Result<Vec<SchurWeylRow>> {
    require_sorted(q, "q")?;
    if k > MAX_MEASURE_K || q.len() > MAX_MEASURE_ROWS {
        return invalid(format!(
            "Schur–Weyl measure is supported for k ≤ {MAX_MEASURE_K} and at most {MAX_MEASURE_ROWS} rows"
        ));
    }
    let mut eval = SchurEvaluator::new(q.entries())?;
    eval.prepare(k + q.len() as u64);
    Ok(partitions_of(k, q.len())
        .into_par_iter()
        .map(|lambda| schur_weyl_row(&eval, lambda))
        .collect())
}

fn schur_weyl_row(eval: &SchurEvaluator, lambda: Partition) -> SchurWeylRow {
    let f_lambda = lambda.standard_tableaux();
    let s_lambda = eval.eval(&lambda);
    let prob = if s_lambda.is_zero() {
        LogValue::ZERO
    } else {
        LogValue::from_ln(ln_big(&f_lambda) + s_lambda.log_mag())
    };
    SchurWeylRow {
        lambda,
        f_lambda,
        s_lambda,
        prob,
    }
}

// ---------------------------------------------------------------------------
// States and the Keyl rate

/// A density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianState(DMatrix<Complex64>);

impl HermitianState {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return invalid("state must be a nonempty square matrix");
        }
        let n = m.nrows();
        let defect = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| (m[(i, j)] - m[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if defect > STATE_TOLERANCE {
            return invalid(format!("matrix is not Hermitian (defect {defect:e})"));
        }
        let trace: f64 = (0..n).map(|i| m[(i, i)].re).sum();
        if (trace - 1.0).abs() > STATE_TOLERANCE {
            return invalid(format!("trace is {trace}, expected 1"));
        }
        let s = HermitianState(m);
        let (p, _) = s.eigen();
        if p[n - 1] < -STATE_TOLERANCE {
            return invalid(format!("eigenvalue {} is negative", p[n - 1]));
        }
        Ok(s)
    }

    pub fn from_diagonal(p: &[f64]) -> Result<Self> {
        let n = p.len();
        Self::new(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(p[i], 0.0)
            } else {
                Complex64::zero()
            }
        }))
    }

    /// `u·diag(p)·u†`, symmetrized against rounding.
    pub fn from_spectrum(p: &[f64], u: &DMatrix<Complex64>) -> Result<Self> {
        let d = DMatrix::from_fn(p.len(), p.len(), |i, j| {
            if i == j {
                Complex64::new(p[i], 0.0)
            } else {
                Complex64::zero()
            }
        });
        let m = u * d * u.adjoint();
        Self::new((&m + m.adjoint()) * Complex64::new(0.5, 0.0))
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Eigenvalues in decreasing order and the matching eigenvector columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let e = self.0.clone().symmetric_eigen();
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
        let p = order.iter().map(|&i| e.eigenvalues[i]).collect();
        let u = DMatrix::from_fn(n, n, |r, c| e.eigenvectors[(r, order[c])]);
        (p, u)
    }
}

/// Pivot below which a leading minor is treated as singular.
const PIVOT_TOLERANCE: f64 = 1e-13;
/// Spectral gaps below this count as zero weights in the Keyl sum.
const GAP_TOLERANCE: f64 = 1e-12;

/// `ln` of the leading principal minors of a PSD Hermitian matrix, from the
/// pivots of an unpivoted `LDL†` factorization; `None` once singular (all
/// larger leading minors of a PSD matrix then vanish too).
fn ln_leading_minors(t: &DMatrix<Complex64>) -> Vec<Option<f64>> {
    let n = t.nrows();
    let mut l = DMatrix::<Complex64>::identity(n, n);
    let mut d = vec![0.0; n];
    let mut out = Vec::with_capacity(n);
    let mut acc = Some(0.0);
    for i in 0..n {
        if acc.is_some() {
            let di = t[(i, i)].re - (0..i).map(|j| l[(i, j)].norm_sqr() * d[j]).sum::<f64>();
            d[i] = di;
            if di <= PIVOT_TOLERANCE {
                acc = None;
            } else {
                acc = acc.map(|a| a + di.ln());
                for r in i + 1..n {
                    let s: Complex64 = (0..i).map(|j| l[(r, j)] * l[(i, j)].conj() * d[j]).sum();
                    l[(r, i)] = (t[(r, i)] - s) / di;
                }
            }
        }
        out.push(acc);
    }
    out
}

fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        p * p.ln()
    } else {
        0.0
    }
}

/// Keyl's rate
/// `I(ρ‖σ) = Σ p_k ln p_k − Σ (p_k − p_{k+1}) ln prim_k(u†σu)` with
/// `ρ = u diag(p) u†`, `p` decreasing. Returns `+∞` when a positive weight
/// meets a vanishing minor.
pub fn keyl_rate(rho: &HermitianState, sigma: &HermitianState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return invalid("states have different dimensions");
    }
    let (p, u) = rho.eigen();
    let p: Vec<f64> = p.into_iter().map(|x| x.max(0.0)).collect();
    let t = u.adjoint() * sigma.matrix() * &u;
    let minors = ln_leading_minors(&t);
    let n = p.len();
    let mut rate: f64 = p.iter().map(|&x| entropy_term(x)).sum();
    for k in 0..n {
        let gap = p[k] - if k + 1 < n { p[k + 1] } else { 0.0 };
        if gap <= GAP_TOLERANCE {
            continue;
        }
        match minors[k] {
            Some(l) => rate -= gap * l,
            None => return Ok(f64::INFINITY),
        }
    }
    Ok(rate)
}

/// `tr ρ(ln ρ − ln σ)`, `+∞` when `supp ρ ⊄ supp σ`.
pub fn quantum_relative_entropy(rho: &HermitianState, sigma: &HermitianState) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return invalid("states have different dimensions");
    }
    let (p, a) = rho.eigen();
    let (s, b) = sigma.eigen();
    let overlap = a.adjoint() * &b;
    let mut value: f64 = p.iter().map(|&x| entropy_term(x.max(0.0))).sum();
    for (i, &pi) in p.iter().enumerate() {
        if pi <= 0.0 {
            continue;
        }
        for (j, &sj) in s.iter().enumerate() {
            let w = pi * overlap[(i, j)].norm_sqr();
            if sj <= STATE_TOLERANCE {
                if w > STATE_TOLERANCE {
                    return Ok(f64::INFINITY);
                }
            } else {
                value -= w * sj.ln();
            }
        }
    }
    Ok(value)
}

/// `D(p‖q) = Σ p_k ln(p_k/q_k)`, `+∞` when `supp p ⊄ supp q`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).ln();
        }
    }
    d
}

/// Rate of the spectrum estimator: `D(p‖q)` for sorted `p`, `q`.
pub fn kw_rate(p: &ProbVector, q: &ProbVector) -> Result<f64> {
    require_sorted(p, "p")?;
    require_sorted(q, "q")?;
    if p.len() != q.len() {
        return invalid("p and q have different lengths");
    }
    Ok(kl_divergence(p.entries(), q.entries()))
}

/// `(min over sampled u of I(u diag(p) u†‖σ), D(p‖spec σ))`. The sampled
/// set always contains the eigenbasis of `σ`, where the minimum is attained.
pub fn kw_minimization_check(p: &ProbVector, sigma: &HermitianState, samples: usize, seed: u64) -> Result<(f64, f64)> {
    let n = sigma.dim();
    if n > 3 || p.len() != n {
        return invalid("kw_minimization_check needs matching dimensions n ≤ 3");
    }
    let mut ps = p.entries().to_vec();
    ps.sort_by(|a, b| b.total_cmp(a));
    let (q, v) = sigma.eigen();
    let q: Vec<f64> = q.into_iter().map(|x| x.max(0.0)).collect();
    let analytic = keyl_rate(&HermitianState::from_spectrum(&ps, &v)?, sigma)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = analytic;
    for _ in 0..samples {
        let u = sample_haar_unitary(n, &mut rng)?;
        best = best.min(keyl_rate(&HermitianState::from_spectrum(&ps, &u)?, sigma)?);
    }
    Ok((best, kl_divergence(&ps, &q)))
}

// ---------------------------------------------------------------------------
// SU(2) multiplicities and the Duffield rate

/// Multiplicities `n_{k,λ}` of the irreps `V_λ` (highest weight `λ`,
/// dimension `λ + 1`) in `(C²)^⊗k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Su2MultTable {
    pub k: u64,
    pub entries: BTreeMap<u64, BigNat>,
}

impl Su2MultTable {
    pub fn get(&self, lambda: u64) -> BigNat {
        self.entries.get(&lambda).cloned().unwrap_or_default()
    }

    /// `Σ_λ (λ+1)·n_{k,λ}`.
    pub fn dimension(&self) -> BigNat {
        self.entries.iter().map(|(l, n)| n * (l + 1)).sum()
    }
}

/// Clebsch–Gordan recursion `n_{k+1,λ} = n_{k,λ−1} + n_{k,λ+1}`.
pub fn su2_multiplicities(k: u64) -> Result<Su2MultTable> {
    let mut last = None;
    su2_multiplicity_rows(k, |t| last = Some(t.clone()))?;
    Ok(last.expect("k = 0 row is always produced"))
}

/// Calls `f` on the tables for `k = 0, 1, …, k_max` in turn.
pub fn su2_multiplicity_rows(k_max: u64, mut f: impl FnMut(&Su2MultTable)) -> Result<()> {
    if k_max > MAX_SU2_K {
        return invalid(format!("k must be at most {MAX_SU2_K}"));
    }
    let mut row: Vec<BigNat> = vec![BigNat::one()];
    for k in 0..=k_max {
        if k > 0 {
            let mut next = vec![BigNat::zero(); k as usize + 1];
            for (l, n) in row.iter().enumerate() {
                if n.is_zero() {
                    continue;
                }
                next[l + 1] += n;
                if l > 0 {
                    next[l - 1] += n;
                }
            }
            row = next;
        }
        f(&Su2MultTable {
            k,
            entries: row
                .iter()
                .enumerate()
                .filter(|(_, n)| !n.is_zero())
                .map(|(l, n)| (l as u64, n.clone()))
                .collect(),
        });
    }
    Ok(())
}

/// `C(k,(k−λ)/2) − C(k,(k−λ)/2 − 1)`, zero off the parity class.
pub fn su2_multiplicity_closed_form(k: u64, lambda: u64) -> BigNat {
    if lambda > k || (k - lambda) % 2 != 0 {
        return BigNat::zero();
    }
    let j = (k - lambda) / 2;
    let a = binomial(k, j);
    if j == 0 {
        a
    } else {
        a - binomial(k, j - 1)
    }
}

fn log_partition(weights: &[i64], h: f64) -> f64 {
    let wmax = *weights.iter().max().unwrap() as f64;
    wmax * h + weights.iter().map(|&w| ((w as f64 - wmax) * h).exp()).sum::<f64>().ln()
}

/// Tilted mean and variance of the weights at `h`.
fn tilted_moments(weights: &[i64], h: f64) -> (f64, f64) {
    let wmax = *weights.iter().max().unwrap() as f64;
    let e: Vec<f64> = weights.iter().map(|&w| ((w as f64 - wmax) * h).exp()).collect();
    let z: f64 = e.iter().sum();
    let mean = weights.iter().zip(&e).map(|(&w, x)| w as f64 * x).sum::<f64>() / z;
    let var = weights.iter().zip(&e).map(|(&w, x)| (w as f64 - mean).powi(2) * x).sum::<f64>() / z;
    (mean, var)
}

/// `sup_{h ≥ 0} θh − ln(χ_W(e^h)/d_W)` for the weight multiset of `W`.
pub fn duffield_rate(weights: &[i64], theta: f64) -> Result<f64> {
    if weights.is_empty() {
        return invalid("weight multiset is empty");
    }
    if !(theta.is_finite() && theta >= 0.0) {
        return invalid("θ must be a finite nonnegative number");
    }
    let wmax = *weights.iter().max().unwrap();
    let d = weights.len() as f64;
    if theta > wmax as f64 {
        return Ok(f64::INFINITY);
    }
    if theta == wmax as f64 {
        let top = weights.iter().filter(|&&w| w == wmax).count() as f64;
        return Ok((d / top).ln());
    }
    let (mean0, _) = tilted_moments(weights, 0.0);
    if theta <= mean0 {
        return Ok(0.0);
    }
    // bracket the root of mean(h) = θ, then safeguarded Newton
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while tilted_moments(weights, hi).0 < theta {
        lo = hi;
        hi *= 2.0;
    }
    let mut h = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (mean, var) = tilted_moments(weights, h);
        let g = mean - theta;
        if g.abs() < 1e-15 {
            break;
        }
        if g > 0.0 {
            hi = h;
        } else {
            lo = h;
        }
        let step = h - g / var;
        h = if var > 0.0 && step > lo && step < hi { step } else { 0.5 * (lo + hi) };
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    Ok(theta * h - (log_partition(weights, h) - d.ln()))
}

// ---------------------------------------------------------------------------
// Large-deviation reports

#[derive(Clone, Debug, PartialEq)]
pub enum LdpFamily {
    /// Spectrum estimation for a state with spectrum `q`.
    SchurWeyl(ProbVector),
    /// Highest weights in `W^⊗k` for an `SU(2)`-representation `W`, given
    /// by its weight multiset.
    Duffield(Vec<i64>),
}

/// Nearest partition of `k` to `kθ` (largest remainders; ties go to the
/// earlier, larger part).
pub fn round_partition(theta: &[Rational], k: u64) -> Partition {
    let target: Vec<Rational> = theta.iter().map(|t| t * Rational::from_integer(k.into())).collect();
    let mut parts: Vec<u64> = target.iter().map(|t| t.floor().to_integer().to_u64().unwrap_or(0)).collect();
    let missing = k.saturating_sub(parts.iter().sum());
    let mut order: Vec<usize> = (0..parts.len()).collect();
    order.sort_by(|&a, &b| target[b].fract().cmp(&target[a].fract()).then(a.cmp(&b)));
    for &i in order.iter().take(missing as usize) {
        parts[i] += 1;
    }
    parts.sort_by(|a, b| b.cmp(a));
    Partition::new(parts).expect("sorted")
}

/// Nearest admissible highest weight to `kθ`: same parity as the weights
/// of `W^⊗k`, within `[0, k·max w]`; ties go to the larger weight.
pub fn round_highest_weight(weights: &[i64], theta: &Rational, k: u64) -> i64 {
    let wmax = *weights.iter().max().unwrap();
    let target = theta * Rational::from_integer(k.into());
    let parity = weights.iter().all(|w| (w - wmax).is_even());
    let top = k as i64 * wmax;
    let candidates: Vec<i64> = if parity {
        (0..=top).filter(|l| (top - l) % 2 == 0).collect()
    } else {
        (0..=top).collect()
    };
    *candidates
        .iter()
        .min_by(|&&a, &&b| {
            let da = (Rational::from_integer(a.into()) - &target).abs();
            let db = (Rational::from_integer(b.into()) - &target).abs();
            da.cmp(&db).then(b.cmp(&a))
        })
        .expect("nonempty")
}

fn is_symmetric_multiset(weights: &[i64]) -> bool {
    let mut a = weights.to_vec();
    let mut b: Vec<i64> = weights.iter().map(|w| -w).collect();
    a.sort();
    b.sort();
    a == b
}

/// Weight multiplicities of `W^⊗k`, advanced one tensor factor at a time.
struct WeightPower {
    weights: BTreeMap<i64, u64>,
    mult: BTreeMap<i64, BigNat>,
}

impl WeightPower {
    fn new(weights: &[i64]) -> Self {
        let mut w = BTreeMap::new();
        for &x in weights {
            *w.entry(x).or_insert(0) += 1;
        }
        WeightPower {
            weights: w,
            mult: BTreeMap::from([(0, BigNat::one())]),
        }
    }

    fn step(&mut self) {
        let mut next: BTreeMap<i64, BigNat> = BTreeMap::new();
        for (l, n) in &self.mult {
            for (w, c) in &self.weights {
                *next.entry(l + w).or_default() += n * *c;
            }
        }
        self.mult = next;
    }

    /// `n_{k,λ} = m_k(λ) − m_k(λ+2)`.
    fn highest_weight_multiplicity(&self, lambda: i64) -> BigNat {
        let a = self.mult.get(&lambda).cloned().unwrap_or_default();
        let b = self.mult.get(&(lambda + 2)).cloned().unwrap_or_default();
        if a > b {
            a - b
        } else {
            BigNat::zero()
        }
    }
}

/// Rows compare `−(1/k) ln P(λ_k)` at the rounded point `λ_k ≈ kθ` with
/// the analytic rate; `gap` is the empirical minus the analytic rate.
pub fn ldp_report(family: &LdpFamily, theta: &[Rational], k_max: u64) -> Result<ConvergenceReport> {
    let theta_f: Vec<f64> = theta.iter().map(crate::repr::rational::to_f64).collect();
    let mut rows = Vec::new();
    let target = match family {
        LdpFamily::SchurWeyl(q) => {
            require_sorted(q, "q")?;
            if theta.len() != q.len() {
                return invalid("θ must have the same length as q");
            }
            if theta.iter().any(Signed::is_negative)
                || theta.iter().sum::<Rational>() != Rational::one()
                || theta.windows(2).any(|w| w[0] < w[1])
            {
                return invalid("θ must be a decreasing probability vector");
            }
            let target = kl_divergence(&theta_f, q.entries());
            let eval = SchurEvaluator::new(q.entries())?;
            for k in 1..=k_max {
                let lambda = round_partition(theta, k);
                let row = schur_weyl_row(&eval, lambda);
                rows.push(ldp_row(k, row.lambda.parts().iter().map(|&p| p as i64).collect(), row.prob, target));
            }
            target
        }
        LdpFamily::Duffield(weights) => {
            if weights.is_empty() || !is_symmetric_multiset(weights) {
                return invalid("W must be given by a nonempty symmetric weight multiset");
            }
            if theta.len() != 1 {
                return invalid("θ must be a single number for the Duffield family");
            }
            if theta[0].is_negative() {
                return invalid("θ must be nonnegative");
            }
            let target = duffield_rate(weights, theta_f[0])?;
            let ln_d = (weights.len() as f64).ln();
            let mut power = WeightPower::new(weights);
            for k in 1..=k_max {
                power.step();
                let lambda = round_highest_weight(weights, &theta[0], k);
                let n = power.highest_weight_multiplicity(lambda);
                let prob = if n.is_zero() {
                    LogValue::ZERO
                } else {
                    LogValue::from_ln(((lambda + 1) as f64).ln() + ln_big(&n) - k as f64 * ln_d)
                };
                rows.push(ldp_row(k, vec![lambda], prob, target));
            }
            target
        }
    };
    Ok(ConvergenceReport {
        theta: theta.to_vec(),
        period: 1,
        log_cap: LogValue::from_ln(-target / 2.0),
        rows,
    })
}

fn ldp_row(k: u64, point: Vec<i64>, prob: LogValue, target: f64) -> ConvergenceRow {
    let rate = if prob.is_zero() { f64::INFINITY } else { -prob.log_mag() / k as f64 };
    ConvergenceRow {
        k,
        point,
        log_value: prob,
        rate,
        target,
        gap: rate - target,
    }
}

/// `(λ+1)·n_{k,λ}/2^k` for `W = C²`, exactly.
pub fn su2_highest_weight_probability(table: &Su2MultTable, lambda: u64) -> Rational {
    let n = table.get(lambda) * (lambda + 1);
    Rational::new(BigInt::from(n), BigInt::from(BigNat::one() << table.k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{rat, rat_int};

    // semistandard tableaux of shape λ with entries < n, enumerated cell by cell
    fn ssyt_schur(lambda: &[u64], q: &[f64]) -> f64 {
        let cells: Vec<(usize, usize)> = lambda
            .iter()
            .enumerate()
            .flat_map(|(i, &r)| (0..r as usize).map(move |j| (i, j)))
            .collect();
        let mut grid = vec![vec![0usize; lambda.first().copied().unwrap_or(0) as usize]; lambda.len()];
        fn go(idx: usize, cells: &[(usize, usize)], grid: &mut Vec<Vec<usize>>, q: &[f64], w: f64) -> f64 {
            if idx == cells.len() {
                return w;
            }
            let (i, j) = cells[idx];
            let lo_row = if j > 0 { grid[i][j - 1] } else { 0 };
            let lo_col = if i > 0 { grid[i - 1][j] + 1 } else { 0 };
            let mut total = 0.0;
            for e in lo_row.max(lo_col)..q.len() {
                grid[i][j] = e;
                total += go(idx + 1, cells, grid, q, w * q[e]);
            }
            total
        }
        go(0, &cells, &mut grid, q, 1.0)
    }

    #[test]
    fn schur_matches_tableaux() {
        let qs: [&[f64]; 4] = [&[0.5, 0.3, 0.2], &[0.4, 0.4, 0.2], &[0.7, 0.3], &[0.25, 0.25, 0.25, 0.25]];
        for q in qs {
            for k in 0..=8u64 {
                for lambda in partitions_of(k, q.len()) {
                    let expected = ssyt_schur(lambda.parts(), q);
                    let got = schur_polynomial(&lambda, q).unwrap().to_f64();
                    assert!((got - expected).abs() <= 1e-12 * expected.max(1e-300), "{lambda} {q:?}");
                }
            }
        }
        let lambda = Partition::new(vec![4, 3, 2, 1]).unwrap();
        let expected = ssyt_schur(lambda.parts(), &[0.5, 0.3, 0.2, 0.0]);
        let got = schur_polynomial(&lambda, &[0.5, 0.3, 0.2, 0.0]).unwrap();
        assert!(expected == 0.0 && got.is_zero());
    }

    #[test]
    fn both_evaluation_modes_agree() {
        let q = [0.45, 0.35, 0.2];
        let fast = SchurEvaluator::new(&q).unwrap();
        assert!(!fast.uses_exact_arithmetic());
        let mut exact = SchurEvaluator {
            q: q.to_vec(),
            mode: Mode::Exact {
                q: q.iter().map(|&x| Rational::from_float(x).unwrap()).collect(),
                h: vec![Rational::one()],
            },
        };
        exact.prepare(80);
        for lambda in partitions_of(60, 3).into_iter().step_by(7) {
            let a = fast.eval(&lambda).log_mag();
            let b = exact.eval(&lambda).log_mag();
            assert!((a - b).abs() < 1e-11, "{lambda}: {a} vs {b}");
        }
    }

    #[test]
    fn measure_examples() {
        let pure = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let rows = schur_weyl_measure(&pure, 7).unwrap();
        assert_eq!(rows[0].lambda.parts(), &[7, 0]);
        assert!((rows[0].prob.to_f64() - 1.0).abs() < 1e-15);
        assert!(rows[1..].iter().all(|r| r.prob.is_zero()));

        let half = ProbVector::new(vec![0.5, 0.5]).unwrap();
        let rows = schur_weyl_measure(&half, 2).unwrap();
        assert!((rows[0].prob.to_f64() - 0.75).abs() < 1e-15);
        assert!((rows[1].prob.to_f64() - 0.25).abs() < 1e-15);

        let q = ProbVector::new(vec![0.6, 0.4]).unwrap();
        let rows = schur_weyl_measure(&q, 1).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].prob.to_f64() - 1.0).abs() < 1e-15);

        assert!(schur_weyl_measure(&ProbVector::new(vec![0.3, 0.7]).unwrap(), 3).is_err());
    }

    #[test]
    fn measure_normalized() {
        for (q, k) in [
            (vec![0.7, 0.3], 400u64),
            (vec![0.5, 0.3, 0.2], 60),
            (vec![0.4, 0.3, 0.2, 0.1], 40),
            (vec![0.4, 0.2, 0.2, 0.2], 30),
        ] {
            let rows = schur_weyl_measure(&ProbVector::new(q.clone()).unwrap(), k).unwrap();
            let total = log_sum_exp(&rows.iter().map(|r| r.prob).collect::<Vec<_>>()).to_f64();
            assert!((total - 1.0).abs() < 1e-8, "{q:?} {k}: {total}");
        }
    }

    #[test]
    fn keyl_examples() {
        let s = HermitianState::from_diagonal(&[0.7, 0.3]).unwrap();
        assert!(keyl_rate(&s, &s).unwrap().abs() < 1e-15);
        let r = HermitianState::from_diagonal(&[1.0, 0.0]).unwrap();
        assert!((keyl_rate(&r, &s).unwrap() + 0.7f64.ln()).abs() < 1e-14);
        let pure = HermitianState::from_diagonal(&[0.0, 1.0]).unwrap();
        let mixed = HermitianState::from_diagonal(&[0.5, 0.5]).unwrap();
        assert_eq!(keyl_rate(&mixed, &pure).unwrap(), f64::INFINITY);
        // ρ = e₀ projector sorted first, σ supported on e₁ only
        assert_eq!(keyl_rate(&r, &pure).unwrap(), f64::INFINITY);
    }

    #[test]
    fn keyl_commuting_is_kl() {
        let p = [0.5, 0.3, 0.2];
        let q = [0.6, 0.25, 0.15];
        let rho = HermitianState::from_diagonal(&p).unwrap();
        let sigma = HermitianState::from_diagonal(&q).unwrap();
        assert!((keyl_rate(&rho, &sigma).unwrap() - kl_divergence(&p, &q)).abs() < 1e-10);
        assert!((quantum_relative_entropy(&rho, &sigma).unwrap() - kl_divergence(&p, &q)).abs() < 1e-10);
    }

    #[test]
    fn state_validation() {
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0),
            Complex64::new(0.1, 0.1),
            Complex64::new(0.1, 0.1),
            Complex64::new(0.5, 0.0),
        ]);
        assert!(HermitianState::new(m).is_err());
        assert!(HermitianState::from_diagonal(&[0.6, 0.6]).is_err());
        assert!(HermitianState::from_diagonal(&[1.2, -0.2]).is_err());
    }

    #[test]
    fn kw_examples() {
        let p = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let half = ProbVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(kw_rate(&half, &half).unwrap(), 0.0);
        assert!((kw_rate(&p, &half).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kw_rate(&half, &p).unwrap(), f64::INFINITY);
        assert!(kw_rate(&ProbVector::new(vec![0.2, 0.8]).unwrap(), &half).is_err());

        let sigma = HermitianState::from_diagonal(&[0.7, 0.3]).unwrap();
        let (sampled, analytic) = kw_minimization_check(&p, &sigma, 1000, 1).unwrap();
        assert!((analytic + 0.7f64.ln()).abs() < 1e-14);
        assert!((sampled - analytic).abs() < 1e-12);
        let spec = ProbVector::new(vec![0.7, 0.3]).unwrap();
        let (sampled, analytic) = kw_minimization_check(&spec, &sigma, 100, 2).unwrap();
        assert!(sampled.abs() < 1e-12 && analytic.abs() < 1e-15);
    }

    #[test]
    fn su2_examples() {
        let t = su2_multiplicities(2).unwrap();
        assert_eq!((t.get(0), t.get(2)), (1u32.into(), 1u32.into()));
        let t = su2_multiplicities(3).unwrap();
        assert_eq!((t.get(1), t.get(3)), (2u32.into(), 1u32.into()));
        assert_eq!(su2_multiplicities(1).unwrap().get(1), 1u32.into());
        for k in [0u64, 1, 7, 50, 301] {
            let t = su2_multiplicities(k).unwrap();
            assert_eq!(t.dimension(), BigNat::one() << k);
            for l in 0..=k {
                assert_eq!(t.get(l), su2_multiplicity_closed_form(k, l));
            }
        }
        assert!(su2_multiplicities(1001).is_err());
    }

    #[test]
    fn duffield_examples() {
        let w = [1, -1];
        assert_eq!(duffield_rate(&w, 0.0).unwrap(), 0.0);
        assert!((duffield_rate(&w, 1.0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let hb = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((duffield_rate(&w, 0.5).unwrap() - (2f64.ln() - hb)).abs() < 1e-12);
        assert!((duffield_rate(&w, 0.5).unwrap() - 0.13081).abs() < 1e-5);
        assert_eq!(duffield_rate(&w, 1.5).unwrap(), f64::INFINITY);
        for theta in [0.1, 0.37, 0.9, 0.999] {
            let p = ProbVector::new(vec![(1.0 + theta) / 2.0, (1.0 - theta) / 2.0]).unwrap();
            let q = ProbVector::new(vec![0.5, 0.5]).unwrap();
            assert!((duffield_rate(&w, theta).unwrap() - kw_rate(&p, &q).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn rounding() {
        assert_eq!(round_partition(&[rat(9, 10), rat(1, 10)], 100).parts(), &[90, 10]);
        assert_eq!(round_partition(&[rat(1, 2), rat(1, 2)], 5).parts(), &[3, 2]);
        assert_eq!(round_partition(&[rat(2, 3), rat(1, 6), rat(1, 6)], 4).parts(), &[3, 1, 0]);
        assert_eq!(round_highest_weight(&[1, -1], &rat(1, 2), 200), 100);
        assert_eq!(round_highest_weight(&[1, -1], &rat(1, 2), 7), 3);
        assert_eq!(round_highest_weight(&[1, -1], &rat(1, 2), 6), 4);
        assert_eq!(round_highest_weight(&[1, -1], &rat(1, 2), 5), 3);
        assert_eq!(round_highest_weight(&[1, -1], &rat_int(0), 5), 1);
    }

    #[test]
    fn ldp_examples() {
        let q = ProbVector::new(vec![0.7, 0.3]).unwrap();
        let r = ldp_report(&LdpFamily::SchurWeyl(q), &[rat(9, 10), rat(1, 10)], 400).unwrap();
        let d100 = r.row(100).unwrap().gap.abs();
        let d400 = r.row(400).unwrap().gap.abs();
        assert!((r.rows[0].target - 0.11632).abs() < 1e-4);
        assert!(d100 <= 0.15 && d400 <= 0.05 && d400 < d100, "{d100} {d400}");

        let r = ldp_report(&LdpFamily::Duffield(vec![1, -1]), &[rat(1, 2)], 200).unwrap();
        let row = r.row(200).unwrap();
        let t = su2_multiplicities(200).unwrap();
        let exact = su2_highest_weight_probability(&t, 100);
        assert!((row.log_value.log_mag() - ln_rational(&exact)).abs() < 1e-10);
        assert!(row.gap.abs() <= 0.05);

        // law-of-large-numbers point: zero rate, polynomial decay
        let r = ldp_report(&LdpFamily::Duffield(vec![1, -1]), &[rat_int(0)], 100).unwrap();
        assert_eq!(r.rows[0].target, 0.0);
        let row = r.row(100).unwrap();
        assert!(row.rate * 100.0 <= 2.0 * 100f64.ln());
    }
}
