//! Matrix scaling and generalized permanents.
//!
//! `perm_{r,c}(M) = Σ_B Π M_ij^{B_ij} / B_ij!` over nonnegative integer
//! matrices `B` with margins `(r, c)`, and the `(r,c)`-capacity
//!
//! ```text
//! cap² = inf_{x,y>0} Σ M_ij x_i y_j / (Π x_i^{r_i} Π y_j^{c_j})
//! ```
//!
//! which bounds `(k!·perm_{kr,kc}(M))^{1/k}` from above and is its limit.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use pathfinding::directed::edmonds_karp::edmonds_karp_dense;
use rayon::prelude::*;
use std::collections::HashMap;

use crate::error::{invalid, Error, Result};
use crate::report::{ConvergenceReport, ConvergenceRow};
use crate::repr::rational::{common_denominator, to_f64};
use crate::repr::{factorial, ln_rational, LogValue, Rational, WeightedVector};
use crate::torus::theta_capacity;

/// Upper limit on the number of contingency tables enumerated.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;

/// A nonnegative matrix with row and column scalings and target marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingState {
    m: Vec<Vec<f64>>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    r: Vec<Rational>,
    c: Vec<Rational>,
}

fn check_marginal(v: &[Rational], name: &str) -> Result<()> {
    if v.is_empty() || v.iter().any(Signed::is_negative) {
        return invalid(format!("{name} must be a nonempty nonnegative vector"));
    }
    if v.iter().sum::<Rational>() != Rational::one() {
        return invalid(format!("{name} must sum to 1"));
    }
    Ok(())
}

fn check_matrix(m: &[Vec<f64>], rows: usize, cols: usize) -> Result<()> {
    if m.len() != rows || m.iter().any(|row| row.len() != cols) {
        return invalid(format!("matrix must be {rows}x{cols}"));
    }
    if m.iter().flatten().any(|&a| !(a.is_finite() && a >= 0.0)) {
        return invalid("matrix entries must be finite and nonnegative");
    }
    if m.iter().flatten().all(|&a| a == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(())
}

impl ScalingState {
    /// Starts from `x = y = 1`.
    pub fn new(m: Vec<Vec<f64>>, r: Vec<Rational>, c: Vec<Rational>) -> Result<Self> {
        check_marginal(&r, "r")?;
        check_marginal(&c, "c")?;
        check_matrix(&m, r.len(), c.len())?;
        Ok(ScalingState {
            x: vec![1.0; r.len()],
            y: vec![1.0; c.len()],
            m,
            r,
            c,
        })
    }

    /// Uniform marginals `r = c = (1/n, …, 1/n)` for a square matrix.
    pub fn doubly_stochastic(m: Vec<Vec<f64>>) -> Result<Self> {
        let n = m.len() as i64;
        let u = vec![Rational::new(1.into(), n.into()); n as usize];
        Self::new(m, u.clone(), u)
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.m
    }

    pub fn r(&self) -> &[Rational] {
        &self.r
    }

    pub fn c(&self) -> &[Rational] {
        &self.c
    }

    /// `diag(x) M diag(y)`.
    pub fn scaled_matrix(&self) -> Vec<Vec<f64>> {
        self.m
            .iter()
            .zip(&self.x)
            .map(|(row, xi)| row.iter().zip(&self.y).map(|(a, yj)| xi * a * yj).collect())
            .collect()
    }

    fn marginals(&self) -> (Vec<f64>, Vec<f64>) {
        let s = self.scaled_matrix();
        let rows = s.iter().map(|row| row.iter().sum()).collect();
        let cols = (0..self.c.len()).map(|j| s.iter().map(|row| row[j]).sum()).collect();
        (rows, cols)
    }

    /// ℓ₁ distance of the scaled matrix's row and column sums to `(r, c)`.
    pub fn marginal_error(&self) -> f64 {
        let (rows, cols) = self.marginals();
        let dr: f64 = rows.iter().zip(&self.r).map(|(a, b)| (a - to_f64(b)).abs()).sum();
        let dc: f64 = cols.iter().zip(&self.c).map(|(a, b)| (a - to_f64(b)).abs()).sum();
        dr + dc
    }

    /// Gradient of `ln Σ M_ij e^{a_i + b_j} − ⟨r,a⟩ − ⟨c,b⟩` at
    /// `a = ln x`, `b = ln y`, as `(∂_a, ∂_b)`.
    pub fn objective_gradient(&self) -> (Vec<f64>, Vec<f64>) {
        let (rows, cols) = self.marginals();
        let total: f64 = rows.iter().sum();
        let ga = rows.iter().zip(&self.r).map(|(a, b)| a / total - to_f64(b)).collect();
        let gb = cols.iter().zip(&self.c).map(|(a, b)| a / total - to_f64(b)).collect();
        (ga, gb)
    }
}

/// A set of rows whose combined target mass exceeds that of all columns
/// they touch, so no scaling can reach the marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct HallViolation {
    pub rows: Vec<usize>,
    /// Columns with a nonzero entry in one of `rows`.
    pub columns: Vec<usize>,
    /// `Σ_{i ∈ rows} r_i − Σ_{j ∈ columns} c_j > 0`.
    pub deficit: Rational,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScalingStatus {
    Converged { iterations: usize, error: f64 },
    MaxIterations { iterations: usize, error: f64 },
    Unscalable(HallViolation),
}

/// Exact max-flow test of whether some matrix with the support of `m` has
/// marginals `(r, c)`. Returns a violating row set when none does.
pub fn support_certificate(m: &[Vec<f64>], r: &[Rational], c: &[Rational]) -> Result<Option<HallViolation>> {
    let denom = common_denominator(&r.iter().chain(c).cloned().collect::<Vec<_>>());
    let scale = |x: &Rational| -> Result<i64> {
        (x * Rational::from_integer(denom.clone()))
            .to_integer()
            .to_i64()
            .ok_or_else(|| Error::InvalidInput("marginal denominators too large".into()))
    };
    let total = denom
        .to_i64()
        .ok_or_else(|| Error::InvalidInput("marginal denominators too large".into()))?;
    let (n, k) = (r.len(), c.len());
    // vertices: 0 source, 1 sink, rows 2.., columns 2+n..
    let vertices: Vec<usize> = (0..n + k + 2).collect();
    let mut caps = Vec::new();
    for (i, ri) in r.iter().enumerate() {
        let cap = scale(ri)?;
        if cap > 0 {
            caps.push(((0, 2 + i), cap));
        }
        for j in 0..k {
            if m[i][j] > 0.0 {
                caps.push(((2 + i, 2 + n + j), total));
            }
        }
    }
    for (j, cj) in c.iter().enumerate() {
        let cap = scale(cj)?;
        if cap > 0 {
            caps.push(((2 + n + j, 1), cap));
        }
    }
    let (_, flow, cut) = edmonds_karp_dense(&vertices, &0, &1, caps);
    if flow == total {
        return Ok(None);
    }
    let cut_rows: Vec<usize> = cut
        .iter()
        .filter(|((a, _), _)| *a == 0)
        .map(|((_, b), _)| b - 2)
        .collect();
    let rows: Vec<usize> = (0..n)
        .filter(|i| r[*i].is_positive() && !cut_rows.contains(i))
        .collect();
    let columns: Vec<usize> = (0..k).filter(|&j| rows.iter().any(|&i| m[i][j] > 0.0)).collect();
    let deficit = rows.iter().map(|&i| &r[i]).sum::<Rational>() - columns.iter().map(|&j| &c[j]).sum::<Rational>();
    debug_assert!(deficit.is_positive());
    Ok(Some(HallViolation { rows, columns, deficit }))
}

/// Alternating row/column normalization toward `(r, c)`.
///
/// Rows or columns with zero target mass get scaling 0. When the marginals
/// are reachable only in the limit, `x` and `y` diverge while the marginal
/// error still tends to zero.
pub fn sinkhorn_scale(state: &ScalingState, tol: f64, max_iter: usize) -> Result<(ScalingState, ScalingStatus)> {
    let mut s = state.clone();
    if let Some(violation) = support_certificate(&s.m, &s.r, &s.c)? {
        return Ok((s, ScalingStatus::Unscalable(violation)));
    }
    let r: Vec<f64> = s.r.iter().map(to_f64).collect();
    let c: Vec<f64> = s.c.iter().map(to_f64).collect();
    let mut error = s.marginal_error();
    let mut col_sums = vec![0.0; c.len()];
    for it in 1..=max_iter {
        for (i, row) in s.m.iter().enumerate() {
            let sum: f64 = row.iter().zip(&s.y).map(|(a, y)| a * y).sum();
            s.x[i] = if r[i] == 0.0 { 0.0 } else { r[i] / sum };
        }
        for (j, cs) in col_sums.iter_mut().enumerate() {
            *cs = s.m.iter().zip(&s.x).map(|(row, x)| row[j] * x).sum();
            s.y[j] = if c[j] == 0.0 { 0.0 } else { c[j] / *cs };
        }
        // same quantity as marginal_error, without allocating
        error = s
            .m
            .iter()
            .zip(&s.x)
            .zip(&r)
            .map(|((row, x), ri)| (x * row.iter().zip(&s.y).map(|(a, y)| a * y).sum::<f64>() - ri).abs())
            .sum::<f64>()
            + col_sums.iter().zip(&s.y).zip(&c).map(|((cs, y), cj)| (cs * y - cj).abs()).sum::<f64>();
        if error <= tol {
            return Ok((s, ScalingStatus::Converged { iterations: it, error }));
        }
    }
    Ok((s, ScalingStatus::MaxIterations { iterations: max_iter, error }))
}

/// The torus instance whose θ-capacity is the `(r,c)`-capacity: weights
/// `e_i ⊕ e_j` with amplitudes `√M_ij`.
pub fn rc_torus_instance(m: &[Vec<f64>], r: &[Rational], c: &[Rational]) -> Result<(WeightedVector, Vec<Rational>)> {
    check_matrix(m, r.len(), c.len())?;
    let (n, k) = (r.len(), c.len());
    let mut weights = Vec::new();
    let mut amps = Vec::new();
    for (i, row) in m.iter().enumerate() {
        for (j, &a) in row.iter().enumerate() {
            if a > 0.0 {
                let mut w = vec![0i64; n + k];
                w[i] = 1;
                w[n + j] = 1;
                weights.push(w);
                amps.push(a.sqrt());
            }
        }
    }
    let v = WeightedVector::from_real(&weights, &amps)?;
    Ok((v, r.iter().chain(c).cloned().collect()))
}

/// `cap²` of the `(r,c)`-capacity problem (zero when the marginals are not
/// reachable on the support of `m`).
pub fn rc_capacity(m: &[Vec<f64>], r: &[Rational], c: &[Rational]) -> Result<LogValue> {
    check_marginal(r, "r")?;
    check_marginal(c, "c")?;
    let (v, theta) = rc_torus_instance(m, r, c)?;
    Ok(theta_capacity(&v, &theta)?.log_cap.powi(2))
}

/// Exact `perm_{r,c}(M)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermValue {
    pub exact: Rational,
    pub log: LogValue,
    /// `|I(r,c)|`, the number of contingency tables enumerated.
    pub tables: u64,
}

/// `|I(r,c)|` by a DP over remaining column sums.
pub fn count_tables(r: &[u64], c: &[u64]) -> BigUint {
    if r.iter().sum::<u64>() != c.iter().sum::<u64>() {
        return BigUint::zero();
    }
    let mut states: HashMap<Vec<u64>, BigUint> = HashMap::from([(c.to_vec(), BigUint::one())]);
    for &ri in r {
        let mut next: HashMap<Vec<u64>, BigUint> = HashMap::new();
        for (rem, count) in &states {
            for_each_composition(ri, rem, &mut |b| {
                let left: Vec<u64> = rem.iter().zip(b).map(|(a, b)| a - b).collect();
                *next.entry(left).or_default() += count;
            });
        }
        states = next;
    }
    states.into_values().sum()
}

/// Largest DP state space used for exact table counting.
const COUNT_STATES_LIMIT: u64 = 1 << 20;

/// `|I(r,c)|` if it is within [`ENUMERATION_BUDGET`]. Counted exactly when
/// the column state space is small, otherwise by enumerating tables until
/// the budget is exceeded (every partial table extends to a full one, so
/// this costs at most one step per table).
fn tables_within_budget(r: &[u64], c: &[u64]) -> Result<u64> {
    let budget = BigUint::from(ENUMERATION_BUDGET);
    let states = |v: &[u64]| v.iter().try_fold(1u64, |acc, &x| acc.checked_mul(x + 1));
    let (rows, cols) = if states(r) < states(c) { (c, r) } else { (r, c) };
    let count = if states(cols).is_some_and(|s| s <= COUNT_STATES_LIMIT) {
        count_tables(rows, cols)
    } else {
        BigUint::from(count_tables_capped(rows, cols, ENUMERATION_BUDGET + 1))
    };
    if count > budget {
        return Err(Error::EnumerationBudget {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(count.to_u64().unwrap())
}

fn count_tables_capped(r: &[u64], c: &[u64], cap: u64) -> u64 {
    fn go(r: &[u64], rem: &[u64], count: &mut u64, cap: u64) {
        if *count >= cap {
            return;
        }
        if r.len() <= 1 {
            *count += 1;
            return;
        }
        for_each_composition(r[0], rem, &mut |b| {
            if *count < cap {
                let left: Vec<u64> = rem.iter().zip(b).map(|(a, b)| a - b).collect();
                go(&r[1..], &left, count, cap);
            }
        });
    }
    if r.iter().sum::<u64>() != c.iter().sum::<u64>() {
        return 0;
    }
    let mut count = 0;
    go(r, c, &mut count, cap);
    count
}

/// Calls `f` on every composition of `total` into `bounds.len()` parts with
/// `part_j ≤ bounds[j]`, in lexicographically decreasing order.
fn for_each_composition(total: u64, bounds: &[u64], f: &mut dyn FnMut(&[u64])) {
    fn go(j: usize, left: u64, bounds: &[u64], tail: &[u64], part: &mut Vec<u64>, f: &mut dyn FnMut(&[u64])) {
        if j + 1 == bounds.len() {
            if left <= bounds[j] {
                part.push(left);
                f(part);
                part.pop();
            }
            return;
        }
        let lo = left.saturating_sub(tail[j + 1]);
        for b in (lo..=left.min(bounds[j])).rev() {
            part.push(b);
            go(j + 1, left - b, bounds, tail, part, f);
            part.pop();
        }
    }
    if bounds.is_empty() {
        if total == 0 {
            f(&[]);
        }
        return;
    }
    // tail[j] = Σ_{j' ≥ j} bounds[j']
    let mut tail = vec![0u64; bounds.len() + 1];
    for j in (0..bounds.len()).rev() {
        tail[j] = tail[j + 1] + bounds[j];
    }
    go(0, total, bounds, &tail, &mut Vec::with_capacity(bounds.len()), f);
}

/// `M_ij^b / b!` for all cells and `b ≤ max_power`.
fn power_table(m: &[Vec<Rational>], max_power: u64) -> Vec<Vec<Vec<Rational>>> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|a| {
                    let mut out = vec![Rational::one()];
                    for b in 1..=max_power {
                        let prev = out.last().unwrap().clone();
                        out.push(prev * a / Rational::from_integer(BigInt::from(b)));
                    }
                    out
                })
                .collect()
        })
        .collect()
}

fn rows_sum(pw: &[Vec<Vec<Rational>>], r: &[u64], i: usize, rem: &[u64]) -> Rational {
    if i + 1 == r.len() {
        // the last row is forced
        return rem.iter().enumerate().map(|(j, &b)| &pw[i][j][b as usize]).product();
    }
    let mut acc = Rational::zero();
    for_each_composition(r[i], rem, &mut |b| {
        let weight: Rational = b.iter().enumerate().map(|(j, &bj)| &pw[i][j][bj as usize]).product();
        if weight.is_zero() {
            return;
        }
        let left: Vec<u64> = rem.iter().zip(b).map(|(a, b)| a - b).collect();
        acc += weight * rows_sum(pw, r, i + 1, &left);
    });
    acc
}

/// `perm_{r,c}(M)` by enumerating all contingency tables with margins
/// `(r, c)`, in exact rational arithmetic.
pub fn perm_rc_exact(m: &[Vec<Rational>], r: &[u64], c: &[u64]) -> Result<PermValue> {
    if m.len() != r.len() || m.iter().any(|row| row.len() != c.len()) || r.is_empty() || c.is_empty() {
        return invalid(format!("matrix must be {}x{}", r.len(), c.len()));
    }
    if m.iter().flatten().any(Signed::is_negative) {
        return invalid("matrix entries must be nonnegative");
    }
    if r.iter().sum::<u64>() != c.iter().sum::<u64>() {
        return invalid(format!(
            "row sums total {} but column sums total {}",
            r.iter().sum::<u64>(),
            c.iter().sum::<u64>()
        ));
    }
    let tables = tables_within_budget(r, c)?;
    let max_power = r.iter().chain(c).copied().max().unwrap_or(0);
    let pw = power_table(m, max_power);
    let exact = if tables == 0 {
        Rational::zero()
    } else if r.len() == 1 {
        rows_sum(&pw, r, 0, c)
    } else {
        let mut first_rows = Vec::new();
        for_each_composition(r[0], c, &mut |b| first_rows.push(b.to_vec()));
        let partials: Vec<Rational> = first_rows
            .par_iter()
            .map(|b| {
                let weight: Rational = b.iter().enumerate().map(|(j, &bj)| &pw[0][j][bj as usize]).product();
                if weight.is_zero() {
                    return weight;
                }
                let left: Vec<u64> = c.iter().zip(b).map(|(a, b)| a - b).collect();
                weight * rows_sum(&pw, r, 1, &left)
            })
            .collect();
        partials.into_iter().sum()
    };
    let log = if exact.is_zero() {
        LogValue::ZERO
    } else {
        LogValue::from_ln(ln_rational(&exact))
    };
    Ok(PermValue { exact, log, tables })
}

/// Van der Waerden-type bounds `cap^{2n} n!/n^{2n} ≤ perm(M) ≤ cap^{2n}/n!`
/// for square `M` and uniform marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct Sandwich {
    pub perm: Rational,
    pub lower: f64,
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// Relative slack granted to the floating-point side of the sandwich.
pub const SANDWICH_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct PermDualReport {
    /// Rows carry `log_value = ln(k!·perm_{kr,kc}(M))`, `rate = (1/k)·ln`,
    /// `target = ln cap²` and `gap = target − rate`.
    pub report: ConvergenceReport,
    pub cap_sq: LogValue,
    pub sandwich: Option<Sandwich>,
}

pub fn sandwich(m: &[Vec<Rational>], cap_sq: LogValue) -> Result<Sandwich> {
    let n = m.len();
    let ones = vec![1u64; n];
    let perm = perm_rc_exact(m, &ones, &ones)?.exact;
    let ln_fact: f64 = (1..=n).map(|i| (i as f64).ln()).sum();
    let ln_cap_n = n as f64 * cap_sq.log_mag();
    let (lower, upper) = if cap_sq.is_zero() {
        (0.0, 0.0)
    } else {
        (
            (ln_cap_n + ln_fact - 2.0 * n as f64 * (n as f64).ln()).exp(),
            (ln_cap_n - ln_fact).exp(),
        )
    };
    let p = to_f64(&perm);
    Ok(Sandwich {
        lower_holds: lower <= p * (1.0 + SANDWICH_SLACK),
        upper_holds: p <= upper * (1.0 + SANDWICH_SLACK),
        perm,
        lower,
        upper,
    })
}

/// Rows `(k!·perm_{kr,kc}(M))^{1/k}` against `cap²` for `k ≤ k_max` with
/// `kr, kc` integral; includes the sandwich for square `M` with uniform
/// marginals.
pub fn perm_dual_report(m: &[Vec<Rational>], r: &[Rational], c: &[Rational], k_max: u64) -> Result<PermDualReport> {
    check_marginal(r, "r")?;
    check_marginal(c, "c")?;
    let mf: Vec<Vec<f64>> = m.iter().map(|row| row.iter().map(to_f64).collect()).collect();
    let cap_sq = rc_capacity(&mf, r, c)?;
    let all: Vec<Rational> = r.iter().chain(c).cloned().collect();
    let period = common_denominator(&all)
        .to_u64()
        .ok_or_else(|| Error::InvalidInput("marginal denominators too large".into()))?;
    let target = cap_sq.ln().unwrap_or(f64::NEG_INFINITY);
    let mut rows = Vec::new();
    for k in (period..=k_max).step_by(period as usize) {
        let scale = |v: &[Rational]| -> Vec<u64> {
            v.iter()
                .map(|x| (x * Rational::from_integer(k.into())).to_integer().to_u64().unwrap())
                .collect()
        };
        let (kr, kc) = (scale(r), scale(c));
        let perm = perm_rc_exact(m, &kr, &kc)?;
        let value = perm.exact * Rational::from_integer(factorial(k).into());
        let log_value = if value.is_zero() {
            LogValue::ZERO
        } else {
            LogValue::from_ln(ln_rational(&value))
        };
        let rate = log_value.log_mag() / k as f64;
        rows.push(ConvergenceRow {
            k,
            point: kr.iter().chain(&kc).map(|&x| x as i64).collect(),
            log_value,
            rate,
            target,
            gap: target - rate,
        });
    }
    let n = m.len();
    let uniform = Rational::new(BigInt::one(), BigInt::from(n));
    let sandwich = if n == c.len() && r.iter().chain(c).all(|x| *x == uniform) {
        Some(sandwich(m, cap_sq)?)
    } else {
        None
    };
    Ok(PermDualReport {
        report: ConvergenceReport {
            theta: all,
            period,
            log_cap: cap_sq.powf(0.5),
            rows,
        },
        cap_sq,
        sandwich,
    })
}
