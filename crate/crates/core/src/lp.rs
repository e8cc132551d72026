//! Exact rational linear programming for moment-polytope questions.
//!
//! A dense two-phase tableau simplex with Bland's rule over `BigRational`.
//! Problem sizes here are tiny (a handful of weights in a handful of
//! coordinates), so exactness matters far more than speed.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::repr::Rational;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    // reduced costs d_j = c_B B⁻¹ A_j - c_j and objective value
    cost: Vec<Rational>,
    value: Rational,
}

impl Tableau {
    fn price(&mut self, c: &[Rational]) {
        let ncols = self.rows.first().map_or(c.len(), Vec::len);
        self.cost = (0..ncols)
            .map(|j| {
                let mut d = -c.get(j).cloned().unwrap_or_else(Rational::zero);
                for (i, &b) in self.basis.iter().enumerate() {
                    if let Some(cb) = c.get(b) {
                        if !cb.is_zero() {
                            d += cb * &self.rows[i][j];
                        }
                    }
                }
                d
            })
            .collect();
        self.value = self
            .basis
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| c.get(b).map(|cb| cb * &self.rhs[i]))
            .fold(Rational::zero(), |a, b| a + b);
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let p = self.rows[r][col].clone();
        for x in self.rows[r].iter_mut() {
            *x /= &p;
        }
        self.rhs[r] /= &p;
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][col].is_zero() {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (x, y) in self.rows[i].iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
            self.rhs[i] -= &f * &prhs;
        }
        let f = self.cost[col].clone();
        if !f.is_zero() {
            for (x, y) in self.cost.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &f * y;
                }
            }
            self.value -= &f * &prhs;
        }
        self.basis[r] = col;
    }

    /// Runs simplex iterations over the allowed columns. Returns false when
    /// the objective is unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            let Some(col) = (0..allowed).find(|&j| self.cost[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][col];
                if a.is_positive() {
                    let ratio = &self.rhs[i] / a;
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => {
                            ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi])
                        }
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, col),
                None => return false,
            }
        }
    }
}

/// Maximizes `c·x` subject to `A x = b`, `x ≥ 0`.
pub fn maximize(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    debug_assert!(a.iter().all(|row| row.len() == n));
    debug_assert_eq!(b.len(), m);

    // phase 1: artificial columns n..n+m, rows flipped to b ≥ 0
    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for i in 0..m {
        let flip = b[i].is_negative();
        let mut row: Vec<Rational> = a[i]
            .iter()
            .map(|x| if flip { -x.clone() } else { x.clone() })
            .collect();
        row.extend((0..m).map(|j| if i == j { Rational::one() } else { Rational::zero() }));
        rows.push(row);
        rhs.push(if flip { -b[i].clone() } else { b[i].clone() });
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis: (n..n + m).collect(),
        cost: Vec::new(),
        value: Rational::zero(),
    };
    let mut phase1 = vec![Rational::zero(); n];
    phase1.extend((0..m).map(|_| -Rational::one()));
    t.price(&phase1);
    t.optimize(n + m);
    if !t.value.is_zero() {
        return LpOutcome::Infeasible;
    }

    // drive remaining artificials out of the basis, dropping redundant rows
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= n {
            match (0..n).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => {
                    t.pivot(i, j);
                    i += 1;
                }
                None => {
                    t.rows.remove(i);
                    t.rhs.remove(i);
                    t.basis.remove(i);
                }
            }
        } else {
            i += 1;
        }
    }
    for row in t.rows.iter_mut() {
        row.truncate(n);
    }

    t.price(c);
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bcol) in t.basis.iter().enumerate() {
        x[bcol] = t.rhs[i].clone();
    }
    LpOutcome::Optimal {
        x,
        value: t.value,
    }
}

/// A point set in `Qⁿ`, given by integer coordinates.
fn to_rat(points: &[Vec<i64>]) -> Vec<Vec<Rational>> {
    points
        .iter()
        .map(|p| p.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect())
        .collect()
}

/// Constraint system `Σ λ_j ω_j = θ, Σ λ_j = 1` in standard form.
fn hull_system(points: &[Vec<Rational>], theta: &[Rational]) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let n = theta.len();
    let mut a: Vec<Vec<Rational>> = (0..n)
        .map(|i| points.iter().map(|p| p[i].clone()).collect())
        .collect();
    a.push(vec![Rational::one(); points.len()]);
    let mut b = theta.to_vec();
    b.push(Rational::one());
    (a, b)
}

/// Certificate attached to a membership answer.
#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// `θ = Σ coefficients_j ω_j` with nonnegative coefficients summing to one.
    Inside { coefficients: Vec<Rational> },
    /// `⟨normal, ω_j⟩ ≤ offset < ⟨normal, θ⟩` for every point.
    Outside { normal: Vec<Rational>, offset: Rational },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

/// Exact test of `θ ∈ conv(points)` with a certificate either way.
pub fn hull_membership(points: &[Vec<i64>], theta: &[Rational]) -> Membership {
    let pts = to_rat(points);
    let (a, b) = hull_system(&pts, theta);
    let zero = vec![Rational::zero(); pts.len()];
    match maximize(&a, &b, &zero) {
        LpOutcome::Optimal { x, .. } => Membership::Inside { coefficients: x },
        _ => {
            let (normal, offset) = separator(&pts, theta)
                .expect("Farkas: an infeasible hull system admits a separator");
            Membership::Outside { normal, offset }
        }
    }
}

/// Finds `h, β` with `⟨h, ω_j⟩ ≤ β` and `⟨h, θ⟩ = β + 1`.
fn separator(points: &[Vec<Rational>], theta: &[Rational]) -> Option<(Vec<Rational>, Rational)> {
    let n = theta.len();
    let k = points.len();
    // columns: h⁺ (n), h⁻ (n), β⁺, β⁻, slacks s_j (k), s₀
    let ncols = 2 * n + 2 + k + 1;
    let mut a = Vec::with_capacity(k + 1);
    let mut b = Vec::with_capacity(k + 1);
    let row_for = |coords: &[Rational], slack: usize| {
        let mut row = vec![Rational::zero(); ncols];
        for i in 0..n {
            row[i] = coords[i].clone();
            row[n + i] = -coords[i].clone();
        }
        row[2 * n] = -Rational::one();
        row[2 * n + 1] = Rational::one();
        row[slack] = Rational::one();
        row
    };
    for (j, p) in points.iter().enumerate() {
        a.push(row_for(p, 2 * n + 2 + j));
        b.push(Rational::zero());
    }
    a.push(row_for(theta, ncols - 1));
    b.push(Rational::one());
    let mut c = vec![Rational::zero(); ncols];
    for i in 0..n {
        c[i] = theta[i].clone();
        c[n + i] = -theta[i].clone();
    }
    c[2 * n] = -Rational::one();
    c[2 * n + 1] = Rational::one();
    match maximize(&a, &b, &c) {
        LpOutcome::Optimal { x, value } if value.is_positive() => {
            let normal: Vec<Rational> = (0..n).map(|i| &x[i] - &x[n + i]).collect();
            let margin = &value;
            // rescale so that ⟨h, θ⟩ - β = 1
            let normal: Vec<Rational> = normal.iter().map(|h| h / margin).collect();
            let offset = (&x[2 * n] - &x[2 * n + 1]) / margin;
            Some((normal, offset))
        }
        _ => None,
    }
}

/// Indices of the points spanning the smallest face of `conv(points)` that
/// contains `θ`, i.e. the points carrying positive weight in some convex
/// representation of `θ`. Empty when `θ` lies outside the hull.
pub fn minimal_face(points: &[Vec<i64>], theta: &[Rational]) -> Vec<usize> {
    let pts = to_rat(points);
    let (a, b) = hull_system(&pts, theta);
    let mut in_face = vec![false; pts.len()];
    let mut decided = vec![false; pts.len()];
    for j in 0..pts.len() {
        if decided[j] {
            continue;
        }
        let mut c = vec![Rational::zero(); pts.len()];
        c[j] = Rational::one();
        match maximize(&a, &b, &c) {
            LpOutcome::Optimal { x, .. } => {
                for (i, xi) in x.iter().enumerate() {
                    if xi.is_positive() {
                        in_face[i] = true;
                        decided[i] = true;
                    }
                }
                decided[j] = true;
            }
            _ => return Vec::new(),
        }
    }
    (0..pts.len()).filter(|&j| in_face[j]).collect()
}

/// A functional `h` with `⟨h, ω_j - θ⟩ = 0` on the face and `≤ -1` off it.
/// Moving along `h` drives off-face terms to zero relative to face terms.
pub fn face_normal(points: &[Vec<i64>], theta: &[Rational], face: &[usize]) -> Option<Vec<Rational>> {
    let n = theta.len();
    let k = points.len();
    let pts = to_rat(points);
    let off: Vec<usize> = (0..k).filter(|j| !face.contains(j)).collect();
    // columns: h⁺ (n), h⁻ (n), slacks for off-face rows
    let ncols = 2 * n + off.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    let diff_row = |j: usize| -> Vec<Rational> {
        let mut row = vec![Rational::zero(); ncols];
        for i in 0..n {
            let d = &pts[j][i] - &theta[i];
            row[n + i] = -d.clone();
            row[i] = d;
        }
        row
    };
    for &j in face {
        a.push(diff_row(j));
        b.push(Rational::zero());
    }
    for (s, &j) in off.iter().enumerate() {
        let mut row = diff_row(j);
        row[2 * n + s] = Rational::one();
        a.push(row);
        b.push(-Rational::one());
    }
    match maximize(&a, &b, &vec![Rational::zero(); ncols]) {
        LpOutcome::Optimal { x, .. } => Some((0..n).map(|i| &x[i] - &x[n + i]).collect()),
        _ => None,
    }
}
