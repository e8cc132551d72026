//! Capacity, θ-capacity, moment map and moment-polytope membership for
//! torus actions `G = C_×ⁿ`.
//!
//! For `v = Σ_ω c_ω e_ω` the θ-capacity is
//!
//! ```text
//! cap_θ(v)² = inf_{x ∈ Rⁿ} e^{-2⟨θ,x⟩} Σ_ω |c_ω|² e^{2⟨ω,x⟩}
//! ```
//!
//! whose log `F(x)` is a convex log-sum-exp. Feasibility (`θ ∈ conv supp v`)
//! is decided exactly by rational LP before any floating point work, and
//! boundary targets are handled by restricting to the minimal face that
//! contains `θ`, where the infimum is attained.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::lp::{face_normal, hull_membership, minimal_face};
pub use crate::lp::Membership;
use crate::repr::rational::to_f64;
use crate::repr::{LogValue, Rational, WeightedVector};

/// Stopping threshold on the ∞-norm of the gradient.
pub const GRADIENT_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 500;

/// Where the infimum defining `cap_θ` is (or is not) attained.
#[derive(Clone, Debug, PartialEq)]
pub enum Minimizer {
    Attained(Vec<f64>),
    /// The infimum is approached along `face_point + t·direction`, `t → ∞`.
    Diverging {
        face_point: Vec<f64>,
        direction: Vec<f64>,
    },
    /// `θ` is outside the moment polytope; `cap_θ = 0`.
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct CapacityResult {
    /// `cap_θ(v)` in log form: `log_cap.log_mag() = ln cap_θ(v)`; sign 0
    /// means unstable (`θ` outside the moment polytope).
    pub log_cap: LogValue,
    pub minimizer: Minimizer,
    pub iterations: usize,
    pub gradient_norm: f64,
    /// Separating functional when infeasible; convex combination otherwise.
    pub certificate: Membership,
}

impl CapacityResult {
    pub fn ln_cap(&self) -> f64 {
        self.log_cap.log_mag()
    }

    pub fn is_stable(&self) -> bool {
        !self.log_cap.is_zero()
    }

    pub fn cap(&self) -> f64 {
        self.log_cap.to_f64()
    }
}

fn check_theta(v: &WeightedVector, theta: &[Rational]) -> Result<()> {
    if theta.len() != v.rank() {
        return invalid(format!(
            "θ has {} coordinates, the torus has rank {}",
            theta.len(),
            v.rank()
        ));
    }
    Ok(())
}

/// `μ(v) = Σ_ω |c_ω|² ω / ‖v‖²`.
pub fn moment_map(v: &WeightedVector) -> Result<Vec<f64>> {
    if v.is_zero() {
        return Err(Error::ZeroVector);
    }
    let norm = v.norm_sq();
    let mut mu = vec![0.0; v.rank()];
    for (w, c) in v.terms() {
        let q = c.norm_sqr() / norm;
        for (m, &wi) in mu.iter_mut().zip(w.coords()) {
            *m += q * wi as f64;
        }
    }
    Ok(mu)
}

/// Exact membership of `θ` in `conv{ω : c_ω ≠ 0}` with a certificate.
pub fn moment_polytope_contains(v: &WeightedVector, theta: &[Rational]) -> Result<Membership> {
    v.require_nonzero()?;
    check_theta(v, theta)?;
    let points: Vec<Vec<i64>> = v.support().iter().map(|(w, _)| w.coords().to_vec()).collect();
    Ok(hull_membership(&points, theta))
}

/// Orthonormal basis (as columns) of the span of the given vectors.
fn span_basis(vectors: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    if vectors.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let d = DMatrix::from_fn(n, vectors.len(), |i, j| vectors[j][i]);
    let svd = d.svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let cols: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-9 * smax.max(1.0))
        .collect();
    DMatrix::from_fn(n, cols.len(), |i, j| u[(i, cols[j])])
}

/// Log-sum-exp objective `G(y) = -2⟨t,y⟩ + ln Σ q_j e^{2⟨a_j,y⟩}` in reduced
/// coordinates, returning value, tilted probabilities.
fn face_objective(a: &[DVector<f64>], lnq: &[f64], t: &DVector<f64>, y: &DVector<f64>) -> (f64, Vec<f64>) {
    let expo: Vec<f64> = a
        .iter()
        .zip(lnq)
        .map(|(aj, lq)| lq + 2.0 * aj.dot(y))
        .collect();
    let m = expo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = expo.iter().map(|e| (e - m).exp()).sum();
    let lse = m + s.ln();
    let p = expo.iter().map(|e| (e - lse).exp()).collect();
    (-2.0 * t.dot(y) + lse, p)
}

struct FaceSolution {
    value: f64,
    x: Vec<f64>,
    iterations: usize,
    gradient_norm: f64,
}

/// Minimizes the θ-capacity objective over the face spanned by `weights`,
/// assuming `θ` lies in its relative interior.
fn solve_on_face(weights: &[Vec<f64>], q: &[f64], theta: &[f64]) -> FaceSolution {
    let n = theta.len();
    let lnq: Vec<f64> = q.iter().map(|x| x.ln()).collect();
    let base = &weights[0];
    let diffs: Vec<Vec<f64>> = weights[1..]
        .iter()
        .map(|w| w.iter().zip(base).map(|(a, b)| a - b).collect())
        .collect();
    let basis = span_basis(&diffs, n);
    let r = basis.ncols();
    let a: Vec<DVector<f64>> = weights
        .iter()
        .map(|w| basis.tr_mul(&DVector::from_column_slice(w)))
        .collect();
    let t = basis.tr_mul(&DVector::from_column_slice(theta));
    let mut y = DVector::zeros(r);

    let grad_hess = |p: &[f64]| {
        let mean = a.iter().zip(p).fold(DVector::zeros(r), |acc, (aj, pj)| acc + aj * *pj);
        let mut cov = DMatrix::zeros(r, r);
        for (aj, pj) in a.iter().zip(p) {
            let d = aj - &mean;
            cov += (&d * d.transpose()) * *pj;
        }
        (2.0 * (mean - &t), 4.0 * cov)
    };

    let (mut value, mut p) = face_objective(&a, &lnq, &t, &y);
    let mut iterations = 0;
    let mut gnorm;
    loop {
        let (g, h) = grad_hess(&p);
        gnorm = g.amax();
        if gnorm <= GRADIENT_TOLERANCE || iterations >= MAX_ITERATIONS {
            break;
        }
        iterations += 1;
        let step = match h.clone().cholesky() {
            Some(ch) => -ch.solve(&g),
            None => -&g,
        };
        let slope = g.dot(&step);
        let (step, slope) = if slope < 0.0 { (step, slope) } else { (-&g, -g.dot(&g)) };
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > 1e-20 {
            let trial = &y + &step * alpha;
            let (tv, tp) = face_objective(&a, &lnq, &t, &trial);
            if tv <= value + 1e-4 * alpha * slope {
                y = trial;
                value = tv;
                p = tp;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            // rounding floor reached before the gradient tolerance
            break;
        }
    }
    let x = (&basis * &y).iter().copied().collect();
    FaceSolution {
        value,
        x,
        iterations,
        gradient_norm: gnorm,
    }
}

/// `cap_θ(v) = inf_x e^{-⟨θ,x⟩} ‖e^x · v‖` for the torus action. `θ = 0`
/// gives the plain capacity.
pub fn theta_capacity(v: &WeightedVector, theta: &[Rational]) -> Result<CapacityResult> {
    v.require_nonzero()?;
    check_theta(v, theta)?;
    let support = v.support();
    let points: Vec<Vec<i64>> = support.iter().map(|(w, _)| w.coords().to_vec()).collect();
    let certificate = hull_membership(&points, theta);
    if !certificate.is_inside() {
        return Ok(CapacityResult {
            log_cap: LogValue::ZERO,
            minimizer: Minimizer::Infeasible,
            iterations: 0,
            gradient_norm: 0.0,
            certificate,
        });
    }
    let face = minimal_face(&points, theta);
    let theta_f: Vec<f64> = theta.iter().map(to_f64).collect();
    let face_weights: Vec<Vec<f64>> = face
        .iter()
        .map(|&j| points[j].iter().map(|&x| x as f64).collect())
        .collect();
    let face_q: Vec<f64> = face.iter().map(|&j| support[j].1).collect();
    let sol = solve_on_face(&face_weights, &face_q, &theta_f);

    let minimizer = if face.len() == points.len() {
        Minimizer::Attained(sol.x)
    } else {
        let direction = face_normal(&points, theta, &face)
            .expect("a proper face has a supporting functional")
            .iter()
            .map(to_f64)
            .collect();
        Minimizer::Diverging {
            face_point: sol.x,
            direction,
        }
    };
    Ok(CapacityResult {
        log_cap: LogValue::from_ln(sol.value / 2.0),
        minimizer,
        iterations: sol.iterations,
        gradient_norm: sol.gradient_norm,
        certificate,
    })
}

/// Convenience wrapper taking a floating-point target, rationalized to
/// within `1e-9`.
pub fn theta_capacity_f64(v: &WeightedVector, theta: &[f64]) -> Result<CapacityResult> {
    theta_capacity(v, &crate::repr::rationalize_vec(theta)?)
}

/// `log cap_θ(v)²` through the relative-entropy form
///
/// ```text
/// -ln cap_θ²(v) = min { D(p ‖ q) : Σ_ω p_ω ω = θ },  q_ω = |c_ω|²
/// ```
///
/// solved by regularized Newton ascent on the concave dual
/// `⟨λ,θ⟩ - ln Σ q_ω e^{⟨λ,ω⟩}` in the full coordinates, then evaluated as
/// the primal divergence of the tilted distribution.
pub fn capacity_kl_form(v: &WeightedVector, theta: &[Rational]) -> Result<LogValue> {
    v.require_nonzero()?;
    check_theta(v, theta)?;
    let norm = v.norm_sq();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "relative-entropy form needs a unit vector, ‖v‖² = {norm}"
        )));
    }
    let support = v.support();
    let points: Vec<Vec<i64>> = support.iter().map(|(w, _)| w.coords().to_vec()).collect();
    if !hull_membership(&points, theta).is_inside() {
        return Ok(LogValue::ZERO);
    }
    let n = theta.len();
    let omegas: Vec<DVector<f64>> = points
        .iter()
        .map(|w| DVector::from_iterator(n, w.iter().map(|&x| x as f64)))
        .collect();
    let lnq: Vec<f64> = support.iter().map(|(_, q)| q.ln()).collect();
    let target = DVector::from_iterator(n, theta.iter().map(to_f64));

    // log-partition and tilted distribution at λ
    let tilt = |lambda: &DVector<f64>| {
        let e: Vec<f64> = omegas.iter().zip(&lnq).map(|(w, lq)| lq + w.dot(lambda)).collect();
        let m = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + e.iter().map(|x| (x - m).exp()).sum::<f64>().ln();
        let p: Vec<f64> = e.iter().map(|x| (x - lse).exp()).collect();
        (lse, p)
    };
    let dual = |lambda: &DVector<f64>, lse: f64| lambda.dot(&target) - lse;

    let mut lambda = DVector::zeros(n);
    let (mut lse, mut p) = tilt(&lambda);
    for _ in 0..5000 {
        let mean = omegas.iter().zip(&p).fold(DVector::zeros(n), |acc, (w, pj)| acc + w * *pj);
        let residual = &target - &mean;
        if residual.amax() <= 1e-13 {
            break;
        }
        let mut cov = DMatrix::zeros(n, n);
        for (w, pj) in omegas.iter().zip(&p) {
            let d = w - &mean;
            cov += (&d * d.transpose()) * *pj;
        }
        let reg = 1e-12 * (1.0 + cov.trace());
        let system = &cov + DMatrix::identity(n, n) * reg;
        let step = match system.cholesky() {
            Some(ch) => ch.solve(&residual),
            None => residual.clone(),
        };
        let current = dual(&lambda, lse);
        let slope = residual.dot(&step);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-16 {
            let trial = &lambda + &step * alpha;
            let (tl, tp) = tilt(&trial);
            if dual(&trial, tl) >= current + 1e-4 * alpha * slope {
                lambda = trial;
                lse = tl;
                p = tp;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    // primal value D(p ‖ q) with ln(p_ω / q_ω) = ⟨λ, ω⟩ - lse
    let divergence: f64 = omegas
        .iter()
        .zip(&p)
        .filter(|(_, &pj)| pj > 0.0)
        .map(|(w, pj)| pj * (w.dot(&lambda) - lse))
        .sum();
    Ok(LogValue::from_ln(-divergence))
}
