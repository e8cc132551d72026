//! Seeded Monte Carlo estimates of Haar integrals
//! `∫_K χ(u)^* ⟨v, φ(u)v⟩^k du`.
//!
//! Samples are drawn in fixed-size blocks; block `b` uses a ChaCha8 stream
//! `b` keyed by the seed, and block statistics are merged in block order, so
//! results do not depend on the number of worker threads.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::repr::{Partition, WeightedVector};

pub const MAX_UNITARY_DIM: usize = 8;
pub const MAX_SAMPLES: u64 = 10_000_000;
pub const MAX_POWER: u32 = 8;
const BLOCK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: Complex64,
    /// `sqrt(Σ|x_i − mean|² / (N − 1)) / √N`.
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// `|mean − exact|` in units of the standard error. Differences at the
    /// level of rounding error count as zero, since a constant integrand
    /// has a standard error made of rounding noise alone.
    pub fn z_score(&self, exact: f64) -> f64 {
        let d = (self.mean - exact).norm();
        let rounding = 64.0 * f64::EPSILON * self.mean.norm().max(exact.abs());
        if d <= rounding {
            0.0
        } else if self.stderr == 0.0 {
            f64::INFINITY
        } else {
            d / self.stderr
        }
    }

    pub fn within(&self, exact: f64, sigmas: f64) -> bool {
        self.z_score(exact) <= sigmas
    }
}

/// Haar-random `n×n` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn sample_haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<DMatrix<Complex64>> {
    if n == 0 || n > MAX_UNITARY_DIM {
        return invalid(format!("unitary dimension must be in 1..={MAX_UNITARY_DIM}"));
    }
    let g = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::one() };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// `‖u†u − I‖` in operator norm.
pub fn unitarity_defect(u: &DMatrix<Complex64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<Complex64>::identity(n, n)).norm()
}

/// A unitary representation together with the vector `v`.
#[derive(Clone, Debug)]
pub enum GroupAction {
    /// `U(1)ⁿ` acting on weight vectors by `e^{i⟨ω,φ⟩}`.
    Torus(WeightedVector),
    /// `U(2)` on `C²`.
    U2Vector([Complex64; 2]),
    /// `SU(2)` on `C²`.
    Su2Vector([Complex64; 2]),
    /// `U(2)` on `2×2` matrices by left multiplication.
    U2LeftMatrix([[Complex64; 2]; 2]),
    /// `SU(2)` on `2×2` matrices by left multiplication.
    Su2LeftMatrix([[Complex64; 2]; 2]),
}

impl GroupAction {
    pub fn name(&self) -> &'static str {
        match self {
            GroupAction::Torus(_) => "torus",
            GroupAction::U2Vector(_) => "u2-vector",
            GroupAction::Su2Vector(_) => "su2-vector",
            GroupAction::U2LeftMatrix(_) => "u2-left-matrix",
            GroupAction::Su2LeftMatrix(_) => "su2-left-matrix",
        }
    }
}

type U2 = [[Complex64; 2]; 2];

fn to_u2(m: &DMatrix<Complex64>) -> U2 {
    [[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]
}

fn sample_u2(rng: &mut ChaCha8Rng, special: bool) -> U2 {
    let mut u = to_u2(&sample_haar_unitary(2, rng).expect("n = 2 is supported"));
    if special {
        let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
        let s = det.sqrt().inv();
        for row in &mut u {
            for x in row {
                *x *= s;
            }
        }
    }
    u
}

/// `⟨v, u v⟩`.
fn vector_coefficient(u: &U2, v: &[Complex64; 2]) -> Complex64 {
    let uv0 = u[0][0] * v[0] + u[0][1] * v[1];
    let uv1 = u[1][0] * v[0] + u[1][1] * v[1];
    v[0].conj() * uv0 + v[1].conj() * uv1
}

/// `⟨A, uA⟩ = tr(A† u A)`.
fn matrix_coefficient(u: &U2, a: &U2) -> Complex64 {
    let mut s = Complex64::zero();
    for i in 0..2 {
        for j in 0..2 {
            for l in 0..2 {
                s += a[i][j].conj() * u[i][l] * a[l][j];
            }
        }
    }
    s
}

/// U(2) character of `λ = (λ₁, λ₂)`: `det^{λ₂}·h_{λ₁−λ₂}(z₁, z₂)`, with
/// `h_m` from the recurrence `h_m = tr·h_{m−1} − det·h_{m−2}`.
pub fn u2_character(u: &U2, lambda: &Partition) -> Complex64 {
    let parts = lambda.parts();
    let l1 = parts.first().copied().unwrap_or(0);
    let l2 = parts.get(1).copied().unwrap_or(0);
    let tr = u[0][0] + u[1][1];
    let det = u[0][0] * u[1][1] - u[0][1] * u[1][0];
    let (mut h_prev, mut h) = (Complex64::zero(), Complex64::one());
    for _ in 0..(l1 - l2) {
        let next = tr * h - det * h_prev;
        h_prev = h;
        h = next;
    }
    det.powu(l2 as u32) * h
}

/// Merges per-block `(count, mean, M2)` in order (Chan et al.).
fn merge(a: (u64, Complex64, f64), b: (u64, Complex64, f64)) -> (u64, Complex64, f64) {
    if a.0 == 0 {
        return b;
    }
    let n = a.0 + b.0;
    let delta = b.1 - a.1;
    let mean = a.1 + delta * (b.0 as f64 / n as f64);
    let m2 = a.2 + b.2 + delta.norm_sqr() * (a.0 as f64 * b.0 as f64 / n as f64);
    (n, mean, m2)
}

fn estimate<F>(samples: u64, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    if samples < 2 || samples > MAX_SAMPLES {
        return invalid(format!("samples must be in 2..={MAX_SAMPLES}"));
    }
    let blocks = samples.div_ceil(BLOCK);
    let stats: Vec<(u64, Complex64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b);
            let count = BLOCK.min(samples - b * BLOCK);
            let mut acc = (0u64, Complex64::zero(), 0.0);
            for _ in 0..count {
                let x = f(&mut rng);
                // Welford update
                acc.0 += 1;
                let delta = x - acc.1;
                acc.1 += delta / acc.0 as f64;
                acc.2 += (delta.conj() * (x - acc.1)).re;
            }
            acc
        })
        .collect();
    let (n, mean, m2) = stats.into_iter().fold((0, Complex64::zero(), 0.0), merge);
    Ok(McEstimate {
        mean,
        stderr: (m2 / (n - 1) as f64 / n as f64).sqrt(),
        samples: n,
        seed,
    })
}

fn check_power(k: u32) -> Result<()> {
    if k > MAX_POWER {
        return invalid(format!("k must be at most {MAX_POWER}"));
    }
    Ok(())
}

fn torus_coefficient(weights: &[(Vec<i64>, f64)], phi: &[f64]) -> Complex64 {
    weights
        .iter()
        .map(|(w, q)| {
            let angle: f64 = w.iter().zip(phi).map(|(a, b)| *a as f64 * b).sum();
            Complex64::from_polar(*q, angle)
        })
        .sum()
}

fn torus_data(v: &WeightedVector) -> Vec<(Vec<i64>, f64)> {
    v.support().iter().map(|(w, q)| (w.coords().to_vec(), *q)).collect()
}

fn sample_angles(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>() * std::f64::consts::TAU).collect()
}

/// Estimate of `‖Π_k v^⊗k‖² = ∫_K ⟨v, φ(u)v⟩^k du`.
pub fn mc_invariant_norm(action: &GroupAction, k: u32, samples: u64, seed: u64) -> Result<McEstimate> {
    check_power(k)?;
    match action {
        GroupAction::Torus(v) => {
            v.require_nonzero()?;
            let data = torus_data(v);
            let n = v.rank();
            estimate(samples, seed, |rng| {
                torus_coefficient(&data, &sample_angles(rng, n)).powu(k)
            })
        }
        _ => mc_isotypic_norm(action, k, &Partition::new(vec![0, 0])?, samples, seed),
    }
}

/// Estimate of `‖Π_{k,λ} v^⊗k‖² = d_λ ∫ χ_λ(u)^* ⟨v, φ(u)v⟩^k du` for the
/// rank-2 actions. For `SU(2)` the irrep is the one with highest weight
/// `λ₁ − λ₂`.
pub fn mc_isotypic_norm(
    action: &GroupAction,
    k: u32,
    lambda: &Partition,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_power(k)?;
    if lambda.length() > 2 {
        return invalid("λ must have at most two parts");
    }
    let parts = lambda.parts();
    let l1 = parts.first().copied().unwrap_or(0);
    let l2 = parts.get(1).copied().unwrap_or(0);
    let lambda = Partition::new(vec![l1, l2])?;
    let d = (l1 - l2 + 1) as f64;
    let (special, coefficient): (bool, Box<dyn Fn(&U2) -> Complex64 + Sync>) = match action {
        GroupAction::Torus(_) => {
            return Err(Error::UnsupportedGroup(
                "torus isotypic components are weight spaces; use mc_weight_norm".into(),
            ))
        }
        GroupAction::U2Vector(v) => (false, Box::new(move |u| vector_coefficient(u, v))),
        GroupAction::Su2Vector(v) => (true, Box::new(move |u| vector_coefficient(u, v))),
        GroupAction::U2LeftMatrix(a) => (false, Box::new(move |u| matrix_coefficient(u, a))),
        GroupAction::Su2LeftMatrix(a) => (true, Box::new(move |u| matrix_coefficient(u, a))),
    };
    // for SU(2) only λ₁ − λ₂ matters
    let character_lambda = if special { Partition::new(vec![l1 - l2, 0])? } else { lambda };
    estimate(samples, seed, |rng| {
        let u = sample_u2(rng, special);
        u2_character(&u, &character_lambda).conj() * coefficient(&u).powu(k) * d
    })
}

/// Estimate of the squared norm of the weight-`λ` component of `v^⊗k` for
/// a torus action: `∫ e^{−i⟨λ,φ⟩} ⟨v, φ v⟩^k dφ`.
pub fn mc_weight_norm(v: &WeightedVector, k: u32, lambda: &[i64], samples: u64, seed: u64) -> Result<McEstimate> {
    check_power(k)?;
    v.require_nonzero()?;
    if lambda.len() != v.rank() {
        return invalid("λ must have the torus rank");
    }
    let data = torus_data(v);
    let n = v.rank();
    estimate(samples, seed, |rng| {
        let phi = sample_angles(rng, n);
        let angle: f64 = lambda.iter().zip(&phi).map(|(a, b)| *a as f64 * b).sum();
        Complex64::from_polar(1.0, -angle) * torus_coefficient(&data, &phi).powu(k)
    })
}

/// Seeded estimate of `∫ g(u) du` over Haar `U(n)`.
pub fn mc_unitary_average<G>(n: usize, samples: u64, seed: u64, g: G) -> Result<McEstimate>
where
    G: Fn(&DMatrix<Complex64>) -> Complex64 + Sync,
{
    if n == 0 || n > MAX_UNITARY_DIM {
        return invalid(format!("unitary dimension must be in 1..={MAX_UNITARY_DIM}"));
    }
    estimate(samples, seed, |rng| g(&sample_haar_unitary(n, rng).expect("dimension checked")))
}
