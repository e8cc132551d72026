//! Laurent polynomials in one variable: constant terms of powers and
//! critical values on `C^×`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{invalid, Error, Result};
use crate::repr::Rational;

/// Residual tolerance for polished critical points, relative to the sum of
/// absolute terms of the critical polynomial.
pub const ROOT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LaurentPoly {
    terms: BTreeMap<i64, Complex64>,
}

impl LaurentPoly {
    /// Zero coefficients are dropped; repeated exponents are summed.
    pub fn new(terms: impl IntoIterator<Item = (i64, Complex64)>) -> Self {
        let mut map = BTreeMap::new();
        for (e, c) in terms {
            *map.entry(e).or_insert_with(Complex64::zero) += c;
        }
        map.retain(|_, c| !c.is_zero());
        LaurentPoly { terms: map }
    }

    pub fn from_real(terms: &[(i64, f64)]) -> Self {
        Self::new(terms.iter().map(|&(e, c)| (e, Complex64::new(c, 0.0))))
    }

    pub fn terms(&self) -> &BTreeMap<i64, Complex64> {
        &self.terms
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn max_exponent(&self) -> Option<i64> {
        self.terms.keys().next_back().copied()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|&e| e == 0)
    }

    /// All coefficients real and nonnegative.
    pub fn is_nonnegative(&self) -> bool {
        self.terms.values().all(|c| c.im == 0.0 && c.re >= 0.0)
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.terms.iter().map(|(&e, c)| c * z.powi(e as i32)).sum()
    }

    /// `z·f′(z)`.
    pub fn euler_derivative(&self) -> LaurentPoly {
        Self::new(self.terms.iter().map(|(&e, &c)| (e, c * e as f64)))
    }
}

fn convolve<T>(a: &BTreeMap<i64, T>, b: &BTreeMap<i64, T>) -> BTreeMap<i64, T>
where
    T: Clone + Zero + for<'x> std::ops::AddAssign<&'x T>,
    for<'x> &'x T: std::ops::Mul<&'x T, Output = T>,
{
    let mut out: BTreeMap<i64, T> = BTreeMap::new();
    for (ea, ca) in a {
        for (eb, cb) in b {
            out.entry(ea + eb).or_insert_with(T::zero).add_assign(&(ca * cb));
        }
    }
    out
}

/// Coefficient of `z⁰` in `f^k`, by repeated convolution.
pub fn laurent_cst_power(f: &LaurentPoly, k: u32) -> Complex64 {
    let mut acc = BTreeMap::from([(0i64, Complex64::one())]);
    for _ in 0..k {
        acc = convolve(&acc, &f.terms);
    }
    acc.get(&0).copied().unwrap_or_else(Complex64::zero)
}

/// Exact variant of [`laurent_cst_power`] for rational coefficients.
pub fn laurent_cst_power_exact(terms: &[(i64, Rational)], k: u32) -> Rational {
    let mut f: BTreeMap<i64, Rational> = BTreeMap::new();
    for (e, c) in terms {
        *f.entry(*e).or_insert_with(Rational::zero) += c;
    }
    let mut acc = BTreeMap::from([(0i64, Rational::one())]);
    for _ in 0..k {
        acc = convolve(&acc, &f);
    }
    acc.remove(&0).unwrap_or_else(Rational::zero)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalPoint {
    pub point: Complex64,
    pub value: Complex64,
    /// The point lies on the positive real axis (only set for `f` with
    /// nonnegative coefficients, where it is the minimizer of `f` on
    /// `R_{>0}`).
    pub positive_real: bool,
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    // coeffs[i] multiplies z^i
    let mut p = Complex64::zero();
    let mut dp = Complex64::zero();
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of `Σ coeffs[i]·z^i` with nonzero constant and leading terms.
fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let deg = coeffs.len() - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut companion = DMatrix::<Complex64>::zeros(deg, deg);
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::one();
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -coeffs[i] / lead;
    }
    let eig = companion
        .schur()
        .eigenvalues()
        .ok_or(Error::RootFinding { residual: f64::INFINITY })?;
    let mut roots = Vec::with_capacity(deg);
    for mut z in eig.iter().copied() {
        let (p, dp) = horner(coeffs, z);
        if !dp.is_zero() {
            let step = p / dp;
            if step.is_finite() {
                z -= step;
            }
        }
        let (p, _) = horner(coeffs, z);
        let scale: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| c.norm() * z.norm().powi(i as i32))
            .sum();
        let residual = p.norm() / scale;
        if !(residual <= ROOT_TOLERANCE) {
            return Err(Error::RootFinding { residual });
        }
        roots.push(z);
    }
    Ok(roots)
}

/// Critical points of `f` on `C^×` (roots of `z·f′(z)`) with their values,
/// sorted by decreasing modulus of the value.
pub fn critical_values(f: &LaurentPoly) -> Result<Vec<CriticalPoint>> {
    if f.is_constant() {
        return invalid("critical values of a constant Laurent polynomial");
    }
    let g = f.euler_derivative();
    let lo = g.min_exponent().unwrap();
    let hi = g.max_exponent().unwrap();
    // z^{-lo}·z f′(z) is a polynomial with nonzero constant term, so the
    // root at 0 (from monomial factors) is already removed
    let mut coeffs = vec![Complex64::zero(); (hi - lo) as usize + 1];
    for (&e, &c) in g.terms() {
        coeffs[(e - lo) as usize] = c;
    }
    let roots = polynomial_roots(&coeffs)?;
    let nonnegative = f.is_nonnegative();
    let mut out: Vec<CriticalPoint> = roots
        .into_iter()
        .map(|z| CriticalPoint {
            point: z,
            value: f.eval(z),
            positive_real: nonnegative && z.re > 0.0 && z.im.abs() <= 1e-9 * z.re,
        })
        .collect();
    if let Some(p) = out.iter_mut().find(|p| p.positive_real) {
        p.point = Complex64::new(p.point.re, 0.0);
        p.value = f.eval(p.point);
    }
    out.sort_by(|a, b| {
        b.value
            .norm()
            .total_cmp(&a.value.norm())
            .then(a.point.arg().total_cmp(&b.point.arg()))
    });
    Ok(out)
}

/// Largest modulus among the critical values.
pub fn max_critical_modulus(f: &LaurentPoly) -> Result<f64> {
    Ok(critical_values(f)?.first().map_or(0.0, |p| p.value.norm()))
}

/// The value `inf_{x>0} f(x)` at the positive-real critical point, for `f`
/// with nonnegative coefficients.
pub fn positive_real_critical_value(f: &LaurentPoly) -> Result<Option<f64>> {
    Ok(critical_values(f)?
        .iter()
        .find(|p| p.positive_real)
        .map(|p| p.value.re))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repr::{binomial, rat, rat_int};

    fn z_plus_inv() -> LaurentPoly {
        LaurentPoly::from_real(&[(1, 1.0), (-1, 1.0)])
    }

    #[test]
    fn constant_terms() {
        assert_eq!(laurent_cst_power(&z_plus_inv(), 2), Complex64::new(2.0, 0.0));
        let z = LaurentPoly::from_real(&[(1, 1.0)]);
        for k in 1..6 {
            assert!(laurent_cst_power(&z, k).is_zero());
        }
        let one = LaurentPoly::from_real(&[(0, 1.0)]);
        assert_eq!(laurent_cst_power(&one, 7), Complex64::one());
        assert_eq!(laurent_cst_power(&one, 0), Complex64::one());
    }

    #[test]
    fn exact_matches_binomial() {
        let f = [(1, rat_int(1)), (-1, rat_int(1))];
        for k in 0..=40u32 {
            let expected = if k % 2 == 0 { binomial(k as u64, k as u64 / 2) } else { 0u32.into() };
            assert_eq!(laurent_cst_power_exact(&f, k), Rational::from_integer(expected.into()));
        }
        let g = [(2, rat_int(1)), (-1, rat_int(1))];
        for k in 0..=30u32 {
            let expected = if k % 3 == 0 { binomial(k as u64, k as u64 / 3) } else { 0u32.into() };
            assert_eq!(laurent_cst_power_exact(&g, k), Rational::from_integer(expected.into()));
        }
        let h = [(1, rat(1, 2)), (-1, rat(1, 2))];
        assert_eq!(laurent_cst_power_exact(&h, 2), rat(1, 2));
    }

    #[test]
    fn complex_coefficients() {
        let i = Complex64::i();
        let f = LaurentPoly::new([(1, i), (-1, i)]);
        // (i(z + 1/z))^2 has constant term -2
        assert!((laurent_cst_power(&f, 2) + 2.0).norm() < 1e-15);
    }

    #[test]
    fn critical_values_z_plus_inverse() {
        let cv = critical_values(&z_plus_inv()).unwrap();
        assert_eq!(cv.len(), 2);
        let mut values: Vec<f64> = cv.iter().map(|p| p.value.re).collect();
        values.sort_by(f64::total_cmp);
        assert!((values[0] + 2.0).abs() < 1e-12 && (values[1] - 2.0).abs() < 1e-12);
        assert!((max_critical_modulus(&z_plus_inv()).unwrap() - 2.0).abs() < 1e-12);
        let pos = cv.iter().filter(|p| p.positive_real).count();
        assert_eq!(pos, 1);
    }

    #[test]
    fn positive_definite_half() {
        let f = LaurentPoly::from_real(&[(1, 0.5), (-1, 0.5)]);
        let v = positive_real_critical_value(&f).unwrap().unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cube_root_critical_points() {
        let f = LaurentPoly::from_real(&[(2, 1.0), (-1, 1.0)]);
        let cv = critical_values(&f).unwrap();
        assert_eq!(cv.len(), 3);
        let expected = 3.0 * 2f64.powf(-2.0 / 3.0);
        for p in &cv {
            assert!((p.point.powi(3) - 0.5).norm() < 1e-12);
            assert!((p.value.norm() - expected).abs() < 1e-12);
        }
        let pos = cv.iter().find(|p| p.positive_real).unwrap();
        assert!((pos.value.re - expected).abs() < 1e-12);
    }

    #[test]
    fn roots_at_zero_are_discarded() {
        // z^2 + z^3: z f' = 2z^2 + 3z^3, only nonzero critical point -2/3
        let f = LaurentPoly::from_real(&[(2, 1.0), (3, 1.0)]);
        let cv = critical_values(&f).unwrap();
        assert_eq!(cv.len(), 1);
        assert!((cv[0].point + 2.0 / 3.0).norm() < 1e-12);
        assert!(!cv[0].positive_real);
        assert!(critical_values(&LaurentPoly::from_real(&[(0, 3.0)])).is_err());
    }
}
