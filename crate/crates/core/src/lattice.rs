//! Integer lattices spanned by weight differences.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::repr::Rational;

/// Row-echelon integer basis of the lattice generated by `gens`, obtained by
/// unimodular row operations (so the lattice is preserved exactly).
pub fn echelon_basis(gens: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    let ncols = gens.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<BigInt>> = gens
        .iter()
        .map(|g| g.iter().map(|&x| BigInt::from(x)).collect())
        .filter(|r: &Vec<BigInt>| r.iter().any(|x| !x.is_zero()))
        .collect();
    let mut basis = Vec::new();
    for col in 0..ncols {
        // gcd-reduce all remaining rows in this column onto one pivot row
        loop {
            let mut nz: Vec<usize> = (0..rows.len()).filter(|&i| !rows[i][col].is_zero()).collect();
            if nz.len() <= 1 {
                break;
            }
            nz.sort_by(|&a, &b| rows[a][col].abs().cmp(&rows[b][col].abs()));
            let p = nz[0];
            let pivot = rows[p].clone();
            for &i in &nz[1..] {
                let q = rows[i][col].div_floor(&pivot[col]);
                for (x, y) in rows[i].iter_mut().zip(&pivot) {
                    *x -= &q * y;
                }
            }
        }
        if let Some(i) = (0..rows.len()).find(|&i| !rows[i][col].is_zero()) {
            let mut r = rows.swap_remove(i);
            if r[col].is_negative() {
                r.iter_mut().for_each(|x| *x = -x.clone());
            }
            basis.push(r);
        }
        rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    }
    basis
}

/// Order of `t` in `span(L) / L` for the lattice `L` with the given echelon
/// basis: the least `m ≥ 1` with `m t ∈ L`. `None` if `t ∉ span_Q(L)`.
pub fn order_modulo(basis: &[Vec<BigInt>], t: &[Rational]) -> Option<BigInt> {
    let mut rest = t.to_vec();
    let mut denom = BigInt::one();
    for row in basis {
        let col = row.iter().position(|x| !x.is_zero())?;
        let coeff = &rest[col] / Rational::from_integer(row[col].clone());
        for (r, x) in rest.iter_mut().zip(row) {
            *r -= &coeff * Rational::from_integer(x.clone());
        }
        denom = denom.lcm(coeff.denom());
    }
    rest.iter().all(Zero::is_zero).then_some(denom)
}
