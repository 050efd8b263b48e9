//! Truncated single-mode ladder operators and their action on two-mode
//! coefficient arrays.
//!
//! A two-mode state Σ C[i][j] |i⟩_a |j⟩_b is stored as the matrix C. An
//! operator O on mode a acts as `O·C`; on mode b as `C·Oᵀ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// a on levels 0..dim: a|n⟩ = √n |n−1⟩.
pub fn annihilation(dim: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// a† on levels 0..dim: a†|n⟩ = √(n+1) |n+1⟩, truncated at the top level.
pub fn creation(dim: usize) -> DMatrix<Complex64> {
    annihilation(dim).adjoint()
}

pub fn apply_on_a(op: &DMatrix<Complex64>, coeffs: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    op * coeffs
}

pub fn apply_on_b(op: &DMatrix<Complex64>, coeffs: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    coeffs * op.transpose()
}

fn ladder(c: &DMatrix<Complex64>, on_a: bool, raise: bool) -> DMatrix<Complex64> {
    let (rows, cols) = c.shape();
    let len = if on_a { rows } else { cols };
    DMatrix::from_fn(rows, cols, |i, j| {
        let n = if on_a { i } else { j };
        let (src, factor) = match raise {
            true if n == 0 => return Complex64::new(0.0, 0.0),
            true => (n - 1, (n as f64).sqrt()),
            false if n + 1 == len => return Complex64::new(0.0, 0.0),
            false => (n + 1, ((n + 1) as f64).sqrt()),
        };
        let entry = if on_a { c[(src, j)] } else { c[(i, src)] };
        entry * factor
    })
}

/// a† on mode a without forming the operator matrix.
pub fn raise_a(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    ladder(c, true, true)
}

pub fn lower_a(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    ladder(c, true, false)
}

pub fn raise_b(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    ladder(c, false, true)
}

pub fn lower_b(c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    ladder(c, false, false)
}

/// ⟨ψ|φ⟩ for coefficient arrays, summed over the common index range.
pub fn inner(psi: &DMatrix<Complex64>, phi: &DMatrix<Complex64>) -> Complex64 {
    let rows = psi.nrows().min(phi.nrows());
    let cols = psi.ncols().min(phi.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..cols {
        for i in 0..rows {
            acc += psi[(i, j)].conj() * phi[(i, j)];
        }
    }
    acc
}

/// Copies `coeffs` into the top-left corner of a `dim × dim` zero array.
pub fn pad(coeffs: &DMatrix<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(dim, dim);
    let rows = coeffs.nrows().min(dim);
    let cols = coeffs.ncols().min(dim);
    out.view_mut((0, 0), (rows, cols)).copy_from(&coeffs.view((0, 0), (rows, cols)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_commutator_below_cutoff() {
        let dim = 6;
        let a = annihilation(dim);
        let ad = creation(dim);
        let comm = &a * &ad - &ad * &a;
        for n in 0..dim - 1 {
            assert!((comm[(n, n)] - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn sparse_ladders_match_dense() {
        let dim = 5;
        let c = DMatrix::from_fn(dim, dim, |i, j| Complex64::new(i as f64 + 0.5, j as f64 - 1.0));
        let (a, ad) = (annihilation(dim), creation(dim));
        assert_eq!(raise_a(&c), apply_on_a(&ad, &c));
        assert_eq!(lower_a(&c), apply_on_a(&a, &c));
        assert_eq!(raise_b(&c), apply_on_b(&ad, &c));
        assert_eq!(lower_b(&c), apply_on_b(&a, &c));
    }

    #[test]
    fn create_on_each_mode() {
        let mut c = DMatrix::zeros(3, 3);
        c[(0, 0)] = Complex64::new(1.0, 0.0);
        let ad = creation(3);
        let on_a = apply_on_a(&ad, &c);
        assert_eq!(on_a[(1, 0)], Complex64::new(1.0, 0.0));
        let on_b = apply_on_b(&ad, &c);
        assert_eq!(on_b[(0, 1)], Complex64::new(1.0, 0.0));
    }
}
