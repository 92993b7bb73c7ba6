//! Dense Hermitian eigen-decomposition.
//!
//! `nalgebra`'s symmetric eigensolver returns NaN or a collapsed spectrum on
//! large, highly degenerate matrices such as low-rank Gram matrices, so the
//! decomposition is delegated to `faer`.

use nalgebra::{DMatrix, DVector};

use crate::{c64, C64};

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns) of the
/// Hermitian part of `m`.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let n = m.nrows();
    if n == 0 {
        return (DVector::zeros(0), DMatrix::zeros(0, 0));
    }
    let h = faer::Mat::<faer::c64>::from_fn(n, n, |i, j| {
        let z = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
        faer::c64::new(z.re, z.im)
    });
    let e = h
        .self_adjoint_eigen(faer::Side::Lower)
        .expect("self-adjoint eigendecomposition of a finite matrix converges");
    let (s, u) = (e.S(), e.U());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s[a].re.total_cmp(&s[b].re));
    let vals = DVector::from_iterator(n, order.iter().map(|&k| s[k].re));
    let vecs = DMatrix::from_fn(n, n, |i, j| {
        let z = u[(i, order[j])];
        c64(z.re, z.im)
    });
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_hermitian_keeps_its_eigenvalue() {
        let v = DVector::from_fn(25, |i, _| c64(1.15f64.powi(i as i32 % 5), 0.3 * (i % 3) as f64));
        let m = &v * v.adjoint();
        let (vals, vecs) = hermitian_eigen(&m);
        assert_eq!(vals.len(), 25);
        assert!((vals.max() - v.norm_squared()).abs() <= 1e-10 * v.norm_squared());
        assert!(vals.min().abs() <= 1e-10 * v.norm_squared());
        let recon = &vecs * DMatrix::from_diagonal(&vals.map(|l| c64(l, 0.0))) * vecs.adjoint();
        assert!((recon - m).camax() <= 1e-10 * v.norm_squared());
    }

    #[test]
    fn degenerate_low_rank_spectrum_is_finite() {
        let n = 112;
        let m = DMatrix::from_fn(n, n, |i, j| c64(if i % 7 == 0 && j % 7 == 0 { 1.0 } else { 0.0 }, 0.0));
        let (vals, _) = hermitian_eigen(&m);
        assert!(vals.iter().all(|v| v.is_finite()));
        assert!((vals.max() - 16.0).abs() < 1e-10 && vals.min().abs() < 1e-10);
    }

    #[test]
    fn complex_spectrum_and_orthonormal_vectors() {
        let m = DMatrix::from_row_slice(2, 2, &[c64(2.0, 0.0), c64(0.0, -1.0), c64(0.0, 1.0), c64(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
        let id = DMatrix::<C64>::identity(2, 2);
        assert!((vecs.adjoint() * &vecs - id).camax() < 1e-12);
    }
}
