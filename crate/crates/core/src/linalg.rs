//! Dense linear-algebra helpers over `f64` and `C64`.

#[cfg(not(any(test, feature = "std")))]
#[allow(unused_imports)]
use nalgebra::ComplexField as _;
use alloc::vec::Vec;
use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use crate::scalar::Scalar;

pub(crate) fn singular_values<T: Scalar>(m: &DMatrix<T>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    svd.singular_values.iter().copied().collect()
}

/// Count of singular values strictly above `rel_tol * sigma_max`.
pub(crate) fn rank_from_singular(sv: &[f64], rel_tol: f64) -> usize {
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax <= 0.0 || !smax.is_finite() {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}

pub(crate) fn numerical_rank<T: Scalar>(m: &DMatrix<T>, rel_tol: f64) -> usize {
    rank_from_singular(&singular_values(m), rel_tol)
}

/// Right singular vector of the smallest singular value, with that value and
/// the largest one. Rows are zero-padded so the full right basis is available.
pub(crate) fn null_vector(m: &DMatrix<f64>) -> (DVector<f64>, f64, f64) {
    let (r, c) = m.shape();
    let padded = if r < c {
        let mut p = DMatrix::zeros(c, c);
        p.view_mut((0, 0), (r, c)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (mut imin, mut smin, mut smax) = (0, f64::INFINITY, 0.0f64);
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < smin {
            smin = s;
            imin = i;
        }
        smax = smax.max(s);
    }
    (v_t.row(imin).transpose(), smin, smax)
}

/// Minimum-norm least-squares solution with singular values below
/// `rel_tol * sigma_max` truncated.
pub(crate) fn lstsq<T: Scalar>(a: &DMatrix<T>, b: &DVector<T>, rel_tol: f64) -> DVector<T> {
    if a.ncols() == 0 {
        return DVector::zeros(0);
    }
    if a.nrows() == 0 {
        return DVector::zeros(a.ncols());
    }
    let svd = SVD::new(a.clone(), true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return DVector::zeros(a.ncols());
    }
    svd.solve(b, rel_tol * smax)
        .expect("u and v_t were computed")
}

/// Greedy column pivoting: picks `count` columns, each maximizing the norm of
/// its component orthogonal to the columns already chosen. Ties go to the
/// earliest position in `order`.
pub(crate) fn pivoted_columns<T: Scalar>(a: &DMatrix<T>, count: usize, order: &[usize]) -> Vec<usize> {
    let rows = a.nrows();
    let mut residual: Vec<DVector<T>> = order.iter().map(|&j| a.column(j).into_owned()).collect();
    let mut basis: Vec<DVector<T>> = Vec::new();
    let mut chosen = Vec::new();
    let mut taken = alloc::vec![false; order.len()];
    for _ in 0..count.min(order.len()).min(rows) {
        let mut best = None;
        let mut best_norm = 0.0;
        for (k, col) in residual.iter().enumerate() {
            if taken[k] {
                continue;
            }
            let nrm = col.norm();
            if nrm > best_norm {
                best_norm = nrm;
                best = Some(k);
            }
        }
        let Some(k) = best else { break };
        taken[k] = true;
        chosen.push(order[k]);
        let mut q = residual[k].clone();
        // Second Gram-Schmidt pass keeps the basis orthonormal to working precision.
        for qb in &basis {
            let proj = qb.dotc(&q);
            q -= qb * proj;
        }
        let nq = q.norm();
        if nq == 0.0 {
            break;
        }
        q /= T::from_real(nq);
        for (j, col) in residual.iter_mut().enumerate() {
            if !taken[j] {
                let proj = q.dotc(col);
                *col -= &q * proj;
            }
        }
        basis.push(q);
    }
    chosen
}

/// Eigen-decomposition of a Hermitian matrix: real eigenvalues and the unitary
/// eigenvector matrix.
pub(crate) fn hermitian_eig<T: Scalar>(m: &DMatrix<T>) -> (Vec<f64>, DMatrix<T>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = (m + m.adjoint()) * T::from_real(0.5);
    let eig = SymmetricEigen::new(sym);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// `F^{-1/2}` for Hermitian positive-definite `F`, eigenvalues floored at
/// `floor_rel * lambda_max`.
pub(crate) fn inv_sqrt_hermitian<T: Scalar>(m: &DMatrix<T>, floor_rel: f64) -> DMatrix<T> {
    let (vals, vecs) = hermitian_eig(m);
    let lmax = vals.iter().copied().fold(0.0, f64::max);
    let floor = floor_rel * lmax;
    let n = vals.len();
    let mut d = DMatrix::<T>::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = T::from_real(1.0 / vals[i].max(floor).sqrt());
    }
    &vecs * d * vecs.adjoint()
}

/// Log-determinant and inverse of a Hermitian positive-definite matrix.
pub(crate) fn logdet_inverse<T: Scalar>(a: &DMatrix<T>) -> Option<(f64, DMatrix<T>)> {
    let sym = (a + a.adjoint()) * T::from_real(0.5);
    let chol = Cholesky::new(sym)?;
    let l = chol.l_dirty();
    let mut logdet = 0.0;
    for i in 0..a.nrows() {
        let d = l[(i, i)].real();
        if d <= 0.0 || !d.is_finite() {
            return None;
        }
        logdet += 2.0 * d.ln();
    }
    Some((logdet, chol.inverse()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::C64;

    #[test]
    fn null_vector_annihilates_wide_matrix() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.0, 1.0, 4.0]);
        let (z, smin, smax) = null_vector(&m);
        assert!(smin <= 1e-14 * smax);
        assert!((&m * &z).norm() < 1e-14);
        assert!((z.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_of_zero_matrix_is_zero() {
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 4), 1e-10), 0);
        assert_eq!(numerical_rank(&DMatrix::<f64>::zeros(3, 0), 1e-10), 0);
    }

    #[test]
    fn pivoting_skips_duplicates() {
        let m = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0]);
        let order: Vec<usize> = (0..4).collect();
        let mut cols = pivoted_columns(&m, 2, &order);
        cols.sort();
        assert!(cols == [0, 2] || cols == [0, 3] || cols == [1, 2] || cols == [1, 3]);
    }

    #[test]
    fn inverse_square_root_of_complex_hermitian() {
        let f = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(2.0, 0.0), C64::new(0.5, 0.5), C64::new(0.5, -0.5), C64::new(1.0, 0.0)],
        );
        let r = inv_sqrt_hermitian(&f, 1e-14);
        let id = &r * &f * &r;
        assert!((id - DMatrix::<C64>::identity(2, 2)).norm() < 1e-13);
    }
}
