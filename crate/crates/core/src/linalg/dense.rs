//! Rank-aware dense least squares built on the in-crate Jacobi SVD.
//!
//! Local DDR closures are small (tens to a few hundred unknowns), and their
//! systems are frequently nearly diagonal with clustered singular values, so
//! robustness matters more than speed here.

use super::jacobi::JacobiSvd;
use nalgebra::{DMatrix, DVector};

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Singular values below `tol * sigma_max` are treated as zero.
pub fn lstsq(a: &DMatrix<f64>, b: &DVector<f64>, tol: f64) -> DVector<f64> {
    JacobiSvd::new(a).solve(b, tol)
}

/// Least squares with multiple right-hand sides (columns of `b`).
pub fn lstsq_cols(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let svd = JacobiSvd::new(a);
    let mut out = DMatrix::zeros(a.ncols(), b.ncols());
    for j in 0..b.ncols() {
        let col = svd.solve(&b.column(j).into_owned(), tol);
        out.set_column(j, &col);
    }
    out
}

/// Numerical rank with relative threshold `tol`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    JacobiSvd::new(a).rank(tol)
}

/// Orthonormal basis of the null space of `a` (columns of the result).
pub fn nullspace(a: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = a.ncols();
    if a.nrows() == 0 {
        return DMatrix::identity(n, n);
    }
    let svd = JacobiSvd::new(a);
    let r = svd.rank(tol);
    svd.v.columns(r, n - r).into_owned()
}

/// Orthonormal basis of the range of `a` (left singular vectors), with the
/// rank determined at the relative threshold `tol`.
pub fn range_basis(a: &DMatrix<f64>, tol: f64) -> (DMatrix<f64>, usize) {
    let svd = JacobiSvd::new(a);
    let r = svd.rank(tol);
    (svd.u.columns(0, r).into_owned(), r)
}

/// Cholesky solve for symmetric positive-definite systems.
pub fn solve_spd(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    a.clone().cholesky().map(|ch| ch.solve(b))
}

/// Eigen-decomposition of a symmetric matrix: `(eigenvalues, eigenvectors)`.
pub fn sym_eigen(a: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let se = a.clone().symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_recovers_exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let x_true = DVector::from_row_slice(&[2.0, -1.0]);
        let b = &a * &x_true;
        let x = lstsq(&a, &b, 1e-12);
        assert!((x - x_true).norm() < 1e-12);
    }

    #[test]
    fn nullspace_of_rank_one() {
        let a = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let ns = nullspace(&a, 1e-12);
        assert_eq!(ns.ncols(), 2);
        for j in 0..2 {
            let v = ns.column(j);
            assert!((v[0] + v[1] + v[2]).abs() < 1e-12);
        }
        // Orthonormality.
        let g = ns.transpose() * &ns;
        assert!((g - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn rank_detects_deficiency() {
        let a = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 6.0, 0.0, 0.0, 1.0]);
        assert_eq!(rank(&a, 1e-12), 2);
    }

    #[test]
    fn random_rectangular_consistency() {
        let mut rng = crate::rng::SplitMix64::new(99);
        for (m, n) in [(6usize, 4usize), (10, 10), (5, 9)] {
            let a = DMatrix::from_fn(m, n, |_, _| rng.next_symmetric());
            let xt = DVector::from_fn(n, |_, _| rng.next_symmetric());
            let b = &a * &xt;
            let x = lstsq(&a, &b, 1e-12);
            assert!((&a * &x - &b).norm() < 1e-11, "{m}x{n}");
        }
    }
}
