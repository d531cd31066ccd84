//! Simplicial LDL^T factorization of sparse symmetric matrices.
//!
//! Up-looking factorization over the elimination tree (the classical `ldl`
//! algorithm), with sign-aware dynamic regularization of near-zero pivots so
//! that quasi-definite KKT matrices factor under any symmetric permutation.
//! Callers recover full accuracy with iterative refinement against the
//! unregularized matrix.

use super::sparse::CscMatrix;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LdlError {
    #[error("matrix must be square, got {0}x{1}")]
    NotSquare(usize, usize),
    #[error("zero pivot at column {0} and no regularization sign provided")]
    ZeroPivot(usize),
}

/// LDL^T factor of a symmetric matrix given by its upper triangle.
pub struct LdlFactor {
    n: usize,
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    /// Number of pivots replaced by the regularization value.
    pub regularized: usize,
}

impl LdlFactor {
    /// Factor `a` (upper triangle, sorted columns, diagonal entries may be
    /// structurally missing). `dsigns[i]` gives the expected pivot sign used
    /// when |pivot| falls below `reg_eps` (replaced by `dsigns[i] * reg_delta`).
    pub fn new(
        a: &CscMatrix,
        dsigns: Option<&[i8]>,
        reg_eps: f64,
        reg_delta: f64,
    ) -> Result<Self, LdlError> {
        if a.nrows != a.ncols {
            return Err(LdlError::NotSquare(a.nrows, a.ncols));
        }
        let n = a.ncols;
        let parent = etree_upper(a);

        // Symbolic pass: count entries per column of L.
        let mut lnz = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        for k in 0..n {
            flag[k] = k;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let mut i = a.rowind[p];
                while i < k && flag[i] != k {
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for i in 0..n {
            lp[i + 1] = lp[i] + lnz[i];
        }
        let nnz = lp[n];
        let mut li = vec![0usize; nnz];
        let mut lx = vec![0f64; nnz];
        let mut d = vec![0f64; n];

        // Numeric pass.
        let mut y = vec![0f64; n];
        let mut pattern = vec![0usize; n];
        let mut lnext = lp.clone();
        let mut flag = vec![usize::MAX; n];
        let mut regularized = 0usize;
        for k in 0..n {
            flag[k] = k;
            let mut top = n;
            let mut dk = 0.0;
            for p in a.colptr[k]..a.colptr[k + 1] {
                let i = a.rowind[p];
                debug_assert!(i <= k, "matrix must be upper triangular");
                if i == k {
                    dk += a.values[p];
                    continue;
                }
                y[i] += a.values[p];
                let mut len = 0usize;
                let mut ii = i;
                while flag[ii] != k {
                    pattern[len] = ii;
                    len += 1;
                    flag[ii] = k;
                    ii = parent[ii];
                }
                // Prepend the path so that `pattern[top..]` stays topological.
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    pattern[top] = pattern[len];
                }
            }
            d[k] = dk;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                for p in lp[i]..lnext[i] {
                    y[li[p]] -= lx[p] * yi;
                }
                let lki = yi / d[i];
                d[k] -= lki * yi;
                li[lnext[i]] = k;
                lx[lnext[i]] = lki;
                lnext[i] += 1;
            }
            if d[k].abs() <= reg_eps {
                match dsigns {
                    Some(signs) => {
                        d[k] = f64::from(signs[k]) * reg_delta;
                        regularized += 1;
                    }
                    None => {
                        if d[k] == 0.0 {
                            return Err(LdlError::ZeroPivot(k));
                        }
                    }
                }
            }
        }

        Ok(Self {
            n,
            lp,
            li,
            lx,
            d,
            regularized,
        })
    }

    /// In-place solve of `L D L^T x = b`.
    pub fn solve_in_place(&self, x: &mut [f64]) {
        for j in 0..self.n {
            let xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                x[self.li[p]] -= self.lx[p] * xj;
            }
        }
        for j in 0..self.n {
            x[j] /= self.d[j];
        }
        for j in (0..self.n).rev() {
            let mut xj = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                xj -= self.lx[p] * x[self.li[p]];
            }
            x[j] = xj;
        }
    }

    pub fn nnz(&self) -> usize {
        self.lx.len()
    }
}

/// Elimination tree of an upper-triangular symmetric matrix.
fn etree_upper(a: &CscMatrix) -> Vec<usize> {
    let n = a.ncols;
    let mut parent = vec![usize::MAX; n];
    let mut ancestor = vec![usize::MAX; n];
    for k in 0..n {
        for p in a.colptr[k]..a.colptr[k + 1] {
            let mut i = a.rowind[p];
            while i != usize::MAX && i < k {
                let inext = ancestor[i];
                ancestor[i] = k;
                if inext == usize::MAX {
                    parent[i] = k;
                }
                i = inext;
            }
        }
    }
    parent
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Triplets;

    fn upper_from_dense(m: &nalgebra::DMatrix<f64>) -> CscMatrix {
        let mut t = Triplets::new(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push(i, j, m[(i, j)]);
                }
            }
        }
        t.to_csc()
    }

    #[test]
    fn factor_solves_spd_system() {
        let n = 12;
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 4.0;
            if i + 1 < n {
                m[(i, i + 1)] = -1.0;
                m[(i + 1, i)] = -1.0;
            }
        }
        let a = upper_from_dense(&m);
        let f = LdlFactor::new(&a, None, 0.0, 0.0).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let xr = nalgebra::DVector::from_vec(x);
        let br = nalgebra::DVector::from_vec(b);
        assert!((m * xr - br).norm() < 1e-12);
    }

    #[test]
    fn factor_solves_indefinite_kkt() {
        // [I B^T; B 0] with B = [1 1].
        let m = nalgebra::DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0],
        );
        let a = upper_from_dense(&m);
        let signs = [1i8, 1, -1];
        let f = LdlFactor::new(&a, Some(&signs), 1e-13, 1e-7).unwrap();
        let b = vec![1.0, 2.0, 1.0];
        let mut x = b.clone();
        f.solve_in_place(&mut x);
        let xr = nalgebra::DVector::from_vec(x);
        let br = nalgebra::DVector::from_vec(b);
        assert!((m * xr - br).norm() < 1e-6);
    }
}
