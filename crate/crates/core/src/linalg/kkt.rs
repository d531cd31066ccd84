//! Equality-constrained least-squares / quadratic minimization via sparse
//! quasi-definite KKT systems.
//!
//! Solves `min 1/2 x^T A x - b^T x  s.t.  B x = c` from the factorization of
//!
//! ```text
//! K = [ A  B^T ]
//!     [ B   0  ]
//! ```
//!
//! with RCM ordering, dynamically regularized LDL^T and iterative refinement
//! against the unregularized matrix. Redundant (consistent) constraint rows
//! are tolerated; the remaining constraint residual after refinement is the
//! feasibility gap and is reported to the caller.

use super::ldl::LdlFactor;
use super::order::reverse_cuthill_mckee;
use super::sparse::{CscMatrix, Triplets};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KktError {
    #[error("objective Gram must be square, got {0}x{1}")]
    BadGram(usize, usize),
    #[error("constraint column count {0} does not match unknown count {1}")]
    BadConstraints(usize, usize),
    #[error(transparent)]
    Factorization(#[from] super::ldl::LdlError),
}

/// Result of one constrained solve.
#[derive(Clone, Debug)]
pub struct KktSolution {
    pub x: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// Euclidean norm of `B x - c` after refinement.
    pub constraint_residual: f64,
    /// Euclidean norm of the full KKT residual after refinement.
    pub kkt_residual: f64,
}

/// Factored KKT system, reusable across right-hand sides.
pub struct ConstrainedLs {
    n: usize,
    m: usize,
    k_upper: CscMatrix,
    constraints: CscMatrix,
    factor: LdlFactor,
    perm: Vec<usize>,
    refine_steps: usize,
}

impl ConstrainedLs {
    /// `a_upper`: upper triangle of the (semi)definite objective Gram;
    /// `constraints`: the m-by-n constraint matrix B.
    pub fn new(a_upper: &CscMatrix, constraints: &CscMatrix) -> Result<Self, KktError> {
        if a_upper.nrows != a_upper.ncols {
            return Err(KktError::BadGram(a_upper.nrows, a_upper.ncols));
        }
        let n = a_upper.ncols;
        let m = constraints.nrows;
        if constraints.ncols != n {
            return Err(KktError::BadConstraints(constraints.ncols, n));
        }

        let mut trip = Triplets::new(n + m, n + m);
        let mut scale = 0.0f64;
        for j in 0..n {
            for (i, v) in a_upper.col(j) {
                debug_assert!(i <= j);
                trip.push(i, j, v);
                scale = scale.max(v.abs());
            }
        }
        // Column n+j of the upper triangle holds row j of B.
        let bt = constraints.transpose();
        for j in 0..m {
            for (i, v) in bt.col(j) {
                trip.push(i, n + j, v);
                scale = scale.max(v.abs());
            }
        }
        if scale == 0.0 {
            scale = 1.0;
        }
        let k_upper = trip.to_csc();

        let perm = reverse_cuthill_mckee(&k_upper);
        let mut iperm = vec![0usize; n + m];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let permuted = k_upper.permute_symmetric_upper(&iperm);
        let mut dsigns = vec![0i8; n + m];
        for old in 0..n + m {
            dsigns[iperm[old]] = if old < n { 1 } else { -1 };
        }
        let factor = LdlFactor::new(&permuted, Some(&dsigns), 1e-13 * scale, 1e-7 * scale)?;

        Ok(Self {
            n,
            m,
            k_upper,
            constraints: constraints.clone(),
            factor,
            perm,
            refine_steps: 12,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.n
    }

    pub fn n_constraints(&self) -> usize {
        self.m
    }

    fn raw_solve(&self, rhs: &[f64], out: &mut [f64]) {
        let nm = self.n + self.m;
        let mut work = vec![0.0; nm];
        for new in 0..nm {
            work[new] = rhs[self.perm[new]];
        }
        self.factor.solve_in_place(&mut work);
        for new in 0..nm {
            out[self.perm[new]] = work[new];
        }
    }

    /// Solve for the given objective gradient `b` and constraint values `c`.
    pub fn solve(&self, obj_rhs: &[f64], con_rhs: &[f64]) -> KktSolution {
        assert_eq!(obj_rhs.len(), self.n);
        assert_eq!(con_rhs.len(), self.m);
        let nm = self.n + self.m;
        let mut rhs = vec![0.0; nm];
        rhs[..self.n].copy_from_slice(obj_rhs);
        rhs[self.n..].copy_from_slice(con_rhs);
        let rhs_norm = norm(&rhs).max(1.0);

        let mut x = vec![0.0; nm];
        self.raw_solve(&rhs, &mut x);

        let mut best = x.clone();
        let mut best_res = f64::INFINITY;
        let mut r = vec![0.0; nm];
        let mut dx = vec![0.0; nm];
        for _ in 0..self.refine_steps {
            self.k_upper.sym_matvec(&x, &mut r);
            for i in 0..nm {
                r[i] = rhs[i] - r[i];
            }
            let res = norm(&r);
            if res < best_res {
                best_res = res;
                best.copy_from_slice(&x);
            }
            if res <= 1e-15 * rhs_norm {
                break;
            }
            self.raw_solve(&r, &mut dx);
            for i in 0..nm {
                x[i] += dx[i];
            }
        }
        self.k_upper.sym_matvec(&x, &mut r);
        for i in 0..nm {
            r[i] = rhs[i] - r[i];
        }
        if norm(&r) < best_res {
            best.copy_from_slice(&x);
        }

        let sol = best[..self.n].to_vec();
        let multipliers = best[self.n..].to_vec();
        let mut bx = vec![0.0; self.m];
        self.constraints.matvec_acc(&sol, &mut bx, 1.0);
        let mut con_res = 0.0f64;
        for i in 0..self.m {
            con_res += (bx[i] - con_rhs[i]).powi(2);
        }
        self.k_upper.sym_matvec(&best, &mut r);
        for i in 0..nm {
            r[i] = rhs[i] - r[i];
        }
        KktSolution {
            x: sol,
            multipliers,
            constraint_residual: con_res.sqrt(),
            kkt_residual: norm(&r),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// General symmetric (possibly nested-saddle) system given by its upper
/// triangle and per-row expected pivot signs, solved by the same regularized
/// LDL^T + refinement machinery as [`ConstrainedLs`].
pub struct SymSaddle {
    k_upper: CscMatrix,
    factor: LdlFactor,
    perm: Vec<usize>,
    refine_steps: usize,
}

impl SymSaddle {
    pub fn new(k_upper: &CscMatrix, dsigns: &[i8]) -> Result<Self, KktError> {
        let n = k_upper.ncols;
        assert_eq!(dsigns.len(), n);
        let scale = k_upper
            .values
            .iter()
            .fold(0.0f64, |a, &v| a.max(v.abs()))
            .max(1.0);
        let perm = reverse_cuthill_mckee(k_upper);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        let permuted = k_upper.permute_symmetric_upper(&iperm);
        let mut signs = vec![0i8; n];
        for old in 0..n {
            signs[iperm[old]] = dsigns[old];
        }
        let factor = LdlFactor::new(&permuted, Some(&signs), 1e-13 * scale, 1e-7 * scale)?;
        Ok(Self {
            k_upper: k_upper.clone(),
            factor,
            perm,
            refine_steps: 12,
        })
    }

    fn raw_solve(&self, rhs: &[f64], out: &mut [f64]) {
        let n = self.k_upper.ncols;
        let mut work = vec![0.0; n];
        for new in 0..n {
            work[new] = rhs[self.perm[new]];
        }
        self.factor.solve_in_place(&mut work);
        for new in 0..n {
            out[self.perm[new]] = work[new];
        }
    }

    /// Solve with iterative refinement; returns (solution, final residual).
    pub fn solve(&self, rhs: &[f64]) -> (Vec<f64>, f64) {
        let n = self.k_upper.ncols;
        let rhs_norm = norm(rhs).max(1.0);
        let mut x = vec![0.0; n];
        self.raw_solve(rhs, &mut x);
        let mut best = x.clone();
        let mut best_res = f64::INFINITY;
        let mut r = vec![0.0; n];
        let mut dx = vec![0.0; n];
        for _ in 0..self.refine_steps {
            self.k_upper.sym_matvec(&x, &mut r);
            for i in 0..n {
                r[i] = rhs[i] - r[i];
            }
            let res = norm(&r);
            if res < best_res {
                best_res = res;
                best.copy_from_slice(&x);
            }
            if res <= 1e-15 * rhs_norm {
                break;
            }
            self.raw_solve(&r, &mut dx);
            for i in 0..n {
                x[i] += dx[i];
            }
        }
        self.k_upper.sym_matvec(&x, &mut r);
        for i in 0..n {
            r[i] = rhs[i] - r[i];
        }
        if norm(&r) < best_res {
            best_res = norm(&r);
            best.copy_from_slice(&x);
        }
        (best, best_res)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_upper(n: usize) -> CscMatrix {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 1.0);
        }
        t.to_csc()
    }

    #[test]
    fn projects_onto_constraint_plane() {
        // min ||x - x0||^2 s.t. x1 + x2 + x3 = 3 -> x = x0 + (3 - sum)/3.
        let a = identity_upper(3);
        let mut bt = Triplets::new(1, 3);
        for j in 0..3 {
            bt.push(0, j, 1.0);
        }
        let ls = ConstrainedLs::new(&a, &bt.to_csc()).unwrap();
        let sol = ls.solve(&[1.0, 0.0, -1.0], &[3.0]);
        for (xi, want) in sol.x.iter().zip([2.0, 1.0, 0.0]) {
            assert!((xi - want).abs() < 1e-12, "{} vs {}", xi, want);
        }
        assert!(sol.constraint_residual < 1e-12);
    }

    #[test]
    fn tolerates_redundant_consistent_rows() {
        let a = identity_upper(2);
        let mut bt = Triplets::new(2, 2);
        bt.push(0, 0, 1.0);
        bt.push(0, 1, 1.0);
        bt.push(1, 0, 2.0);
        bt.push(1, 1, 2.0);
        let ls = ConstrainedLs::new(&a, &bt.to_csc()).unwrap();
        let sol = ls.solve(&[0.0, 0.0], &[1.0, 2.0]);
        assert!(sol.constraint_residual < 1e-10, "{}", sol.constraint_residual);
        assert!((sol.x[0] - 0.5).abs() < 1e-10);
        assert!((sol.x[1] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn reports_infeasibility_gap() {
        let a = identity_upper(2);
        let mut bt = Triplets::new(2, 2);
        bt.push(0, 0, 1.0);
        bt.push(0, 1, 1.0);
        bt.push(1, 0, 1.0);
        bt.push(1, 1, 1.0);
        let ls = ConstrainedLs::new(&a, &bt.to_csc()).unwrap();
        // Inconsistent: x0+x1 = 0 and x0+x1 = 2 cannot both hold.
        let sol = ls.solve(&[0.0, 0.0], &[0.0, 2.0]);
        assert!(sol.constraint_residual > 0.5);
    }
}
