//! Compressed sparse column matrices with just the operations the KKT solver
//! and operator assembly need.

/// Triplet accumulator.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub nrows: usize,
    pub ncols: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            rows: Vec::new(),
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn push(&mut self, r: usize, c: usize, v: f64) {
        debug_assert!(r < self.nrows && c < self.ncols);
        if v != 0.0 {
            self.rows.push(r);
            self.cols.push(c);
            self.vals.push(v);
        }
    }

    pub fn to_csc(&self) -> CscMatrix {
        CscMatrix::from_triplets(self.nrows, self.ncols, &self.rows, &self.cols, &self.vals)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows.len()).map(|i| (self.rows[i], self.cols[i], self.vals[i]))
    }
}

/// CSC sparse matrix (duplicates summed on construction).
#[derive(Clone, Debug)]
pub struct CscMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub colptr: Vec<usize>,
    pub rowind: Vec<usize>,
    pub values: Vec<f64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        rows: &[usize],
        cols: &[usize],
        vals: &[f64],
    ) -> Self {
        let mut count = vec![0usize; ncols + 1];
        for &c in cols {
            count[c + 1] += 1;
        }
        for j in 0..ncols {
            count[j + 1] += count[j];
        }
        let mut rowind = vec![0usize; rows.len()];
        let mut values = vec![0f64; rows.len()];
        let mut next = count.clone();
        for i in 0..rows.len() {
            let p = next[cols[i]];
            rowind[p] = rows[i];
            values[p] = vals[i];
            next[cols[i]] += 1;
        }
        // Sort rows within each column and merge duplicates.
        let mut out = CscMatrix {
            nrows,
            ncols,
            colptr: vec![0; ncols + 1],
            rowind: Vec::with_capacity(rows.len()),
            values: Vec::with_capacity(rows.len()),
        };
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for j in 0..ncols {
            scratch.clear();
            for p in count[j]..count[j + 1] {
                scratch.push((rowind[p], values[p]));
            }
            scratch.sort_unstable_by_key(|&(r, _)| r);
            let mut i = 0;
            while i < scratch.len() {
                let r = scratch[i].0;
                let mut v = 0.0;
                while i < scratch.len() && scratch[i].0 == r {
                    v += scratch[i].1;
                    i += 1;
                }
                if v != 0.0 {
                    out.rowind.push(r);
                    out.values.push(v);
                }
            }
            out.colptr[j + 1] = out.rowind.len();
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.rowind.len()
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.colptr[j]..self.colptr[j + 1]).map(move |p| (self.rowind[p], self.values[p]))
    }

    /// y += a * A x
    pub fn matvec_acc(&self, x: &[f64], y: &mut [f64], a: f64) {
        for j in 0..self.ncols {
            let xj = a * x[j];
            if xj != 0.0 {
                for p in self.colptr[j]..self.colptr[j + 1] {
                    y[self.rowind[p]] += self.values[p] * xj;
                }
            }
        }
    }

    /// y += a * A^T x
    pub fn tr_matvec_acc(&self, x: &[f64], y: &mut [f64], a: f64) {
        for j in 0..self.ncols {
            let mut s = 0.0;
            for p in self.colptr[j]..self.colptr[j + 1] {
                s += self.values[p] * x[self.rowind[p]];
            }
            y[j] += a * s;
        }
    }

    /// Symmetric matvec for a matrix stored as its upper triangle.
    pub fn sym_matvec(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                let v = self.values[p];
                y[i] += v * x[j];
                if i != j {
                    y[j] += v * x[i];
                }
            }
        }
    }

    pub fn transpose(&self) -> CscMatrix {
        let mut rows = Vec::with_capacity(self.nnz());
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                rows.push(j);
                cols.push(self.rowind[p]);
                vals.push(self.values[p]);
            }
        }
        CscMatrix::from_triplets(self.ncols, self.nrows, &rows, &cols, &vals)
    }

    /// Symmetric permutation `B = P A P^T` of an upper-triangular symmetric
    /// matrix, keeping the result upper triangular. `perm[new] = old`.
    pub fn permute_symmetric_upper(&self, iperm: &[usize]) -> CscMatrix {
        let n = self.ncols;
        let mut rows = Vec::with_capacity(self.nnz());
        let mut cols = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        for j in 0..n {
            for p in self.colptr[j]..self.colptr[j + 1] {
                let i = self.rowind[p];
                let (mut ni, mut nj) = (iperm[i], iperm[j]);
                if ni > nj {
                    std::mem::swap(&mut ni, &mut nj);
                }
                rows.push(ni);
                cols.push(nj);
                vals.push(self.values[p]);
            }
        }
        CscMatrix::from_triplets(n, n, &rows, &cols, &vals)
    }

    /// Write in coordinate (triplet) text form: `row col value` per line,
    /// 1-based indices, preceded by a `nrows ncols nnz` header line.
    pub fn write_coordinate(&self, w: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(w, "{} {} {}", self.nrows, self.ncols, self.nnz())?;
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                writeln!(w, "{} {} {:.17e}", self.rowind[p] + 1, j + 1, self.values[p])?;
            }
        }
        Ok(())
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.nrows, self.ncols);
        for j in 0..self.ncols {
            for p in self.colptr[j]..self.colptr[j + 1] {
                m[(self.rowind[p], j)] += self.values[p];
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_merge_duplicates() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 1, 5.0);
        let a = t.to_csc();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.to_dense()[(0, 0)], 3.0);
    }

    #[test]
    fn matvec_matches_dense() {
        let mut t = Triplets::new(3, 2);
        t.push(0, 0, 1.0);
        t.push(2, 0, -2.0);
        t.push(1, 1, 4.0);
        let a = t.to_csc();
        let x = [1.0, 0.5];
        let mut y = [0.0; 3];
        a.matvec_acc(&x, &mut y, 1.0);
        assert_eq!(y, [1.0, 2.0, -2.0]);
        let mut z = [0.0; 2];
        a.tr_matvec_acc(&[1.0, 1.0, 1.0], &mut z, 1.0);
        assert_eq!(z, [-1.0, 4.0]);
    }
}
