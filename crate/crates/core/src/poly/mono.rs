//! Scaled-monomial index sets in entity frame coordinates, with evaluation
//! and exact differentiation maps.

use nalgebra::DMatrix;

/// Multi-index exponents; unused coordinates stay zero for dim < 3.
pub type Mono = [usize; 3];

/// Graded monomial set for frame dimension `dim` (1, 2 or 3) up to `degree`.
#[derive(Clone, Debug)]
pub struct MonoSet {
    pub dim: usize,
    pub degree: i64,
    pub exps: Vec<Mono>,
}

/// Monomial exponents up to `degree`, graded (total degree ascending), then
/// lexicographic. The order is a stable contract: coefficients of lower-degree
/// spaces are prefixes of higher-degree ones.
pub fn mono_indices(dim: usize, degree: i64) -> Vec<Mono> {
    let mut out = Vec::new();
    if degree < 0 {
        return out;
    }
    let degree = degree as usize;
    for total in 0..=degree {
        match dim {
            1 => out.push([total, 0, 0]),
            2 => {
                for a in (0..=total).rev() {
                    out.push([a, total - a, 0]);
                }
            }
            3 => {
                for a in (0..=total).rev() {
                    for b in (0..=total - a).rev() {
                        out.push([a, b, total - a - b]);
                    }
                }
            }
            _ => unreachable!("frame dimension must be 1..=3"),
        }
    }
    out
}

impl MonoSet {
    pub fn new(dim: usize, degree: i64) -> Self {
        Self {
            dim,
            degree,
            exps: mono_indices(dim, degree),
        }
    }

    pub fn len(&self) -> usize {
        self.exps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exps.is_empty()
    }

    /// Values of all monomials at frame coordinates `coords` (rows: monomial,
    /// columns: point).
    pub fn eval(&self, coords: &[[f64; 3]]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.exps.len(), coords.len());
        for (j, c) in coords.iter().enumerate() {
            for (i, e) in self.exps.iter().enumerate() {
                m[(i, j)] = c[0].powi(e[0] as i32) * c[1].powi(e[1] as i32)
                    * c[2].powi(e[2] as i32);
            }
        }
        m
    }

    /// Coefficient map of d/d(frame axis) : P^degree -> P^{degree-1}, in this
    /// set's own index order (output uses the same set; entries above the
    /// reduced degree are structurally zero).
    pub fn derivative(&self, axis: usize) -> DMatrix<f64> {
        let n = self.exps.len();
        let mut d = DMatrix::zeros(n, n);
        let index_of = |e: &Mono| self.exps.iter().position(|x| x == e);
        for (i, e) in self.exps.iter().enumerate() {
            if e[axis] == 0 {
                continue;
            }
            let mut out = *e;
            out[axis] -= 1;
            let j = index_of(&out).expect("derivative stays in the set");
            d[(j, i)] = e[axis] as f64;
        }
        d
    }

    /// Coefficient map of multiplication by the frame coordinate `axis`
    /// (degree must allow the product; entries that would exceed `degree` are
    /// dropped, so use on inputs of degree < self.degree).
    pub fn multiply_coord(&self, axis: usize) -> DMatrix<f64> {
        let n = self.exps.len();
        let mut m = DMatrix::zeros(n, n);
        let index_of = |e: &Mono| self.exps.iter().position(|x| x == e);
        for (i, e) in self.exps.iter().enumerate() {
            let mut out = *e;
            out[axis] += 1;
            if let Some(j) = index_of(&out) {
                m[(j, i)] = 1.0;
            }
        }
        m
    }

    /// Total degree of each monomial.
    pub fn degrees(&self) -> Vec<usize> {
        self.exps.iter().map(|e| e[0] + e[1] + e[2]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_match_dimension_formulas() {
        assert_eq!(mono_indices(1, 3).len(), 4);
        assert_eq!(mono_indices(2, 3).len(), 10);
        assert_eq!(mono_indices(3, 3).len(), 20);
        assert!(mono_indices(3, -1).is_empty());
    }

    #[test]
    fn derivative_is_exact() {
        let s = MonoSet::new(2, 3);
        let d0 = s.derivative(0);
        // d/dx of x^2 y = 2 x y.
        let i_x2y = s.exps.iter().position(|e| *e == [2, 1, 0]).unwrap();
        let i_xy = s.exps.iter().position(|e| *e == [1, 1, 0]).unwrap();
        let mut coef = nalgebra::DVector::zeros(s.len());
        coef[i_x2y] = 1.0;
        let dc = &d0 * coef;
        assert_eq!(dc[i_xy], 2.0);
        assert_eq!(dc.iter().filter(|&&v| v != 0.0).count(), 1);
    }
}
