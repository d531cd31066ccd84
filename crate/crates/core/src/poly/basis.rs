//! Orthonormal scalar bases and coefficient-level vector spaces.

use super::mono::MonoSet;
use super::PolyError;
use nalgebra::{DMatrix, DVector};

/// L2-orthonormal scalar polynomial basis on one entity, expressed over
/// scaled, centered frame monomials. The coefficient matrix is lower
/// triangular in the graded monomial order, so the first `dim P^m` functions
/// span `P^m` for every `m <= degree`.
#[derive(Clone, Debug)]
pub struct ScalarBasis {
    pub monos: MonoSet,
    /// Entity diameter (the monomial scaling already uses it; kept for
    /// building physical derivatives).
    pub scale: f64,
    /// onb_i = sum_j coef[(i, j)] mono_j.
    pub coef: DMatrix<f64>,
    /// Transpose-inverse of `coef`, mapping monomial coefficients to ONB
    /// coefficients.
    inv_t: DMatrix<f64>,
    /// Physical-units derivative maps on ONB coefficients, one per frame axis.
    deriv: Vec<DMatrix<f64>>,
}

impl ScalarBasis {
    /// Build from frame coordinates and weights of a quadrature rule exact to
    /// (at least) twice `degree`.
    pub fn build(
        dim: usize,
        degree: i64,
        scale: f64,
        frame_coords: &[[f64; 3]],
        weights: &[f64],
    ) -> Result<Self, PolyError> {
        let monos = MonoSet::new(dim, degree);
        let n = monos.len();
        let vals = monos.eval(frame_coords);
        let mut gram = DMatrix::zeros(n, n);
        for q in 0..weights.len() {
            for i in 0..n {
                let wv = weights[q] * vals[(i, q)];
                for j in 0..=i {
                    gram[(i, j)] += wv * vals[(j, q)];
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                gram[(i, j)] = gram[(j, i)];
            }
        }
        let chol1 = gram
            .clone()
            .cholesky()
            .ok_or(PolyError::GramNotSpd("scalar basis"))?;
        let mut coef = chol1
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular solve");
        // Second pass to wash out the conditioning of the monomial Gram.
        let gram2: DMatrix<f64> = &coef * &gram * coef.transpose();
        let chol2 = gram2
            .cholesky()
            .ok_or(PolyError::GramNotSpd("scalar basis (pass 2)"))?;
        let fix = chol2
            .l()
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .expect("triangular solve");
        coef = fix * coef;

        let inv_t = coef
            .transpose()
            .try_inverse()
            .ok_or(PolyError::GramNotSpd("scalar basis inverse"))?;
        let mut deriv = Vec::with_capacity(dim);
        for axis in 0..dim {
            let d_mono = monos.derivative(axis);
            // ONB -> mono -> differentiate (frame units) -> ONB, then divide
            // by the scale to get physical units.
            let m = (&inv_t * d_mono * coef.transpose()) / scale;
            deriv.push(m);
        }
        Ok(Self {
            monos,
            scale,
            coef,
            inv_t,
            deriv,
        })
    }

    pub fn dim_total(&self) -> usize {
        self.monos.len()
    }

    /// Values of the ONB functions at the given frame coordinates
    /// (rows: function, cols: point).
    pub fn eval_frame(&self, frame_coords: &[[f64; 3]]) -> DMatrix<f64> {
        &self.coef * self.monos.eval(frame_coords)
    }

    /// Physical-units derivative map along a frame axis, acting on ONB
    /// coefficient vectors.
    pub fn deriv(&self, axis: usize) -> &DMatrix<f64> {
        &self.deriv[axis]
    }

    /// Convert monomial coefficients to ONB coefficients.
    pub fn from_mono(&self, a: &DVector<f64>) -> DVector<f64> {
        &self.inv_t * a
    }

    /// Coefficient map of multiplication by a frame coordinate, on ONB
    /// coefficients (valid on inputs of degree < self.degree).
    pub fn mult_coord(&self, axis: usize) -> DMatrix<f64> {
        &self.inv_t * self.monos.multiply_coord(axis) * self.coef.transpose()
    }
}

/// A subspace of component-wise scalar-ONB vector polynomials. Columns of
/// `coef` are the basis functions; the row layout is `comp * nscalar + i`.
/// Columns are orthonormal, so L2 products are Euclidean products of columns.
#[derive(Clone, Debug)]
pub struct VecBasis {
    pub ncomp: usize,
    pub nscalar: usize,
    pub coef: DMatrix<f64>,
}

impl VecBasis {
    pub fn dim(&self) -> usize {
        self.coef.ncols()
    }

    /// Full P^deg vector space (identity columns on the scalar prefix).
    pub fn full(sb: &ScalarBasis, deg: i64, ncomp: usize) -> Self {
        let nsc = prefix_dim(sb, deg);
        let n = sb.dim_total();
        let mut coef = DMatrix::zeros(ncomp * n, ncomp * nsc);
        for c in 0..ncomp {
            for i in 0..nsc {
                coef[(c * n + i, c * nsc + i)] = 1.0;
            }
        }
        Self {
            ncomp,
            nscalar: n,
            coef,
        }
    }

    /// Orthonormalize a span given by columns; checks the rank against the
    /// expected dimension.
    pub fn from_span(
        name: &'static str,
        ncomp: usize,
        nscalar: usize,
        span: DMatrix<f64>,
        expected_dim: usize,
    ) -> Result<Self, PolyError> {
        if expected_dim == 0 || span.ncols() == 0 {
            return Ok(Self {
                ncomp,
                nscalar,
                coef: DMatrix::zeros(ncomp * nscalar, 0),
            });
        }
        let svd = crate::linalg::JacobiSvd::new(&span);
        let rank = svd.rank(1e-10);
        if rank != expected_dim {
            return Err(PolyError::RankDeficient(name, rank, expected_dim));
        }
        let coef = svd.u.columns(0, expected_dim).into_owned();
        Ok(Self {
            ncomp,
            nscalar,
            coef,
        })
    }

    /// Apply this basis to a coefficient vector: returns component-wise ONB
    /// coefficients (length ncomp * nscalar).
    pub fn expand(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.coef * x
    }

    /// L2 projection of component-wise ONB coefficients onto this subspace.
    pub fn project_from_components(&self, full: &DVector<f64>) -> DVector<f64> {
        self.coef.transpose() * full
    }
}

/// Number of ONB functions of degree <= deg.
pub fn prefix_dim(sb: &ScalarBasis, deg: i64) -> usize {
    if deg < 0 {
        return 0;
    }
    match sb.monos.dim {
        1 => super::dim_p1(deg.min(sb.monos.degree)),
        2 => super::dim_p2(deg.min(sb.monos.degree)),
        3 => super::dim_p3(deg.min(sb.monos.degree)),
        _ => unreachable!(),
    }
}

/// Trimmed space on an entity: RT^l = P^{l-1}^d + x~ P^{l-1}, NE^l =
/// P^{l-1}^3 + x~ x P^{l-1} (cells only). `sb` must extend to degree >= l.
pub fn trimmed_space(
    family: super::Family,
    l: i64,
    sb: &ScalarBasis,
) -> Result<VecBasis, PolyError> {
    let ncomp = match sb.monos.dim {
        2 => 2,
        3 => 3,
        _ => panic!("trimmed spaces live on faces and cells"),
    };
    let n = sb.dim_total();
    if l <= 0 {
        return Ok(VecBasis {
            ncomp,
            nscalar: n,
            coef: DMatrix::zeros(ncomp * n, 0),
        });
    }
    let nfull = prefix_dim(sb, l - 1);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    // P^{l-1} component block.
    for c in 0..ncomp {
        for i in 0..nfull {
            let mut v = DVector::zeros(ncomp * n);
            v[c * n + i] = 1.0;
            cols.push(v);
        }
    }
    // Koszul block from homogeneous degree l-1 monomials.
    let degs = sb.monos.degrees();
    let homog: Vec<usize> = (0..n).filter(|&j| degs[j] == (l - 1) as usize).collect();
    let (expected, name) = match (family, ncomp) {
        (super::Family::Rt, 2) => (super::dim_rt_face(l), "RT face basis"),
        (super::Family::Rt, 3) => (super::dim_rt_cell(l), "RT cell basis"),
        (super::Family::Ne, 3) => (super::dim_ne_cell(l), "NE cell basis"),
        _ => panic!("unsupported trimmed family"),
    };
    for &j in &homog {
        // Monomial coefficient vector of mono_j.
        let mut mono = DVector::zeros(n);
        mono[j] = 1.0;
        match family {
            super::Family::Rt => {
                // x~ m: component c gets coord_c * m.
                let mut v = DVector::zeros(ncomp * n);
                for c in 0..ncomp {
                    let prod = sb.monos.multiply_coord(c) * &mono;
                    let onb = sb.from_mono(&prod);
                    for i in 0..n {
                        v[c * n + i] += onb[i];
                    }
                }
                cols.push(v);
            }
            super::Family::Ne => {
                // x~ x (e_c m) for each axis c; skip linearly dependent by QR.
                for c in 0..ncomp {
                    let mut v = DVector::zeros(ncomp * n);
                    // (X,Y,Z) x e_c components.
                    let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                    // x~ x e_c = coord_{c2} e_{c1} - coord_{c1} e_{c2}
                    // (cyclic: e.g. c = x: (0, Z, -Y)).
                    let p1 = sb.from_mono(&(sb.monos.multiply_coord(c2) * &mono));
                    let p2 = sb.from_mono(&(sb.monos.multiply_coord(c1) * &mono));
                    for i in 0..n {
                        v[c1 * n + i] += p1[i];
                        v[c2 * n + i] -= p2[i];
                    }
                    cols.push(v);
                }
            }
            super::Family::PScalar | super::Family::PVector => unreachable!(),
        }
    }
    let mut span = DMatrix::zeros(ncomp * n, cols.len());
    for (j, cvec) in cols.iter().enumerate() {
        span.set_column(j, cvec);
    }
    VecBasis::from_span(name, ncomp, n, span, expected)
}

/// Direct-sum blocks of a Koszul-type decomposition of P^k vector fields.
#[derive(Clone, Debug)]
pub struct KoszulBlocks {
    /// Range of the differential (rot/curl/grad image block).
    pub range: VecBasis,
    /// Koszul complement block.
    pub complement: VecBasis,
}

/// Which decomposition of P^k vector polynomials to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitKind {
    /// P^k(F)^2 = rot P^{k+1}(F) + x~ P^{k-1}(F).
    FaceRot,
    /// P^k(T)^3 = curl NE^{k+1}(T) + x~ P^{k-1}(T).
    CellCurl,
    /// P^k(T)^3 = grad P^{k+1}(T) + x~ x P^{k-1}(T)^3.
    CellGrad,
}

/// Build the requested split; asserts the dimension bookkeeping and the
/// L2-independence of the two blocks.
pub fn koszul_split(kind: SplitKind, k: i64, sb: &ScalarBasis) -> Result<KoszulBlocks, PolyError> {
    let n = sb.dim_total();
    let (range, complement, total): (VecBasis, VecBasis, usize) = match kind {
        SplitKind::FaceRot => {
            let nk1 = prefix_dim(sb, k + 1);
            let mut cols = Vec::new();
            for i in 1..nk1 {
                // rot r = (d_eta r, -d_xi r) up to the physical 1/h factor.
                let mut r = DVector::zeros(n);
                r[i] = 1.0;
                let dxi = sb.deriv(0) * &r;
                let deta = sb.deriv(1) * &r;
                let mut v = DVector::zeros(2 * n);
                for j in 0..n {
                    v[j] = deta[j];
                    v[n + j] = -dxi[j];
                }
                cols.push(v);
            }
            let range = VecBasis::from_span(
                "rot P^{k+1}(F)",
                2,
                n,
                cols_to_mat(2 * n, &cols),
                super::dim_p2(k + 1) - 1,
            )?;
            let comp = koszul_vector_block(sb, k - 1, 2)?;
            let total = 2 * super::dim_p2(k);
            (range, comp, total)
        }
        SplitKind::CellCurl => {
            let ne = trimmed_space(super::Family::Ne, k + 1, sb)?;
            let mut cols = Vec::new();
            for j in 0..ne.dim() {
                let comps = ne.coef.column(j).into_owned();
                let c = super::diff::curl_3d(sb, &comps);
                cols.push(c);
            }
            let expected = super::dim_ne_cell(k + 1) - (super::dim_p3(k + 1) - 1);
            let range =
                VecBasis::from_span("curl NE^{k+1}(T)", 3, n, cols_to_mat(3 * n, &cols), expected)?;
            let comp = koszul_vector_block(sb, k - 1, 3)?;
            let total = 3 * super::dim_p3(k);
            (range, comp, total)
        }
        SplitKind::CellGrad => {
            let nk1 = prefix_dim(sb, k + 1);
            let mut cols = Vec::new();
            for i in 1..nk1 {
                let mut r = DVector::zeros(n);
                r[i] = 1.0;
                cols.push(super::diff::gradient(sb, &r, 3));
            }
            let range = VecBasis::from_span(
                "grad P^{k+1}(T)",
                3,
                n,
                cols_to_mat(3 * n, &cols),
                super::dim_p3(k + 1) - 1,
            )?;
            // x~ x P^{k-1}(T)^3.
            let nsc = prefix_dim(sb, k - 1);
            let mut cols = Vec::new();
            for c in 0..3usize {
                for i in 0..nsc {
                    let mut mono_onb = DVector::zeros(n);
                    mono_onb[i] = 1.0;
                    let (c1, c2) = ((c + 1) % 3, (c + 2) % 3);
                    let p1 = sb.mult_coord(c2) * &mono_onb;
                    let p2 = sb.mult_coord(c1) * &mono_onb;
                    let mut v = DVector::zeros(3 * n);
                    for j in 0..n {
                        v[c1 * n + j] += p1[j];
                        v[c2 * n + j] -= p2[j];
                    }
                    cols.push(v);
                }
            }
            let expected = 3 * super::dim_p3(k) - (super::dim_p3(k + 1) - 1);
            let comp = VecBasis::from_span(
                "x~ x P^{k-1}(T)^3",
                3,
                n,
                cols_to_mat(3 * n, &cols),
                expected,
            )?;
            let total = 3 * super::dim_p3(k);
            (range, comp, total)
        }
    };

    // Bookkeeping: blocks must sum to the full space and be jointly
    // independent.
    if range.dim() + complement.dim() != total {
        return Err(PolyError::RankDeficient(
            "koszul split dimension bookkeeping",
            range.dim() + complement.dim(),
            total,
        ));
    }
    let joint = {
        let mut m = DMatrix::zeros(range.coef.nrows(), total);
        m.columns_mut(0, range.dim()).copy_from(&range.coef);
        m.columns_mut(range.dim(), complement.dim())
            .copy_from(&complement.coef);
        m
    };
    let rank = crate::linalg::rank(&joint, 1e-10);
    if rank != total {
        return Err(PolyError::RankDeficient("koszul split joint rank", rank, total));
    }
    Ok(KoszulBlocks { range, complement })
}

/// x~ P^{deg} block (vector fields x~ p with scalar p).
fn koszul_vector_block(sb: &ScalarBasis, deg: i64, ncomp: usize) -> Result<VecBasis, PolyError> {
    let n = sb.dim_total();
    let nsc = prefix_dim(sb, deg);
    let mut cols = Vec::new();
    for i in 0..nsc {
        let mut p = DVector::zeros(n);
        p[i] = 1.0;
        let mut v = DVector::zeros(ncomp * n);
        for c in 0..ncomp {
            let prod = sb.mult_coord(c) * &p;
            for j in 0..n {
                v[c * n + j] += prod[j];
            }
        }
        cols.push(v);
    }
    VecBasis::from_span("x~ P^{k-1}", ncomp, n, cols_to_mat(ncomp * n, &cols), nsc)
}

fn cols_to_mat(nrows: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nrows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}
