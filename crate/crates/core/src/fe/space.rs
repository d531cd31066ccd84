//! Broken bases, conformity constraints and exact elementwise differentials.

use super::FeError;
use crate::linalg::{CscMatrix, Triplets};
use crate::mesh::PolytopalMesh;
use crate::poly::{self, trimmed_space, BasisCache, Family, VecBasis};
use crate::{Pt3, Vec3};
use nalgebra::{DMatrix, DVector};
use std::cell::OnceCell;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeFamily {
    Lagrange,
    Nedelec,
    RaviartThomas,
    /// Discontinuous scalar P^l (the right end of the FE sequence).
    BrokenScalar,
}

impl FeFamily {
    /// Family of the image of the differential.
    pub fn next(&self) -> Option<FeFamily> {
        match self {
            FeFamily::Lagrange => Some(FeFamily::Nedelec),
            FeFamily::Nedelec => Some(FeFamily::RaviartThomas),
            FeFamily::RaviartThomas => Some(FeFamily::BrokenScalar),
            FeFamily::BrokenScalar => None,
        }
    }

    pub fn is_vector(&self) -> bool {
        matches!(self, FeFamily::Nedelec | FeFamily::RaviartThomas)
    }
}

/// Per-simplex representation of the broken space.
pub enum SimplexBasis {
    /// Scalar ONB prefix of the simplex basis.
    Scalar(usize),
    /// Orthonormal trimmed vector basis.
    Vector(VecBasis),
}

impl SimplexBasis {
    pub fn dim(&self) -> usize {
        match self {
            SimplexBasis::Scalar(n) => *n,
            SimplexBasis::Vector(vb) => vb.dim(),
        }
    }
}

/// A conforming FE space as broken basis plus constraint system.
pub struct ConformingSpace<'m> {
    pub mesh: &'m PolytopalMesh,
    pub cache: &'m BasisCache,
    pub family: FeFamily,
    pub degree: i64,
    /// Homogeneous essential conditions on the gamma faces.
    pub with_gamma_bc: bool,
    pub bases: Vec<SimplexBasis>,
    /// Uniform per-simplex dimension.
    pub per_simplex: usize,
    /// Conformity (and gamma trace) constraint rows over the broken dofs.
    pub constraints: CscMatrix,
    rank: OnceCell<usize>,
}

impl<'m> ConformingSpace<'m> {
    /// Assemble the broken basis and the trace-jump moment constraints.
    pub fn build(
        mesh: &'m PolytopalMesh,
        cache: &'m BasisCache,
        family: FeFamily,
        degree: i64,
        with_gamma_bc: bool,
    ) -> Result<Self, FeError> {
        if degree < 1 && family != FeFamily::BrokenScalar {
            return Err(FeError::DegreeTooSmall(degree, family));
        }
        if cache.spec.simplex_deg < degree {
            return Err(FeError::CacheTooSmall {
                have: cache.spec.simplex_deg,
                need: degree,
            });
        }
        let n_s = mesh.submesh.simplices.len();
        let mut bases = Vec::with_capacity(n_s);
        for s in 0..n_s {
            let sb = &cache.simplices[s].onb;
            let basis = match family {
                FeFamily::Lagrange | FeFamily::BrokenScalar => {
                    SimplexBasis::Scalar(poly::dim_p3(degree))
                }
                FeFamily::Nedelec => SimplexBasis::Vector(trimmed_space(Family::Ne, degree, sb)?),
                FeFamily::RaviartThomas => {
                    SimplexBasis::Vector(trimmed_space(Family::Rt, degree, sb)?)
                }
            };
            bases.push(basis);
        }
        let per_simplex = bases[0].dim();

        let mut trip = Triplets::new(0, per_simplex * n_s);
        let mut row = 0usize;
        if family != FeFamily::BrokenScalar {
            for (sf_id, sf) in mesh.submesh.subfaces.iter().enumerate() {
                let interior = sf.simplices.len() == 2;
                let on_gamma = !interior
                    && with_gamma_bc
                    && sf.parent_face.map(|f| mesh.gamma[f]).unwrap_or(false);
                if !interior && !on_gamma {
                    continue;
                }
                let fd = &cache.subfaces[sf_id];
                let npts = fd.rule.points.len();
                // Trace moments per incident simplex with signs +1 / -1.
                let test_dim = poly::dim_p2(degree);
                let n_comp = match family {
                    FeFamily::Lagrange => 1,
                    _ => 2, // tangential (NE) uses both frame components; RT uses the normal: 1
                };
                let n_comp = if family == FeFamily::RaviartThomas {
                    1
                } else {
                    n_comp
                };
                let tabs: Vec<DMatrix<f64>> = sf
                    .simplices
                    .iter()
                    .map(|&s| cache.simplices[s].eval_scalar_at(&fd.rule.points))
                    .collect();
                for comp in 0..n_comp {
                    for r in 0..test_dim {
                        for (side, &s) in sf.simplices.iter().enumerate() {
                            let sign = if side == 0 { 1.0 } else { -1.0 };
                            let cols = basis_trace_rows(
                                family,
                                &bases[s],
                                &tabs[side],
                                fd,
                                comp,
                                r,
                                npts,
                            );
                            for (j, v) in cols.iter().enumerate() {
                                if *v != 0.0 {
                                    trip_push(&mut trip, row, s * per_simplex + j, sign * v);
                                }
                            }
                        }
                        row += 1;
                    }
                }
            }
        }
        let mut constraints = trip.to_csc();
        constraints.nrows = row;

        Ok(Self {
            mesh,
            cache,
            family,
            degree,
            with_gamma_bc,
            bases,
            per_simplex,
            constraints,
            rank: OnceCell::new(),
        })
    }

    pub fn dim_broken(&self) -> usize {
        self.per_simplex * self.mesh.submesh.simplices.len()
    }

    /// Rank of the constraint system (dense; intended for desk-scale meshes).
    pub fn constraint_rank(&self) -> usize {
        *self.rank.get_or_init(|| {
            let d = self.constraints.to_dense();
            crate::linalg::rank(&d, 1e-10)
        })
    }

    /// dim = broken dim - rank(constraints).
    pub fn dim(&self) -> usize {
        self.dim_broken() - self.constraint_rank()
    }

    /// Orthonormal basis of the conforming subspace (dense null space of the
    /// constraints; desk-scale only).
    pub fn conforming_basis(&self) -> DMatrix<f64> {
        let d = self.constraints.to_dense();
        crate::linalg::nullspace(&d, 1e-10)
    }

    /// Relative constraint violation of a coefficient vector.
    pub fn constraint_residual(&self, coeffs: &DVector<f64>) -> f64 {
        let mut out = vec![0.0; self.constraints.nrows];
        self.constraints.matvec_acc(coeffs.as_slice(), &mut out, 1.0);
        let r: f64 = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        r / coeffs.norm().max(1e-300)
    }

    pub fn field(&self, coeffs: DVector<f64>) -> FeField {
        FeField { coeffs }
    }

    /// Evaluate a field at a point inside simplex `s` (scalar in x, vectors
    /// full), given the broken coefficients.
    pub fn eval_in_simplex(&self, coeffs: &DVector<f64>, s: usize, pts: &[Pt3]) -> Vec<Vec3> {
        let data = &self.cache.simplices[s];
        let tab = data.eval_scalar_at(pts);
        let local = coeffs.rows(s * self.per_simplex, self.per_simplex);
        match &self.bases[s] {
            SimplexBasis::Scalar(n) => (0..pts.len())
                .map(|q| {
                    let mut v = 0.0;
                    for i in 0..*n {
                        v += local[i] * tab[(i, q)];
                    }
                    Vec3::new(v, 0.0, 0.0)
                })
                .collect(),
            SimplexBasis::Vector(vb) => {
                let comps = vb.expand(&local.into_owned());
                let nsc = data.onb.dim_total();
                (0..pts.len())
                    .map(|q| {
                        let mut v = Vec3::zeros();
                        for cmp in 0..3usize {
                            let mut sc = 0.0;
                            for i in 0..nsc {
                                sc += comps[cmp * nsc + i] * tab[(i, q)];
                            }
                            v[cmp] = sc;
                        }
                        v
                    })
                    .collect()
            }
        }
    }

    /// L2 norm over the domain.
    pub fn l2_norm(&self, coeffs: &DVector<f64>) -> f64 {
        coeffs.norm()
    }

    /// Project an analytic field onto the broken space (elementwise L2).
    pub fn project_broken(
        &self,
        scalar: Option<&dyn Fn(&Pt3) -> f64>,
        vector: Option<&dyn Fn(&Pt3) -> Vec3>,
    ) -> DVector<f64> {
        let n_s = self.mesh.submesh.simplices.len();
        let mut out = DVector::zeros(self.dim_broken());
        for s in 0..n_s {
            let data = &self.cache.simplices[s];
            match &self.bases[s] {
                SimplexBasis::Scalar(n) => {
                    let f = scalar.expect("scalar field");
                    let c = crate::poly::project::project_scalar(data, self.degree, f);
                    for i in 0..*n {
                        out[s * self.per_simplex + i] = c[i];
                    }
                }
                SimplexBasis::Vector(vb) => {
                    let f = vector.expect("vector field");
                    let c = crate::poly::project::project_onto_vecbasis(data, vb, f);
                    for i in 0..vb.dim() {
                        out[s * self.per_simplex + i] = c[i];
                    }
                }
            }
        }
        out
    }
}

fn trip_push(t: &mut Triplets, r: usize, c: usize, v: f64) {
    // Triplets is sized lazily: rows grow as constraints are appended.
    if r >= t.nrows {
        t.nrows = r + 1;
    }
    t.push(r, c, v);
}

/// Row of trace moments of all local basis functions on a subface:
/// Lagrange -> full trace; Nedelec -> tangential component `comp`;
/// Raviart-Thomas -> normal component. Tested against subface ONB function
/// `r` with the subface quadrature.
fn basis_trace_rows(
    family: FeFamily,
    basis: &SimplexBasis,
    simplex_tab: &DMatrix<f64>,
    fd: &crate::poly::EntityData,
    comp: usize,
    r: usize,
    npts: usize,
) -> Vec<f64> {
    let nloc = basis.dim();
    let mut out = vec![0.0; nloc];
    match (family, basis) {
        (FeFamily::Lagrange, SimplexBasis::Scalar(n)) => {
            for j in 0..*n {
                let mut acc = 0.0;
                for q in 0..npts {
                    acc += fd.rule.weights[q] * simplex_tab[(j, q)] * fd.tab[(r, q)];
                }
                out[j] = acc;
            }
        }
        (FeFamily::Nedelec, SimplexBasis::Vector(vb)) => {
            let axis = fd.axes[comp];
            let nsc = simplex_tab.nrows();
            for j in 0..vb.dim() {
                let col = vb.coef.column(j);
                let mut acc = 0.0;
                for q in 0..npts {
                    let mut val = 0.0;
                    for cmp in 0..3usize {
                        let mut sc = 0.0;
                        for i in 0..nsc {
                            sc += col[cmp * nsc + i] * simplex_tab[(i, q)];
                        }
                        val += sc * axis[cmp];
                    }
                    acc += fd.rule.weights[q] * val * fd.tab[(r, q)];
                }
                out[j] = acc;
            }
        }
        (FeFamily::RaviartThomas, SimplexBasis::Vector(vb)) => {
            let nrm = fd.normal.expect("subface normal");
            let nsc = simplex_tab.nrows();
            for j in 0..vb.dim() {
                let col = vb.coef.column(j);
                let mut acc = 0.0;
                for q in 0..npts {
                    let mut val = 0.0;
                    for cmp in 0..3usize {
                        let mut sc = 0.0;
                        for i in 0..nsc {
                            sc += col[cmp * nsc + i] * simplex_tab[(i, q)];
                        }
                        val += sc * nrm[cmp];
                    }
                    acc += fd.rule.weights[q] * val * fd.tab[(r, q)];
                }
                out[j] = acc;
            }
        }
        _ => unreachable!("family/basis mismatch"),
    }
    out
}

/// Broken coefficient vector with constraint bookkeeping done by the space.
#[derive(Clone, Debug)]
pub struct FeField {
    pub coeffs: DVector<f64>,
}

/// Exact elementwise differential into the next space of the sequence.
/// The output satisfies the next space's constraints whenever the input is
/// conforming.
pub fn apply_fe_differential(
    from: &ConformingSpace,
    to: &ConformingSpace,
    field: &FeField,
) -> FeField {
    assert_eq!(Some(to.family), from.family.next(), "spaces must be consecutive");
    let n_s = from.mesh.submesh.simplices.len();
    let mut out = DVector::zeros(to.dim_broken());
    for s in 0..n_s {
        let sbd = &from.cache.simplices[s].onb;
        let nsc = sbd.dim_total();
        let local = field
            .coeffs
            .rows(s * from.per_simplex, from.per_simplex)
            .into_owned();
        match (&from.bases[s], &to.bases[s]) {
            (SimplexBasis::Scalar(n), SimplexBasis::Vector(vb)) => {
                // grad: P^l -> NE^l.
                let mut full = DVector::zeros(nsc);
                for i in 0..*n {
                    full[i] = local[i];
                }
                let g = poly::gradient(sbd, &full, 3);
                let proj = vb.project_from_components(&g);
                for i in 0..vb.dim() {
                    out[s * to.per_simplex + i] = proj[i];
                }
            }
            (SimplexBasis::Vector(vb_from), SimplexBasis::Vector(vb_to)) => {
                // curl: NE^l -> RT^l.
                let comps = vb_from.expand(&local);
                let c = poly::curl_3d(sbd, &comps);
                let proj = vb_to.project_from_components(&c);
                for i in 0..vb_to.dim() {
                    out[s * to.per_simplex + i] = proj[i];
                }
            }
            (SimplexBasis::Vector(vb), SimplexBasis::Scalar(n)) => {
                // div: RT^l -> P^l (image lies in P^{l-1}).
                let comps = vb.expand(&local);
                let d = poly::divergence(sbd, &comps, 3);
                for i in 0..*n {
                    out[s * to.per_simplex + i] = d[i];
                }
            }
            _ => unreachable!(),
        }
    }
    FeField { coeffs: out }
}
