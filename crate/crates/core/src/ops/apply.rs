//! Applying the assembled operators to dof vectors: potentials, stabilization
//! forms and the mu-weighted L2-like inner products.

use super::build::{cell_indices, edge_grad_indices, face_indices};
use super::{OperatorBundle, OpsError, PhysicalParameter};
use crate::dofs::{DofVector, SpaceKind};
use crate::linalg::{CscMatrix, Triplets};
use crate::poly;
use crate::{Pt3, Vec3};
use nalgebra::DVector;

/// Potential reconstruction of one cell: coefficients in the cell basis.
/// Scalar-valued for the gradient space (degree k+1), vector-valued for curl
/// and div (component layout, degree k).
pub enum PotentialValues {
    Scalar(DVector<f64>),
    Vector(DVector<f64>),
}

/// Gather the cell-local dof sub-vector of `z`.
pub fn gather_local(bundle: &OperatorBundle, z: &DofVector, c: usize) -> DVector<f64> {
    let idx = cell_indices(bundle.core, z.space, c);
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| z.data[i]))
}

/// Potential coefficients on cell `c`.
pub fn potential(bundle: &OperatorBundle, z: &DofVector, c: usize) -> PotentialValues {
    let local = gather_local(bundle, z, c);
    match z.space {
        SpaceKind::Grad => PotentialValues::Scalar(&bundle.cells[c].pot_grad * local),
        SpaceKind::Curl => PotentialValues::Vector(&bundle.cells[c].pot_curl * local),
        SpaceKind::Div => PotentialValues::Vector(&bundle.cells[c].pot_div * local),
    }
}

/// Values of the potential of `z` at arbitrary points inside cell `c`.
pub fn potential_values_at(
    bundle: &OperatorBundle,
    z: &DofVector,
    c: usize,
    pts: &[Pt3],
) -> Vec<Vec3> {
    let data = &bundle.core.cache.cells[c];
    let nsc = data.onb.dim_total();
    let tab = data.eval_scalar_at(pts);
    match potential(bundle, z, c) {
        PotentialValues::Scalar(coef) => (0..pts.len())
            .map(|q| {
                let mut s = 0.0;
                for i in 0..coef.len() {
                    s += coef[i] * tab[(i, q)];
                }
                Vec3::new(s, 0.0, 0.0)
            })
            .collect(),
        PotentialValues::Vector(comps) => (0..pts.len())
            .map(|q| {
                let mut v = Vec3::zeros();
                for cmp in 0..3usize {
                    let mut s = 0.0;
                    for i in 0..nsc {
                        s += comps[cmp * nsc + i] * tab[(i, q)];
                    }
                    v[cmp] = s;
                }
                v
            })
            .collect(),
    }
}

/// ||P z||_{L2(Omega)} of the potential reconstruction (exact: potentials are
/// coefficient vectors in orthonormal bases).
pub fn potential_l2_norm(bundle: &OperatorBundle, z: &DofVector) -> f64 {
    let mut s = 0.0;
    for c in 0..bundle.core.mesh.n_cells() {
        match potential(bundle, z, c) {
            PotentialValues::Scalar(v) => s += v.norm_squared(),
            PotentialValues::Vector(v) => s += v.norm_squared(),
        }
    }
    s.sqrt()
}

/// Local stabilization s_{.,T}(z, y) on one cell.
pub fn stabilization_cell(bundle: &OperatorBundle, z: &DofVector, y: &DofVector, c: usize) -> f64 {
    assert_eq!(z.space, y.space);
    let zl = gather_local(bundle, z, c);
    let yl = gather_local(bundle, y, c);
    let s = match z.space {
        SpaceKind::Grad => &bundle.cells[c].stab_grad,
        SpaceKind::Curl => &bundle.cells[c].stab_curl,
        SpaceKind::Div => &bundle.cells[c].stab_div,
    };
    (zl.transpose() * s * yl)[(0, 0)]
}

/// Global stabilization s_{.,h}(z, y).
pub fn stabilization(bundle: &OperatorBundle, z: &DofVector, y: &DofVector) -> f64 {
    (0..bundle.core.mesh.n_cells())
        .map(|c| stabilization_cell(bundle, z, y, c))
        .sum()
}

/// sqrt(s_h(z,z)), clamped at zero against roundoff.
pub fn stabilization_norm(bundle: &OperatorBundle, z: &DofVector) -> f64 {
    stabilization(bundle, z, z).max(0.0).sqrt()
}

/// (z, y)_{mu,.,h} = sum_T [ int_T mu P z . P y + mu_bar_T s_T(z, y) ].
pub fn inner_product(
    bundle: &OperatorBundle,
    z: &DofVector,
    y: &DofVector,
    mu: &PhysicalParameter,
) -> Result<f64, OpsError> {
    assert_eq!(z.space, y.space);
    if z.space == SpaceKind::Grad && !mu.is_scalar() {
        return Err(OpsError::ScalarParameterRequired);
    }
    let mut total = 0.0;
    for c in 0..bundle.core.mesh.n_cells() {
        let data = &bundle.core.cache.cells[c];
        let pz = potential(bundle, z, c);
        let py = potential(bundle, y, c);
        let mut vol_term = 0.0;
        match (&pz, &py) {
            (PotentialValues::Scalar(a), PotentialValues::Scalar(b)) => {
                let va = scalar_values(data, a);
                let vb = scalar_values(data, b);
                for (q, p) in data.rule.points.iter().enumerate() {
                    vol_term += data.rule.weights[q] * mu.scalar_at(p)? * va[q] * vb[q];
                }
            }
            (PotentialValues::Vector(a), PotentialValues::Vector(b)) => {
                let va = vector_values(data, a);
                let vb = vector_values(data, b);
                for (q, p) in data.rule.points.iter().enumerate() {
                    let m = mu.matrix_at(p);
                    vol_term += data.rule.weights[q] * (m * va[q]).dot(&vb[q]);
                }
            }
            _ => unreachable!("matching spaces"),
        }
        total += vol_term + mu.mu_bar(data) * stabilization_cell(bundle, z, y, c);
    }
    Ok(total)
}

/// Norm induced by [`inner_product`].
pub fn l2_norm(
    bundle: &OperatorBundle,
    z: &DofVector,
    mu: &PhysicalParameter,
) -> Result<f64, OpsError> {
    Ok(inner_product(bundle, z, z, mu)?.max(0.0).sqrt())
}

/// Assemble the Gram matrix of the mu-weighted inner product on `space`
/// (sparse, cell-block structure), for use in saddle-point systems.
pub fn inner_product_matrix(
    bundle: &OperatorBundle,
    space: SpaceKind,
    mu: &PhysicalParameter,
) -> Result<CscMatrix, OpsError> {
    if space == SpaceKind::Grad && !mu.is_scalar() {
        return Err(OpsError::ScalarParameterRequired);
    }
    let core = bundle.core;
    let n = core.layout(space).total();
    let mut trip = Triplets::new(n, n);
    for c in 0..core.mesh.n_cells() {
        let idx = cell_indices(core, space, c);
        let data = &core.cache.cells[c];
        let nloc = idx.len();
        let nsc = data.onb.dim_total();
        let (pot, stab) = match space {
            SpaceKind::Grad => (&bundle.cells[c].pot_grad, &bundle.cells[c].stab_grad),
            SpaceKind::Curl => (&bundle.cells[c].pot_curl, &bundle.cells[c].stab_curl),
            SpaceKind::Div => (&bundle.cells[c].pot_div, &bundle.cells[c].stab_div),
        };
        let mut m = mu.mu_bar(data) * stab.clone();
        match space {
            SpaceKind::Grad => {
                // V[q, col]: potential values at rule points.
                let npts = data.rule.points.len();
                let mut v = nalgebra::DMatrix::zeros(npts, nloc);
                for q in 0..npts {
                    for col in 0..nloc {
                        let mut s = 0.0;
                        for i in 0..pot.nrows() {
                            s += pot[(i, col)] * data.tab[(i, q)];
                        }
                        v[(q, col)] = s;
                    }
                }
                for q in 0..npts {
                    let w = data.rule.weights[q] * mu.scalar_at(&data.rule.points[q])?;
                    for i in 0..nloc {
                        let wi = w * v[(q, i)];
                        if wi == 0.0 {
                            continue;
                        }
                        for j in 0..nloc {
                            m[(i, j)] += wi * v[(q, j)];
                        }
                    }
                }
            }
            _ => {
                let npts = data.rule.points.len();
                // Component values per point: 3 stacked blocks.
                let mut v = nalgebra::DMatrix::zeros(3 * npts, nloc);
                for q in 0..npts {
                    for cmp in 0..3usize {
                        for col in 0..nloc {
                            let mut s = 0.0;
                            for i in 0..nsc {
                                s += pot[(cmp * nsc + i, col)] * data.tab[(i, q)];
                            }
                            v[(cmp * npts + q, col)] = s;
                        }
                    }
                }
                for q in 0..npts {
                    let w = data.rule.weights[q];
                    let mmu = mu.matrix_at(&data.rule.points[q]);
                    for a in 0..3usize {
                        for b in 0..3usize {
                            let wm = w * mmu[(a, b)];
                            if wm == 0.0 {
                                continue;
                            }
                            for i in 0..nloc {
                                let wi = wm * v[(a * npts + q, i)];
                                if wi == 0.0 {
                                    continue;
                                }
                                for j in 0..nloc {
                                    m[(i, j)] += wi * v[(b * npts + q, j)];
                                }
                            }
                        }
                    }
                }
            }
        }
        for (i, &gi) in idx.iter().enumerate() {
            for (j, &gj) in idx.iter().enumerate() {
                let val = 0.5 * (m[(i, j)] + m[(j, i)]);
                if val != 0.0 {
                    trip.push(gi, gj, val);
                }
            }
        }
    }
    Ok(trip.to_csc())
}

fn scalar_values(data: &crate::poly::EntityData, coef: &DVector<f64>) -> Vec<f64> {
    (0..data.rule.points.len())
        .map(|q| {
            let mut s = 0.0;
            for i in 0..coef.len() {
                s += coef[i] * data.tab[(i, q)];
            }
            s
        })
        .collect()
}

fn vector_values(data: &crate::poly::EntityData, comps: &DVector<f64>) -> Vec<Vec3> {
    let nsc = data.onb.dim_total();
    (0..data.rule.points.len())
        .map(|q| {
            let mut v = Vec3::zeros();
            for cmp in 0..3usize {
                let mut s = 0.0;
                for i in 0..nsc {
                    s += comps[cmp * nsc + i] * data.tab[(i, q)];
                }
                v[cmp] = s;
            }
            v
        })
        .collect()
}

/// Face trace values tr^{k+1}_F of a grad vector at the face rule points.
pub fn face_trace_values(bundle: &OperatorBundle, q: &DofVector, f: usize) -> Vec<f64> {
    assert_eq!(q.space, SpaceKind::Grad);
    let core = bundle.core;
    let idx = face_indices(core, SpaceKind::Grad, f);
    let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| q.data[i]));
    let coef = &bundle.faces[f].trace * local;
    let data = &core.cache.faces[f];
    (0..data.rule.points.len())
        .map(|qq| {
            let mut s = 0.0;
            for i in 0..poly::dim_p2(core.k + 1) {
                s += coef[i] * data.tab[(i, qq)];
            }
            s
        })
        .collect()
}

/// Squared L2(F) norm of the face trace.
pub fn face_trace_norm_sq(bundle: &OperatorBundle, q: &DofVector, f: usize) -> f64 {
    let vals = face_trace_values(bundle, q, f);
    let data = &bundle.core.cache.faces[f];
    vals.iter()
        .zip(&data.rule.weights)
        .map(|(v, w)| w * v * v)
        .sum()
}

/// Tangential trace values trt^k_F of a curl vector at the face rule points.
pub fn face_ttrace_values(bundle: &OperatorBundle, v: &DofVector, f: usize) -> Vec<Vec3> {
    assert_eq!(v.space, SpaceKind::Curl);
    let core = bundle.core;
    let idx = face_indices(core, SpaceKind::Curl, f);
    let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| v.data[i]));
    let comps = &bundle.faces[f].ttrace * local;
    let data = &core.cache.faces[f];
    let nsc = data.onb.dim_total();
    (0..data.rule.points.len())
        .map(|q| {
            let mut out = Vec3::zeros();
            for (c, axis) in data.axes.iter().enumerate() {
                let mut s = 0.0;
                for i in 0..nsc {
                    s += comps[c * nsc + i] * data.tab[(i, q)];
                }
                out += s * axis;
            }
            out
        })
        .collect()
}

/// Edge-local helper exposed for tests: edge gradient coefficients of q.
pub fn edge_gradient(bundle: &OperatorBundle, q: &DofVector, e: usize) -> DVector<f64> {
    assert_eq!(q.space, SpaceKind::Grad);
    let idx = edge_grad_indices(bundle.core, e);
    let local = DVector::from_iterator(idx.len(), idx.iter().map(|&i| q.data[i]));
    &bundle.edges[e].grad * local
}
