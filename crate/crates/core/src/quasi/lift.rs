//! Conforming liftings adapted to the quasi-interpolators: minimize the graph
//! norm subject to (i) conformity, (ii) canonical DDR interpolation equal to
//! the given dof vector, and (iii) broken L2-projection equal to the potential
//! reconstruction. At FE degree k+3 these constraints are feasible and the
//! quasi-interpolator is a left inverse on the lifted field.

use super::qi::QuasiContext;
use super::QiError;
use crate::dofs::{DofVector, SpaceKind};
use crate::fe::{FeField, SimplexBasis};
use crate::linalg::{ConstrainedLs, Triplets};
use crate::ops::OperatorBundle;
use crate::poly;
use nalgebra::DVector;

/// Lifting of a (masked) curl-space vector into the conforming Nédélec space
/// of the context (use ell = k+3).
pub fn lifting_curl(
    ctx: &QuasiContext,
    bundle: &OperatorBundle,
    v: &DofVector,
) -> Result<FeField, QiError> {
    assert_eq!(v.space, SpaceKind::Curl);
    let core = ctx.core;
    let mesh = core.mesh;
    let space = &ctx.ne;
    let nb = space.dim_broken();

    // Objective Gram: ||xi||^2 + ||curl xi||^2, block diagonal per simplex.
    let mut gram = Triplets::new(nb, nb);
    for s in 0..mesh.submesh.simplices.len() {
        let vb_ne = match &space.bases[s] {
            SimplexBasis::Vector(vb) => vb,
            _ => unreachable!(),
        };
        let sb = &core.cache.simplices[s].onb;
        let n = vb_ne.dim();
        // curl matrix in component coords.
        let mut curls: Vec<DVector<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let comps = vb_ne.coef.column(j).into_owned();
            curls.push(poly::curl_3d(sb, &comps));
        }
        for i in 0..n {
            for j in i..n {
                let mut g = if i == j { 1.0 } else { 0.0 };
                g += curls[i].dot(&curls[j]);
                if g != 0.0 {
                    gram.push(s * space.per_simplex + i, s * space.per_simplex + j, g);
                }
            }
        }
    }

    // Constraints: conformity/gamma rows, then the canonical interpolation
    // rows (edges, faces), then the broken projection rows per cell (which
    // include the cell interpolation rows since RT^k(T) is a subspace of
    // P^k(T)^3).
    let n_conf = space.constraints.nrows;
    let layout = &core.curl;
    let k = core.k;
    let mut trip = Triplets::new(n_conf, nb);
    super::qi::copy_constraint_rows(&mut trip, &space.constraints);
    let mut rhs = vec![0.0; n_conf];

    // Edge rows: int_E (xi . t_E) phi^E_i = v_E coefficients.
    for e in 0..mesh.n_edges() {
        let data = &core.cache.edges[e];
        let t = mesh.edges[e].tangent;
        let n_e = poly::dim_p1(k);
        let base = trip.nrows;
        grow(&mut trip, n_e);
        for sr in &data.subs {
            let se = &mesh.submesh.subedges[sr.sub_id];
            let s = incident_simplex(mesh, se.verts);
            let pts = &data.rule.points[sr.start..sr.end];
            add_component_rows(
                &mut trip,
                base,
                space,
                core,
                s,
                pts,
                &data.rule.weights[sr.start..sr.end],
                |q, i| data.tab[(i, sr.start + q)],
                n_e,
                |vv| vv.dot(&t),
            );
        }
        for (i, g) in layout.edge_range(e).enumerate() {
            rhs.push(v.data[g]);
            debug_assert_eq!(rhs.len() - 1, base + i);
        }
    }

    // Face rows: RTproj^k_F of the tangential trace = v_F.
    for f in 0..mesh.n_faces() {
        let data = &core.cache.faces[f];
        let n_f = core.rt_face[f].dim();
        if n_f == 0 {
            continue;
        }
        let base = trip.nrows;
        grow(&mut trip, n_f);
        // Moments against the RT^k(F) basis: combine frame-component moments.
        let nsc_f = data.onb.dim_total();
        for sr in &data.subs {
            let sf = &mesh.submesh.subfaces[sr.sub_id];
            let s = sf.simplices[0];
            let pts = &data.rule.points[sr.start..sr.end];
            let weights = &data.rule.weights[sr.start..sr.end];
            // Tabulate the simplex NE basis at the points once.
            let tab = core.cache.simplices[s].eval_scalar_at(pts);
            let vb = match &space.bases[s] {
                SimplexBasis::Vector(vb) => vb,
                _ => unreachable!(),
            };
            let nsc_s = core.cache.simplices[s].onb.dim_total();
            for j in 0..vb.dim() {
                let col = vb.coef.column(j);
                // Frame-component moments of basis function j.
                let mut mom = DVector::zeros(2 * nsc_f);
                for (q, w) in weights.iter().enumerate() {
                    let mut val = crate::Vec3::zeros();
                    for cmp in 0..3usize {
                        let mut sc = 0.0;
                        for i in 0..nsc_s {
                            sc += col[cmp * nsc_s + i] * tab[(i, q)];
                        }
                        val[cmp] = sc;
                    }
                    for (cc, axis) in data.axes.iter().enumerate() {
                        let wv = w * val.dot(axis);
                        for i in 0..nsc_f {
                            mom[cc * nsc_f + i] += wv * data.tab[(i, sr.start + q)];
                        }
                    }
                }
                let proj = core.rt_face[f].project_from_components(&mom);
                for i in 0..n_f {
                    if proj[i] != 0.0 {
                        trip.push(base + i, s * space.per_simplex + j, proj[i]);
                    }
                }
            }
        }
        for g in layout.face_range(f) {
            rhs.push(v.data[g]);
        }
        debug_assert_eq!(rhs.len(), base + n_f);
    }

    // Broken projection rows: lproj^k_T xi = P^k_curl v per polytopal cell,
    // tested against the component basis of P^k(T)^3.
    let nk = poly::dim_p3(k);
    for c in 0..mesh.n_cells() {
        let data = &core.cache.cells[c];
        let base = trip.nrows;
        grow(&mut trip, 3 * nk);
        let nsc_c = data.onb.dim_total();
        for sr in &data.subs {
            let s = sr.sub_id;
            let pts = &data.rule.points[sr.start..sr.end];
            let weights = &data.rule.weights[sr.start..sr.end];
            let tab = core.cache.simplices[s].eval_scalar_at(pts);
            let vb = match &space.bases[s] {
                SimplexBasis::Vector(vb) => vb,
                _ => unreachable!(),
            };
            let nsc_s = core.cache.simplices[s].onb.dim_total();
            for j in 0..vb.dim() {
                let col = vb.coef.column(j);
                for cmp in 0..3usize {
                    for i in 0..nk {
                        let mut acc = 0.0;
                        for (q, w) in weights.iter().enumerate() {
                            let mut sc = 0.0;
                            for m in 0..nsc_s {
                                sc += col[cmp * nsc_s + m] * tab[(m, q)];
                            }
                            acc += w * sc * data.tab[(i, sr.start + q)];
                        }
                        if acc != 0.0 {
                            trip.push(base + cmp * nk + i, s * space.per_simplex + j, acc);
                        }
                    }
                }
            }
        }
        // rhs: moments of the curl potential (its component coefficients).
        match crate::ops::potential(bundle, v, c) {
            crate::ops::PotentialValues::Vector(comps) => {
                for cmp in 0..3usize {
                    for i in 0..nk {
                        rhs.push(comps[cmp * nsc_c + i]);
                    }
                }
            }
            _ => unreachable!(),
        }
        debug_assert_eq!(rhs.len(), base + 3 * nk);
    }

    solve_lift(ctx, gram, trip, rhs, v_norm(v))
}

/// Lifting of a (masked) grad-space vector into the conforming Lagrange space
/// (use ell = k+3): minimizes ||xi||^2 + ||grad xi||^2 subject to canonical
/// interpolation and the per-face trace projections.
pub fn lifting_grad(
    ctx: &QuasiContext,
    bundle: &OperatorBundle,
    qv: &DofVector,
) -> Result<FeField, QiError> {
    assert_eq!(qv.space, SpaceKind::Grad);
    let core = ctx.core;
    let mesh = core.mesh;
    let space = &ctx.lag;
    let nb = space.dim_broken();
    let k = core.k;
    let layout = &core.grad;

    let mut gram = Triplets::new(nb, nb);
    for s in 0..mesh.submesh.simplices.len() {
        let n = space.per_simplex;
        let sb = &core.cache.simplices[s].onb;
        let mut grads: Vec<DVector<f64>> = Vec::with_capacity(n);
        for j in 0..n {
            let mut u = DVector::zeros(sb.dim_total());
            u[j] = 1.0;
            grads.push(poly::gradient(sb, &u, 3));
        }
        for i in 0..n {
            for j in i..n {
                let mut g = if i == j { 1.0 } else { 0.0 };
                g += grads[i].dot(&grads[j]);
                if g != 0.0 {
                    gram.push(s * n + i, s * n + j, g);
                }
            }
        }
    }

    let n_conf = space.constraints.nrows;
    let mut trip = Triplets::new(n_conf, nb);
    super::qi::copy_constraint_rows(&mut trip, &space.constraints);
    let mut rhs = vec![0.0; n_conf];

    // Vertex rows: averaged point values = q_V.
    for v in 0..mesh.n_vertices() {
        let p = mesh.vertices[v];
        let incident = &mesh.submesh.point_simplices[p];
        let pt = mesh.points[p];
        let base = trip.nrows;
        grow(&mut trip, 1);
        let w = 1.0 / incident.len() as f64;
        for &s in incident {
            let tab = core.cache.simplices[s].eval_scalar_at(&[pt]);
            for j in 0..space.per_simplex {
                let val = w * tab[(j, 0)];
                if val != 0.0 {
                    trip.push(base, s * space.per_simplex + j, val);
                }
            }
        }
        rhs.push(qv.data[layout.vertex_index(v)]);
    }

    // Edge rows: lproj^{k-1}_E xi = q_E.
    for e in 0..mesh.n_edges() {
        let n_e = poly::dim_p1(k - 1);
        if n_e == 0 {
            continue;
        }
        let data = &core.cache.edges[e];
        let base = trip.nrows;
        grow(&mut trip, n_e);
        for sr in &data.subs {
            let se = &mesh.submesh.subedges[sr.sub_id];
            let s = incident_simplex(mesh, se.verts);
            let pts = &data.rule.points[sr.start..sr.end];
            add_scalar_rows(
                &mut trip,
                base,
                space,
                core,
                s,
                pts,
                &data.rule.weights[sr.start..sr.end],
                |q, i| data.tab[(i, sr.start + q)],
                n_e,
            );
        }
        for g in layout.edge_range(e) {
            rhs.push(qv.data[g]);
        }
    }

    // Face rows: lproj^k_F xi = lproj^k_F tr^{k+1}_F q (a k-degree condition,
    // implying the (k-1)-degree interpolation rows).
    let nk_f = poly::dim_p2(k);
    for f in 0..mesh.n_faces() {
        let data = &core.cache.faces[f];
        let base = trip.nrows;
        grow(&mut trip, nk_f);
        for sr in &data.subs {
            let sf = &mesh.submesh.subfaces[sr.sub_id];
            let s = sf.simplices[0];
            let pts = &data.rule.points[sr.start..sr.end];
            add_scalar_rows(
                &mut trip,
                base,
                space,
                core,
                s,
                pts,
                &data.rule.weights[sr.start..sr.end],
                |q, i| data.tab[(i, sr.start + q)],
                nk_f,
            );
        }
        // rhs: lproj^k_F of the face trace.
        let vals = crate::ops::face_trace_values(bundle, qv, f);
        for i in 0..nk_f {
            let mut acc = 0.0;
            for (q, w) in data.rule.weights.iter().enumerate() {
                acc += w * vals[q] * data.tab[(i, q)];
            }
            rhs.push(acc);
        }
    }

    // Cell rows: lproj^{k-1}_T xi = q_T.
    let nkm1 = poly::dim_p3(k - 1);
    if nkm1 > 0 {
        for c in 0..mesh.n_cells() {
            let data = &core.cache.cells[c];
            let base = trip.nrows;
            grow(&mut trip, nkm1);
            for sr in &data.subs {
                let s = sr.sub_id;
                let pts = &data.rule.points[sr.start..sr.end];
                add_scalar_rows(
                    &mut trip,
                    base,
                    space,
                    core,
                    s,
                    pts,
                    &data.rule.weights[sr.start..sr.end],
                    |q, i| data.tab[(i, sr.start + q)],
                    nkm1,
                );
            }
            for g in layout.cell_range(c) {
                rhs.push(qv.data[g]);
            }
        }
    }

    solve_lift(ctx, gram, trip, rhs, v_norm(qv))
}

fn v_norm(v: &DofVector) -> f64 {
    v.data.norm()
}

fn solve_lift(
    _ctx: &QuasiContext,
    gram: Triplets,
    trip: Triplets,
    rhs: Vec<f64>,
    scale: f64,
) -> Result<FeField, QiError> {
    let solver = ConstrainedLs::new(&gram.to_csc(), &trip.to_csc())?;
    let nb = solver.unknowns();
    let sol = solver.solve(&vec![0.0; nb], &rhs);
    let gap = sol.constraint_residual / scale.max(1e-300);
    if gap > 1e-7 {
        return Err(QiError::Infeasible {
            gap,
            tol: 1e-7,
        });
    }
    Ok(FeField {
        coeffs: DVector::from_vec(sol.x),
    })
}

fn grow(trip: &mut Triplets, rows: usize) {
    trip.nrows += rows;
}

fn incident_simplex(mesh: &crate::mesh::PolytopalMesh, verts: [usize; 2]) -> usize {
    let a = &mesh.submesh.point_simplices[verts[0]];
    let b = &mesh.submesh.point_simplices[verts[1]];
    for &s in a {
        if b.contains(&s) {
            return s;
        }
    }
    unreachable!("sub-edge endpoints share a simplex")
}

/// Append rows int (xi . component) phi_i for the NE broken basis.
#[allow(clippy::too_many_arguments)]
fn add_component_rows(
    trip: &mut Triplets,
    base: usize,
    space: &crate::fe::ConformingSpace,
    core: &crate::dofs::DdrCore,
    s: usize,
    pts: &[crate::Pt3],
    weights: &[f64],
    test: impl Fn(usize, usize) -> f64,
    n_rows: usize,
    comp: impl Fn(&crate::Vec3) -> f64,
) {
    let tab = core.cache.simplices[s].eval_scalar_at(pts);
    let vb = match &space.bases[s] {
        SimplexBasis::Vector(vb) => vb,
        _ => unreachable!(),
    };
    let nsc = core.cache.simplices[s].onb.dim_total();
    for j in 0..vb.dim() {
        let col = vb.coef.column(j);
        for i in 0..n_rows {
            let mut acc = 0.0;
            for (q, w) in weights.iter().enumerate() {
                let mut val = crate::Vec3::zeros();
                for cmp in 0..3usize {
                    let mut sc = 0.0;
                    for m in 0..nsc {
                        sc += col[cmp * nsc + m] * tab[(m, q)];
                    }
                    val[cmp] = sc;
                }
                acc += w * comp(&val) * test(q, i);
            }
            if acc != 0.0 {
                trip.push(base + i, s * space.per_simplex + j, acc);
            }
        }
    }
}

/// Append rows int xi phi_i for the scalar broken basis.
#[allow(clippy::too_many_arguments)]
fn add_scalar_rows(
    trip: &mut Triplets,
    base: usize,
    space: &crate::fe::ConformingSpace,
    core: &crate::dofs::DdrCore,
    s: usize,
    pts: &[crate::Pt3],
    weights: &[f64],
    test: impl Fn(usize, usize) -> f64,
    n_rows: usize,
) {
    let tab = core.cache.simplices[s].eval_scalar_at(pts);
    for j in 0..space.per_simplex {
        for i in 0..n_rows {
            let mut acc = 0.0;
            for (q, w) in weights.iter().enumerate() {
                acc += w * tab[(j, q)] * test(q, i);
            }
            if acc != 0.0 {
                trip.push(base + i, s * space.per_simplex + j, acc);
            }
        }
    }
}
