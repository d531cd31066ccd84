//! Canonical DDR interpolation of conforming FE fields: componentwise
//! projections computed with piecewise quadrature over the sub-entities, with
//! traces taken from an incident simplex (single-valued by conformity, which
//! is checked first).

use super::space::{ConformingSpace, FeFamily, FeField};
use super::FeError;
use crate::dofs::{DdrCore, DofVector, SpaceKind};
use crate::Vec3;
use nalgebra::DVector;

/// Interpolate a conforming field into the DDR space matching its family
/// (Lagrange -> grad, Nedelec -> curl, Raviart-Thomas -> div).
pub fn ddr_interpolate_fe(
    core: &DdrCore,
    space: &ConformingSpace,
    field: &FeField,
) -> Result<DofVector, FeError> {
    let res = space.constraint_residual(&field.coeffs);
    if res > 1e-8 {
        return Err(FeError::NotConforming(res));
    }
    let mesh = core.mesh;
    let k = core.k;
    match space.family {
        FeFamily::Lagrange => {
            let layout = &core.grad;
            let mut z = DofVector::zeros(core, SpaceKind::Grad);
            // Vertex values: average over incident simplices.
            for v in 0..mesh.n_vertices() {
                let p = mesh.vertices[v];
                let incident = &mesh.submesh.point_simplices[p];
                let pt = mesh.points[p];
                let mut val = 0.0;
                for &s in incident {
                    val += space.eval_in_simplex(&field.coeffs, s, &[pt])[0].x;
                }
                z.data[layout.vertex_index(v)] = val / incident.len() as f64;
            }
            for e in 0..mesh.n_edges() {
                let c = project_entity_scalar(core, space, field, Entity::Edge(e), k - 1);
                set(&mut z, layout.edge_range(e), &c);
            }
            for f in 0..mesh.n_faces() {
                let c = project_entity_scalar(core, space, field, Entity::Face(f), k - 1);
                set(&mut z, layout.face_range(f), &c);
            }
            for t in 0..mesh.n_cells() {
                let c = project_entity_scalar(core, space, field, Entity::Cell(t), k - 1);
                set(&mut z, layout.cell_range(t), &c);
            }
            Ok(z)
        }
        FeFamily::Nedelec => {
            let layout = &core.curl;
            let mut z = DofVector::zeros(core, SpaceKind::Curl);
            for e in 0..mesh.n_edges() {
                let t = mesh.edges[e].tangent;
                let c = project_entity_component(core, space, field, Entity::Edge(e), k, |v| {
                    v.dot(&t)
                });
                set(&mut z, layout.edge_range(e), &c);
            }
            for f in 0..mesh.n_faces() {
                let vals = entity_values(core, space, field, Entity::Face(f));
                let data = &core.cache.faces[f];
                let full = components_from_values(data, &vals);
                let c = core.rt_face[f].project_from_components(&full);
                set(&mut z, layout.face_range(f), &c);
            }
            for t in 0..mesh.n_cells() {
                let vals = entity_values(core, space, field, Entity::Cell(t));
                let data = &core.cache.cells[t];
                let full = components_from_values(data, &vals);
                let c = core.rt_cell[t].project_from_components(&full);
                set(&mut z, layout.cell_range(t), &c);
            }
            Ok(z)
        }
        FeFamily::RaviartThomas => {
            let layout = &core.div;
            let mut z = DofVector::zeros(core, SpaceKind::Div);
            for f in 0..mesh.n_faces() {
                let n = mesh.faces[f].normal;
                let c = project_entity_component(core, space, field, Entity::Face(f), k, |v| {
                    v.dot(&n)
                });
                set(&mut z, layout.face_range(f), &c);
            }
            for t in 0..mesh.n_cells() {
                let vals = entity_values(core, space, field, Entity::Cell(t));
                let data = &core.cache.cells[t];
                let full = components_from_values(data, &vals);
                let c = core.ne_cell[t].project_from_components(&full);
                set(&mut z, layout.cell_range(t), &c);
            }
            Ok(z)
        }
        FeFamily::BrokenScalar => {
            panic!("broken scalar fields have no DDR interpolation")
        }
    }
}

/// Broken L2 projection of a BrokenScalar field onto P^k(T_h)
/// (cells-major coefficients matching OperatorBundle::apply_div).
pub fn project_broken_scalar(
    core: &DdrCore,
    space: &ConformingSpace,
    field: &FeField,
) -> Vec<f64> {
    assert_eq!(space.family, FeFamily::BrokenScalar);
    let nk = crate::poly::dim_p3(core.k);
    let mut out = vec![0.0; core.mesh.n_cells() * nk];
    for t in 0..core.mesh.n_cells() {
        let vals = entity_values(core, space, field, Entity::Cell(t));
        let data = &core.cache.cells[t];
        for (q, w) in data.rule.weights.iter().enumerate() {
            for i in 0..nk {
                out[t * nk + i] += w * vals[q].x * data.tab[(i, q)];
            }
        }
    }
    out
}

enum Entity {
    Edge(usize),
    Face(usize),
    Cell(usize),
}

/// Values of the field at the merged-rule points of a polytopal entity,
/// evaluated piecewise from an incident simplex per sub-entity.
fn entity_values(
    core: &DdrCore,
    space: &ConformingSpace,
    field: &FeField,
    entity: Entity,
) -> Vec<Vec3> {
    let mesh = core.mesh;
    match entity {
        Entity::Cell(c) => {
            let data = &core.cache.cells[c];
            let mut vals = vec![Vec3::zeros(); data.rule.points.len()];
            for sr in &data.subs {
                let pts = &data.rule.points[sr.start..sr.end];
                let v = space.eval_in_simplex(&field.coeffs, sr.sub_id, pts);
                vals[sr.start..sr.end].copy_from_slice(&v);
            }
            vals
        }
        Entity::Face(f) => {
            let data = &core.cache.faces[f];
            let mut vals = vec![Vec3::zeros(); data.rule.points.len()];
            for sr in &data.subs {
                let sf = &mesh.submesh.subfaces[sr.sub_id];
                let s = sf.simplices[0];
                let pts = &data.rule.points[sr.start..sr.end];
                let v = space.eval_in_simplex(&field.coeffs, s, pts);
                vals[sr.start..sr.end].copy_from_slice(&v);
            }
            vals
        }
        Entity::Edge(e) => {
            let data = &core.cache.edges[e];
            let mut vals = vec![Vec3::zeros(); data.rule.points.len()];
            for sr in &data.subs {
                let se = &mesh.submesh.subedges[sr.sub_id];
                let s = incident_simplex(mesh, se.verts);
                let pts = &data.rule.points[sr.start..sr.end];
                let v = space.eval_in_simplex(&field.coeffs, s, pts);
                vals[sr.start..sr.end].copy_from_slice(&v);
            }
            vals
        }
    }
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

/// lproj^deg of the scalar field on the entity.
fn project_entity_scalar(
    core: &DdrCore,
    space: &ConformingSpace,
    field: &FeField,
    entity: Entity,
    deg: i64,
) -> DVector<f64> {
    let data = match &entity {
        Entity::Edge(e) => &core.cache.edges[*e],
        Entity::Face(f) => &core.cache.faces[*f],
        Entity::Cell(c) => &core.cache.cells[*c],
    };
    let n = crate::poly::prefix_dim(&data.onb, deg);
    let vals = entity_values(core, space, field, entity);
    let mut out = DVector::zeros(n);
    for (q, w) in data.rule.weights.iter().enumerate() {
        for i in 0..n {
            out[i] += w * vals[q].x * data.tab[(i, q)];
        }
    }
    out
}

/// lproj^deg of a scalar component (tangential/normal) of the field.
fn project_entity_component(
    core: &DdrCore,
    space: &ConformingSpace,
    field: &FeField,
    entity: Entity,
    deg: i64,
    comp: impl Fn(&Vec3) -> f64,
) -> DVector<f64> {
    let data = match &entity {
        Entity::Edge(e) => &core.cache.edges[*e],
        Entity::Face(f) => &core.cache.faces[*f],
        Entity::Cell(c) => &core.cache.cells[*c],
    };
    let n = crate::poly::prefix_dim(&data.onb, deg);
    let vals = entity_values(core, space, field, entity);
    let mut out = DVector::zeros(n);
    for (q, w) in data.rule.weights.iter().enumerate() {
        let v = comp(&vals[q]);
        for i in 0..n {
            out[i] += w * v * data.tab[(i, q)];
        }
    }
    out
}

/// Full entity-frame components of pointwise values (for RT/NE projections).
fn components_from_values(data: &crate::poly::EntityData, vals: &[Vec3]) -> DVector<f64> {
    let ncomp = data.axes.len();
    let n = data.onb.dim_total();
    let mut full = DVector::zeros(ncomp * n);
    for (q, w) in data.rule.weights.iter().enumerate() {
        for (c, axis) in data.axes.iter().enumerate() {
            let wv = w * vals[q].dot(axis);
            for i in 0..n {
                full[c * n + i] += wv * data.tab[(i, q)];
            }
        }
    }
    full
}

fn set(z: &mut DofVector, range: std::ops::Range<usize>, coef: &DVector<f64>) {
    debug_assert_eq!(range.len(), coef.len());
    for (i, idx) in range.enumerate() {
        z.data[idx] = coef[i];
    }
}
