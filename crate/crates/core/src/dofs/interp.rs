//! Canonical DDR interpolators: component-wise L2 projections plus vertex
//! values for the gradient space.

use super::{DdrCore, DofVector, SpaceKind};
use crate::poly::project::{project_onto_vecbasis, project_scalar};
use crate::{Pt3, Vec3};

/// I_grad: cell/face/edge projections onto P^{k-1} plus vertex values.
pub fn interpolate_grad(core: &DdrCore, f: &dyn Fn(&Pt3) -> f64) -> DofVector {
    let layout = &core.grad;
    let mut z = DofVector::zeros(core, SpaceKind::Grad);
    for v in 0..core.mesh.n_vertices() {
        z.data[layout.vertex_index(v)] = f(core.mesh.vertex_point(v));
    }
    for e in 0..core.mesh.n_edges() {
        let c = project_scalar(&core.cache.edges[e], core.k - 1, f);
        set(&mut z, layout.edge_range(e), &c);
    }
    for fc in 0..core.mesh.n_faces() {
        let c = project_scalar(&core.cache.faces[fc], core.k - 1, f);
        set(&mut z, layout.face_range(fc), &c);
    }
    for t in 0..core.mesh.n_cells() {
        let c = project_scalar(&core.cache.cells[t], core.k - 1, f);
        set(&mut z, layout.cell_range(t), &c);
    }
    z
}

/// I_curl: RT^k projections on cells, tangential RT^k on faces, tangential
/// P^k moments on edges.
pub fn interpolate_curl(core: &DdrCore, f: &dyn Fn(&Pt3) -> Vec3) -> DofVector {
    let layout = &core.curl;
    let mut z = DofVector::zeros(core, SpaceKind::Curl);
    for e in 0..core.mesh.n_edges() {
        let t = core.mesh.edges[e].tangent;
        let c = project_scalar(&core.cache.edges[e], core.k, |p| f(p).dot(&t));
        set(&mut z, layout.edge_range(e), &c);
    }
    for fc in 0..core.mesh.n_faces() {
        let c = project_onto_vecbasis(&core.cache.faces[fc], &core.rt_face[fc], |p| f(p));
        set(&mut z, layout.face_range(fc), &c);
    }
    for t in 0..core.mesh.n_cells() {
        let c = project_onto_vecbasis(&core.cache.cells[t], &core.rt_cell[t], |p| f(p));
        set(&mut z, layout.cell_range(t), &c);
    }
    z
}

/// I_div: NE^k projections on cells, normal-trace P^k moments on faces.
pub fn interpolate_div(core: &DdrCore, f: &dyn Fn(&Pt3) -> Vec3) -> DofVector {
    let layout = &core.div;
    let mut z = DofVector::zeros(core, SpaceKind::Div);
    for fc in 0..core.mesh.n_faces() {
        let n = core.mesh.faces[fc].normal;
        let c = project_scalar(&core.cache.faces[fc], core.k, |p| f(p).dot(&n));
        set(&mut z, layout.face_range(fc), &c);
    }
    for t in 0..core.mesh.n_cells() {
        let c = project_onto_vecbasis(&core.cache.cells[t], &core.ne_cell[t], |p| f(p));
        set(&mut z, layout.cell_range(t), &c);
    }
    z
}

fn set(z: &mut DofVector, range: std::ops::Range<usize>, coef: &nalgebra::DVector<f64>) {
    debug_assert_eq!(range.len(), coef.len());
    for (i, idx) in range.enumerate() {
        z.data[idx] = coef[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofs::DdrCore;
    use crate::mesh::gen_hex_cube;
    use crate::poly::{BasisCache, CacheSpec};

    #[test]
    fn constant_scalar_at_k0_gives_vertex_values() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let z = interpolate_grad(&core, &|_| 1.0);
        assert_eq!(z.data.len(), 8);
        for i in 0..8 {
            assert!((z.data[i] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_vector_curl_interpolation_gives_tangents() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let ex = Vec3::new(1.0, 0.0, 0.0);
        let z = interpolate_curl(&core, &|_| ex);
        // k=0: only edge components; each is lproj^0(e_x . t_E). The ONB
        // constant on an edge is 1/sqrt(|E|), so coefficient = (e_x.t) sqrt|E|.
        for e in 0..mesh.n_edges() {
            let want = ex.dot(&mesh.edges[e].tangent) * mesh.edges[e].length.sqrt();
            let got = z.data[core.curl.edge_range(e).start];
            assert!((got - want).abs() < 1e-13, "edge {e}: {got} vs {want}");
        }
    }

    #[test]
    fn div_interpolation_of_radial_field_gives_face_means() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let x0 = Pt3::new(0.2, 0.3, 0.4);
        let z = interpolate_div(&core, &|p| p - x0);
        // Oracle: face quadrature of (x - x0).n_F / |F| times sqrt(|F|)
        // (coefficient in the unit-normalized constant basis).
        for f in 0..mesh.n_faces() {
            let data = &cache.faces[f];
            let n = mesh.faces[f].normal;
            let mean = data.rule.integrate(|p| (p - x0).dot(&n)) / mesh.faces[f].area;
            let want = mean * mesh.faces[f].area.sqrt();
            let got = z.data[core.div.face_range(f).start];
            assert!((got - want).abs() < 1e-13, "face {f}: {got} vs {want}");
        }
    }
}
