//! The components norm: nested cell/face sums with h_T and h_F weights.

use super::{DdrCore, DofVector};

/// Diagonal weights of the squared components norm: |||z|||^2 = sum d_i z_i^2
/// (entity components are orthonormal, and every face/edge/vertex term enters
/// once per containing cell/face with its h-weights).
pub fn norm_weights(core: &DdrCore, space: crate::dofs::SpaceKind) -> Vec<f64> {
    let layout = core.layout(space);
    let mesh = core.mesh;
    let mut d = vec![0.0; layout.total()];
    for (c, cell) in mesh.cells.iter().enumerate() {
        let h_t = cell.diameter;
        for &(f, _) in &cell.faces {
            let face = &mesh.faces[f];
            let h_f = face.diameter;
            for i in layout.face_range(f) {
                d[i] += h_t;
            }
            if layout.edge_dim > 0 {
                for &(e, _) in &face.edges {
                    for i in layout.edge_range(e) {
                        d[i] += h_t * h_f;
                    }
                }
            }
            if layout.vertex_dim > 0 {
                for &p in &face.vloop {
                    if let Some(v) = mesh.point_vertex[p] {
                        d[layout.vertex_index(v)] += h_t * h_f * h_f;
                    }
                }
            }
        }
        for i in layout.cell_range(c) {
            d[i] += 1.0;
        }
    }
    d
}

#[derive(Clone, Copy, Debug)]
pub enum NormScope {
    Global,
    Cell(usize),
    Face(usize),
}

/// Triple-bar components norm. Face scope:
/// |||z|||_F^2 = ||z_F||^2 + h_F sum_E ||z_E||^2 + h_F^2 sum_V |z_V|^2;
/// cell scope: |||z|||_T^2 = ||z_T||^2 + h_T sum_F |||z|||_F^2; global:
/// sum of cell squares. Sums run over the components present in the space.
pub fn component_norm(core: &DdrCore, z: &DofVector, scope: NormScope) -> f64 {
    match scope {
        NormScope::Global => {
            let mut s = 0.0;
            for c in 0..core.mesh.n_cells() {
                s += cell_sq(core, z, c);
            }
            s.sqrt()
        }
        NormScope::Cell(c) => cell_sq(core, z, c).sqrt(),
        NormScope::Face(f) => face_sq(core, z, f).sqrt(),
    }
}

fn cell_sq(core: &DdrCore, z: &DofVector, c: usize) -> f64 {
    let layout = core.layout(z.space);
    let cell = &core.mesh.cells[c];
    let mut s = 0.0;
    for i in layout.cell_range(c) {
        s += z.data[i] * z.data[i];
    }
    let mut faces = 0.0;
    for &(f, _) in &cell.faces {
        faces += face_sq(core, z, f);
    }
    s + cell.diameter * faces
}

fn face_sq(core: &DdrCore, z: &DofVector, f: usize) -> f64 {
    let layout = core.layout(z.space);
    let face = &core.mesh.faces[f];
    let h = face.diameter;
    let mut s = 0.0;
    for i in layout.face_range(f) {
        s += z.data[i] * z.data[i];
    }
    if layout.edge_dim > 0 {
        let mut es = 0.0;
        for &(e, _) in &face.edges {
            for i in layout.edge_range(e) {
                es += z.data[i] * z.data[i];
            }
        }
        s += h * es;
    }
    if layout.vertex_dim > 0 {
        let mut vs = 0.0;
        for &p in &face.vloop {
            if let Some(v) = core.mesh.point_vertex[p] {
                let x = z.data[layout.vertex_index(v)];
                vs += x * x;
            }
        }
        s += h * h * vs;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dofs::{random_dofs, DdrCore, DofVector, SpaceKind};
    use crate::mesh::gen_hex_cube;
    use crate::poly::{BasisCache, CacheSpec};

    fn setup() -> (crate::mesh::PolytopalMesh, CacheSpec) {
        (gen_hex_cube(1).unwrap(), CacheSpec::for_degrees(0, 1))
    }

    #[test]
    fn zero_vector_has_zero_norm() {
        let (mesh, spec) = setup();
        let cache = BasisCache::build(&mesh, spec).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let z = DofVector::zeros(&core, SpaceKind::Curl);
        assert_eq!(component_norm(&core, &z, NormScope::Global), 0.0);
    }

    #[test]
    fn unit_vertex_values_on_unit_cube() {
        // k=0 grad vector with all q_V = 1 on the single unit-cube cell:
        // |||q|||^2 = h_T sum_F h_F^2 * 4 = sqrt(3) * 6 * 2 * 4 = 48 sqrt(3).
        let (mesh, spec) = setup();
        let cache = BasisCache::build(&mesh, spec).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let mut z = DofVector::zeros(&core, SpaceKind::Grad);
        for i in 0..8 {
            z.data[i] = 1.0;
        }
        let want = (48.0 * 3.0f64.sqrt()).sqrt();
        let got = component_norm(&core, &z, NormScope::Global);
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    #[test]
    fn global_square_is_sum_of_cell_squares() {
        let mesh = crate::mesh::gen_tet_cube(2).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(1, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 1).unwrap();
        let z = random_dofs(&core, SpaceKind::Curl, 9, None);
        let g = component_norm(&core, &z, NormScope::Global);
        let cells: f64 = (0..mesh.n_cells())
            .map(|c| component_norm(&core, &z, NormScope::Cell(c)).powi(2))
            .sum();
        assert!((g * g - cells).abs() < 1e-12 * g * g);
    }

    #[test]
    fn norm_properties_sampled() {
        // Absolute homogeneity and triangle inequality on random pairs.
        let mesh = crate::mesh::gen_tet_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(1, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 1).unwrap();
        for seed in 0..10u64 {
            let a = random_dofs(&core, SpaceKind::Grad, seed, None);
            let b = random_dofs(&core, SpaceKind::Grad, seed + 100, None);
            let na = component_norm(&core, &a, NormScope::Global);
            let nb = component_norm(&core, &b, NormScope::Global);
            let mut scaled = a.clone();
            scaled.data *= -2.5;
            let ns = component_norm(&core, &scaled, NormScope::Global);
            assert!((ns - 2.5 * na).abs() < 1e-12 * na);
            let mut sum = a.clone();
            sum.data += &b.data;
            let nsum = component_norm(&core, &sum, NormScope::Global);
            assert!(nsum <= na + nb + 1e-12 * (na + nb));
        }
    }
}
