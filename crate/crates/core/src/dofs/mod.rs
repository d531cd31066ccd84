//! DDR component spaces at degree k: layouts, canonical interpolators,
//! component norms, boundary masks and restrictions.
//!
//! Components are stored as coefficients in the per-entity orthonormal bases
//! of the cache (vector components in the orthonormal trimmed bases), so L2
//! norms of components are Euclidean norms of coefficient slices.
//!
//! Global dof numbering: vertices, then edges, then faces, then cells, each
//! sorted by id.

mod csv;
mod interp;
mod norm;

pub use csv::{read_dofs_csv, write_dofs_csv};
pub use interp::{interpolate_curl, interpolate_div, interpolate_grad};
pub use norm::{component_norm, norm_weights, NormScope};

use crate::mesh::PolytopalMesh;
use crate::poly::{self, trimmed_space, BasisCache, Family, PolyError, VecBasis};
use nalgebra::DVector;

/// The three DDR spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    Grad,
    Curl,
    Div,
}

impl SpaceKind {
    /// Potential-reconstruction degree: k+1 for grad, k for curl/div.
    pub fn k_bullet(&self, k: i64) -> i64 {
        match self {
            SpaceKind::Grad => k + 1,
            _ => k,
        }
    }
}

/// Uniform per-entity component sizes and global offsets for one space.
#[derive(Clone, Debug)]
pub struct DofLayout {
    pub space: SpaceKind,
    pub k: i64,
    pub vertex_dim: usize,
    pub edge_dim: usize,
    pub face_dim: usize,
    pub cell_dim: usize,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub n_faces: usize,
    pub n_cells: usize,
}

impl DofLayout {
    pub fn total(&self) -> usize {
        self.n_vertices * self.vertex_dim
            + self.n_edges * self.edge_dim
            + self.n_faces * self.face_dim
            + self.n_cells * self.cell_dim
    }

    pub fn vertex_index(&self, v: usize) -> usize {
        debug_assert!(self.vertex_dim == 1);
        v
    }

    pub fn edge_range(&self, e: usize) -> std::ops::Range<usize> {
        let base = self.n_vertices * self.vertex_dim + e * self.edge_dim;
        base..base + self.edge_dim
    }

    pub fn face_range(&self, f: usize) -> std::ops::Range<usize> {
        let base =
            self.n_vertices * self.vertex_dim + self.n_edges * self.edge_dim + f * self.face_dim;
        base..base + self.face_dim
    }

    pub fn cell_range(&self, c: usize) -> std::ops::Range<usize> {
        let base = self.n_vertices * self.vertex_dim
            + self.n_edges * self.edge_dim
            + self.n_faces * self.face_dim
            + c * self.cell_dim;
        base..base + self.cell_dim
    }
}

/// Mesh-level context: layouts plus the orthonormal trimmed component bases.
pub struct DdrCore<'m> {
    pub mesh: &'m PolytopalMesh,
    pub cache: &'m BasisCache,
    pub k: i64,
    pub grad: DofLayout,
    pub curl: DofLayout,
    pub div: DofLayout,
    /// RT^k(T) per cell (curl-space cell components).
    pub rt_cell: Vec<VecBasis>,
    /// NE^k(T) per cell (div-space cell components).
    pub ne_cell: Vec<VecBasis>,
    /// RT^k(F) per face, tangent (curl-space face components).
    pub rt_face: Vec<VecBasis>,
}

impl<'m> DdrCore<'m> {
    pub fn new(mesh: &'m PolytopalMesh, cache: &'m BasisCache, k: i64) -> Result<Self, PolyError> {
        assert!(k >= 0, "DDR degree must be nonnegative");
        assert!(
            cache.spec.cell_deg >= k + 2 && cache.spec.face_deg >= k + 2,
            "cache degrees too small for DDR degree {k}"
        );
        let counts = (
            mesh.n_vertices(),
            mesh.n_edges(),
            mesh.n_faces(),
            mesh.n_cells(),
        );
        let grad = DofLayout {
            space: SpaceKind::Grad,
            k,
            vertex_dim: 1,
            edge_dim: poly::dim_p1(k - 1),
            face_dim: poly::dim_p2(k - 1),
            cell_dim: poly::dim_p3(k - 1),
            n_vertices: counts.0,
            n_edges: counts.1,
            n_faces: counts.2,
            n_cells: counts.3,
        };
        let curl = DofLayout {
            space: SpaceKind::Curl,
            k,
            vertex_dim: 0,
            edge_dim: poly::dim_p1(k),
            face_dim: poly::dim_rt_face(k),
            cell_dim: poly::dim_rt_cell(k),
            n_vertices: counts.0,
            n_edges: counts.1,
            n_faces: counts.2,
            n_cells: counts.3,
        };
        let div = DofLayout {
            space: SpaceKind::Div,
            k,
            vertex_dim: 0,
            edge_dim: 0,
            face_dim: poly::dim_p2(k),
            cell_dim: poly::dim_ne_cell(k),
            n_vertices: counts.0,
            n_edges: counts.1,
            n_faces: counts.2,
            n_cells: counts.3,
        };

        let mut rt_cell = Vec::with_capacity(counts.3);
        let mut ne_cell = Vec::with_capacity(counts.3);
        for c in 0..counts.3 {
            rt_cell.push(trimmed_space(Family::Rt, k, &cache.cells[c].onb)?);
            ne_cell.push(trimmed_space(Family::Ne, k, &cache.cells[c].onb)?);
        }
        let mut rt_face = Vec::with_capacity(counts.2);
        for f in 0..counts.2 {
            rt_face.push(trimmed_space(Family::Rt, k, &cache.faces[f].onb)?);
        }

        Ok(Self {
            mesh,
            cache,
            k,
            grad,
            curl,
            div,
            rt_cell,
            ne_cell,
            rt_face,
        })
    }

    pub fn layout(&self, space: SpaceKind) -> &DofLayout {
        match space {
            SpaceKind::Grad => &self.grad,
            SpaceKind::Curl => &self.curl,
            SpaceKind::Div => &self.div,
        }
    }
}

/// A vector of DDR components.
#[derive(Clone, Debug, PartialEq)]
pub struct DofVector {
    pub space: SpaceKind,
    pub k: i64,
    pub data: DVector<f64>,
}

impl DofVector {
    pub fn zeros(core: &DdrCore, space: SpaceKind) -> Self {
        Self {
            space,
            k: core.k,
            data: DVector::zeros(core.layout(space).total()),
        }
    }

    pub fn edge(&self, layout: &DofLayout, e: usize) -> DVector<f64> {
        DVector::from_iterator(layout.edge_dim, self.data.rows(layout.edge_range(e).start, layout.edge_dim).iter().copied())
    }

    pub fn face(&self, layout: &DofLayout, f: usize) -> DVector<f64> {
        DVector::from_iterator(layout.face_dim, self.data.rows(layout.face_range(f).start, layout.face_dim).iter().copied())
    }

    pub fn cell(&self, layout: &DofLayout, c: usize) -> DVector<f64> {
        DVector::from_iterator(layout.cell_dim, self.data.rows(layout.cell_range(c).start, layout.cell_dim).iter().copied())
    }
}

/// Slots forced to zero by the essential boundary part.
#[derive(Clone, Debug)]
pub struct BoundaryMask {
    pub space: SpaceKind,
    pub zero: Vec<bool>,
}

impl BoundaryMask {
    /// Mask for the homogeneous-on-gamma subspace: grad zeroes vertices and
    /// edges in the closure of gamma and faces in gamma; curl zeroes edges and
    /// faces; div zeroes faces.
    pub fn build(core: &DdrCore, space: SpaceKind) -> Self {
        let layout = core.layout(space);
        let mut zero = vec![false; layout.total()];
        let gv = core.mesh.gamma_vertices();
        let ge = core.mesh.gamma_edges();
        match space {
            SpaceKind::Grad => {
                for (v, &g) in gv.iter().enumerate() {
                    if g {
                        zero[layout.vertex_index(v)] = true;
                    }
                }
                for (e, &g) in ge.iter().enumerate() {
                    if g {
                        for i in layout.edge_range(e) {
                            zero[i] = true;
                        }
                    }
                }
                for f in 0..core.mesh.n_faces() {
                    if core.mesh.gamma[f] {
                        for i in layout.face_range(f) {
                            zero[i] = true;
                        }
                    }
                }
            }
            SpaceKind::Curl => {
                for (e, &g) in ge.iter().enumerate() {
                    if g {
                        for i in layout.edge_range(e) {
                            zero[i] = true;
                        }
                    }
                }
                for f in 0..core.mesh.n_faces() {
                    if core.mesh.gamma[f] {
                        for i in layout.face_range(f) {
                            zero[i] = true;
                        }
                    }
                }
            }
            SpaceKind::Div => {
                for f in 0..core.mesh.n_faces() {
                    if core.mesh.gamma[f] {
                        for i in layout.face_range(f) {
                            zero[i] = true;
                        }
                    }
                }
            }
        }
        Self { space, zero }
    }

    pub fn apply(&self, z: &DofVector) -> DofVector {
        let mut out = z.clone();
        for (i, &m) in self.zero.iter().enumerate() {
            if m {
                out.data[i] = 0.0;
            }
        }
        out
    }

    pub fn is_masked(&self, z: &DofVector, tol: f64) -> bool {
        self.zero
            .iter()
            .enumerate()
            .all(|(i, &m)| !m || z.data[i].abs() <= tol)
    }

    pub fn n_free(&self) -> usize {
        self.zero.iter().filter(|&&m| !m).count()
    }
}

/// Reproducible pseudo-random dof vector with entries in [-1, 1], masked.
pub fn random_dofs(
    core: &DdrCore,
    space: SpaceKind,
    seed: u64,
    mask: Option<&BoundaryMask>,
) -> DofVector {
    let mut rng = crate::rng::SplitMix64::new(seed);
    let mut z = DofVector::zeros(core, space);
    for i in 0..z.data.len() {
        z.data[i] = rng.next_symmetric();
    }
    match mask {
        Some(m) => m.apply(&z),
        None => z,
    }
}

/// Entity reference for restrictions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityRef {
    Cell(usize),
    Face(usize),
    Edge(usize),
}

/// Components of `z` attached to the closure of one entity.
#[derive(Clone, Debug)]
pub struct LocalDofs {
    pub entity: EntityRef,
    pub cell: Option<(usize, DVector<f64>)>,
    pub faces: Vec<(usize, DVector<f64>)>,
    pub edges: Vec<(usize, DVector<f64>)>,
    pub verts: Vec<(usize, f64)>,
}

/// Gather the components of `z` on the entities belonging to `P`.
pub fn restrict(core: &DdrCore, z: &DofVector, entity: EntityRef) -> LocalDofs {
    let layout = core.layout(z.space);
    let mesh = core.mesh;
    let (cell, face_ids, edge_ids, vert_ids): (
        Option<usize>,
        Vec<usize>,
        Vec<usize>,
        Vec<usize>,
    ) = match entity {
        EntityRef::Cell(c) => (
            Some(c),
            mesh.cells[c].faces.iter().map(|&(f, _)| f).collect(),
            mesh.cells[c].edges.clone(),
            mesh.cells[c].verts.clone(),
        ),
        EntityRef::Face(f) => {
            let face = &mesh.faces[f];
            let verts: Vec<usize> = face
                .vloop
                .iter()
                .filter_map(|&p| mesh.point_vertex[p])
                .collect();
            (
                None,
                vec![f],
                face.edges.iter().map(|&(e, _)| e).collect(),
                verts,
            )
        }
        EntityRef::Edge(e) => {
            let verts: Vec<usize> = mesh.edges[e]
                .verts
                .iter()
                .filter_map(|&p| mesh.point_vertex[p])
                .collect();
            (None, Vec::new(), vec![e], verts)
        }
    };
    let faces = if layout.face_dim > 0 {
        face_ids
            .iter()
            .map(|&f| (f, z.face(layout, f)))
            .collect()
    } else {
        face_ids.iter().map(|&f| (f, DVector::zeros(0))).collect()
    };
    let edges = if layout.edge_dim > 0 {
        edge_ids
            .iter()
            .map(|&e| (e, z.edge(layout, e)))
            .collect()
    } else {
        edge_ids.iter().map(|&e| (e, DVector::zeros(0))).collect()
    };
    let verts = if layout.vertex_dim > 0 {
        vert_ids
            .iter()
            .map(|&v| (v, z.data[layout.vertex_index(v)]))
            .collect()
    } else {
        Vec::new()
    };
    LocalDofs {
        entity,
        cell: cell.map(|c| {
            (
                c,
                if layout.cell_dim > 0 {
                    z.cell(layout, c)
                } else {
                    DVector::zeros(0)
                },
            )
        }),
        faces,
        edges,
        verts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{gen_hex_cube, gen_tet_cube};
    use crate::poly::CacheSpec;

    #[test]
    fn curl_layout_counts_on_hex1_at_k1() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(1, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 1).unwrap();
        // 12 edges x dim P^1(E) + 6 faces x dim RT^1(F) + 1 cell x dim RT^1(T).
        assert_eq!(core.curl.total(), 12 * 2 + 6 * 3 + 4);
        let z = random_dofs(&core, SpaceKind::Curl, 0, None);
        assert_eq!(z.data.len(), 46);
    }

    #[test]
    fn same_seed_reproduces_and_mask_zeroes() {
        let mesh = gen_tet_cube(1).unwrap();
        let all: Vec<usize> = mesh.boundary_faces().collect();
        let mesh = mesh.with_gamma(&all).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let mask = BoundaryMask::build(&core, SpaceKind::Grad);
        let a = random_dofs(&core, SpaceKind::Grad, 11, Some(&mask));
        let b = random_dofs(&core, SpaceKind::Grad, 11, Some(&mask));
        assert_eq!(a, b);
        assert!(mask.is_masked(&a, 0.0));
        // Gamma = whole boundary at k=0: every vertex is on the boundary.
        assert!(a.data.amax() == 0.0);
    }

    #[test]
    fn gamma_one_face_masks_exactly_its_closure() {
        let mesh = gen_hex_cube(1).unwrap();
        let xmin = mesh.faces_on_xmin();
        assert_eq!(xmin.len(), 1);
        let mesh = mesh.with_gamma(&xmin).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let mask = BoundaryMask::build(&core, SpaceKind::Grad);
        // k = 0 grad space on hex n=1: 8 vertex dofs; exactly 4 masked.
        assert_eq!(core.grad.total(), 8);
        assert_eq!(mask.zero.iter().filter(|&&m| m).count(), 4);
        // Curl space: 4 edges of that face masked (k=0: one dof per edge).
        let cmask = BoundaryMask::build(&core, SpaceKind::Curl);
        assert_eq!(cmask.zero.iter().filter(|&&m| m).count(), 4);
        // Div space: only the face itself.
        let dmask = BoundaryMask::build(&core, SpaceKind::Div);
        assert_eq!(dmask.zero.iter().filter(|&&m| m).count(), 1);
    }

    #[test]
    fn empty_gamma_mask_is_identity() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        let mask = BoundaryMask::build(&core, SpaceKind::Grad);
        let z = random_dofs(&core, SpaceKind::Grad, 3, None);
        assert_eq!(mask.apply(&z), z);
    }

    #[test]
    fn restriction_composition_and_counts() {
        let mesh = gen_hex_cube(1).unwrap();
        let cache = BasisCache::build(&mesh, CacheSpec::for_degrees(0, 1)).unwrap();
        let core = DdrCore::new(&mesh, &cache, 0).unwrap();
        // k=0 div on a hex cell: one component per face, 6 faces.
        let z = random_dofs(&core, SpaceKind::Div, 5, None);
        let loc = restrict(&core, &z, EntityRef::Cell(0));
        assert_eq!(loc.faces.len(), 6);
        assert!(loc.cell.as_ref().unwrap().1.is_empty());

        // Restrict to a face then to one of its edges = direct edge restriction.
        let q = random_dofs(&core, SpaceKind::Grad, 6, None);
        let face = restrict(&core, &q, EntityRef::Face(0));
        let e = face.edges[0].0;
        let via_face = restrict(&core, &q, EntityRef::Edge(e));
        let direct = restrict(&core, &q, EntityRef::Edge(e));
        assert_eq!(via_face.verts, direct.verts);

        // Restriction of a masked vector stays masked.
        let xmin = mesh.faces_on_xmin();
        let mesh2 = gen_hex_cube(1).unwrap().with_gamma(&xmin).unwrap();
        let cache2 = BasisCache::build(&mesh2, CacheSpec::for_degrees(0, 1)).unwrap();
        let core2 = DdrCore::new(&mesh2, &cache2, 0).unwrap();
        let mask = BoundaryMask::build(&core2, SpaceKind::Grad);
        let zm = random_dofs(&core2, SpaceKind::Grad, 7, Some(&mask));
        let loc = restrict(&core2, &zm, EntityRef::Face(xmin[0]));
        for (_, v) in loc.verts {
            assert_eq!(v, 0.0);
        }
    }
}
