//! Oriented polytopal meshes with matching simplicial submeshes.
//!
//! A mesh owns one shared coordinate pool. Polytopal cells, faces and edges
//! reference pool points; the submesh tetrahedra reference the same pool (and
//! may use points that are not polytopal vertices, e.g. interior points of
//! agglomerated cells). Orientation data:
//!
//! - each face stores an oriented vertex loop; `n_F` follows the right-hand
//!   rule on the loop;
//! - `omega_TF = +1` iff `n_F` points out of `T`;
//! - `omega_FE = +1` iff `t_E` runs clockwise around the face boundary as seen
//!   from the tip of `n_F` (i.e. against the stored loop).
//!
//! Meshes are immutable once constructed and validated.

mod build;
mod gen;
mod json;
mod patch;
mod reg;

pub use gen::{gen_agglomerated, gen_hex_cube, gen_tet_cube};
pub use json::{read_mesh_json, write_mesh_json};
pub use patch::{polytopal_patch, simplicial_patch, Patch, PatchKind};
pub use reg::{regularity_report, RegularityReport};

use crate::{Pt3, Vec3};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("degenerate {kind} {id}: measure {measure:e}")]
    Degenerate {
        kind: &'static str,
        id: usize,
        measure: f64,
    },
    #[error("face {0} is not planar (deviation {1:e} exceeds 1e-12 * diameter)")]
    NonPlanarFace(usize, f64),
    #[error("face {0}: center lies outside the face")]
    CenterOutsideFace(usize),
    #[error("cell {0}: center lies outside the cell")]
    CenterOutsideCell(usize),
    #[error("face {face} has {count} incident cells (interior faces need 2, boundary 1)")]
    BadFaceIncidence { face: usize, count: usize },
    #[error("interior face {0} does not have opposite orientations in its two cells")]
    BadFaceOrientation(usize),
    #[error("cell {0} violates the divergence theorem by {1:e}")]
    DivergenceTheorem(usize, f64),
    #[error("cell {cell}, edge {edge}: boundary-of-boundary orientation sum is {sum}")]
    BoundaryOfBoundary { cell: usize, edge: usize, sum: i32 },
    #[error("gamma face {0} is not a boundary face")]
    GammaNotBoundary(usize),
    #[error("simplex {0} has non-positive volume")]
    BadSimplex(usize),
    #[error("submesh does not match the polytopal mesh: {0}")]
    NotMatching(String),
    #[error("mesh file: {0}")]
    Io(String),
}

/// Oriented edge: `tangent` points from `verts[0]` to `verts[1]`.
#[derive(Clone, Debug)]
pub struct Edge {
    pub verts: [usize; 2],
    pub tangent: Vec3,
    pub length: f64,
    pub center: Pt3,
}

/// Planar face given by an oriented vertex loop.
#[derive(Clone, Debug)]
pub struct Face {
    pub vloop: Vec<usize>,
    /// Edge ids with `omega_FE` signs, in loop order.
    pub edges: Vec<(usize, i8)>,
    pub normal: Vec3,
    pub center: Pt3,
    pub diameter: f64,
    pub area: f64,
    /// Submesh triangles tiling this face.
    pub subfaces: Vec<usize>,
    /// Incident cells (boundary faces have one).
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Cell {
    /// Face ids with `omega_TF` signs.
    pub faces: Vec<(usize, i8)>,
    pub edges: Vec<usize>,
    pub verts: Vec<usize>,
    pub center: Pt3,
    pub diameter: f64,
    pub volume: f64,
    /// Submesh tetrahedra tiling this cell (`S_h(T)`).
    pub simplices: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Simplex {
    pub verts: [usize; 4],
    pub parent: usize,
    pub volume: f64,
    pub center: Pt3,
    pub diameter: f64,
}

/// Triangle of the submesh skeleton.
#[derive(Clone, Debug)]
pub struct SubFace {
    pub verts: [usize; 3],
    pub simplices: Vec<usize>,
    /// Polytopal face this triangle tiles, if it lies on one.
    pub parent_face: Option<usize>,
}

/// Segment of the submesh skeleton.
#[derive(Clone, Debug)]
pub struct SubEdge {
    pub verts: [usize; 2],
    /// Polytopal edge this segment tiles, if it lies on one.
    pub parent_edge: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct SimplicialSubmesh {
    pub simplices: Vec<Simplex>,
    pub subfaces: Vec<SubFace>,
    pub subedges: Vec<SubEdge>,
    /// For each polytopal edge, the sub-edges tiling it.
    pub edge_subedges: Vec<Vec<usize>>,
    /// point id -> simplices touching it (closure adjacency).
    pub point_simplices: Vec<Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct PolytopalMesh {
    /// Shared coordinate pool (polytopal vertices and any extra submesh points).
    pub points: Vec<Pt3>,
    /// Ids (into `points`) of the polytopal vertices, sorted.
    pub vertices: Vec<usize>,
    /// Inverse of `vertices`: point id -> polytopal vertex index.
    pub point_vertex: Vec<Option<usize>>,
    pub edges: Vec<Edge>,
    pub faces: Vec<Face>,
    pub cells: Vec<Cell>,
    /// Per-face membership in the essential boundary part.
    pub gamma: Vec<bool>,
    pub submesh: SimplicialSubmesh,
    /// point id -> cells whose closure contains it.
    pub point_cells: Vec<Vec<usize>>,
}

impl PolytopalMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn vertex_point(&self, v: usize) -> &Pt3 {
        &self.points[self.vertices[v]]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.faces[f].cells.len() == 1
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(|&f| self.is_boundary_face(f))
    }

    /// Mesh size: max cell diameter.
    pub fn h_max(&self) -> f64 {
        self.cells.iter().map(|c| c.diameter).fold(0.0, f64::max)
    }

    /// Total measure of the domain.
    pub fn volume(&self) -> f64 {
        self.cells.iter().map(|c| c.volume).sum()
    }

    /// Polytopal vertices lying on the closure of the gamma faces.
    pub fn gamma_vertices(&self) -> Vec<bool> {
        let mut out = vec![false; self.vertices.len()];
        for (f, face) in self.faces.iter().enumerate() {
            if self.gamma[f] {
                for &p in &face.vloop {
                    if let Some(v) = self.point_vertex[p] {
                        out[v] = true;
                    }
                }
            }
        }
        out
    }

    /// Polytopal edges contained in the closure of the gamma faces.
    pub fn gamma_edges(&self) -> Vec<bool> {
        let mut out = vec![false; self.edges.len()];
        for (f, face) in self.faces.iter().enumerate() {
            if self.gamma[f] {
                for &(e, _) in &face.edges {
                    out[e] = true;
                }
            }
        }
        out
    }

    /// Replace the gamma tags (face ids must be boundary faces).
    pub fn with_gamma(mut self, gamma_faces: &[usize]) -> Result<Self, MeshError> {
        let mut gamma = vec![false; self.faces.len()];
        for &f in gamma_faces {
            if !self.is_boundary_face(f) {
                return Err(MeshError::GammaNotBoundary(f));
            }
            gamma[f] = true;
        }
        self.gamma = gamma;
        Ok(self)
    }

    /// Boundary faces on the plane x = min x, for the `xmin` gamma spec.
    pub fn faces_on_xmin(&self) -> Vec<usize> {
        let xmin = self
            .points
            .iter()
            .map(|p| p.x)
            .fold(f64::INFINITY, f64::min);
        self.boundary_faces()
            .filter(|&f| {
                self.faces[f]
                    .vloop
                    .iter()
                    .all(|&p| (self.points[p].x - xmin).abs() < 1e-10)
            })
            .collect()
    }
}
