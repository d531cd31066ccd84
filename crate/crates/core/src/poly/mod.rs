//! Polynomial machinery on mesh entities.
//!
//! Scalar spaces are represented in orthonormal bases built from scaled
//! monomials centered at the entity point `x_P` with scale `h_P` (faces use an
//! in-plane frame, so tangent vector polynomials are two-component). Since
//! the scalar bases are L2-orthonormal and entity frames are orthonormal,
//! vector polynomial spaces reduce to plain Euclidean coefficient algebra:
//! trimmed Raviart-Thomas / Nédélec spaces and Koszul-type splits are built by
//! QR on coefficient columns, with no further quadrature.

mod basis;
mod cache;
mod diff;
mod mono;
pub mod project;

pub use basis::{koszul_split, prefix_dim, trimmed_space, KoszulBlocks, ScalarBasis, SplitKind, VecBasis};
pub use cache::{BasisCache, CacheSpec, EntityData, SubRange};
pub use diff::{curl_3d, divergence, gradient, rot_face, scalar_curl_face};
pub use mono::{mono_indices, MonoSet};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolyError {
    #[error("rank deficiency while assembling {0} (got rank {1}, expected {2})")]
    RankDeficient(&'static str, usize, usize),
    #[error(transparent)]
    Quad(#[from] crate::quad::QuadError),
    #[error("orthonormalization failed on {0} (Gram not positive definite)")]
    GramNotSpd(&'static str),
}

/// Entity kinds carrying polynomial spaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityKind {
    Edge,
    Face,
    Cell,
    Simplex,
}

/// Polynomial families attached to mesh entities. `PVector` means tangent
/// vectors on faces and 3D vectors on cells/simplices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    PScalar,
    PVector,
    Rt,
    Ne,
}

/// Descriptor of a polynomial space on an entity kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PolySpaceDescriptor {
    pub kind: EntityKind,
    pub family: Family,
    pub degree: i64,
}

impl PolySpaceDescriptor {
    pub fn new(kind: EntityKind, family: Family, degree: i64) -> Self {
        Self {
            kind,
            family,
            degree,
        }
    }

    /// Dimension of the space (trimmed-space formulas).
    pub fn dim(&self) -> usize {
        let l = self.degree;
        match (self.kind, self.family) {
            (EntityKind::Edge, Family::PScalar) => dim_p1(l),
            (EntityKind::Edge, _) => panic!("edges carry scalar spaces only"),
            (EntityKind::Face, Family::PScalar) => dim_p2(l),
            (EntityKind::Face, Family::PVector) => 2 * dim_p2(l),
            (EntityKind::Face, Family::Rt) => dim_rt_face(l),
            (EntityKind::Face, Family::Ne) => panic!("Nédélec spaces live on cells"),
            (EntityKind::Cell | EntityKind::Simplex, Family::PScalar) => dim_p3(l),
            (EntityKind::Cell | EntityKind::Simplex, Family::PVector) => 3 * dim_p3(l),
            (EntityKind::Cell | EntityKind::Simplex, Family::Rt) => dim_rt_cell(l),
            (EntityKind::Cell | EntityKind::Simplex, Family::Ne) => dim_ne_cell(l),
        }
    }
}

/// dim P^l on a segment.
pub fn dim_p1(l: i64) -> usize {
    if l < 0 {
        0
    } else {
        (l + 1) as usize
    }
}

/// dim P^l on a plane entity.
pub fn dim_p2(l: i64) -> usize {
    if l < 0 {
        0
    } else {
        ((l + 1) * (l + 2) / 2) as usize
    }
}

/// dim P^l on a volume entity.
pub fn dim_p3(l: i64) -> usize {
    if l < 0 {
        0
    } else {
        ((l + 1) * (l + 2) * (l + 3) / 6) as usize
    }
}

/// dim RT^l(F) = l(l+2) (tangent fields on a face); zero at l = 0.
pub fn dim_rt_face(l: i64) -> usize {
    if l <= 0 {
        0
    } else {
        (l * (l + 2)) as usize
    }
}

/// dim RT^l(T) = l(l+1)(l+3)/2.
pub fn dim_rt_cell(l: i64) -> usize {
    if l <= 0 {
        0
    } else {
        (l * (l + 1) * (l + 3) / 2) as usize
    }
}

/// dim NE^l(T) = l(l+2)(l+3)/2.
pub fn dim_ne_cell(l: i64) -> usize {
    if l <= 0 {
        0
    } else {
        (l * (l + 2) * (l + 3) / 2) as usize
    }
}
