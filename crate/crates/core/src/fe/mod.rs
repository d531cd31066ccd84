//! Conforming Lagrange / Nédélec / Raviart-Thomas spaces of degree `l` on the
//! simplicial submesh, realized as broken spaces plus explicit conformity
//! constraint systems, and their canonical DDR interpolation.

mod exact;
mod interp;
mod space;

pub use exact::{exactness_dims, ExactnessDims};
pub use interp::{ddr_interpolate_fe, project_broken_scalar};
pub use space::{apply_fe_differential, ConformingSpace, FeFamily, FeField, SimplexBasis};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeError {
    #[error(transparent)]
    Poly(#[from] crate::poly::PolyError),
    #[error("field violates the conformity constraints: relative residual {0:e}")]
    NotConforming(f64),
    #[error("degree {0} too small for family {1:?} (need l >= 1)")]
    DegreeTooSmall(i64, FeFamily),
    #[error("cache simplex degree {have} is too small for FE degree {need}")]
    CacheTooSmall { have: i64, need: i64 },
}
