//! Arbitrary-order discrete de Rham (DDR) complexes on 3D polytopal meshes.
//!
//! The library provides:
//!
//! - oriented polytopal meshes with matching simplicial submeshes, patches and
//!   mixed-boundary tagging ([`mesh`]);
//! - polynomial, trimmed Nédélec and Raviart–Thomas spaces on mesh entities,
//!   together with quadrature and L2-orthogonal projectors ([`poly`]);
//! - the three DDR component spaces at degree `k`, their canonical
//!   interpolators, component norms and boundary masks ([`dofs`]);
//! - discrete gradient/curl/divergence operators, trace and potential
//!   reconstructions, stabilization forms and weighted inner products ([`ops`]);
//! - conforming Lagrange/Nédélec/Raviart–Thomas spaces on the submesh,
//!   realized as broken spaces plus conformity constraints ([`fe`]);
//! - commuting quasi-interpolators, approximation-error measures and
//!   conforming liftings with the left-inverse property ([`quasi`]).
//!
//! The `ddr-kit` companion crate drives the verification experiments and the
//! command line interface.

pub mod dofs;
pub mod fe;
pub mod linalg;
pub mod mesh;
pub mod ops;
pub mod poly;
pub mod quad;
pub mod quasi;
pub mod rng;

/// Vector in physical space.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Point in physical space.
pub type Pt3 = nalgebra::Point3<f64>;
